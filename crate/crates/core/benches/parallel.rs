use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pdmean::dist::eval_grid_with;
use pdmean::sampler::{sample_cftp, sample_stick, SamplerConfig};
use pdmean::{BaseMeasure, Execution, PDParams};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn grid(c: &mut Criterion) {
    let m = BaseMeasure::bernoulli(0.3).unwrap();
    let p = PDParams::general(0.4, 0.7).unwrap();
    let points: Vec<f64> = (1..200).map(|i| i as f64 / 200.0).collect();
    let mut g = c.benchmark_group("eval_grid");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| eval_grid_with(&m, &p, black_box(&points), exec))
        });
    }
    g.finish();
}

fn samplers(c: &mut Criterion) {
    let m = BaseMeasure::bernoulli(0.5).unwrap();
    let p = PDParams::general(0.5, 2.0).unwrap();
    let mut g = c.benchmark_group("samplers");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = SamplerConfig { execution: exec, ..SamplerConfig::with_seed(1) };
        g.bench_with_input(BenchmarkId::new("stick", name), &cfg, |b, cfg| {
            b.iter(|| sample_stick(&m, &p, black_box(2_000), cfg).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("cftp", name), &cfg, |b, cfg| {
            b.iter(|| sample_cftp(&m, &p, black_box(2_000), cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, grid, samplers);
criterion_main!(benches);
