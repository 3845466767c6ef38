//! Distribution-level checks of every sampler against analytic laws.

use statrs::distribution::{Beta, ContinuousCDF};

use pdmean::dist::{general_cdf, stable_cdf};
use pdmean::sampler::{
    ks_distance, ks_p_value, ks_two_sample, sample, sample_cftp, sample_recursion, sample_stable_invcdf,
    sample_stick, sample_symdirichlet, Method, SamplerConfig, StableInverter,
};
use pdmean::{BaseMeasure, Execution, PDParams};

fn bern(p: f64) -> BaseMeasure {
    BaseMeasure::bernoulli(p).unwrap()
}

fn cfg(seed: u64) -> SamplerConfig {
    SamplerConfig::with_seed(seed)
}

#[test]
fn degenerate_measure_gives_constant() {
    let c = BaseMeasure::degenerate(0.7).unwrap();
    let p = PDParams::general(0.5, 1.0).unwrap();
    for m in [Method::Stick, Method::Recursion, Method::Cftp] {
        let b = sample(m, &c, &p, 50, &cfg(3)).unwrap();
        assert!(b.values.iter().all(|&v| v == 0.7), "{m:?}");
    }
}

#[test]
fn values_stay_in_hull() {
    let m = BaseMeasure::atoms_only(&[(0.2, 0.2), (0.5, 0.5), (2.0, 0.3)]).unwrap();
    let p = PDParams::general(0.3, 1.2).unwrap();
    for method in [Method::Stick, Method::Recursion, Method::Cftp] {
        let b = sample(method, &m, &p, 500, &cfg(9)).unwrap();
        assert!(b.values.iter().all(|&v| (0.2..=2.0).contains(&v)));
        assert_eq!(b.n, 500);
    }
}

#[test]
fn sequential_and_parallel_agree() {
    let m = bern(0.4);
    let p = PDParams::general(0.5, 1.5).unwrap();
    for method in [Method::Stick, Method::Recursion, Method::Cftp] {
        let s = SamplerConfig { execution: Execution::Sequential, ..cfg(11) };
        let q = SamplerConfig { execution: Execution::Parallel, ..cfg(11) };
        assert_eq!(sample(method, &m, &p, 300, &s).unwrap(), sample(method, &m, &p, 300, &q).unwrap());
    }
}

#[test]
fn invcdf_matches_arcsine() {
    let b = bern(0.5);
    let batch = sample_stable_invcdf(&b, 0.5, 100_000, &cfg(1)).unwrap();
    let arc = Beta::new(0.5, 0.5).unwrap();
    let d = ks_distance(&batch, |x| arc.cdf(x));
    assert!(d < 0.01, "{d}");
    let inv = StableInverter::new(&b, 0.5, 1e-12).unwrap();
    assert!((inv.invert(0.5) - 0.5).abs() < 1e-10);
}

#[test]
fn invcdf_uniform_measure() {
    let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
    let batch = sample_stable_invcdf(&u, 0.4, 100_000, &cfg(2)).unwrap();
    let d = ks_distance(&batch, |x| stable_cdf(&u, 0.4, x).unwrap());
    assert!(d < 0.01, "{d}");
}

#[test]
fn recursion_matches_beta_family() {
    let b = bern(0.5);
    let p = PDParams::general(0.5, 2.0).unwrap();
    let batch = sample_recursion(&b, &p, 100_000, &cfg(4)).unwrap();
    let law = Beta::new(2.5, 2.5).unwrap();
    let d = ks_distance(&batch, |x| law.cdf(x));
    assert!(d < 0.01, "{d}");
}

#[test]
fn large_theta_mean() {
    let m = bern(0.3);
    let p = PDParams::general(0.5, 50.0).unwrap();
    let b = sample_recursion(&m, &p, 20_000, &cfg(5)).unwrap();
    let n = b.values.len() as f64;
    let mean = b.values.iter().sum::<f64>() / n;
    let var = b.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - 0.3).abs() < 3.0 * (var / n).sqrt(), "{mean}");
}

#[test]
fn first_stick_identity() {
    // M_{α,θ} = B M_{α,θ+α} + (1 - B) W, B ~ Beta(θ+α, 1-α), W ~ η
    use rand::SeedableRng;
    use rand_distr::{Beta as BetaDist, Distribution};
    let (alpha, theta) = (0.4, 0.6);
    let m = bern(0.3);
    let direct = sample_stick(&m, &PDParams::general(alpha, theta).unwrap(), 100_000, &cfg(6)).unwrap();
    let inner = sample_stick(&m, &PDParams::general(alpha, theta + alpha).unwrap(), 100_000, &cfg(7)).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
    let bd = BetaDist::new(theta + alpha, 1.0 - alpha).unwrap();
    let built: Vec<f64> = inner
        .values
        .iter()
        .map(|&x| {
            let b = bd.sample(&mut rng);
            b * x + (1.0 - b) * m.sample(&mut rng)
        })
        .collect();
    let d = ks_two_sample(&direct.values, &built);
    let pv = ks_p_value(d, direct.values.len(), built.len());
    assert!(pv > 0.001, "d = {d}, p = {pv}");
}

#[test]
fn cftp_bridge_law() {
    let b = bern(0.5);
    let p = PDParams::general(0.5, 0.5).unwrap();
    let batch = sample_cftp(&b, &p, 10_000, &cfg(12)).unwrap();
    let d = ks_distance(&batch, |x| x.clamp(0.0, 1.0));
    assert!(d < 0.02, "{d}");
}

#[test]
fn cftp_depth_grows_with_theta() {
    // contraction per step is B ~ 1 - U^{1/θ}, slower for large θ
    let b = bern(0.5);
    let depth = |theta: f64| {
        let p = PDParams::general(0.5, theta).unwrap();
        sample_cftp(&b, &p, 1_000, &cfg(13)).unwrap().diagnostics.depth_median
    };
    let (small, large) = (depth(0.2), depth(2.0));
    assert!(large > small, "{small} {large}");
}

#[test]
fn stick_general_against_cdf() {
    let b = bern(0.3);
    let p = PDParams::general(0.6, 1.5).unwrap();
    let batch = sample_stick(&b, &p, 20_000, &cfg(14)).unwrap();
    let d = ks_distance(&batch, |x| general_cdf(&b, &p, x).unwrap());
    assert!(d < 0.015, "{d}");
}

#[test]
fn symdirichlet_is_symmetric() {
    let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
    let b = sample_symdirichlet(&u, 0.5, 2, 20_000, &cfg(15)).unwrap();
    let below = b.values.iter().filter(|&&v| v < 0.5).count() as f64 / 20_000.0;
    assert!((below - 0.5).abs() < 0.015, "{below}");
}
