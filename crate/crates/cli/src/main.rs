use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pdmean::dist::eval_grid;
use pdmean::kernel::stieltjes_forward;
use pdmean::sampler::{sample, sample_stick_raw, Method, SamplerConfig};
use pdmean::validate::{run_check, CHECKS};
use pdmean::{BaseMeasure, Execution, PDParams};

#[derive(Parser)]
#[command(name = "pdmean", version, about = "Laws of Poisson-Dirichlet mean functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Density and CDF on a grid.
    Density(GridArgs),
    /// Same rows as `density`.
    Cdf(GridArgs),
    /// Draw samples.
    Sample(SampleArgs),
    /// Run the built-in acceptance checks.
    Validate(ValidateArgs),
    /// Closed-form E[(z + M)^-order] on a grid of z.
    Transform(TransformArgs),
}

#[derive(Args)]
struct Model {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    theta: f64,
    /// JSON file, `bernoulli:p` or `uniform:a:b`.
    #[arg(long, default_value = "bernoulli:0.5")]
    measure: String,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    model: Model,
    /// `start:stop:count` or a comma-separated list.
    #[arg(long)]
    grid: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    model: Model,
    #[arg(long, default_value = "stick")]
    method: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = SamplerConfig::default().seed)]
    seed: u64,
    /// Stop stick-breaking once the unbroken mass is below this.
    #[arg(long)]
    tail_mass: Option<f64>,
    #[arg(long)]
    max_terms: Option<usize>,
    /// CFTP coalescence width.
    #[arg(long)]
    cftp_eps: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ValidateArgs {
    /// Run only these check ids (repeatable).
    #[arg(long = "check")]
    checks: Vec<u8>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    model: Model,
    /// Grid of z > 0, same syntax as --grid.
    #[arg(long)]
    z: String,
    /// θ (default) or θ + 1.
    #[arg(long)]
    order: Option<f64>,
    #[command(flatten)]
    output: Output,
}

/// Malformed input (exit 1) versus failed checks (exit 2).
enum Failure {
    Input(anyhow::Error),
    Checks,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn parse_measure(s: &str) -> anyhow::Result<BaseMeasure> {
    let num = |v: &str| v.trim().parse::<f64>().with_context(|| format!("bad number {v:?} in --measure"));
    let parts: Vec<&str> = s.split(':').collect();
    let m = match parts.as_slice() {
        ["bernoulli", p] => BaseMeasure::bernoulli(num(p)?)?,
        ["uniform", a, b] => BaseMeasure::uniform(num(a)?, num(b)?)?,
        _ => BaseMeasure::from_json_file(s).with_context(|| format!("reading measure file {s:?}"))?,
    };
    Ok(m)
}

fn parse_grid(s: &str) -> anyhow::Result<Vec<f64>> {
    let num = |v: &str| v.trim().parse::<f64>().with_context(|| format!("bad number {v:?} in grid"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, count] = parts.as_slice() else {
            bail!("grid {s:?} must look like start:stop:count");
        };
        let (start, stop) = (num(start)?, num(stop)?);
        let count: usize = count.trim().parse().with_context(|| format!("bad count in grid {s:?}"))?;
        if count == 0 {
            bail!("grid count must be at least 1");
        }
        if count == 1 {
            if start > stop || start.is_nan() {
                bail!("grid start must not exceed stop");
            }
            return Ok(vec![start]);
        }
        if start >= stop || start.is_nan() || stop.is_nan() {
            bail!("grid start must be below stop");
        }
        let h = (stop - start) / (count - 1) as f64;
        return Ok((0..count).map(|i| if i + 1 == count { stop } else { start + i as f64 * h }).collect());
    }
    let v: Vec<f64> = s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect::<anyhow::Result<_>>()?;
    if v.is_empty() {
        bail!("empty grid");
    }
    Ok(v)
}

fn params(m: &Model) -> anyhow::Result<PDParams> {
    Ok(PDParams::new(m.alpha, m.theta)?)
}

fn sink(out: &Output) -> anyhow::Result<Box<dyn Write>> {
    Ok(match &out.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<R: Serialize>(out: &Output, rows: &[R], json: impl Serialize) -> anyhow::Result<()> {
    let mut w = sink(out)?;
    match out.format {
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            for r in rows {
                c.serialize(r)?;
            }
            c.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &json)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct GridRow {
    y: f64,
    q: Option<f64>,
    #[serde(rename = "Q")]
    cdf: Option<f64>,
    flag: &'static str,
}

fn run_grid(a: &GridArgs) -> anyhow::Result<()> {
    let measure = parse_measure(&a.model.measure)?;
    let p = params(&a.model)?;
    let points = parse_grid(&a.grid)?;
    let g = eval_grid(&measure, &p, &points);
    let rows: Vec<GridRow> = (0..g.len())
        .map(|i| GridRow { y: g.points[i], q: g.q[i], cdf: g.cdf[i], flag: g.flags[i].as_str() })
        .collect();
    emit(&a.output, &rows, serde_json::json!({ "params": p, "rows": rows }))
}

#[derive(Serialize)]
struct ValueRow {
    value: f64,
}

fn run_sample(a: &SampleArgs) -> anyhow::Result<()> {
    let measure = parse_measure(&a.model.measure)?;
    let method: Method = a.method.parse()?;
    let mut cfg = SamplerConfig::with_seed(a.seed);
    if let Some(v) = a.tail_mass {
        cfg.stick_tail_mass = v;
    }
    if let Some(v) = a.max_terms {
        cfg.stick_max_terms = v;
    }
    if let Some(v) = a.cftp_eps {
        cfg.cftp_epsilon = v;
    }
    let batch = match method {
        Method::Stick => sample_stick_raw(&measure, a.model.alpha, a.model.theta, a.n, &cfg)?,
        _ => sample(method, &measure, &params(&a.model)?, a.n, &cfg)?,
    };
    if matches!(a.output.format, Format::Csv) {
        let d = &batch.diagnostics;
        eprintln!(
            "method={} n={} seed={} depth_median={} depth_max={} capped={} restarts={}",
            batch.method.as_str(),
            batch.n,
            batch.seed,
            d.depth_median,
            d.depth_max,
            d.capped,
            d.restarts
        );
    }
    let rows: Vec<ValueRow> = batch.values.iter().map(|&value| ValueRow { value }).collect();
    emit(&a.output, &rows, &batch)
}

#[derive(Serialize)]
struct CheckRow {
    id: u8,
    check: &'static str,
    statistic: f64,
    threshold: f64,
    pass: bool,
    detail: String,
}

fn run_validate(a: &ValidateArgs) -> Result<(), Failure> {
    let ids: Vec<u8> = if a.checks.is_empty() { CHECKS.iter().map(|c| c.0).collect() } else { a.checks.clone() };
    for id in &ids {
        if !CHECKS.iter().any(|c| c.0 == *id) {
            return Err(Failure::Input(anyhow::anyhow!("no check with id {id}")));
        }
    }
    let rows: Vec<CheckRow> = ids
        .iter()
        .map(|&id| {
            let r = run_check(id, Execution::default());
            CheckRow {
                id: r.id,
                check: r.name,
                statistic: r.statistic,
                threshold: r.threshold,
                pass: r.passed,
                detail: r.detail,
            }
        })
        .collect();
    emit(&a.output, &rows, &rows)?;
    if rows.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

#[derive(Serialize)]
struct TransformRow {
    z: f64,
    value: f64,
}

fn run_transform(a: &TransformArgs) -> anyhow::Result<()> {
    let measure = parse_measure(&a.model.measure)?;
    let p = params(&a.model)?;
    let order = a.order.unwrap_or(p.theta);
    let rows: Vec<TransformRow> = parse_grid(&a.z)?
        .into_iter()
        .map(|z| Ok(TransformRow { z, value: stieltjes_forward(&measure, &p, z, order)? }))
        .collect::<anyhow::Result<_>>()?;
    emit(&a.output, &rows, serde_json::json!({ "params": p, "order": order, "rows": rows }))
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("PDMEAN_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().with_context(|| format!("PDMEAN_THREADS={v:?} is not a count"))?;
    #[cfg(feature = "parallel")]
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads()?;
    match &cli.command {
        Command::Density(a) | Command::Cdf(a) => run_grid(a)?,
        Command::Sample(a) => run_sample(a)?,
        Command::Validate(a) => run_validate(a)?,
        Command::Transform(a) => run_transform(a)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Checks) => ExitCode::from(2),
    }
}
