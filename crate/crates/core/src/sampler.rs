//! Samplers for M_{α,θ}(η) and Kolmogorov-Smirnov utilities.
//!
//! Every draw owns a ChaCha8 stream keyed by (seed, sample index), so batches
//! are bit-identical whether they are generated sequentially or in parallel.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::kernel::{PDParams, Trig};
use crate::measure::BaseMeasure;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Stop stick-breaking once the unbroken mass falls below this.
    pub stick_tail_mass: f64,
    pub cftp_epsilon: f64,
    pub cftp_start_depth: u64,
    pub invcdf_tol: f64,
    /// Hard cap on sticks per draw; the remainder is filled by a
    /// moment-matched draw.
    pub stick_max_terms: usize,
    pub cftp_max_depth: u64,
    pub execution: Execution,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            stick_tail_mass: 1e-12,
            cftp_epsilon: 1e-9,
            cftp_start_depth: 16,
            invcdf_tol: 1e-12,
            stick_max_terms: 1000,
            cftp_max_depth: 1 << 24,
            execution: Execution::default(),
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("stick_tail_mass", self.stick_tail_mass),
            ("cftp_epsilon", self.cftp_epsilon),
            ("invcdf_tol", self.invcdf_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if self.cftp_start_depth == 0 || self.stick_max_terms == 0 {
            return Err(Error::InvalidParams("depths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Stick,
    InvcdfStable,
    Recursion,
    Cftp,
    SymdirichletDirect,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Stick => "stick",
            Method::InvcdfStable => "invcdf_stable",
            Method::Recursion => "recursion",
            Method::Cftp => "cftp",
            Method::SymdirichletDirect => "symdirichlet_direct",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stick" => Ok(Method::Stick),
            "invcdf" | "invcdf_stable" => Ok(Method::InvcdfStable),
            "recursion" => Ok(Method::Recursion),
            "cftp" => Ok(Method::Cftp),
            "symdirichlet" | "symdirichlet_direct" => Ok(Method::SymdirichletDirect),
            _ => Err(Error::InvalidParams(format!("unknown sampling method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Power-of-two buckets of the per-draw depth (sticks, recursion steps or
    /// CFTP look-back).
    pub depth_histogram: BTreeMap<u64, u64>,
    pub depth_median: u64,
    pub depth_max: u64,
    /// Stick draws that hit `stick_max_terms` before reaching the tail mass.
    pub capped: u64,
    /// CFTP depth doublings summed over draws.
    pub restarts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub method: Method,
    pub n: usize,
    pub seed: u64,
    /// Per-draw depth, same order as `values`.
    pub depths: Vec<u64>,
    pub diagnostics: Diagnostics,
}

impl SampleBatch {
    fn build(method: Method, seed: u64, rows: Vec<(f64, u64, u64)>, capped_at: Option<u64>) -> Self {
        let n = rows.len();
        let mut values = Vec::with_capacity(n);
        let mut depths = Vec::with_capacity(n);
        let mut d = Diagnostics::default();
        for (v, depth, restarts) in rows {
            values.push(v);
            depths.push(depth);
            d.restarts += restarts;
            *d.depth_histogram.entry(depth.max(1).next_power_of_two()).or_default() += 1;
            if capped_at == Some(depth) {
                d.capped += 1;
            }
        }
        let mut sorted = depths.clone();
        sorted.sort_unstable();
        d.depth_median = sorted.get(n / 2).copied().unwrap_or(0);
        d.depth_max = sorted.last().copied().unwrap_or(0);
        Self { values, method, n, seed, depths, diagnostics: d }
    }
}

fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

/// Open-interval uniform, never exactly 0.
fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Inverse of the stable-mean CDF, bracketed from a table and refined by a
/// safeguarded Illinois iteration.
pub struct StableInverter<'a> {
    measure: &'a BaseMeasure,
    trig: Trig,
    lo: f64,
    hi: f64,
    xs: Vec<f64>,
    fs: Vec<f64>,
    tol: f64,
}

const TABLE_POINTS: usize = 257;

impl<'a> StableInverter<'a> {
    pub fn new(measure: &'a BaseMeasure, alpha: f64, tol: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParams(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        let h = measure.hull();
        let trig = Trig::new(alpha);
        let mut s = Self { measure, trig, lo: h.lo, hi: h.hi, xs: Vec::new(), fs: Vec::new(), tol };
        if h.hi > h.lo {
            let n = TABLE_POINTS - 1;
            s.xs = (0..=n).map(|i| h.lo + (h.hi - h.lo) * i as f64 / n as f64).collect();
            s.xs[n] = h.hi;
            s.fs = s.xs.iter().map(|&x| s.cdf(x)).collect();
        }
        Ok(s)
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            0.0
        } else if x >= self.hi {
            1.0
        } else {
            let (g, z) = self.trig.gz(self.measure, x);
            z.atan2(g) / (self.trig.alpha * PI)
        }
    }

    /// Smallest x with F(x) >= u, to within `tol`.
    pub fn invert(&self, u: f64) -> f64 {
        if self.xs.is_empty() {
            return self.lo;
        }
        let j = self.fs.partition_point(|&f| f < u).clamp(1, self.xs.len() - 1);
        let (mut a, mut b) = (self.xs[j - 1], self.xs[j]);
        let (mut fa, mut fb) = (self.fs[j - 1] - u, self.fs[j] - u);
        if fa >= 0.0 {
            return a;
        }
        let mut side = 0i8;
        let mut width = b - a;
        for it in 0..200 {
            if b - a <= self.tol {
                break;
            }
            let mut c = if fb > fa { (a * fb - b * fa) / (fb - fa) } else { 0.5 * (a + b) };
            // bisect every third step unless the bracket is shrinking fast
            if it % 3 == 2 {
                if b - a > 0.25 * width {
                    c = 0.5 * (a + b);
                }
                width = b - a;
            }
            if !(c > a && c < b) {
                c = 0.5 * (a + b);
            }
            let fc = self.cdf(c) - u;
            if fc < 0.0 {
                a = c;
                fa = fc;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            } else {
                b = c;
                fb = fc;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            }
        }
        (0.5 * (a + b)).clamp(self.lo, self.hi)
    }
}

fn check_stable_params(params: &PDParams) -> Result<()> {
    if params.alpha > 0.0 && params.alpha < 1.0 && params.theta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams("need 0 < alpha < 1 and theta > 0".into()))
    }
}

/// Stick-breaking draws with V_k ~ Beta(1 - α, θ + kα).
pub fn sample_stick(measure: &BaseMeasure, params: &PDParams, n: usize, config: &SamplerConfig) -> Result<SampleBatch> {
    sample_stick_raw(measure, params.alpha, params.theta, n, config)
}

/// [`sample_stick`] without going through [`PDParams`], so -α < θ <= 0 is allowed.
pub fn sample_stick_raw(measure: &BaseMeasure, alpha: f64, theta: f64, n: usize, config: &SamplerConfig) -> Result<SampleBatch> {
    config.validate()?;
    if !(0.0..1.0).contains(&alpha) || !(theta > -alpha) || (alpha == 0.0 && theta <= 0.0) {
        return Err(Error::InvalidParams("stick-breaking needs 0 <= alpha < 1 and theta > -alpha".into()));
    }
    let h = measure.hull();
    let (lo, hi) = (h.lo, h.hi);
    let mu = measure.mean();
    let var = measure.variance();
    let cap = config.stick_max_terms;
    // V_k = G / (G + H_k), G ~ Gamma(1 - α), H_k ~ Gamma(θ + kα)
    let (g_num, g_den): (Option<Gamma<f64>>, Vec<Gamma<f64>>) = if alpha > 0.0 {
        let num = Gamma::new(1.0 - alpha, 1.0).map_err(|e| Error::InvalidParams(e.to_string()))?;
        let den = (1..=cap)
            .map(|k| Gamma::new(theta + k as f64 * alpha, 1.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidParams(e.to_string()))?;
        (Some(num), den)
    } else {
        (None, Vec::new())
    };
    let rows = map_indexed(config.execution, n, |i| {
        let mut rng = draw_rng(config.seed, i as u64);
        let mut acc = 0.0;
        let mut rest = 1.0;
        let mut k = 0usize;
        while rest >= config.stick_tail_mass && k < cap {
            k += 1;
            let b = theta + k as f64 * alpha;
            let v = match &g_num {
                None => 1.0 - unit_open(&mut rng).powf(1.0 / b),
                Some(gn) => {
                    let g = gn.sample(&mut rng);
                    let h = g_den[k - 1].sample(&mut rng);
                    if g + h > 0.0 { g / (g + h) } else { 0.0 }
                }
            };
            let y = measure.sample(&mut rng);
            acc += rest * v * (y - lo);
            rest *= 1.0 - v;
        }
        // remainder: a moment-matched draw of M_{α,θ+kα}(η)
        let theta_k = theta + k as f64 * alpha;
        let sd = (var * (1.0 - alpha) / (theta_k + 1.0)).sqrt();
        let z: f64 = StandardNormal.sample(&mut rng);
        let t = (mu + sd * z).clamp(lo, hi);
        acc += rest * (t - lo);
        ((lo + acc).clamp(lo, hi), k as u64, 0)
    });
    Ok(SampleBatch::build(Method::Stick, config.seed, rows, Some(cap as u64)))
}

/// Draws of M_{α,0}(η) by inverting the closed-form CDF.
pub fn sample_stable_invcdf(measure: &BaseMeasure, alpha: f64, n: usize, config: &SamplerConfig) -> Result<SampleBatch> {
    config.validate()?;
    let inv = StableInverter::new(measure, alpha, config.invcdf_tol)?;
    let rows = map_indexed(config.execution, n, |i| {
        let mut rng = draw_rng(config.seed, i as u64);
        (inv.invert(rng.random()), 1, 0)
    });
    Ok(SampleBatch::build(Method::InvcdfStable, config.seed, rows, None))
}

/// Unrolled mixture M = Σ_j (1 - B_j) Π_{i<j} B_i X_j with B ~ Beta(θ, 1)
/// and X_j stable-mean draws.
pub fn sample_recursion(measure: &BaseMeasure, params: &PDParams, n: usize, config: &SamplerConfig) -> Result<SampleBatch> {
    config.validate()?;
    check_stable_params(params)?;
    let theta = params.theta;
    let inv = StableInverter::new(measure, params.alpha, config.invcdf_tol)?;
    let h = measure.hull();
    let rows = map_indexed(config.execution, n, |i| {
        let mut rng = draw_rng(config.seed, i as u64);
        let mut acc = 0.0;
        let mut mem = 1.0;
        let mut steps = 0u64;
        loop {
            steps += 1;
            let b = unit_open(&mut rng).powf(1.0 / theta);
            let x = inv.invert(rng.random());
            if mem < config.stick_tail_mass {
                acc += mem * (x - h.lo);
                break;
            }
            acc += mem * (1.0 - b) * (x - h.lo);
            mem *= b;
        }
        ((h.lo + acc).clamp(h.lo, h.hi), steps, 0)
    });
    Ok(SampleBatch::build(Method::Recursion, config.seed, rows, None))
}

/// Coupling from the past for X' = B X + (1 - B) X_stable, B ~ Beta(1, θ).
pub fn sample_cftp(measure: &BaseMeasure, params: &PDParams, n: usize, config: &SamplerConfig) -> Result<SampleBatch> {
    config.validate()?;
    check_stable_params(params)?;
    let theta = params.theta;
    let inv = StableInverter::new(measure, params.alpha, config.invcdf_tol)?;
    let h = measure.hull();
    let rows = map_indexed(config.execution, n, |i| -> Result<(f64, u64, u64)> {
        // pair k occupies words [4(k-1), 4k) of this draw's stream
        let mut rng = draw_rng(config.seed, i as u64);
        let mut pairs: Vec<(f64, f64)> = Vec::new();
        let mut pair = |k: u64, cache: &mut Vec<(f64, f64)>| -> (f64, f64) {
            while (cache.len() as u64) < k {
                let idx = cache.len() as u128;
                rng.set_word_pos(4 * idx);
                let b = 1.0 - unit_open(&mut rng).powf(1.0 / theta);
                let u: f64 = rng.random();
                cache.push((b, inv.invert(u)));
            }
            cache[(k - 1) as usize]
        };
        let mut depth = config.cftp_start_depth;
        let mut restarts = 0u64;
        loop {
            let (mut up, mut low) = (h.hi, h.lo);
            for k in (1..=depth).rev() {
                let (b, x) = pair(k, &mut pairs);
                up = b * x + (1.0 - b) * up;
                low = b * x + (1.0 - b) * low;
            }
            if up - low < config.cftp_epsilon {
                return Ok(((0.5 * (up + low)).clamp(h.lo, h.hi), depth, restarts));
            }
            depth *= 2;
            restarts += 1;
            if depth > config.cftp_max_depth {
                return Err(Error::CoalescenceFailure { depth });
            }
        }
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SampleBatch::build(Method::Cftp, config.seed, rows, None))
}

/// Direct draws of Σ_i W_i Y_i with Dirichlet(κ, ..., κ) weights on m
/// independent η draws.
pub fn sample_symdirichlet(measure: &BaseMeasure, kappa: f64, m: u32, n: usize, config: &SamplerConfig) -> Result<SampleBatch> {
    config.validate()?;
    if !(kappa > 0.0) || m == 0 {
        return Err(Error::InvalidParams("need kappa > 0 and m >= 1".into()));
    }
    let h = measure.hull();
    let gamma = Gamma::new(kappa + 1.0, 1.0).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let rows = map_indexed(config.execution, n, |i| {
        let mut rng = draw_rng(config.seed, i as u64);
        // log G = log G_{κ+1} + log(U)/κ stays finite for tiny κ
        let mut logs = Vec::with_capacity(m as usize);
        let mut ys = Vec::with_capacity(m as usize);
        for _ in 0..m {
            let g: f64 = gamma.sample(&mut rng);
            logs.push(g.ln() + unit_open(&mut rng).ln() / kappa);
            ys.push(measure.sample(&mut rng));
        }
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut num = 0.0;
        let mut den = 0.0;
        for (l, y) in logs.iter().zip(&ys) {
            let w = (l - top).exp();
            num += w * y;
            den += w;
        }
        ((num / den).clamp(h.lo, h.hi), m as u64, 0)
    });
    Ok(SampleBatch::build(Method::SymdirichletDirect, config.seed, rows, None))
}

/// Dispatch by method.
pub fn sample(method: Method, measure: &BaseMeasure, params: &PDParams, n: usize, config: &SamplerConfig) -> Result<SampleBatch> {
    match method {
        Method::Stick => sample_stick(measure, params, n, config),
        Method::InvcdfStable => sample_stable_invcdf(measure, params.alpha, n, config),
        Method::Recursion => sample_recursion(measure, params, n, config),
        Method::Cftp => sample_cftp(measure, params, n, config),
        Method::SymdirichletDirect => match params.regime {
            crate::kernel::Regime::SymDirichlet { kappa, m } => sample_symdirichlet(measure, kappa, m, n, config),
            _ => Err(Error::InvalidParams("symdirichlet sampling needs alpha = -kappa, theta = m kappa".into())),
        },
    }
}

fn prev_float(x: f64) -> f64 {
    if x.is_nan() || x == f64::NEG_INFINITY {
        x
    } else if x == 0.0 {
        -f64::from_bits(1)
    } else if x > 0.0 {
        f64::from_bits(x.to_bits() - 1)
    } else {
        f64::from_bits(x.to_bits() + 1)
    }
}

/// sup_x |F_n(x) - F(x)|, checking both sides of every jump of F_n.
pub fn ks_distance_values(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < n {
        let x = v[i];
        let mut j = i;
        while j < n && v[j] == x {
            j += 1;
        }
        let below = i as f64 / nf;
        let at = j as f64 / nf;
        d = d.max((at - cdf(x)).abs()).max((below - cdf(prev_float(x))).abs());
        i = j;
    }
    d
}

pub fn ks_distance(batch: &SampleBatch, cdf: impl Fn(f64) -> f64) -> f64 {
    ks_distance_values(&batch.values, cdf)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Kolmogorov tail Q(λ) = 2 Σ (-1)^{k-1} exp(-2 k² λ²).
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        s += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Asymptotic p-value of a two-sample statistic `d` at sizes n and m.
pub fn ks_p_value(d: f64, n: usize, m: usize) -> f64 {
    let ne = (n as f64 * m as f64) / (n + m) as f64;
    let s = ne.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_examples() {
        let c = vec![0.3; 50];
        assert_eq!(ks_distance_values(&c, |x| if x >= 0.3 { 1.0 } else { 0.0 }), 0.0);
        let u: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_distance_values(&u, |x| x) < 1e-3);
        assert!((ks_distance_values(&u, |x| x * x) - 0.25).abs() < 2e-3);
        assert!(ks_two_sample(&u, &u) == 0.0);
        assert!(kolmogorov_q(1.36) > 0.04 && kolmogorov_q(1.36) < 0.06);
    }

    #[test]
    fn degenerate_samplers() {
        let d = BaseMeasure::degenerate(0.7).unwrap();
        let cfg = SamplerConfig::with_seed(3);
        let p = PDParams::general(0.5, 1.0).unwrap();
        for b in [
            sample_stick(&d, &p, 20, &cfg).unwrap(),
            sample_cftp(&d, &p, 20, &cfg).unwrap(),
            sample_recursion(&d, &p, 20, &cfg).unwrap(),
            sample_symdirichlet(&d, 0.5, 3, 20, &cfg).unwrap(),
        ] {
            assert!(b.values.iter().all(|&v| v == 0.7), "{:?}", b.method);
        }
    }

    #[test]
    fn symmetric_midpoint() {
        let b = BaseMeasure::bernoulli(0.5).unwrap();
        let inv = StableInverter::new(&b, 0.5, 1e-12).unwrap();
        assert!((inv.invert(0.5) - 0.5).abs() < 1e-11);
        let x = inv.invert(0.123);
        assert!((crate::dist::stable_cdf(&b, 0.5, x).unwrap() - 0.123).abs() < 1e-10);
    }
}
