//! Adaptive double-exponential quadrature with an algebraic endpoint weight.
//!
//! Nodes cluster doubly exponentially at both ends of every panel, and the
//! distance from a node to the panel end is taken from the rule itself rather
//! than recomputed as `upper - t`, so weights like `(upper - t)^{-0.9}` are
//! evaluated without cancellation.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::measure::{BaseMeasure, ATOM_TOL};

const S_MAX: f64 = 6.0;
const MAX_LEVEL: usize = 12;
const MIN_LEVEL: usize = 4;

/// Node table per level: (s, complement 1 - x, weight) for s > 0.
fn tables() -> &'static Vec<Vec<(f64, f64)>> {
    static T: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    T.get_or_init(|| {
        let mut out = Vec::with_capacity(MAX_LEVEL + 1);
        for level in 0..=MAX_LEVEL {
            let h = 0.5f64.powi(level as i32);
            let mut v = Vec::new();
            let mut j = 1usize;
            loop {
                if level > 0 && j % 2 == 0 {
                    j += 1;
                    continue;
                }
                let s = j as f64 * h;
                if s > S_MAX {
                    break;
                }
                let u = FRAC_PI_2 * s.sinh();
                let e = (-2.0 * u).exp();
                let c = 2.0 * e / (1.0 + e);
                let w = FRAC_PI_2 * s.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
                v.push((c, w));
                j += 1;
            }
            out.push(v);
        }
        out
    })
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        f64::from_bits(1)
    } else if x > 0.0 {
        f64::from_bits(x.to_bits() + 1)
    } else {
        f64::from_bits(x.to_bits() - 1)
    }
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// ∫_lower^upper (upper - t)^β g(t) dt with tolerance controls.
pub struct WeightedIntegrand<F> {
    pub lower: f64,
    pub upper: f64,
    pub endpoint_exponent_at_upper: f64,
    pub integrand: F,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Interior points where g may be singular or non-smooth.
    pub breakpoints: Vec<f64>,
}

impl<F: Fn(f64) -> f64> WeightedIntegrand<F> {
    pub fn new(lower: f64, upper: f64, endpoint_exponent_at_upper: f64, integrand: F) -> Self {
        Self {
            lower,
            upper,
            endpoint_exponent_at_upper,
            integrand,
            abs_tol: 1e-9,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
            breakpoints: Vec::new(),
        }
    }

    pub fn breakpoints(mut self, b: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints = b.into_iter().collect();
        self
    }

    pub fn tolerance(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    pub fn integrate(&self) -> Result<Estimate> {
        integrate_endpoint_weight(self)
    }
}

struct Panel {
    value: f64,
    error: f64,
    converged: bool,
}

#[allow(clippy::too_many_arguments)]
fn panel<F: Fn(f64) -> f64>(
    g: &F,
    a: f64,
    b: f64,
    upper: f64,
    beta: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_level: usize,
) -> Result<Panel> {
    let half = 0.5 * (b - a);
    let gap = upper - b;
    let width = b - a;
    let eval = |t: f64, db: f64, near: f64| -> Result<f64> {
        // a node that rounds onto an end point is moved to the nearest
        // interior float; the weight still uses the exact distance
        let t = if t <= a {
            next_up(a)
        } else if t >= b {
            next_down(b)
        } else {
            t
        };
        if t <= a || t >= b {
            return Ok(0.0);
        }
        let v = g(t);
        let w = if beta == 0.0 { 1.0 } else { (db + gap).powf(beta) };
        let r = v * w;
        if r.is_finite() {
            Ok(r)
        } else if near < 1e-100 * width {
            // too close to an endpoint to matter
            Ok(0.0)
        } else {
            Err(Error::NonFinite { t })
        }
    };
    let tabs = tables();
    let mut sum = FRAC_PI_2 * eval(a + half, half, half)?;
    let mut abs_sum = sum.abs();
    let mut prev = f64::NAN;
    let mut est = 0.0;
    let mut err = f64::INFINITY;
    for (level, tab) in tabs.iter().enumerate().take(max_level + 1) {
        let h = 0.5f64.powi(level as i32);
        for &(c, w) in tab {
            let d = half * c;
            let fr = eval(b - d, d, d)?;
            let fl = eval(a + d, half * (2.0 - c), d)?;
            sum += w * (fr + fl);
            abs_sum += w * (fr.abs() + fl.abs());
        }
        est = half * h * sum;
        let floor = 64.0 * f64::EPSILON * half * h * abs_sum;
        if level > 0 {
            err = (est - prev).abs().max(floor);
        }
        if level >= MIN_LEVEL && err <= abs_tol.max(rel_tol * est.abs()) {
            return Ok(Panel { value: est, error: err, converged: true });
        }
        prev = est;
    }
    Ok(Panel { value: est, error: err, converged: false })
}

/// Integrate `(upper - t)^β g(t)` over `[lower, upper]`.
///
/// Returns `ToleranceNotMet` carrying the best estimate when the subdivision
/// budget runs out.
pub fn integrate_endpoint_weight<F: Fn(f64) -> f64>(w: &WeightedIntegrand<F>) -> Result<Estimate> {
    let (lo, hi) = (w.lower, w.upper);
    let beta = w.endpoint_exponent_at_upper;
    if !(beta > -1.0) {
        return Err(Error::InvalidParams(format!("endpoint exponent {beta} must exceed -1")));
    }
    if !(hi > lo) {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let mut cuts: Vec<f64> = w.breakpoints.iter().copied().filter(|&c| c > lo && c < hi).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);
    let mut stack: Vec<(f64, f64)> = edges.windows(2).rev().map(|e| (e[0], e[1])).collect();
    let total = hi - lo;
    let mut value = 0.0;
    let mut error = 0.0;
    let mut splits = 0usize;
    let mut failed = false;
    while let Some((a, b)) = stack.pop() {
        let share = w.abs_tol * ((b - a) / total).max(1e-6);
        let last = splits >= w.max_subdivisions || (b - a) < 1e-13 * total.max(1e-300);
        let p = panel(&w.integrand, a, b, hi, beta, share, w.rel_tol, if last { MAX_LEVEL } else { 8 })?;
        if p.converged {
            value += p.value;
            error += p.error;
        } else if !last {
            let m = a + 0.5 * (b - a);
            stack.push((m, b));
            stack.push((a, m));
            splits += 1;
        } else {
            value += p.value;
            error += p.error;
            failed = true;
        }
    }
    if failed && error > w.abs_tol.max(w.rel_tol * value.abs()) {
        return Err(Error::ToleranceNotMet { value, error });
    }
    Ok(Estimate { value, error })
}

/// Plain ∫_a^b f(t) dt with breakpoints.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breakpoints: &[f64]) -> Result<Estimate> {
    WeightedIntegrand::new(a, b, 0.0, f)
        .breakpoints(breakpoints.iter().copied())
        .integrate()
}

/// PV ∫ η(dx)/(t - x), the derivative of the log kernel R.
pub fn integrate_pv_log(measure: &BaseMeasure, t: f64) -> Result<f64> {
    if measure.atom_near(t, ATOM_TOL).is_some() {
        return Err(Error::NonIntegrable { t, reason: "principal value at an atom" });
    }
    measure
        .pv_inverse_raw(t)
        .ok_or(Error::NonIntegrable { t, reason: "density does not vanish at a jump" })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn weighted_examples() {
        let e = WeightedIntegrand::new(0.0, 1.0, -0.5, |_| 1.0).integrate().unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);
        let e = WeightedIntegrand::new(0.0, 1.0, -0.5, |t: f64| t.powf(-0.5)).integrate().unwrap();
        assert!((e.value - PI).abs() < 1e-11);
        for &y in &[0.1, 0.5, 0.9] {
            let e = WeightedIntegrand::new(0.0, y, -0.5, |t: f64| 2.0 / PI * t.powf(-0.5))
                .integrate()
                .unwrap();
            assert!((e.value - 2.0).abs() < 1e-10, "y={y} v={}", e.value);
        }
    }

    #[test]
    fn pv_examples() {
        let d = BaseMeasure::degenerate(0.0).unwrap();
        assert!((integrate_pv_log(&d, 2.0).unwrap() - 0.5).abs() < 1e-15);
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        assert!(integrate_pv_log(&u, 0.5).unwrap().abs() < 1e-15);
        assert!((integrate_pv_log(&u, 0.25).unwrap() + 3f64.ln()).abs() < 1e-14);
        assert!(integrate_pv_log(&u, 0.0).is_err());
        assert!(integrate_pv_log(&d, 0.0).is_err());
    }

    #[test]
    fn breakpoint_kink() {
        let e = integrate(|t: f64| (t - 0.3).abs(), 0.0, 1.0, &[0.3]).unwrap();
        assert!((e.value - (0.045 + 0.245)).abs() < 1e-13);
    }
}
