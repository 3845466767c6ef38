//! Analytic special cases, coded independently of the generic pipeline so the
//! two can check each other.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::kernel::{PDParams, Regime};
use crate::measure::{BaseMeasure, MeasureSpec, ATOM_TOL};
use crate::quadrature::WeightedIntegrand;
use crate::special::{beta_cdf, beta_pdf, ln_choose};

type RealFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A named density (and possibly CDF) with the parameters and base measure it
/// applies to.
pub struct ClosedForm {
    pub name: String,
    pub params: PDParams,
    pub measure_spec: MeasureSpec,
    pub density: RealFn,
    pub cdf: Option<RealFn>,
}

impl std::fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ClosedForm")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("measure_spec", &self.measure_spec)
            .field("has_cdf", &self.cdf.is_some())
            .finish()
    }
}

/// Generalized arcsine (Lamperti) density.
pub fn lamperti_density(alpha: f64, p: f64, x: f64) -> f64 {
    if !(x > 0.0 && x < 1.0) {
        return 0.0;
    }
    let q = 1.0 - p;
    let (s, c) = (alpha * PI).sin_cos();
    let xa = x.powf(alpha);
    let ya = (1.0 - x).powf(alpha);
    let num = p * q * s * x.powf(alpha - 1.0) * (1.0 - x).powf(alpha - 1.0);
    let den = PI * (q * q * xa * xa + p * p * ya * ya + 2.0 * p * q * xa * ya * c);
    num / den
}

/// arctan(num/den) moved to [0, π] by adding π when den < 0.
fn branch_arctan(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        PI / 2.0
    } else if den > 0.0 {
        (num / den).atan()
    } else {
        (num / den).atan() + PI
    }
}

/// Lamperti CDF, (1/απ) arctan(...) on the continuous branch.
pub fn lamperti_cdf(alpha: f64, p: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let q = 1.0 - p;
    let (s, c) = (alpha * PI).sin_cos();
    let xa = x.powf(alpha);
    let num = s * xa * q;
    let den = c * xa * q + (1.0 - x).powf(alpha) * p;
    branch_arctan(num, den) / (alpha * PI)
}

/// Boundary v/(1+v) of the set where γ_α < 0 for Bernoulli(p), α > 1/2.
/// γ_α(t) = p(1-t)^α + p̄ cos(απ) t^α is negative for t above this point.
pub fn bernoulli_gamma_boundary(alpha: f64, p: f64) -> Option<f64> {
    if alpha <= 0.5 {
        return None;
    }
    let v = (-p / ((1.0 - p) * (alpha * PI).cos())).powf(1.0 / alpha);
    Some(v / (1.0 + v))
}

/// Density of the Bernoulli(p) mean under PD(α, 1).
pub fn f_alpha1_bernoulli(alpha: f64, p: f64, t: f64) -> f64 {
    if !(t > 0.0 && t < 1.0) {
        return 0.0;
    }
    let q = 1.0 - p;
    let (s, c) = (alpha * PI).sin_cos();
    let ta = t.powf(alpha);
    let ua = (1.0 - t).powf(alpha);
    let num = q * s * ta;
    let den = q * c * ta + p * ua;
    let mut angle = (num / den).atan() / alpha;
    if let Some(b) = bernoulli_gamma_boundary(alpha, p) {
        if t > b {
            angle += PI / alpha;
        }
    }
    let m = q * q * ta * ta + p * p * ua * ua + 2.0 * q * p * c * ta * ua;
    angle.sin() / (PI * m.powf(1.0 / (2.0 * alpha)))
}

/// Density of M_{α,1}(η) via the α = 1/2 and α = 1/n expansions, falling back
/// to the arctan-with-indicator form for other α.
pub fn pd_alpha1_density(measure: &BaseMeasure, alpha: f64, y: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let h = measure.hull();
    if y <= h.lo || y >= h.hi {
        if measure.atom_near(y, ATOM_TOL).is_some() {
            return Err(Error::OffThetaSet { y });
        }
        return Ok(0.0);
    }
    if measure.atom_near(y, ATOM_TOL).is_some() {
        return Err(Error::OffThetaSet { y });
    }
    let am = measure.abel_minus(alpha, y)?;
    let ap = measure.abel_plus(alpha, y)?;
    if (alpha - 0.5).abs() < 1e-15 {
        let r2 = am * am + ap * ap;
        return Ok(2.0 / PI * am * ap / (r2 * r2));
    }
    let (s, c) = (alpha * PI).sin_cos();
    let g = c * am + ap;
    let z = s * am;
    let r2 = g * g + z * z;
    let n = (1.0 / alpha).round();
    if (n * alpha - 1.0).abs() < 1e-12 {
        // sin(nφ) r^n = Σ_k C(n,k) γ^k ζ^{n-k} sin((n-k)π/2)
        let n = n as u32;
        let mut acc = 0.0;
        for k in 0..=n {
            let sk = match (n - k) % 4 {
                1 => 1.0,
                3 => -1.0,
                _ => continue,
            };
            acc += sk * ln_choose(n, k).exp() * g.powi(k as i32) * z.powi((n - k) as i32);
        }
        return Ok(acc / (PI * r2.powi(n as i32)));
    }
    let angle = branch_arctan(z, g) / alpha;
    Ok(angle.sin() / (PI * r2.powf(1.0 / (2.0 * alpha))))
}

fn is_bernoulli(m: &BaseMeasure) -> Option<f64> {
    let a = m.atoms();
    if !m.has_ac() && a.len() == 2 && a[0].location == 0.0 && a[1].location == 1.0 {
        Some(a[1].weight)
    } else {
        None
    }
}

fn weighted(lower: f64, upper: f64, beta: f64, f: impl Fn(f64) -> f64, breaks: Vec<f64>) -> Result<f64> {
    Ok(WeightedIntegrand::new(lower, upper, beta, f).breakpoints(breaks).integrate()?.value)
}

/// Density of M_{α,1-α}(η) from the Beta(1, 1-α) mixture of PD(α, 1) means.
pub fn pd_alpha_one_minus_alpha_density(measure: &BaseMeasure, alpha: f64, x: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let h = measure.hull();
    if x <= h.lo || x >= h.hi {
        return Ok(0.0);
    }
    if let Some(p) = is_bernoulli(measure) {
        let q = 1.0 - p;
        // u in [t, 1] for the W = 0 branch and [1-t, 1] for W = 1
        let a = weighted(x, 1.0, -alpha, |u| f_alpha1_bernoulli(alpha, p, x / u) / u, vec![])?;
        let b = weighted(1.0 - x, 1.0, -alpha, |u| f_alpha1_bernoulli(alpha, q, (1.0 - x) / u) / u, vec![])?;
        return Ok((1.0 - alpha) * (q * a + p * b));
    }
    let delta1 = |t: f64| -> f64 {
        if t <= h.lo || t >= h.hi || measure.atom_near(t, 0.0).is_some() {
            0.0
        } else {
            pd_alpha1_density(measure, alpha, t).unwrap_or(0.0)
        }
    };
    let cuts = measure.breakpoints();
    let inner = |w: f64| -> Result<f64> {
        let breaks: Vec<f64> = cuts
            .iter()
            .filter(|&&c| c != w)
            .map(|&c| (c - x) / (c - w))
            .filter(|b| *b > 0.0 && *b < 1.0)
            .collect();
        weighted(
            0.0,
            1.0,
            0.0,
            |b| delta1((x - w * b) / (1.0 - b)) / (1.0 - b) * b.powf(-alpha),
            breaks,
        )
    };
    let mut total = 0.0;
    for a in measure.atoms() {
        total += a.weight * inner(a.location)?;
    }
    if measure.has_ac() {
        let mut breaks = cuts.clone();
        breaks.push(x);
        let v = weighted(h.lo, h.hi, 0.0, |w| measure.ac_density(w) * inner(w).unwrap_or(f64::NAN), breaks)?;
        total += v;
    }
    Ok((1.0 - alpha) * total)
}

/// Density of the Bernoulli(p) mean under PD(α, α), as a single integral
/// with kernel [t(y - t)]^{α-1}.
pub fn pd_alpha_alpha_density_bernoulli(alpha: f64, p: f64, y: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0 && p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParams("need alpha, p in (0, 1)".into()));
    }
    if !(y > 0.0 && y < 1.0) {
        return Ok(0.0);
    }
    let q = 1.0 - p;
    let (s, c) = (alpha * PI).sin_cos();
    let f = |t: f64| {
        let u = 1.0 - t;
        let num = p * p * u.powf(2.0 * alpha - 1.0) * (1.0 + t) + 2.0 * p * q * t.powf(alpha + 1.0) * u.powf(alpha - 1.0) * c
            - q * q * t.powf(2.0 * alpha);
        let d = p * p * u.powf(2.0 * alpha) + q * q * t.powf(2.0 * alpha) + 2.0 * p * q * t.powf(alpha) * u.powf(alpha) * c;
        t.powf(alpha - 1.0) * num / (d * d)
    };
    let v = weighted(0.0, y, alpha - 1.0, f, vec![])?;
    Ok(alpha * q * s / PI * v)
}

/// Stable mean density for η uniform on [0, 1].
pub fn uniform_stable_density(alpha: f64, y: f64) -> f64 {
    if !(y > 0.0 && y < 1.0) {
        return 0.0;
    }
    let (s, c) = (alpha * PI).sin_cos();
    let u = 1.0 - y;
    let num = (alpha + 1.0) * s * y.powf(alpha) * u.powf(alpha);
    let den = alpha
        * PI
        * (y.powf(2.0 * alpha + 2.0) + u.powf(2.0 * alpha + 2.0) + 2.0 * c * y.powf(alpha + 1.0) * u.powf(alpha + 1.0));
    num / den
}

/// PD(1/2, 1) mean density for η uniform on [0, 1].
pub fn uniform_half_one_density(y: f64) -> f64 {
    if !(y > 0.0 && y < 1.0) {
        return 0.0;
    }
    let u = 1.0 - y;
    let d = y * y * y + u * u * u;
    9.0 / (2.0 * PI) * (y * u).powf(1.5) / (d * d)
}

/// Which exponent to put on (1 - y) in the uniform Dirichlet density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirichletExponent {
    /// (1 - y)^{-(1 - y)}
    OneMinusY,
    /// (1 - y)^{-(1 + y)}
    OnePlusY,
}

/// Dirichlet (θ = 1) mean density for η uniform on [0, 1].
pub fn uniform_dirichlet_density(y: f64, variant: DirichletExponent) -> f64 {
    if !(y > 0.0 && y < 1.0) {
        return 0.0;
    }
    let u = 1.0 - y;
    let e = match variant {
        DirichletExponent::OneMinusY => u,
        DirichletExponent::OnePlusY => 1.0 + y,
    };
    E / PI * u.powf(-e) * y.powf(-y) * (PI * y).sin()
}

/// Beta laws for Bernoulli means: PD(0, θ) gives Beta(θp, θp̄), and
/// PD(1/2, θ) with p = 1/2 gives Beta(θ + 1/2, θ + 1/2).
pub fn beta_special_cases(params: &PDParams, p: f64) -> Result<ClosedForm> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParams(format!("p = {p} must lie in (0, 1)")));
    }
    let theta = params.theta;
    let (a, b) = match params.regime {
        Regime::Dirichlet => (theta * p, theta * (1.0 - p)),
        Regime::Stable | Regime::General if (params.alpha - 0.5).abs() < 1e-15 && (p - 0.5).abs() < 1e-15 => {
            (theta + 0.5, theta + 0.5)
        }
        _ => {
            return Err(Error::UnsupportedCombination(
                "Beta law known only for alpha = 0, or alpha = 1/2 with p = 1/2".into(),
            ))
        }
    };
    Ok(ClosedForm {
        name: format!("beta({a},{b})"),
        params: *params,
        measure_spec: MeasureSpec::Bernoulli { p },
        density: Box::new(move |x| beta_pdf(a, b, x)),
        cdf: Some(Box::new(move |x| beta_cdf(a, b, x))),
    })
}

/// Names accepted by [`by_name`].
pub const NAMES: &[&str] = &[
    "lamperti",
    "pd_alpha1",
    "pd_alpha_one_minus_alpha",
    "pd_alpha_alpha",
    "beta",
    "uniform_stable",
    "uniform_half_one",
    "uniform_dirichlet",
    "uniform_dirichlet_plus",
];

fn bernoulli_p(m: &BaseMeasure, name: &str) -> Result<f64> {
    is_bernoulli(m).ok_or_else(|| Error::UnsupportedCombination(format!("{name} needs a Bernoulli measure")))
}

fn unit_uniform(m: &BaseMeasure, name: &str) -> Result<()> {
    let h = m.hull();
    if !m.has_atoms() && m.has_ac() && h.lo == 0.0 && h.hi == 1.0 && (m.ac_density(0.3) - 1.0).abs() < 1e-12 && (m.ac_density(0.9) - 1.0).abs() < 1e-12 {
        Ok(())
    } else {
        Err(Error::UnsupportedCombination(format!("{name} needs the uniform measure on [0, 1]")))
    }
}

fn need(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::UnsupportedCombination(what.into()))
    }
}

/// Look up a closed form by name for the given parameters and measure.
pub fn by_name(name: &str, params: &PDParams, measure: &BaseMeasure) -> Result<ClosedForm> {
    let (alpha, theta) = (params.alpha, params.theta);
    let make = |density: RealFn, cdf: Option<RealFn>, spec: MeasureSpec| ClosedForm {
        name: name.to_string(),
        params: *params,
        measure_spec: spec,
        density,
        cdf,
    };
    let uniform = MeasureSpec::Uniform { a: 0.0, b: 1.0 };
    match name {
        "lamperti" => {
            let p = bernoulli_p(measure, name)?;
            need(params.regime == Regime::Stable, "lamperti needs theta = 0")?;
            Ok(make(
                Box::new(move |x| lamperti_density(alpha, p, x)),
                Some(Box::new(move |x| lamperti_cdf(alpha, p, x))),
                MeasureSpec::Bernoulli { p },
            ))
        }
        "pd_alpha1" => {
            need(params.has_stable_kernel() && theta == 1.0, "pd_alpha1 needs theta = 1")?;
            let m = measure.clone();
            Ok(make(
                Box::new(move |x| pd_alpha1_density(&m, alpha, x).unwrap_or(f64::NAN)),
                None,
                MeasureSpec::Atoms { atoms: vec![] },
            ))
        }
        "pd_alpha_one_minus_alpha" => {
            need(params.has_stable_kernel() && (alpha + theta - 1.0).abs() < 1e-12, "needs theta = 1 - alpha")?;
            let m = measure.clone();
            Ok(make(
                Box::new(move |x| pd_alpha_one_minus_alpha_density(&m, alpha, x).unwrap_or(f64::NAN)),
                None,
                MeasureSpec::Atoms { atoms: vec![] },
            ))
        }
        "pd_alpha_alpha" => {
            let p = bernoulli_p(measure, name)?;
            need(params.has_stable_kernel() && (alpha - theta).abs() < 1e-12, "needs theta = alpha")?;
            Ok(make(
                Box::new(move |x| pd_alpha_alpha_density_bernoulli(alpha, p, x).unwrap_or(f64::NAN)),
                None,
                MeasureSpec::Bernoulli { p },
            ))
        }
        "beta" => beta_special_cases(params, bernoulli_p(measure, name)?),
        "uniform_stable" => {
            unit_uniform(measure, name)?;
            need(params.regime == Regime::Stable, "uniform_stable needs theta = 0")?;
            Ok(make(Box::new(move |x| uniform_stable_density(alpha, x)), None, uniform))
        }
        "uniform_half_one" => {
            unit_uniform(measure, name)?;
            need(alpha == 0.5 && theta == 1.0, "uniform_half_one needs alpha = 1/2, theta = 1")?;
            Ok(make(Box::new(uniform_half_one_density), None, uniform))
        }
        "uniform_dirichlet" | "uniform_dirichlet_plus" => {
            unit_uniform(measure, name)?;
            need(params.regime == Regime::Dirichlet && theta == 1.0, "needs alpha = 0, theta = 1")?;
            let v = if name == "uniform_dirichlet" { DirichletExponent::OneMinusY } else { DirichletExponent::OnePlusY };
            Ok(make(Box::new(move |x| uniform_dirichlet_density(x, v)), None, uniform))
        }
        _ => Err(Error::InvalidParams(format!("unknown closed form {name:?}; expected one of {NAMES:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lamperti_points() {
        assert!((lamperti_density(0.5, 0.5, 0.5) - 2.0 / PI).abs() < 1e-15);
        assert!((lamperti_density(0.5, 0.5, 0.2) - 1.0 / (0.4 * PI)).abs() < 1e-15);
        assert!((lamperti_cdf(0.5, 0.5, 0.25) - 1.0 / 3.0).abs() < 1e-15);
        assert!((lamperti_density(0.3, 0.2, 0.7) - lamperti_density(0.3, 0.8, 0.3)).abs() < 1e-14);
    }

    #[test]
    fn uniform_forms() {
        assert!((uniform_stable_density(0.5, 0.5) - 6.0 / PI).abs() < 1e-14);
        assert!((uniform_half_one_density(0.5) - 9.0 / PI).abs() < 1e-14);
        let u = BaseMeasure::uniform(0.0, 1.0).unwrap();
        assert!((pd_alpha1_density(&u, 0.5, 0.5).unwrap() - 9.0 / PI).abs() < 1e-13);
        assert!((uniform_dirichlet_density(0.5, DirichletExponent::OneMinusY) - 2.0 * E / PI).abs() < 1e-14);
    }

    #[test]
    fn brownian_bridge_cases() {
        let b = BaseMeasure::bernoulli(0.5).unwrap();
        for &t in &[0.1, 0.5, 0.8] {
            let v = pd_alpha_one_minus_alpha_density(&b, 0.5, t).unwrap();
            assert!((v - 1.0).abs() < 1e-8, "t={t} v={v}");
            let w = pd_alpha_alpha_density_bernoulli(0.5, 0.5, t).unwrap();
            assert!((w - 1.0).abs() < 1e-8, "t={t} w={w}");
        }
    }
}
