//! Transform-side kernels: γ_α, ζ_α, the phase ρ, the jumps Δ and Δ̃, and the
//! forward generalized Stieltjes transforms.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{BaseMeasure, ATOM_TOL};

const MIN_MODULUS_SQ: f64 = 1e-300;
const GAMMA_SIGN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    /// 0 < α < 1, θ = 0
    Stable,
    /// 0 < α < 1, θ > 0
    General,
    /// α = 0, θ > 0
    Dirichlet,
    /// α = -κ, θ = mκ
    SymDirichlet { kappa: f64, m: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PDParams {
    pub alpha: f64,
    pub theta: f64,
    pub regime: Regime,
}

impl PDParams {
    /// Classify (α, θ). Negative α needs θ/κ to be a positive integer.
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        if !alpha.is_finite() || !theta.is_finite() {
            return Err(Error::InvalidParams("alpha and theta must be finite".into()));
        }
        if alpha > 0.0 && alpha < 1.0 {
            if theta == 0.0 {
                Ok(Self::stable_unchecked(alpha))
            } else if theta > 0.0 {
                Ok(Self { alpha, theta, regime: Regime::General })
            } else {
                Err(Error::InvalidParams(format!(
                    "theta = {theta} must be >= 0 for the analytic formulas"
                )))
            }
        } else if alpha == 0.0 {
            if theta > 0.0 {
                Ok(Self { alpha, theta, regime: Regime::Dirichlet })
            } else {
                Err(Error::InvalidParams("Dirichlet regime needs theta > 0".into()))
            }
        } else if alpha < 0.0 {
            let kappa = -alpha;
            let m = theta / kappa;
            let mr = m.round();
            if mr >= 1.0 && (m - mr).abs() <= 1e-9 * mr.max(1.0) {
                Self::sym_dirichlet(kappa, mr as u32)
            } else {
                Err(Error::InvalidParams(format!(
                    "alpha < 0 requires theta = m * kappa with integer m >= 1 (got m = {m})"
                )))
            }
        } else {
            Err(Error::InvalidParams(format!("alpha = {alpha} must be < 1")))
        }
    }

    fn stable_unchecked(alpha: f64) -> Self {
        Self { alpha, theta: 0.0, regime: Regime::Stable }
    }

    pub fn stable(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.0)
    }

    pub fn general(alpha: f64, theta: f64) -> Result<Self> {
        let p = Self::new(alpha, theta)?;
        if p.regime != Regime::General {
            return Err(Error::InvalidParams("general regime needs 0 < alpha < 1, theta > 0".into()));
        }
        Ok(p)
    }

    pub fn dirichlet(theta: f64) -> Result<Self> {
        Self::new(0.0, theta)
    }

    pub fn sym_dirichlet(kappa: f64, m: u32) -> Result<Self> {
        if !(kappa > 0.0) || m == 0 {
            return Err(Error::InvalidParams("need kappa > 0 and m >= 1".into()));
        }
        Ok(Self { alpha: -kappa, theta: m as f64 * kappa, regime: Regime::SymDirichlet { kappa, m } })
    }

    /// True for the Stable and General regimes.
    pub fn has_stable_kernel(&self) -> bool {
        matches!(self.regime, Regime::Stable | Regime::General)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelEval {
    pub t: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub rho: f64,
    pub delta: f64,
    pub delta_tilde: f64,
}

/// Precomputed trigonometric constants for a fixed α.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Trig {
    pub alpha: f64,
    pub cos: f64,
    pub sin: f64,
}

impl Trig {
    pub fn new(alpha: f64) -> Self {
        Self { alpha, cos: (alpha * PI).cos(), sin: (alpha * PI).sin() }
    }

    /// (γ_α, ζ_α) at t.
    pub fn gz(&self, m: &BaseMeasure, t: f64) -> (f64, f64) {
        let (am, ap) = m.abel_pair(self.alpha, t);
        (self.cos * am + ap, self.sin * am)
    }

    /// Δ_{α,θ}(t); NaN when the modulus vanishes.
    pub fn delta(&self, m: &BaseMeasure, theta: f64, t: f64) -> f64 {
        let (g, z) = self.gz(m, t);
        let r2 = g * g + z * z;
        if r2 < MIN_MODULUS_SQ {
            return f64::NAN;
        }
        let phi = z.atan2(g);
        let k = theta / self.alpha;
        (k * phi).sin() * (-0.5 * k * r2.ln()).exp() / PI
    }

    /// Δ̃_{α,θ+1}(t); NaN when the modulus vanishes, infinite on an atom.
    pub fn delta_tilde(&self, m: &BaseMeasure, theta: f64, t: f64) -> f64 {
        let (am, ap) = m.abel_pair(self.alpha, t);
        let (bm, bp) = m.abel_pair(self.alpha - 1.0, t);
        let g = self.cos * am + ap;
        let z = self.sin * am;
        let r2 = g * g + z * z;
        if r2 < MIN_MODULUS_SQ {
            return f64::NAN;
        }
        // exponent α-1: cos((α-1)π) = -cos(απ), sin((α-1)π) = -sin(απ)
        let g1 = bp - self.cos * bm;
        let z1 = -self.sin * bm;
        let k = (theta + self.alpha) / self.alpha;
        let psi = k * z.atan2(g);
        (g1 * psi.sin() - z1 * psi.cos()) * (-0.5 * k * r2.ln()).exp() / PI
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

fn stable_kernel_params(params: &PDParams) -> Result<()> {
    if params.has_stable_kernel() {
        Ok(())
    } else {
        Err(Error::InvalidParams("kernel functions need 0 < alpha < 1".into()))
    }
}

fn modulus_check(g: f64, z: f64, t: f64) -> Result<()> {
    if g * g + z * z < MIN_MODULUS_SQ {
        Err(Error::DegenerateKernel { t })
    } else {
        Ok(())
    }
}

/// (γ_α(t), ζ_α(t)).
pub fn gamma_zeta(measure: &BaseMeasure, alpha: f64, t: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    Ok(Trig::new(alpha).gz(measure, t))
}

/// True when γ_α(t) < 0.
pub fn in_gamma_set(measure: &BaseMeasure, alpha: f64, t: f64) -> Result<bool> {
    let (g, _) = gamma_zeta(measure, alpha, t)?;
    Ok(g < -GAMMA_SIGN_TOL)
}

/// ρ_{α,θ}(t) = (θ/α) arg(γ + iζ), argument in [0, π].
pub fn rho(measure: &BaseMeasure, params: &PDParams, t: f64) -> Result<f64> {
    stable_kernel_params(params)?;
    let (g, z) = Trig::new(params.alpha).gz(measure, t);
    modulus_check(g, z, t)?;
    Ok(params.theta / params.alpha * z.atan2(g))
}

pub fn delta(measure: &BaseMeasure, params: &PDParams, t: f64) -> Result<f64> {
    stable_kernel_params(params)?;
    let tr = Trig::new(params.alpha);
    let (g, z) = tr.gz(measure, t);
    modulus_check(g, z, t)?;
    Ok(tr.delta(measure, params.theta, t))
}

pub fn delta_tilde(measure: &BaseMeasure, params: &PDParams, t: f64) -> Result<f64> {
    stable_kernel_params(params)?;
    if measure.atom_near(t, ATOM_TOL).is_some() {
        return Err(Error::NonIntegrable { t, reason: "exponent alpha-1 transform at an atom" });
    }
    let tr = Trig::new(params.alpha);
    let (g, z) = tr.gz(measure, t);
    modulus_check(g, z, t)?;
    Ok(tr.delta_tilde(measure, params.theta, t))
}

/// All kernel quantities at t. Δ̃ is NaN on an atom.
pub fn evaluate(measure: &BaseMeasure, params: &PDParams, t: f64) -> Result<KernelEval> {
    stable_kernel_params(params)?;
    let tr = Trig::new(params.alpha);
    let (gamma, zeta) = tr.gz(measure, t);
    modulus_check(gamma, zeta, t)?;
    let rho = params.theta / params.alpha * zeta.atan2(gamma);
    let delta = tr.delta(measure, params.theta, t);
    let delta_tilde = if measure.atom_near(t, ATOM_TOL).is_some() {
        f64::NAN
    } else {
        tr.delta_tilde(measure, params.theta, t)
    };
    Ok(KernelEval { t, gamma, zeta, rho, delta, delta_tilde })
}

/// E[(z + M)^{-order}] in closed form, for real z > 0 and order θ or θ + 1.
pub fn stieltjes_forward(measure: &BaseMeasure, params: &PDParams, z: f64, order: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::InvalidParams(format!("z = {z} must be positive")));
    }
    let theta = params.theta;
    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    let is_theta = order > 0.0 && same(order, theta);
    let is_theta1 = same(order, theta + 1.0);
    if !(is_theta || is_theta1) {
        return Err(Error::UnsupportedOrder { order });
    }
    match params.regime {
        Regime::Stable | Regime::General => {
            let a = params.alpha;
            let pa = measure.shifted_power_moment(a, z);
            if is_theta {
                Ok(pa.powf(-theta / a))
            } else {
                let pa1 = measure.shifted_power_moment(a - 1.0, z);
                Ok(pa1 * pa.powf(-theta / a - 1.0))
            }
        }
        Regime::Dirichlet => {
            let l = measure.shifted_log_moment(z);
            let base = (-theta * l).exp();
            if is_theta {
                Ok(base)
            } else {
                Ok(measure.shifted_power_moment(-1.0, z) * base)
            }
        }
        Regime::SymDirichlet { kappa, m } => {
            let i = measure.shifted_power_moment(-kappa, z);
            if is_theta {
                Ok(i.powi(m as i32))
            } else {
                Ok(i.powi(m as i32 - 1) * measure.shifted_power_moment(-kappa - 1.0, z))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_points() {
        let b = BaseMeasure::bernoulli(0.5).unwrap();
        let (g, z) = gamma_zeta(&b, 0.5, 0.5).unwrap();
        assert!((g - 0.5f64.sqrt() * 0.5).abs() < 1e-15);
        assert!((z - 0.5f64.sqrt() * 0.5).abs() < 1e-15);
        let p = PDParams::general(0.5, 0.5).unwrap();
        assert!((rho(&b, &p, 0.5).unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((delta(&b, &p, 0.5).unwrap() - 2f64.sqrt() / PI).abs() < 1e-15);
        assert!((delta_tilde(&b, &p, 0.5).unwrap() - 2.0 * 2f64.sqrt() / PI).abs() < 1e-14);
        let s = PDParams::stable(0.5).unwrap();
        assert!((delta_tilde(&b, &s, 0.5).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert!((stieltjes_forward(&b, &p, 1.0, 0.5).unwrap() - 1.0 / (0.5 * 2f64.sqrt() + 0.5)).abs() < 1e-15);
    }

    #[test]
    fn params_classify() {
        assert_eq!(PDParams::new(0.5, 0.0).unwrap().regime, Regime::Stable);
        assert_eq!(PDParams::new(0.0, 2.0).unwrap().regime, Regime::Dirichlet);
        assert_eq!(
            PDParams::new(-0.5, 1.0).unwrap().regime,
            Regime::SymDirichlet { kappa: 0.5, m: 2 }
        );
        assert!(PDParams::new(-0.3, 1.0).is_err());
        assert!(PDParams::new(1.0, 1.0).is_err());
        assert!(PDParams::new(0.5, -0.1).is_err());
    }

    #[test]
    fn degenerate_dirichlet_transform() {
        let d = BaseMeasure::degenerate(2.0).unwrap();
        let p = PDParams::dirichlet(1.0).unwrap();
        assert!((stieltjes_forward(&d, &p, 3.0, 1.0).unwrap() - 0.2).abs() < 1e-15);
        assert!(stieltjes_forward(&d, &p, 3.0, 1.5).is_err());
    }
}
