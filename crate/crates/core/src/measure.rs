//! Base measures on the nonnegative half-line: finitely many atoms plus an
//! optional piecewise-linear absolutely continuous part.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Location tolerance for atom collisions at evaluation points.
pub const ATOM_TOL: f64 = 1e-12;
const LOAD_MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Absolutely continuous component.
#[derive(Debug, Clone, PartialEq)]
pub enum AcPart {
    Uniform { a: f64, b: f64 },
    Table { x: Vec<f64>, pdf: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportHull {
    pub lo: f64,
    pub hi: f64,
}

impl SupportHull {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// One linear piece of the density, p(x) = p0 + s (x - x0) on [x0, x1].
#[derive(Debug, Clone, Copy)]
pub(crate) struct Piece {
    pub x0: f64,
    pub x1: f64,
    pub p0: f64,
    pub p1: f64,
}

impl Piece {
    fn slope(&self) -> f64 {
        (self.p1 - self.p0) / (self.x1 - self.x0)
    }

    /// Value of the linear extension at t.
    fn at(&self, t: f64) -> f64 {
        self.p0 + self.slope() * (t - self.x0)
    }

    fn mass(&self) -> f64 {
        0.5 * (self.p0 + self.p1) * (self.x1 - self.x0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseMeasure {
    atoms: Vec<Atom>,
    ac: Option<AcPart>,
    // density table after normalization, shared by both ac variants
    xs: Vec<f64>,
    ps: Vec<f64>,
    hull: SupportHull,
}

/// JSON schema for measure files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MeasureSpec {
    Atoms { atoms: Vec<(f64, f64)> },
    Uniform { a: f64, b: f64 },
    Table { x: Vec<f64>, pdf: Vec<f64> },
    Bernoulli { p: f64 },
}

/// ∫_{u0}^{u1} u^e du for 0 <= u0 <= u1.
pub(crate) fn pow_int(e: f64, u0: f64, u1: f64) -> f64 {
    if u1 <= u0 {
        return 0.0;
    }
    let e1 = e + 1.0;
    if e1.abs() < 1e-14 {
        return (u1 / u0).ln();
    }
    (u1.powf(e1) - u0.powf(e1)) / e1
}

// antiderivatives of log u and u log u, vanishing at 0
fn l1(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u * u.ln() - u
    }
}

fn l2(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        0.5 * u * u * u.ln() - 0.25 * u * u
    }
}

impl BaseMeasure {
    /// Build a measure from atoms and an optional ac part. Total mass must be
    /// within `1e-9` of one; the result is renormalized exactly.
    pub fn new(atoms: Vec<Atom>, ac: Option<AcPart>) -> Result<Self> {
        Self::with_tolerance(atoms, ac, LOAD_MASS_TOL)
    }

    fn with_tolerance(mut atoms: Vec<Atom>, ac: Option<AcPart>, tol: f64) -> Result<Self> {
        for a in &atoms {
            if !a.location.is_finite() || a.location < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "atom location {} must be finite and nonnegative",
                    a.location
                )));
            }
            if !(a.weight > 0.0 && a.weight <= 1.0 + tol) {
                return Err(Error::InvalidMeasure(format!(
                    "atom weight {} outside (0, 1]",
                    a.weight
                )));
            }
        }
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        for w in atoms.windows(2) {
            if w[1].location <= w[0].location {
                return Err(Error::InvalidMeasure(format!(
                    "duplicate atom location {}",
                    w[0].location
                )));
            }
        }
        let (xs, ps) = match &ac {
            None => (Vec::new(), Vec::new()),
            Some(AcPart::Uniform { a, b }) => {
                if !(a.is_finite() && b.is_finite() && *a >= 0.0 && b > a) {
                    return Err(Error::InvalidMeasure(format!("bad uniform support [{a}, {b}]")));
                }
                let h = 1.0 / (b - a);
                (vec![*a, *b], vec![h, h])
            }
            Some(AcPart::Table { x, pdf }) => {
                if x.len() < 2 || x.len() != pdf.len() {
                    return Err(Error::InvalidMeasure(
                        "density table needs at least two breakpoints and matching lengths".into(),
                    ));
                }
                if x.iter().any(|v| !v.is_finite()) || x[0] < 0.0 {
                    return Err(Error::InvalidMeasure("table breakpoints must be finite and nonnegative".into()));
                }
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidMeasure("table breakpoints must be strictly increasing".into()));
                }
                if pdf.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(Error::InvalidMeasure("table density must be finite and nonnegative".into()));
                }
                (x.clone(), pdf.clone())
            }
        };
        let atom_mass: f64 = atoms.iter().map(|a| a.weight).sum();
        let ac_mass: f64 = xs
            .windows(2)
            .zip(ps.windows(2))
            .map(|(x, p)| 0.5 * (p[0] + p[1]) * (x[1] - x[0]))
            .sum();
        let total = atom_mass + ac_mass;
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidMeasure(format!("total mass {total} differs from 1")));
        }
        if xs.is_empty() && atoms.is_empty() {
            return Err(Error::InvalidMeasure("empty measure".into()));
        }
        for a in &mut atoms {
            a.weight /= total;
        }
        let ps: Vec<f64> = ps.into_iter().map(|p| p / total).collect();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        if let (Some(f), Some(l)) = (atoms.first(), atoms.last()) {
            lo = f.location;
            hi = l.location;
        }
        if let (Some(f), Some(l)) = (xs.first(), xs.last()) {
            lo = lo.min(*f);
            hi = hi.max(*l);
        }
        Ok(Self { atoms, ac, xs, ps, hull: SupportHull { lo, hi } })
    }

    pub fn atoms_only(atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            atoms.iter().map(|&(location, weight)| Atom { location, weight }).collect(),
            None,
        )
    }

    /// Two atoms at 0 and 1 with weights 1 - p and p.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidMeasure(format!("bernoulli p = {p} must lie in (0, 1)")));
        }
        Self::atoms_only(&[(0.0, 1.0 - p), (1.0, p)])
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::new(Vec::new(), Some(AcPart::Uniform { a, b }))
    }

    pub fn table(x: Vec<f64>, pdf: Vec<f64>) -> Result<Self> {
        Self::new(Vec::new(), Some(AcPart::Table { x, pdf }))
    }

    pub fn degenerate(c: f64) -> Result<Self> {
        Self::atoms_only(&[(c, 1.0)])
    }

    pub fn from_spec(spec: &MeasureSpec) -> Result<Self> {
        match spec {
            MeasureSpec::Atoms { atoms } => Self::atoms_only(atoms),
            MeasureSpec::Uniform { a, b } => Self::uniform(*a, *b),
            MeasureSpec::Table { x, pdf } => Self::table(x.clone(), pdf.clone()),
            MeasureSpec::Bernoulli { p } => Self::bernoulli(*p),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: MeasureSpec = serde_json::from_str(s)?;
        Self::from_spec(&spec)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn ac_part(&self) -> Option<&AcPart> {
        self.ac.as_ref()
    }

    pub fn hull(&self) -> SupportHull {
        self.hull
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    pub fn has_ac(&self) -> bool {
        !self.xs.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.xs.is_empty() && self.atoms.len() == 1
    }

    pub(crate) fn pieces(&self) -> impl Iterator<Item = Piece> + '_ {
        self.xs
            .windows(2)
            .zip(self.ps.windows(2))
            .map(|(x, p)| Piece { x0: x[0], x1: x[1], p0: p[0], p1: p[1] })
    }

    /// Atom locations and density breakpoints, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.atoms.iter().map(|a| a.location).chain(self.xs.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Atom within `tol` of t, if any.
    pub fn atom_near(&self, t: f64, tol: f64) -> Option<Atom> {
        self.atoms.iter().copied().find(|a| (a.location - t).abs() <= tol)
    }

    pub fn mean(&self) -> f64 {
        let a: f64 = self.atoms.iter().map(|a| a.weight * a.location).sum();
        let c: f64 = self
            .pieces()
            .map(|pc| {
                let s = pc.slope();
                let pz = pc.at(0.0);
                pz * pow_int(1.0, pc.x0, pc.x1) + s * pow_int(2.0, pc.x0, pc.x1)
            })
            .sum();
        a + c
    }

    pub fn second_moment(&self) -> f64 {
        let a: f64 = self.atoms.iter().map(|a| a.weight * a.location * a.location).sum();
        let c: f64 = self
            .pieces()
            .map(|pc| {
                let s = pc.slope();
                let pz = pc.at(0.0);
                pz * pow_int(2.0, pc.x0, pc.x1) + s * pow_int(3.0, pc.x0, pc.x1)
            })
            .sum();
        a + c
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.second_moment() - m * m).max(0.0)
    }

    /// Ψ(t) = η((-∞, t]).
    pub fn cdf_psi(&self, t: f64) -> f64 {
        let mut s: f64 = self.atoms.iter().filter(|a| a.location <= t).map(|a| a.weight).sum();
        for pc in self.pieces() {
            if t >= pc.x1 {
                s += pc.mass();
            } else if t > pc.x0 {
                let u = t - pc.x0;
                s += u * (pc.p0 + 0.5 * pc.slope() * u);
            }
        }
        s.clamp(0.0, 1.0)
    }

    /// Density of the ac part at t (right-continuous at table edges).
    pub fn ac_density(&self, t: f64) -> f64 {
        for pc in self.pieces() {
            if t >= pc.x0 && t <= pc.x1 {
                return pc.at(t);
            }
        }
        0.0
    }

    /// Raw Abel pair (A_d(t), A⁺_d(t)) with exact atom comparison.
    /// An atom exactly at t contributes 0 for d >= 0 and infinity for d < 0.
    pub(crate) fn abel_pair(&self, d: f64, t: f64) -> (f64, f64) {
        let mut minus = 0.0;
        let mut plus = 0.0;
        for a in &self.atoms {
            let u = a.location - t;
            if u > 0.0 {
                plus += a.weight * u.powf(d);
            } else if u < 0.0 {
                minus += a.weight * (-u).powf(d);
            } else if d < 0.0 {
                return (f64::INFINITY, f64::INFINITY);
            }
        }
        for pc in self.pieces() {
            let s = pc.slope();
            let pt = pc.at(t);
            if pc.x1 > t {
                let u0 = (pc.x0.max(t)) - t;
                let u1 = pc.x1 - t;
                plus += pt * pow_int(d, u0, u1) + s * pow_int(d + 1.0, u0, u1);
            }
            if pc.x0 < t {
                let u0 = t - pc.x1.min(t);
                let u1 = t - pc.x0;
                minus += pt * pow_int(d, u0, u1) - s * pow_int(d + 1.0, u0, u1);
            }
        }
        (minus.max(0.0), plus.max(0.0))
    }

    fn check_abel(&self, d: f64, t: f64) -> Result<()> {
        if !(d > -1.0) {
            return Err(Error::NonIntegrable { t, reason: "Abel exponent must exceed -1" });
        }
        if d < 0.0 && self.atom_near(t, ATOM_TOL).is_some() {
            return Err(Error::NonIntegrable { t, reason: "negative exponent at an atom" });
        }
        Ok(())
    }

    /// A⁺_d(t) = ∫_{x>t} (x - t)^d η(dx).
    pub fn abel_plus(&self, d: f64, t: f64) -> Result<f64> {
        self.check_abel(d, t)?;
        Ok(self.abel_pair(d, t).1)
    }

    /// A_d(t) = ∫_{x<t} (t - x)^d η(dx).
    pub fn abel_minus(&self, d: f64, t: f64) -> Result<f64> {
        self.check_abel(d, t)?;
        Ok(self.abel_pair(d, t).0)
    }

    /// R(t) = ∫ log|t - x| η(dx) without the atom check.
    pub(crate) fn log_kernel_raw(&self, t: f64) -> f64 {
        let mut r = 0.0;
        for a in &self.atoms {
            r += a.weight * (t - a.location).abs().ln();
        }
        for pc in self.pieces() {
            let s = pc.slope();
            let pt = pc.at(t);
            if pc.x1 > t {
                let u0 = pc.x0.max(t) - t;
                let u1 = pc.x1 - t;
                r += pt * (l1(u1) - l1(u0)) + s * (l2(u1) - l2(u0));
            }
            if pc.x0 < t {
                let u0 = t - pc.x1.min(t);
                let u1 = t - pc.x0;
                r += pt * (l1(u1) - l1(u0)) - s * (l2(u1) - l2(u0));
            }
        }
        r
    }

    /// R(t) = ∫ log|t - x| η(dx).
    pub fn log_kernel_r(&self, t: f64) -> Result<f64> {
        if self.atom_near(t, ATOM_TOL).is_some() {
            return Err(Error::NonIntegrable { t, reason: "log kernel at an atom" });
        }
        Ok(self.log_kernel_raw(t))
    }

    /// PV ∫ η(dx)/(t - x) with exact atom comparison; None if divergent.
    pub(crate) fn pv_inverse_raw(&self, t: f64) -> Option<f64> {
        let mut v = 0.0;
        for a in &self.atoms {
            let u = t - a.location;
            if u == 0.0 {
                return None;
            }
            v += a.weight / u;
        }
        let mut log0 = 0.0;
        let mut scale: f64 = 0.0;
        for pc in self.pieces() {
            let s = pc.slope();
            let pt = pc.at(t);
            scale = scale.max(pc.p0.abs()).max(pc.p1.abs());
            if pc.x1 > t {
                let u0 = pc.x0.max(t) - t;
                let u1 = pc.x1 - t;
                if u0 == 0.0 {
                    v -= pt * u1.ln();
                    log0 += pt;
                } else {
                    v -= pt * (u1 / u0).ln();
                }
                v -= s * (u1 - u0);
            }
            if pc.x0 < t {
                let u0 = t - pc.x1.min(t);
                let u1 = t - pc.x0;
                if u0 == 0.0 {
                    v += pt * u1.ln();
                    log0 -= pt;
                } else {
                    v += pt * (u1 / u0).ln();
                }
                v -= s * (u1 - u0);
            }
        }
        if log0.abs() > 1e-12 * scale.max(1.0) {
            return None;
        }
        Some(v)
    }

    /// Membership in the admissible set: inside the hull, off every atom, and
    /// with a locally bounded ac density (always true for tables).
    pub fn theta_set_check(&self, _alpha: f64, t: f64) -> bool {
        self.hull.contains(t) && self.atom_near(t, ATOM_TOL).is_none()
    }

    /// ∫ (z + x)^d η(dx) for z > 0.
    pub(crate) fn shifted_power_moment(&self, d: f64, z: f64) -> f64 {
        let mut v: f64 = self.atoms.iter().map(|a| a.weight * (z + a.location).powf(d)).sum();
        for pc in self.pieces() {
            let s = pc.slope();
            let pm = pc.at(-z);
            let u0 = z + pc.x0;
            let u1 = z + pc.x1;
            v += pm * pow_int(d, u0, u1) + s * pow_int(d + 1.0, u0, u1);
        }
        v
    }

    /// ∫ log(z + x) η(dx) for z > 0.
    pub(crate) fn shifted_log_moment(&self, z: f64) -> f64 {
        let mut v: f64 = self.atoms.iter().map(|a| a.weight * (z + a.location).ln()).sum();
        for pc in self.pieces() {
            let s = pc.slope();
            let pm = pc.at(-z);
            let u0 = z + pc.x0;
            let u1 = z + pc.x1;
            v += pm * (l1(u1) - l1(u0)) + s * (l2(u1) - l2(u0));
        }
        v
    }

    /// One draw from η.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u)
    }

    /// Generalized inverse of Ψ.
    pub fn quantile(&self, u: f64) -> f64 {
        if self.xs.is_empty() {
            let mut acc = 0.0;
            for a in &self.atoms {
                acc += a.weight;
                if u < acc {
                    return a.location;
                }
            }
            return self.atoms.last().map_or(self.hull.hi, |a| a.location);
        }
        // walk atoms and pieces in location order
        let mut acc = 0.0;
        let mut ai = 0;
        let mut pieces = self.pieces().peekable();
        loop {
            let next_atom = self.atoms.get(ai);
            match (next_atom, pieces.peek().copied()) {
                (None, None) => return self.hull.hi,
                (Some(a), pc) if pc.is_none_or(|pc| a.location <= pc.x0) => {
                    if u < acc + a.weight {
                        return a.location;
                    }
                    acc += a.weight;
                    ai += 1;
                }
                (_, Some(pc)) => {
                    let m = pc.mass();
                    if u < acc + m {
                        let target = u - acc;
                        let s = pc.slope();
                        let disc = (pc.p0 * pc.p0 + 2.0 * s * target).max(0.0);
                        let denom = pc.p0 + disc.sqrt();
                        let du = if denom > 0.0 { 2.0 * target / denom } else { 0.0 };
                        return (pc.x0 + du).clamp(pc.x0, pc.x1);
                    }
                    acc += m;
                    pieces.next();
                }
                (Some(_), None) => unreachable!(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_transforms() {
        let m = BaseMeasure::bernoulli(0.5).unwrap();
        assert!((m.abel_plus(0.5, 0.25).unwrap() - 0.75f64.sqrt() * 0.5).abs() < 1e-15);
        assert!((m.abel_minus(0.5, 0.25).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(m.abel_plus(0.3, 1.5).unwrap(), 0.0);
        assert!(m.abel_minus(-0.5, 1.0).is_err());
        assert!((m.cdf_psi(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_transforms() {
        let m = BaseMeasure::uniform(0.0, 1.0).unwrap();
        let v = 0.5f64.powf(1.5) / 1.5;
        assert!((m.abel_plus(0.5, 0.5).unwrap() - v).abs() < 1e-14);
        assert!((m.abel_minus(0.5, 0.5).unwrap() - v).abs() < 1e-14);
        assert!((m.cdf_psi(0.25) - 0.25).abs() < 1e-15);
        assert_eq!(m.cdf_psi(-1.0), 0.0);
        assert!((m.log_kernel_r(0.5).unwrap() - (-1.0 - 2f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn log_kernel_atoms() {
        let m = BaseMeasure::bernoulli(0.5).unwrap();
        assert!((m.log_kernel_r(0.5).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        let d = BaseMeasure::degenerate(1.0).unwrap();
        assert!((d.log_kernel_r(3.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(m.log_kernel_r(1.0).is_err());
    }

    #[test]
    fn json_loading() {
        let m = BaseMeasure::from_json_str(r#"{"type":"bernoulli","p":0.3}"#).unwrap();
        assert_eq!(m.atoms().len(), 2);
        let t = BaseMeasure::from_json_str(r#"{"type":"table","x":[0,1,2],"pdf":[0,1,0]}"#).unwrap();
        assert!((t.cdf_psi(1.0) - 0.5).abs() < 1e-15);
        assert!(BaseMeasure::from_json_str(r#"{"type":"atoms","atoms":[[0,0.5],[1,0.4]]}"#).is_err());
        assert!(BaseMeasure::from_json_str(r#"{"type":"uniform","a":1,"b":0}"#).is_err());
    }

    #[test]
    fn quantile_inverts_table() {
        let t = BaseMeasure::table(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        for &u in &[0.1, 0.3, 0.5, 0.77, 0.99] {
            let x = t.quantile(u);
            assert!((t.cdf_psi(x) - u).abs() < 1e-12, "u={u} x={x}");
        }
        let b = BaseMeasure::bernoulli(0.3).unwrap();
        assert_eq!(b.quantile(0.69), 0.0);
        assert_eq!(b.quantile(0.71), 1.0);
    }
}
