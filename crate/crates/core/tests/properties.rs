//! Invariants over random inputs.

use proptest::prelude::*;

use pdmean::dist::{stable_cdf, stable_density};
use pdmean::quadrature::WeightedIntegrand;
use pdmean::BaseMeasure;

fn table() -> BaseMeasure {
    BaseMeasure::table(vec![0.0, 0.3, 0.6, 1.0], vec![0.5, 1.5, 1.0, 0.625]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn zero_order_transforms_split_mass(t in -0.5f64..1.5, p in 0.05f64..0.95) {
        for m in [table(), BaseMeasure::uniform(0.0, 1.0).unwrap()] {
            let s = m.abel_plus(0.0, t).unwrap() + m.abel_minus(0.0, t).unwrap();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!((m.abel_minus(0.0, t).unwrap() - m.cdf_psi(t)).abs() < 1e-12);
        }
        let b = BaseMeasure::bernoulli(p).unwrap();
        prop_assume!(b.atom_near(t, 1e-9).is_none());
        let s = b.abel_plus(0.0, t).unwrap() + b.abel_minus(0.0, t).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn abel_derivatives(t in 0.05f64..0.95, d in 0.2f64..1.5) {
        // d/dt A⁺_d = -d A⁺_{d-1}, d/dt A_d = d A_{d-1}
        let m = table();
        prop_assume!([0.3, 0.6].iter().all(|b| (t - b).abs() > 0.01));
        let h = 1e-5;
        let fd_plus = (m.abel_plus(d, t + h).unwrap() - m.abel_plus(d, t - h).unwrap()) / (2.0 * h);
        let fd_minus = (m.abel_minus(d, t + h).unwrap() - m.abel_minus(d, t - h).unwrap()) / (2.0 * h);
        let plus = -d * m.abel_plus(d - 1.0, t).unwrap();
        let minus = d * m.abel_minus(d - 1.0, t).unwrap();
        prop_assert!((fd_plus - plus).abs() < 1e-5 * plus.abs().max(1.0));
        prop_assert!((fd_minus - minus).abs() < 1e-5 * minus.abs().max(1.0));
    }

    #[test]
    fn quantile_inverts_psi(u in 0.001f64..0.999) {
        let m = table();
        let x = m.quantile(u);
        prop_assert!((m.cdf_psi(x) - u).abs() < 1e-12);
    }

    #[test]
    fn stable_cdf_monotone(alpha in 0.1f64..0.9, p in 0.1f64..0.9, a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let m = BaseMeasure::bernoulli(p).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let fl = stable_cdf(&m, alpha, lo).unwrap();
        let fh = stable_cdf(&m, alpha, hi).unwrap();
        prop_assert!((0.0..=1.0).contains(&fl) && (0.0..=1.0).contains(&fh));
        prop_assert!(fh >= fl - 1e-14);
        prop_assert!(stable_density(&m, alpha, lo).unwrap() >= 0.0);
    }

    #[test]
    fn endpoint_weight_monomials(beta in -0.95f64..2.0, k in 0i32..6, b in 0.2f64..3.0) {
        // ∫_0^b (b - t)^β t^k dt = b^{β+k+1} B(β+1, k+1)
        let v = WeightedIntegrand::new(0.0, b, beta, |t: f64| t.powi(k)).integrate().unwrap().value;
        let exact = b.powf(beta + k as f64 + 1.0) * pdmean::special::ln_beta(beta + 1.0, k as f64 + 1.0).exp();
        prop_assert!((v - exact).abs() < 1e-9 * exact.max(1.0), "{} vs {}", v, exact);
    }
}
