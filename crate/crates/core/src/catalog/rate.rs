use serde::Serialize;

use super::function::{Family, FunctionSpec};
use crate::error::{Error, Result};

/// Predicted deviation rate t ↦ α(t) for a norm family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rate", rename_all = "snake_case")]
pub enum RateFunction {
    /// max(t², t √ln n), for the sup norm on ℝⁿ
    SupNorm { n: f64 },
    /// max(min(t² √n, t^{1/2} n^{3/8}), t²), for ℓ₄ⁿ
    L4 { n: f64 },
    /// max(min(t² ‖A‖_HS²/‖A‖_{S₄}⁴, t ‖A‖_HS/‖A‖_op²), t²/‖A‖_op²)
    Ellipsoidal { hs: f64, s4: f64, op: f64 },
}

impl RateFunction {
    pub fn value(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match *self {
            RateFunction::SupNorm { n } => (t * t).max(t * n.ln().max(0.0).sqrt()),
            RateFunction::L4 { n } => {
                (t * t * n.sqrt()).min(t.sqrt() * n.powf(0.375)).max(t * t)
            }
            RateFunction::Ellipsoidal { hs, s4, op } => {
                let a = t * t * hs * hs / s4.powi(4);
                let b = t * hs / (op * op);
                a.min(b).max(t * t / (op * op))
            }
        }
    }

    /// Rate for a catalog norm, when one is known.
    pub fn for_spec(spec: &FunctionSpec) -> Result<RateFunction> {
        match spec.family() {
            Family::SupNorm => Ok(RateFunction::SupNorm { n: spec.dim() as f64 }),
            Family::LpNorm { p } if *p == 4.0 => Ok(RateFunction::L4 { n: spec.dim() as f64 }),
            Family::Ellipsoidal { params } => Ok(RateFunction::Ellipsoidal {
                hs: params.hs_norm,
                s4: params.schatten4_norm,
                op: params.op_norm,
            }),
            _ => Err(Error::invalid(format!("no deviation rate is known for `{}`", spec.key()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_ellipsoidal, make_lp_norm};
    use crate::linalg::Matrix;

    #[test]
    fn identity_matrix_rate_is_quadratic() {
        let f = make_ellipsoidal(Matrix::identity(16)).unwrap();
        let r = RateFunction::for_spec(&f).unwrap();
        for &t in &[0.01, 0.5, 1.0, 3.0, 20.0] {
            assert!((r.value(t) - t * t).abs() < 1e-12 * t * t);
        }
    }

    #[test]
    fn sup_norm_rate_regimes() {
        let r = RateFunction::for_spec(&make_lp_norm(1024, f64::INFINITY).unwrap()).unwrap();
        let s = (1024f64).ln().sqrt();
        assert!((r.value(1.0) - s).abs() < 1e-12);
        assert!((r.value(10.0) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn worked_examples() {
        let r = RateFunction::SupNorm { n: 4f64.exp() };
        assert!((r.value(3.0) - 9.0).abs() < 1e-12);
        let r = RateFunction::L4 { n: 16.0 };
        assert!((r.value(1.0) - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.value(0.0), 0.0);
    }

    #[test]
    fn l4_rate_regimes() {
        let r = RateFunction::L4 { n: 256.0 };
        // Small t: t²√n; middle: t^{1/2} n^{3/8}; large t: t².
        assert!((r.value(0.01) - 1e-4 * 16.0).abs() < 1e-15);
        assert!((r.value(1.0) - 256f64.powf(0.375)).abs() < 1e-12);
        assert!((r.value(100.0) - 1e4).abs() < 1e-9);
    }

    #[test]
    fn rates_are_nondecreasing() {
        let rates = [
            RateFunction::SupNorm { n: 64.0 },
            RateFunction::L4 { n: 64.0 },
            RateFunction::Ellipsoidal { hs: 3.0, s4: 2.0, op: 1.5 },
        ];
        for r in rates {
            let mut prev = 0.0;
            for i in 0..400 {
                let v = r.value(i as f64 * 0.05);
                assert!(v >= prev);
                prev = v;
            }
        }
    }
}
