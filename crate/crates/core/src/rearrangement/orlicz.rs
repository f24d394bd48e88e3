use serde::Serialize;

use crate::error::{Error, Result};

/// Convex increasing ψ on [0, ∞) with ψ(0) = 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum YoungFunction {
    /// t² / ln(e + t)
    Talagrand,
    /// t^p, p ≥ 1
    Power { p: f64 },
    /// Piecewise-linear through (0,0) and the given knots, extended with the
    /// last slope.
    Table { knots: Vec<(f64, f64)> },
}

impl YoungFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::domain(format!("power Young function needs p >= 1, got {p}")));
        }
        Ok(YoungFunction::Power { p })
    }

    /// Validates the knots: strictly increasing abscissae, values increasing
    /// with nondecreasing slopes starting from the origin.
    pub fn table(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.first() != Some(&(0.0, 0.0)) {
            knots.insert(0, (0.0, 0.0));
        }
        if knots.len() < 2 {
            return Err(Error::domain("Young table needs at least one knot besides the origin"));
        }
        let mut prev_slope = 0.0;
        for w in knots.windows(2) {
            let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            if !(dx > 0.0) || !(dy > 0.0) {
                return Err(Error::domain("Young table must be strictly increasing"));
            }
            let slope = dy / dx;
            if slope < prev_slope * (1.0 - 1e-12) {
                return Err(Error::domain("Young table must be convex"));
            }
            prev_slope = slope;
        }
        Ok(YoungFunction::Table { knots })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        match self {
            YoungFunction::Talagrand => t * t / (std::f64::consts::E + t).ln(),
            YoungFunction::Power { p } => t.powf(*p),
            YoungFunction::Table { knots } => {
                let j = knots.partition_point(|k| k.0 <= t).clamp(1, knots.len() - 1);
                let (a, b) = (knots[j - 1], knots[j]);
                a.1 + (t - a.0) * (b.1 - a.1) / (b.0 - a.0)
            }
        }
    }
}

/// ‖h‖_ψ = inf{λ > 0 : 𝔼ψ(|h|/λ) ≤ 1} for the empirical measure on
/// `samples`, by bisection in ln λ to relative tolerance 1e-8.
pub fn orlicz_norm(samples: &[f64], psi: &YoungFunction) -> f64 {
    let abs: Vec<f64> = samples.iter().map(|x| x.abs()).filter(|x| *x > 0.0).collect();
    if abs.is_empty() {
        return 0.0;
    }
    let n = samples.len() as f64;
    let mean_psi = |lambda: f64| abs.iter().map(|x| psi.eval(x / lambda)).sum::<f64>() / n;
    let max = abs.iter().fold(0.0f64, |m, x| m.max(*x));
    // Bracket the root by doubling and halving.
    let mut hi = max;
    while mean_psi(hi) > 1.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    while mean_psi(lo) <= 1.0 {
        lo *= 0.5;
        if lo < max * 1e-300 {
            return lo;
        }
    }
    while hi / lo - 1.0 > 1e-10 {
        let mid = (lo * hi).sqrt();
        if mean_psi(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_function_talagrand() {
        // Independent root of t² = ln(e + t) by plain bisection.
        let (mut a, mut b) = (1.0f64, 2.0f64);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m * m - (std::f64::consts::E + m).ln() > 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        let root = 0.5 * (a + b);
        assert!((root - 1.164_737).abs() < 1e-6);
        let v = orlicz_norm(&[1.0; 10], &YoungFunction::Talagrand);
        assert!((v - 1.0 / root).abs() < 1e-8 / root);
        assert!((v - 0.858_563).abs() < 1e-6);
        assert!((v * v - 0.737_130).abs() < 1e-6);
    }

    #[test]
    fn square_gives_rms() {
        let h = [1.0, -2.0, 3.0, 0.5];
        let rms = (h.iter().map(|x| x * x).sum::<f64>() / 4.0).sqrt();
        let v = orlicz_norm(&h, &YoungFunction::power(2.0).unwrap());
        assert!((v - rms).abs() < 1e-8 * rms);
    }

    #[test]
    fn homogeneous_and_zero() {
        let h = [0.3, -1.2, 2.5, 0.0];
        let a = orlicz_norm(&h, &YoungFunction::Talagrand);
        let scaled: Vec<f64> = h.iter().map(|x| 7.0 * x).collect();
        assert!((orlicz_norm(&scaled, &YoungFunction::Talagrand) - 7.0 * a).abs() < 1e-7 * a);
        assert_eq!(orlicz_norm(&[0.0, 0.0], &YoungFunction::Talagrand), 0.0);
    }

    #[test]
    fn dominating_sample_has_larger_norm() {
        let h = [0.3, -1.2, 2.5, 0.1];
        let g = [0.4, 1.2, -2.6, 0.1];
        for psi in [YoungFunction::Talagrand, YoungFunction::Power { p: 3.0 }] {
            assert!(orlicz_norm(&g, &psi) >= orlicz_norm(&h, &psi));
        }
    }

    #[test]
    fn table_young_function() {
        let psi = YoungFunction::table(vec![(1.0, 1.0), (2.0, 3.0)]).unwrap();
        assert_eq!(psi.eval(0.0), 0.0);
        assert_eq!(psi.eval(1.5), 2.0);
        assert_eq!(psi.eval(3.0), 5.0);
        assert!(YoungFunction::table(vec![(1.0, 2.0), (2.0, 3.0)]).is_err());
        assert!(YoungFunction::power(0.5).is_err());
    }

    #[test]
    fn young_functions_are_convex_increasing() {
        for psi in [YoungFunction::Talagrand, YoungFunction::Power { p: 1.5 }] {
            assert_eq!(psi.eval(0.0), 0.0);
            for i in 1..500 {
                let t = i as f64 * 0.02;
                let (a, b, c) = (psi.eval(t - 0.02), psi.eval(t), psi.eval(t + 0.02));
                assert!(b > a);
                assert!(a + c - 2.0 * b >= -1e-12);
            }
        }
    }
}
