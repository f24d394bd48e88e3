//! Scalar standard-normal primitives: density, distribution function,
//! quantile and absolute moments.

use libm::erfc;
use libm::lgamma as ln_gamma;

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Smallest probability accepted by [`std_normal_quantile`].
pub const QUANTILE_MIN_P: f64 = 1e-300;
/// Largest probability accepted by [`std_normal_quantile`].
pub const QUANTILE_MAX_P: f64 = 1.0 - 1e-16;

/// A single standard Gaussian draw.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GaussScalar(f64);

impl GaussScalar {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(GaussScalar(value))
        } else {
            Err(Error::domain(format!("gaussian draw must be finite, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function Φ(x).
///
/// Saturates to exactly 0 below -40 and exactly 1 above 40.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x < -40.0 {
        0.0
    } else if x > 40.0 {
        1.0
    } else {
        0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
    }
}

/// Upper tail 1 - Φ(x), accurate in the far right tail.
pub fn std_normal_sf(x: f64) -> f64 {
    std_normal_cdf(-x)
}

/// Standard normal quantile Φ⁻¹(p).
///
/// A rational initial guess is polished by Halley steps against
/// [`std_normal_cdf`]. Probabilities outside
/// `[QUANTILE_MIN_P, QUANTILE_MAX_P]` are rejected rather than clamped.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(QUANTILE_MIN_P..=QUANTILE_MAX_P).contains(&p) {
        return Err(Error::domain(format!(
            "normal quantile needs p in [1e-300, 1-1e-16], got {p}"
        )));
    }
    Ok(quantile_unchecked(p))
}

/// Quantile for any p in (0, 1); the upper half is computed through the
/// exact complement so that the refinement works on an accurate lower tail.
pub(crate) fn quantile_unchecked(p: f64) -> f64 {
    if p > 0.5 {
        -lower_quantile(1.0 - p)
    } else {
        lower_quantile(p)
    }
}

fn lower_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p <= 0.5);
    if p == 0.5 {
        return 0.0;
    }
    let mut x = acklam(p);
    for _ in 0..4 {
        let err = std_normal_cdf(x) - p;
        let dens = std_normal_pdf(x);
        if dens == 0.0 {
            break;
        }
        let u = err / dens;
        let step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

// Acklam's rational approximation, relative error about 1.15e-9.
fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// 𝔼|ζ|^p = 2^{p/2} Γ((p+1)/2) / √π for ζ ~ N(0,1).
pub fn abs_moment(p: f64) -> Result<f64> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::domain(format!("absolute moment order must be >= 0, got {p}")));
    }
    if p == 0.0 {
        return Ok(1.0);
    }
    let ln = 0.5 * p * std::f64::consts::LN_2 + ln_gamma(0.5 * (p + 1.0))
        - 0.5 * std::f64::consts::PI.ln();
    Ok(ln.exp())
}

/// σ_p = (½ 𝔼|ζ|^p)^{1/p}, the half-line moment scale.
pub fn sigma_p(p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::domain(format!("sigma_p needs p > 0, got {p}")));
    }
    Ok((0.5 * abs_moment(p)?).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Maclaurin series of erf, summed in f64; converges for the small
    // arguments used here and shares no code with libm.
    fn erf_series(z: f64) -> f64 {
        let mut term = z;
        let mut sum = z;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -z * z / n;
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    }

    fn cdf_oracle(x: f64) -> f64 {
        0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2))
    }

    #[test]
    fn cdf_matches_series_oracle() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        let phi1 = cdf_oracle(1.0);
        assert!((phi1 - 0.841_344_746_068_542_9).abs() < 1e-13);
        assert!((std_normal_cdf(1.0) - phi1).abs() < 1e-12);
        let phi3 = cdf_oracle(3.0);
        assert!((std_normal_cdf(3.0) - phi3).abs() < 1e-12);
        assert!((1.0 - phi3 - 1.349_898_031_630_094_6e-3).abs() < 1e-12);
        for i in -40..=40 {
            let x = i as f64 * 0.1;
            assert!((std_normal_cdf(x) - cdf_oracle(x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn cdf_symmetry_and_saturation() {
        for i in -800..=800 {
            let x = i as f64 * 0.01;
            assert!((std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs() <= 1e-14);
        }
        assert_eq!(std_normal_cdf(-41.0), 0.0);
        assert_eq!(std_normal_cdf(41.0), 1.0);
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        let x = std_normal_quantile(std_normal_cdf(1.7)).unwrap();
        assert!((x - 1.7).abs() < 1e-9);

        // Bisection against the series oracle.
        let (mut lo, mut hi) = (1.0, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf_oracle(mid) < 0.975 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = std_normal_quantile(0.975).unwrap();
        assert!((q - lo).abs() < 1e-10);
        assert!((q - 1.959_963_984_540_054).abs() < 1e-10);
    }

    #[test]
    fn quantile_cdf_residual() {
        for &p in &[1e-300, 1e-100, 1e-20, 1e-8, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-12] {
            let x = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(x) - p).abs() <= 1e-12, "p = {p}");
        }
    }

    #[test]
    fn quantile_domain_errors() {
        for &p in &[0.0, 1.0, -0.1, 1.5, 1e-301, 1.0 - 1e-17, f64::NAN] {
            assert!(std_normal_quantile(p).is_err(), "p = {p}");
        }
    }

    #[test]
    fn abs_moment_examples() {
        let two_over_pi_sqrt = (2.0 / std::f64::consts::PI).sqrt();
        assert!((abs_moment(1.0).unwrap() - two_over_pi_sqrt).abs() < 1e-14);
        assert!((abs_moment(2.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((abs_moment(3.0).unwrap() - 2.0 * two_over_pi_sqrt).abs() < 1e-13);
        assert!((abs_moment(4.0).unwrap() - 3.0).abs() < 1e-13);
        assert!((sigma_p(2.0).unwrap().powi(2) - 0.5).abs() < 1e-14);
        assert!(abs_moment(-1.0).is_err());
        assert_eq!(abs_moment(0.0).unwrap(), 1.0);
    }

    #[test]
    fn gauss_scalar_rejects_nan() {
        assert!(GaussScalar::new(f64::NAN).is_err());
        assert_eq!(GaussScalar::new(1.5).unwrap().value(), 1.5);
    }
}
