use super::fit::{fit_lower_envelope, fit_sandwich, largest_feasible, smallest_feasible};
use super::verdict::{ConstantBox, GridRecord, InequalityVerdict, Interval, VerdictBuilder};
use crate::catalog::RateFunction;
use crate::error::{Error, Result};
use crate::gaussian::{std_normal_cdf, std_normal_sf};
use crate::mc::{
    mean_estimate, median_interval_at, ConcConstants, ConcentrationProfile, CenterKind, EmpiricalDistribution,
    ScaleKind, SummaryStats, TailPoint, MIN_RESOLVED_COUNT, Z95, Z99,
};

fn require(profile: &ConcentrationProfile, center: CenterKind, scale: ScaleKind, what: &str) -> Result<()> {
    if profile.center_kind != center || profile.scale_kind != scale {
        return Err(Error::domain(format!(
            "{what} needs a profile centred at the {center:?} and scaled by {scale:?}, got {:?}/{:?}",
            profile.center_kind, profile.scale_kind
        )));
    }
    Ok(())
}

fn positive(x: f64, what: &str) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::domain(format!("{what} must be positive, got {x}")))
    }
}

/// max{P(f ≥ m + tL), P(f ≤ m − tL)} ≤ ½e^{−t²/2}, no fitted constants.
/// Asserted for t > 0: at t = 0 the bound restates the median property,
/// which fails for laws with an atom at the median.
pub fn check_upper_gaussian(profile: &ConcentrationProfile, lipschitz: f64) -> Result<InequalityVerdict> {
    require(profile, CenterKind::Median, ScaleKind::Lipschitz, "upper_gaussian")?;
    if (profile.scale - lipschitz).abs() > 1e-12 * lipschitz.abs() {
        return Err(Error::domain("profile scale differs from the Lipschitz constant"));
    }
    let mut b = VerdictBuilder::new("upper_gaussian", &profile.key);
    for (i, &t) in profile.t_grid.iter().enumerate() {
        let bound = Interval::exact(0.5 * (-t * t / 2.0).exp());
        for (side, pt) in [("upper", &profile.upper[i]), ("lower", &profile.lower[i])] {
            b.record(GridRecord::new(side, t, pt.into(), bound, pt.resolved && t > 0.0));
        }
    }
    Ok(b.finish())
}

/// P(f ≤ m − 20u) ≤ ½e^{−u²/Var}. The profile is scaled by √Var, so grid
/// point t corresponds to u = t√Var/20 and the bound reads ½e^{−(t/20)²}.
/// Asserted for t > 0, as in [`check_upper_gaussian`].
pub fn check_lower_deviation_var(profile: &ConcentrationProfile) -> Result<InequalityVerdict> {
    require(profile, CenterKind::Median, ScaleKind::StdDev, "lower_deviation_var")?;
    let mut b = VerdictBuilder::new("lower_deviation_var", &profile.key);
    for (i, &t) in profile.t_grid.iter().enumerate() {
        let u = t / 20.0;
        let pt = &profile.lower[i];
        let bound = Interval::exact(0.5 * (-u * u).exp());
        b.record(GridRecord::new("lower", t, pt.into(), bound, pt.resolved && t > 0.0));
    }
    Ok(b.finish())
}

fn resolved_two_sided(profile: &ConcentrationProfile) -> impl Iterator<Item = (f64, &TailPoint)> {
    profile
        .t_grid
        .iter()
        .zip(&profile.two_sided)
        .filter(|(_, p)| p.resolved)
        .map(|(t, p)| (*t, p))
}

/// P(|f − m| ≥ tL) ≥ c τ⁴ exp(−C (t²/τ²) ln(e/τ)) with τ = ov·s,
/// c ∈ [2⁻¹⁰, 1], C ∈ [1/64, 64].
pub fn check_reversal(profile: &ConcentrationProfile, constants: &ConcConstants) -> Result<InequalityVerdict> {
    require(profile, CenterKind::Median, ScaleKind::Lipschitz, "reversal")?;
    let ov = constants
        .ov
        .ok_or_else(|| Error::domain("reversal needs a Lipschitz function"))?;
    let tau = positive(ov.value * constants.s.value, "tau = ov·s")?;
    let h = |t: f64| t * t / (tau * tau) * (std::f64::consts::E / tau).ln();
    let scale = tau.powi(4);
    let pts: Vec<(f64, f64)> = resolved_two_sided(profile).map(|(t, p)| (h(t), p.hi / scale)).collect();
    let (c_box, big_box) = (ConstantBox::pow2(-10, 0), ConstantBox::pow2(-6, 6));
    let fit = fit_lower_envelope(&pts, c_box, big_box);
    let mut b = VerdictBuilder::new("reversal", &profile.key);
    b.constant("c", fit.amplitude, c_box, fit.feasible);
    b.constant("C", fit.rate, big_box, fit.feasible);
    b.diag("tau", tau);
    b.diag("ov", ov.value);
    b.diag("s", constants.s.value);
    for (i, &t) in profile.t_grid.iter().enumerate() {
        let pt = &profile.two_sided[i];
        let bound = fit.amplitude * scale * (-fit.rate * h(t)).exp();
        b.record(GridRecord::new("two_sided", t, Interval::exact(bound), pt.into(), pt.resolved).with_h(h(t)));
    }
    Ok(b.finish())
}

/// √Var ≥ αL ⟹ P(|f − m| ≥ tL) ≥ c(α)e^{−C(α)t²}, fitted over the same
/// boxes as [`check_reversal`]. A premise rejected by the CI is reported
/// as not met rather than failed.
pub fn check_theorem_main(
    profile: &ConcentrationProfile,
    constants: &ConcConstants,
    alpha: f64,
) -> Result<InequalityVerdict> {
    require(profile, CenterKind::Median, ScaleKind::Lipschitz, "theorem_main")?;
    let alpha = positive(alpha, "alpha")?;
    let ov = constants
        .ov
        .ok_or_else(|| Error::domain("theorem_main needs a Lipschitz function"))?;
    let mut b = VerdictBuilder::new("theorem_main", &profile.key);
    b.diag("alpha", alpha);
    b.diag("ov", ov.value);
    b.record(GridRecord::new("hypothesis", 0.0, Interval::exact(alpha), ov.into(), false));
    if ov.hi < alpha {
        b.hypothesis_not_met();
        return Ok(b.finish());
    }
    let pts: Vec<(f64, f64)> = resolved_two_sided(profile).map(|(t, p)| (t * t, p.hi)).collect();
    let (c_box, big_box) = (ConstantBox::pow2(-10, 0), ConstantBox::pow2(-6, 6));
    let fit = fit_lower_envelope(&pts, c_box, big_box);
    b.constant("c", fit.amplitude, c_box, fit.feasible);
    b.constant("C", fit.rate, big_box, fit.feasible);
    // The α-dependence the theorem predicts: c(α) ≳ α⁸, C(α) ≲ α⁻⁴ ln(e/α).
    b.diag("c_over_alpha8", fit.amplitude / alpha.powi(8));
    b.diag("C_scaled", fit.rate * alpha.powi(4) / (std::f64::consts::E / alpha).ln());
    for (i, &t) in profile.t_grid.iter().enumerate() {
        let pt = &profile.two_sided[i];
        let bound = fit.amplitude * (-fit.rate * t * t).exp();
        b.record(GridRecord::new("two_sided", t, Interval::exact(bound), pt.into(), pt.resolved).with_h(t * t));
    }
    Ok(b.finish())
}

/// Across verdicts of [`check_theorem_main`] on one family: does the fitted
/// c(α) not decrease and C(α) not increase as α grows?
pub fn theorem_main_alpha_monotone(verdicts: &[InequalityVerdict]) -> bool {
    let mut rows: Vec<(f64, f64, f64)> = verdicts
        .iter()
        .filter(|v| v.passed)
        .filter_map(|v| Some((v.diagnostic("alpha")?, v.constant("c")?, v.constant("C")?)))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows.windows(2).all(|w| w[1].1 >= w[0].1 && w[1].2 <= w[0].2)
}

/// P(f ≥ m + t√Var) ≥ 1 − Φ(C(t + 1/s)) with C ∈ [1/4, 64].
///
/// For g_α (pass its (α, c_α)) the matching upper bound
/// P(g_α − m > t√Var) ≤ 1 − Φ(α + ct/(α c_α)) is fitted too, with
/// c ∈ [2⁻⁸, 2⁸].
pub fn check_prop_reversal_tail(
    profile: &ConcentrationProfile,
    constants: &ConcConstants,
    galpha: Option<(f64, f64)>,
) -> Result<InequalityVerdict> {
    require(profile, CenterKind::Median, ScaleKind::StdDev, "prop_reversal_tail")?;
    let s = constants.s;
    let inv_s = 1.0 / positive(s.lo, "lower bound of s")?;
    let big_box = ConstantBox::pow2(-2, 6);
    let holds_at = |c: f64| {
        profile
            .t_grid
            .iter()
            .zip(&profile.upper)
            .filter(|(_, p)| p.resolved)
            .all(|(&t, p)| std_normal_sf(c * (t + inv_s)) <= p.hi)
    };
    let found = smallest_feasible(big_box, holds_at);
    let c_fit = found.unwrap_or(big_box.upper);
    let mut b = VerdictBuilder::new("prop_reversal_tail", &profile.key);
    b.constant("C", c_fit, big_box, found.is_some());
    b.diag("s", s.value);
    b.diag("inverse_s", 1.0 / s.value);
    b.diag("offset", c_fit / s.value);
    for (i, &t) in profile.t_grid.iter().enumerate() {
        let pt = &profile.upper[i];
        let bound = std_normal_sf(c_fit * (t + inv_s));
        b.record(GridRecord::new("upper", t, Interval::exact(bound), pt.into(), pt.resolved));
    }
    if let Some((alpha, c_alpha)) = galpha {
        let bound = |c: f64, t: f64| std_normal_sf(alpha + c * t / (alpha * c_alpha));
        let small_box = ConstantBox::pow2(-8, 8);
        // At t = 0 the profile counts the atom at the median, excluded here.
        let pts: Vec<(f64, &TailPoint)> = profile
            .t_grid
            .iter()
            .zip(&profile.upper)
            .filter(|(t, p)| **t > 0.0 && p.resolved)
            .map(|(t, p)| (*t, p))
            .collect();
        let found = largest_feasible(small_box, |c| pts.iter().all(|(t, p)| p.lo <= bound(c, *t)));
        let c = found.unwrap_or(small_box.lower);
        b.constant("c_example", c, small_box, found.is_some());
        b.diag("alpha", alpha);
        for (i, &t) in profile.t_grid.iter().enumerate() {
            if t > 0.0 {
                let pt = &profile.upper[i];
                b.record(GridRecord::new("example_upper", t, pt.into(), Interval::exact(bound(c, t)), pt.resolved));
            }
        }
    }
    Ok(b.finish())
}

/// c e^{−C α(t)} ≤ P(|f − 𝔼f| ≥ t) ≤ C e^{−c α(t)} with shared
/// c, C ∈ [2⁻⁸, 2⁸]. Grid values are multiplied by the profile scale to get
/// the deviation t fed to the rate.
pub fn check_two_sided_rates(profile: &ConcentrationProfile, rate: &RateFunction) -> Result<InequalityVerdict> {
    if profile.center_kind != CenterKind::Mean {
        return Err(Error::domain("two_sided_rates needs a mean-centred profile"));
    }
    let bx = ConstantBox::pow2(-8, 8);
    let hs: Vec<f64> = profile.t_grid.iter().map(|t| rate.value(t * profile.scale)).collect();
    let pts: Vec<(f64, f64, f64)> = profile
        .t_grid
        .iter()
        .enumerate()
        .filter(|(i, t)| **t > 0.0 && profile.two_sided[*i].resolved)
        .map(|(i, _)| (hs[i], profile.two_sided[i].lo, profile.two_sided[i].hi))
        .collect();
    let fit = fit_sandwich(&pts, bx);
    let mut b = VerdictBuilder::new("two_sided_rates", &profile.key);
    b.constant("c", fit.small, bx, fit.feasible);
    b.constant("C", fit.large, bx, fit.feasible);
    for (i, &t) in profile.t_grid.iter().enumerate() {
        if t <= 0.0 {
            continue;
        }
        let pt = &profile.two_sided[i];
        let h = hs[i];
        let lower = Interval::exact(fit.small * (-fit.large * h).exp());
        let upper = Interval::exact(fit.large * (-fit.small * h).exp());
        b.record(GridRecord::new("lower", t, lower, pt.into(), pt.resolved).with_h(h));
        b.record(GridRecord::new("upper", t, pt.into(), upper, pt.resolved).with_h(h));
    }
    Ok(b.finish())
}

/// P(f ≤ m − t) ≤ P(f > m + t) at every grid t (absolute units). A point
/// counts as resolved when either side has at least the minimum count.
pub fn check_skewness(emp: &EmpiricalDistribution, t_grid: &[f64]) -> Result<InequalityVerdict> {
    let m = emp.median();
    let n = emp.len();
    let mut b = VerdictBuilder::new("skewness", emp.key());
    for &t in t_grid {
        positive(t, "skewness grid point")?;
        let below = TailPoint::new(emp.count_le(m - t), n);
        let above = TailPoint::new(emp.count_gt(m + t), n);
        let resolved = below.count.max(above.count) >= MIN_RESOLVED_COUNT;
        b.record(GridRecord::new("tails", t, (&below).into(), (&above).into(), resolved));
    }
    Ok(b.finish())
}

/// 𝔼f ≥ med(f), compared through their 95% intervals.
pub fn check_kwapien(stats: &SummaryStats, key: &str) -> InequalityVerdict {
    let mut b = VerdictBuilder::new("kwapien", key);
    b.record(GridRecord::new("mean_vs_median", 0.0, stats.median.into(), stats.mean.into(), true));
    b.finish()
}

/// P(f − m < −t√(2π)·𝔼(f − m)₊) ≤ Φ(−t).
///
/// This is the small-deviation bound with its threshold written as
/// t·‖(f − m)₊‖₁ and right side Φ(−t/√(2π)), after the substitution
/// t → t√(2π); affine maps attain it. With `affine` set, the reverse
/// inequality is checked too at 99% confidence.
pub fn check_small_deviation(emp: &EmpiricalDistribution, t_grid: &[f64], affine: bool) -> Result<InequalityVerdict> {
    let m = emp.median();
    let n = emp.len();
    let pos: Vec<f64> = emp.raw().iter().map(|x| (x - m).max(0.0)).collect();
    let l1 = mean_estimate(&pos);
    let root = (2.0 * std::f64::consts::PI).sqrt();
    let mut b = VerdictBuilder::new("small_deviation", emp.key());
    b.diag("positive_part_l1", l1.value);
    let sorted = emp.values();
    let endpoints = |z: f64| {
        let (m_lo, m_hi) = median_interval_at(sorted, z);
        (m_lo, m_hi, l1.value - z * l1.se, l1.value + z * l1.se)
    };
    for &t in t_grid {
        positive(t, "small deviation grid point")?;
        let bound = std_normal_cdf(-t);
        let count = emp.count_lt(m - t * root * l1.value);
        // Extreme thresholds from the median and L1 intervals, then Wilson.
        let interval = |z: f64| {
            let (m_lo, m_hi, l_lo, l_hi) = endpoints(z);
            let low_count = emp.count_lt(m_lo - t * root * l_hi);
            let high_count = emp.count_lt(m_hi - t * root * l_lo);
            Interval {
                value: count as f64 / n as f64,
                lo: TailPoint::new(low_count, n).with_z(n, z).0,
                hi: TailPoint::new(high_count, n).with_z(n, z).1,
            }
        };
        let resolved = count >= MIN_RESOLVED_COUNT;
        b.record(GridRecord::new("lower", t, interval(Z95), Interval::exact(bound), resolved));
        if affine {
            b.record(GridRecord::new("equality", t, Interval::exact(bound), interval(Z99), resolved));
        }
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_linear, parse_key};
    use crate::mc::{concentration_constants, linear_grid, sample_values, tail_curve};

    fn median_profile(key: &str, n: usize, seed: u64, scale: ScaleKind, grid: &[f64]) -> ConcentrationProfile {
        let f = parse_key(key).unwrap();
        let emp = sample_values(&f, n, seed).unwrap();
        let sc = match scale {
            ScaleKind::Lipschitz => f.lipschitz().unwrap(),
            ScaleKind::StdDev => emp.variance().sqrt(),
            _ => 1.0,
        };
        tail_curve(&emp, emp.median(), CenterKind::Median, sc, scale, grid).unwrap()
    }

    #[test]
    fn upper_gaussian_linear_and_sup_norm() {
        let grid = linear_grid(0.0, 0.25, 17);
        let p = median_profile("linear:n=2", 200_000, 1, ScaleKind::Lipschitz, &grid);
        let v = check_upper_gaussian(&p, 1.0).unwrap();
        assert!(v.passed, "{:?}", v.margins);
        // Sharp: at t = 1 the true tail is Φ(−1) ≈ 0.159 against ½e^{−½} ≈ 0.303.
        let p = median_profile("linf:n=1024", 100_000, 2, ScaleKind::Lipschitz, &grid);
        let v = check_upper_gaussian(&p, 1.0).unwrap();
        assert!(v.passed);
        assert!(v.grid[4].margin > 0.2);
        assert!(check_upper_gaussian(&p, 2.0).is_err());
    }

    #[test]
    fn lower_deviation_var_examples() {
        let grid = linear_grid(0.5, 0.5, 10);
        for key in ["linear:n=2", "lp:n=256:p=4", "linf:n=1024"] {
            let p = median_profile(key, 100_000, 3, ScaleKind::StdDev, &grid);
            assert!(check_lower_deviation_var(&p).unwrap().passed, "{key}");
        }
    }

    #[test]
    fn reversal_on_linear() {
        let f = make_linear(vec![1.0]).unwrap();
        let emp = sample_values(&f, 400_000, 5).unwrap();
        let k = concentration_constants(&f, 400_000, 5).unwrap();
        let grid = linear_grid(0.0, 0.25, 21);
        let p = tail_curve(&emp, emp.median(), CenterKind::Median, 1.0, ScaleKind::Lipschitz, &grid).unwrap();
        let v = check_reversal(&p, &k).unwrap();
        assert!(v.passed, "{v:?}");
        let big_c = v.constant("C").unwrap();
        assert!(big_c > 0.4 && big_c < 1.2, "{big_c}");
        let w = check_theorem_main(&p, &k, 0.9).unwrap();
        assert!(w.passed);
    }

    #[test]
    fn theorem_main_hypothesis_path() {
        let f = parse_key("linf:n=256").unwrap();
        let emp = sample_values(&f, 50_000, 6).unwrap();
        let k = concentration_constants(&f, 50_000, 6).unwrap();
        let grid = linear_grid(0.0, 0.1, 20);
        let p = tail_curve(&emp, emp.median(), CenterKind::Median, 1.0, ScaleKind::Lipschitz, &grid).unwrap();
        let v = check_theorem_main(&p, &k, 0.9).unwrap();
        assert_eq!(v.status, super::super::VerdictStatus::HypothesisNotMet);
        assert!(v.constants.is_empty());
    }

    #[test]
    fn skewness_and_small_deviation_on_linear() {
        let f = make_linear(vec![0.6, 0.8]).unwrap();
        let emp = sample_values(&f, 400_000, 7).unwrap();
        let grid = linear_grid(0.25, 0.25, 12);
        assert!(check_skewness(&emp, &grid).unwrap().passed);
        let v = check_small_deviation(&emp, &grid, true).unwrap();
        assert!(v.passed, "{:?}", v.grid.iter().filter(|r| !r.holds).collect::<Vec<_>>());
        // 𝔼(ζ)₊ = 1/√(2π)
        let l1 = v.diagnostic("positive_part_l1").unwrap();
        assert!((l1 - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 0.003);
    }

    #[test]
    fn small_deviation_detects_monomial() {
        let g = parse_key("monomial:k=1").unwrap();
        let emp = sample_values(&g, 400_000, 8).unwrap();
        let v = check_small_deviation(&emp, &[1.0, 2.0], false).unwrap();
        assert!(!v.passed);
        let at2 = &v.grid[1];
        // Φ(−4^{1/3}) against Φ(−2)
        let want = std_normal_cdf(-(4f64).powf(1.0 / 3.0));
        assert!((want - 0.0563).abs() < 5e-4);
        assert!((at2.lhs.value - want).abs() < 0.002);
        assert!(!at2.holds);
        assert!(v.grid[0].holds);
    }

    #[test]
    fn rates_sandwich_for_identity_ellipsoid() {
        let f = parse_key("ellip:diag=1,1,1,1").unwrap();
        let emp = sample_values(&f, 200_000, 9).unwrap();
        let grid = linear_grid(0.0, 0.2, 20);
        let p = tail_curve(&emp, emp.mean(), CenterKind::Mean, 1.0, ScaleKind::Unit, &grid).unwrap();
        let rate = RateFunction::for_spec(&f).unwrap();
        let v = check_two_sided_rates(&p, &rate).unwrap();
        assert!(v.passed);
        assert!(check_two_sided_rates(&median_profile("linf:n=16", 1000, 1, ScaleKind::Unit, &grid), &rate).is_err());
    }
}
