use rayon::prelude::*;

use super::fit::smallest_feasible;
use super::verdict::{ConstantBox, GridRecord, InequalityVerdict, Interval, VerdictBuilder};
use crate::catalog::{Family, FunctionSpec};
use crate::error::{Error, Result};
use crate::gaussian::{sigma_p, std_normal_cdf, std_normal_quantile, std_normal_sf};
use crate::mc::{
    constants_from, jackknife_se, leave_out_medians, linear_grid, map_gaussian_samples, sample_values_and_grad_sq,
    tail_curve, variance_estimate, BlockSums, CenterKind, EmpiricalDistribution, Estimate, Provenance, ScaleKind,
    TailPoint, JACKKNIFE_BLOCKS, Z95,
};
use crate::rearrangement::{
    bootstrap_quantiles, column_sd, orlicz_norm, weighted_derivative_integral, YoungFunction, BOOTSTRAP_REPLICATES,
};
use crate::rng::{derive_seed, RngStream};

/// Var(f) ≤ C Σᵢ ‖∂ᵢf‖_φ², φ(t) = t²/ln(e + t), with C ∈ [1/4, 64].
///
/// Coordinates in one symmetry class share a single Orlicz norm, weighted
/// by the class size. The Orlicz side is a plug-in estimate without an
/// interval.
pub fn check_talagrand(spec: &FunctionSpec, n: usize, seed: u64) -> Result<InequalityVerdict> {
    let classes = spec.coordinate_classes();
    let rows = map_gaussian_samples(spec.dim(), n, seed, |z| {
        let mut row = Vec::with_capacity(classes.len() + 1);
        row.push(spec.eval(z));
        row.extend(classes.iter().map(|&(i, _)| spec.partial_abs(z, i)));
        row
    });
    let values: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("`{}` produced a non-finite value", spec.key())));
    }
    let emp = EmpiricalDistribution::from_raw(spec.key(), values, provenance(n, seed));
    let var = variance_estimate(&emp);
    let psi = YoungFunction::Talagrand;
    let mut b = VerdictBuilder::new("talagrand", spec.key());
    let mut sum = 0.0;
    for (j, &(rep, mult)) in classes.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[j + 1]).collect();
        let norm = orlicz_norm(&col, &psi);
        sum += mult as f64 * norm * norm;
        if classes.len() <= 16 {
            b.diag(&format!("orlicz_sq_{rep}"), norm * norm);
        }
    }
    let bx = ConstantBox::pow2(-2, 6);
    let found = smallest_feasible(bx, |c| var.lo <= c * sum);
    let c = found.unwrap_or(bx.upper);
    b.constant("C", c, bx, found.is_some());
    b.diag("orlicz_sum", sum);
    b.diag("variance", var.value);
    b.diag("classes", classes.len() as f64);
    b.record(GridRecord::new("variance", 0.0, var.into(), Interval::exact(c * sum), true));
    Ok(b.finish())
}

fn provenance(n: usize, seed: u64) -> Provenance {
    Provenance {
        master_seed: seed,
        first_stream: 0,
        stream_count: n.div_ceil(crate::mc::CHUNK) as u64,
    }
}

fn require_1d_convex(g: &FunctionSpec, what: &str) -> Result<()> {
    if g.dim() != 1 || !g.is_convex() {
        return Err(Error::invalid(format!("{what} needs a convex function on the line, got `{}`", g.key())));
    }
    Ok(())
}

/// c₁∫g′²/(1+t²)dγ ≤ Var(g) ≤ c₂‖g′‖_φ² ≤ c₃∫g′²/(1+t²)dγ with every
/// constant in [2⁻⁶, 2⁶]. The integral is by quadrature; variance and the
/// Orlicz norm are Monte Carlo over the same draws.
pub fn check_bobkov_houdre(g: &FunctionSpec, n: usize, seed: u64) -> Result<InequalityVerdict> {
    require_1d_convex(g, "bobkov_houdre")?;
    let (emp, _) = sample_values_and_grad_sq(g, n, seed)?;
    let var = variance_estimate(&emp);
    // Same draws: the sampler uses one Gaussian per sample in one dimension.
    let deriv = map_gaussian_samples(1, n, seed, |z| g.derivative_1d(z[0]).abs());
    let orlicz = orlicz_norm(&deriv, &YoungFunction::Talagrand).powi(2);
    let integral = weighted_derivative_integral(g)?;
    let bx = ConstantBox::pow2(-6, 6);

    let c1_star = var.hi / integral;
    let c1 = c1_star.min(bx.upper);
    let c2_star = var.lo / orlicz;
    let c2 = c2_star.max(bx.lower);
    let c3_star = c2 * orlicz / integral;
    let c3 = c3_star.max(bx.lower);

    let mut b = VerdictBuilder::new("bobkov_houdre", g.key());
    b.constant("c1", c1, bx, c1_star >= bx.lower);
    b.constant("c2", c2, bx, c2_star <= bx.upper);
    b.constant("c3", c3, bx, c3_star <= bx.upper);
    b.diag("variance", var.value);
    b.diag("orlicz_sq", orlicz);
    b.diag("weighted_integral", integral);
    if let Some((alpha, _)) = g.galpha() {
        b.diag("variance_alpha_sq", var.value * alpha * alpha);
    }
    b.record(GridRecord::new("lower", 0.0, Interval::exact(c1 * integral), var.into(), true));
    b.record(GridRecord::new("middle", 0.0, var.into(), Interval::exact(c2 * orlicz), true));
    b.record(GridRecord::new("upper", 0.0, Interval::exact(c2 * orlicz), Interval::exact(c3 * integral), true));
    Ok(b.finish())
}

/// 𝔼[(x − m)₊^p] with a jackknife that follows the moving median.
fn positive_part_moment(raw: &[f64], m: f64, leave_out: &[f64], p: f64) -> Estimate {
    let sums = BlockSums::new(raw.len(), 2, |i, out| {
        let d = (raw[i] - m).max(0.0);
        out[0] = d.powf(p);
        out[1] = if d > 0.0 { -p * d.powf(p - 1.0) } else { 0.0 };
    });
    let reps: Vec<f64> = (0..JACKKNIFE_BLOCKS)
        .map(|b| {
            let (s, c) = sums.without(b);
            (s[0] + (leave_out[b] - m) * s[1]) / c
        })
        .collect();
    Estimate::from_se(sums.total[0] / sums.n, jackknife_se(&reps))
}

/// Lower confidence bound on the right derivative at 0 of the Gaussian
/// rearrangement: the secant over [0, 0.1] (an upper bound on f*′(0+) by
/// convexity) minus its order-statistic uncertainty.
pub fn rearrangement_right_slope(emp: &EmpiricalDistribution) -> Interval {
    const STEP: f64 = 0.1;
    let sorted = emp.values();
    let n = sorted.len() as f64;
    let at = |p: f64, shift: f64| {
        let k = (n * p + shift * (n * p * (1.0 - p)).sqrt()).round().clamp(0.0, n - 1.0);
        sorted[k as usize]
    };
    let p1 = std_normal_cdf(STEP);
    let value = (emp.quantile(p1) - emp.median()) / STEP;
    let lo = ((at(p1, -Z95) - at(0.5, Z95)) / STEP).max(0.0);
    let hi = (at(p1, Z95) - at(0.5, -Z95)) / STEP;
    Interval { value, lo, hi }
}

/// ‖(f − m)₊‖_p^p ≥ σ_p^p·slope^p for each p, exact constants. `slope` is
/// the right derivative at 0 of f (1-D nondecreasing) or of its Gaussian
/// rearrangement.
pub fn check_positive_moments(emp: &EmpiricalDistribution, slope: Interval, p_list: &[f64]) -> Result<InequalityVerdict> {
    let raw = emp.raw();
    let m = emp.median();
    let leave_out = leave_out_medians(raw);
    let mut b = VerdictBuilder::new("lemma_key_part1", emp.key());
    b.diag("slope", slope.value);
    for &p in p_list {
        let sp = sigma_p(p)?.powf(p);
        let lhs = Interval {
            value: sp * slope.value.max(0.0).powf(p),
            lo: sp * slope.lo.max(0.0).powf(p),
            hi: sp * slope.hi.max(0.0).powf(p),
        };
        let moment = positive_part_moment(raw, m, &leave_out, p);
        b.record(GridRecord::new("moment", p, lhs, moment.into(), true));
    }
    Ok(b.finish())
}

fn left_derivative(g: &FunctionSpec, x: f64) -> f64 {
    g.derivative_1d(x - 1e-9 * x.abs().max(1.0))
}

struct LemmaKeyParts {
    part1: InequalityVerdict,
    c1_part2: Option<f64>,
    c1_part3: Option<f64>,
    records: Vec<GridRecord>,
    s: Estimate,
    var: Estimate,
}

const LEMMA_T_GRID: (f64, f64, usize) = (0.25, 0.25, 16);

fn lemma_key_parts(g: &FunctionSpec, n: usize, seed: u64) -> Result<LemmaKeyParts> {
    require_1d_convex(g, "lemma_key")?;
    if !g.is_nondecreasing_1d() {
        return Err(Error::invalid(format!("lemma_key needs a nondecreasing function, got `{}`", g.key())));
    }
    let (emp, grad) = sample_values_and_grad_sq(g, n, seed)?;
    let constants = constants_from(g, &emp, &grad);
    let (s, var) = (constants.s, constants.variance);
    let slope = Interval::exact(g.right_derivative(0.0));
    let part1 = check_positive_moments(&emp, slope, &[1.0, 2.0, 4.0, 8.0])?;

    let bx = ConstantBox::pow2(-2, 6);
    let part2_rhs = |c: f64| c * left_derivative(g, c / s.lo).powi(2);
    let c1_part2 = smallest_feasible(bx, |c| var.lo <= part2_rhs(c));

    let sd = var.value.max(0.0).sqrt();
    let (t0, dt, k) = LEMMA_T_GRID;
    let grid = linear_grid(t0, dt, k);
    let profile = tail_curve(&emp, g.eval(&[0.0]), CenterKind::Fixed, sd, ScaleKind::StdDev, &grid)?;
    let inv_s = 1.0 / s.lo;
    let part3_ok = |c: f64| {
        grid.iter()
            .zip(&profile.upper)
            .filter(|(_, p)| p.resolved)
            .all(|(&t, p)| std_normal_sf(c * (inv_s + t)) <= p.hi)
    };
    let c1_part3 = smallest_feasible(bx, part3_ok);

    let c = c1_part2.unwrap_or(bx.upper).max(c1_part3.unwrap_or(bx.upper));
    let mut records = vec![GridRecord::new("part2", 0.0, var.into(), Interval::exact(part2_rhs(c)), true)];
    for (i, &t) in grid.iter().enumerate() {
        let pt: &TailPoint = &profile.upper[i];
        let bound = Interval::exact(std_normal_sf(c * (inv_s + t)));
        records.push(GridRecord::new("part3", t, bound, pt.into(), pt.resolved));
    }
    Ok(LemmaKeyParts {
        part1,
        c1_part2,
        c1_part3,
        records,
        s,
        var,
    })
}

/// All three parts of the key lemma for a nondecreasing convex g on ℝ:
/// part (1) with exact constants, parts (2) and (3) with a shared
/// C₁ ∈ [1/4, 64].
pub fn check_lemma_key(g: &FunctionSpec, n: usize, seed: u64) -> Result<InequalityVerdict> {
    check_lemma_key_family(std::slice::from_ref(g), n, seed).map(|mut v| {
        v.name = "lemma_key".to_string();
        v
    })
}

/// [`check_lemma_key`] over a family with one C₁ for every member.
pub fn check_lemma_key_family(family: &[FunctionSpec], n: usize, seed: u64) -> Result<InequalityVerdict> {
    if family.is_empty() {
        return Err(Error::domain("lemma_key needs at least one function"));
    }
    let parts: Vec<LemmaKeyParts> = family
        .iter()
        .enumerate()
        .map(|(i, g)| lemma_key_parts(g, n, derive_seed(seed, &format!("lemma-key-{i}"))))
        .collect::<Result<_>>()?;
    let bx = ConstantBox::pow2(-2, 6);
    let feasible = parts.iter().all(|p| p.c1_part2.is_some() && p.c1_part3.is_some());
    let c = parts
        .iter()
        .map(|p| p.c1_part2.unwrap_or(bx.upper).max(p.c1_part3.unwrap_or(bx.upper)))
        .fold(bx.lower, f64::max);
    let key = family.iter().map(|g| g.key()).collect::<Vec<_>>().join("+");
    let mut b = VerdictBuilder::new("lemma_key_family", &key);
    b.constant("C1", c, bx, feasible);
    for (g, p) in family.iter().zip(parts) {
        let tag = g.key();
        b.diag(&format!("{tag}:C1_part2"), p.c1_part2.unwrap_or(f64::NAN));
        b.diag(&format!("{tag}:C1_part3"), p.c1_part3.unwrap_or(f64::NAN));
        b.diag(&format!("{tag}:s"), p.s.value);
        b.diag(&format!("{tag}:s_lo"), p.s.lo);
        b.diag(&format!("{tag}:variance"), p.var.value);
        for mut r in p.part1.grid {
            r.side = format!("{tag}:part1");
            b.record(r);
        }
        for mut r in p.records {
            // Re-evaluate at the common constant.
            if r.side == "part2" {
                r = GridRecord::new("part2", 0.0, p.var.into(), Interval::exact(c * left_derivative(g, c / p.s.lo).powi(2)), true);
            } else {
                let bound = std_normal_sf(c * (1.0 / p.s.lo + r.t));
                r = GridRecord::new("part3", r.t, Interval::exact(bound), r.rhs, r.resolved);
            }
            r.side = format!("{tag}:{}", r.side);
            b.record(r);
        }
    }
    Ok(b.finish())
}

/// Coordinatewise nondecreasing on the positive orthant (and convex).
fn nondecreasing_on_orthant(f: &FunctionSpec) -> bool {
    f.is_convex()
        && match f.family() {
            Family::Linear { u } => u.iter().all(|x| *x >= 0.0),
            Family::LpNorm { .. } | Family::SupNorm | Family::GAlpha { .. } | Family::Custom { .. } => true,
            Family::Ellipsoidal { .. } => false,
            Family::Tilted { base, tilt } => nondecreasing_on_orthant(base) && tilt.x0_star.iter().all(|x| *x >= 0.0),
            Family::MonomialOdd { .. } => false,
        }
}

/// Levels of the χ² concavity grid.
pub const CHI2_LEVELS: (f64, f64, usize) = (0.01, 0.99, 50);

/// f(W) for W with independent χ²(k) coordinates, built from k squared
/// Gaussians per coordinate.
pub fn sample_chi2_values(f: &FunctionSpec, k: usize, n: usize, seed: u64) -> Result<EmpiricalDistribution> {
    if k < 2 {
        return Err(Error::domain(format!("chi-square construction needs k >= 2, got {k}")));
    }
    let d = f.dim();
    let vals = map_gaussian_samples(d * k, n, seed, |z| {
        let w: Vec<f64> = (0..d).map(|j| (0..k).map(|i| z[i * d + j] * z[i * d + j]).sum()).collect();
        f.eval(&w)
    });
    Ok(EmpiricalDistribution::from_raw(f.key(), vals, provenance(n, seed)))
}

/// t ↦ Φ⁻¹(P(f(W) ≤ t)) is concave: divided second differences over the
/// points (Q(p), Φ⁻¹(p)) on 50 levels in [0.01, 0.99] stay below three
/// bootstrap standard deviations.
pub fn check_chi2_concavity(f: &FunctionSpec, k: usize, n: usize, seed: u64) -> Result<InequalityVerdict> {
    if k < 2 {
        return Err(Error::domain(format!("chi-square concavity needs k >= 2, got {k}")));
    }
    if !nondecreasing_on_orthant(f) {
        return Err(Error::invalid(format!(
            "`{}` is not known to be convex and coordinatewise nondecreasing on the orthant",
            f.key()
        )));
    }
    let emp = sample_chi2_values(f, k, n, seed)?;
    let (p0, p1, m) = CHI2_LEVELS;
    let probs: Vec<f64> = (0..m).map(|j| p0 + (p1 - p0) * j as f64 / (m - 1) as f64).collect();
    let y: Vec<f64> = probs.iter().map(|&p| std_normal_quantile(p)).collect::<Result<_>>()?;
    let d2 = |t: &[f64]| -> Vec<f64> {
        let slope: Vec<f64> = (0..m - 1).map(|j| (y[j + 1] - y[j]) / (t[j + 1] - t[j])).collect();
        (1..m - 1).map(|j| 2.0 * (slope[j] - slope[j - 1]) / (t[j + 1] - t[j - 1])).collect()
    };
    let t: Vec<f64> = probs.iter().map(|&p| emp.quantile(p)).collect();
    let boot_seed = derive_seed(seed, "chi2-bootstrap");
    let reps: Vec<Vec<f64>> = (0..BOOTSTRAP_REPLICATES)
        .into_par_iter()
        .map(|r| d2(&bootstrap_quantiles(emp.values(), &probs, RngStream::new(boot_seed, r as u64))))
        .collect();
    let est = d2(&t);
    let mut b = VerdictBuilder::new("chi2_concavity", &format!("{}:k={k}", f.key()));
    b.diag("k", k as f64);
    let mut worst_z = f64::NEG_INFINITY;
    for j in 0..est.len() {
        let sd = column_sd(&reps, j);
        let finite = est[j].is_finite() && sd.is_finite();
        if finite && sd > 0.0 {
            worst_z = worst_z.max(est[j] / sd);
        }
        let lhs = Interval {
            value: est[j],
            lo: est[j] - 3.0 * sd,
            hi: est[j] + 3.0 * sd,
        };
        b.record(GridRecord::new("second_difference", t[j + 1], lhs, Interval::exact(0.0), finite));
    }
    b.diag("max_z", worst_z);
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_galpha, make_linear, make_positive_part, parse_key};
    use crate::mc::sample_values;

    #[test]
    fn bobkov_houdre_identity_values() {
        let id = make_linear(vec![1.0]).unwrap();
        let v = check_bobkov_houdre(&id, 200_000, 21).unwrap();
        assert!(v.passed, "{v:?}");
        assert!((v.diagnostic("variance").unwrap() - 1.0).abs() < 0.01);
        assert!((v.diagnostic("weighted_integral").unwrap() - 0.6557).abs() < 1e-4);
        // ‖1‖_φ² = 1/x² with x² = ln(e + x), x ≈ 1.1647373
        assert!((v.diagnostic("orlicz_sq").unwrap() - 0.737_13).abs() < 1e-5);
        let mono = parse_key("monomial:k=1").unwrap();
        assert!(check_bobkov_houdre(&mono, 1000, 1).is_err());
    }

    #[test]
    fn talagrand_linear_and_scaling() {
        let u = make_linear(vec![1.0, 0.0]).unwrap();
        let v = check_talagrand(&u, 100_000, 22).unwrap();
        assert!(v.passed);
        let twice = make_linear(vec![2.0, 0.0]).unwrap();
        let w = check_talagrand(&twice, 100_000, 22).unwrap();
        assert_eq!(v.constant("C"), w.constant("C"));
        assert!((w.diagnostic("orlicz_sum").unwrap() / v.diagnostic("orlicz_sum").unwrap() - 4.0).abs() < 1e-6);
    }

    #[test]
    fn positive_part_equality_case() {
        let g = make_positive_part();
        let v = check_lemma_key(&g, 400_000, 23).unwrap();
        assert!(v.passed, "{:?}", v.grid.iter().filter(|r| !r.holds).collect::<Vec<_>>());
        for r in v.grid.iter().filter(|r| r.side.ends_with("part1")) {
            // 𝔼(ζ₊)^p = σ_p^p: the exact side lies inside the Monte Carlo interval.
            assert!(r.rhs.lo <= r.lhs.value && r.lhs.value <= r.rhs.hi, "{r:?}");
        }
    }

    #[test]
    fn lemma_key_galpha_kink() {
        let g = make_galpha(3.0).unwrap();
        let v = check_lemma_key(&g, 1_000_000, 24).unwrap();
        assert!(v.passed, "{v:?}");
        // Part (2) needs C₁/s beyond the kink at α.
        let c = v.diagnostic("galpha:a=3:C1_part2").unwrap();
        let s = v.diagnostic("galpha:a=3:s_lo").unwrap();
        assert!(c / s > 3.0, "{c} {s}");
        assert!(check_lemma_key(&parse_key("lp:n=1:p=1").unwrap(), 1000, 1).is_err());
    }

    #[test]
    fn rearrangement_slope_of_linear() {
        let f = make_linear(vec![3.0, 4.0]).unwrap();
        let emp = sample_values(&f, 400_000, 25).unwrap();
        let s = rearrangement_right_slope(&emp);
        assert!(s.lo < 5.0 && 5.0 < s.hi, "{s:?}");
    }

    #[test]
    fn chi2_exponential_cdf() {
        let f = make_linear(vec![1.0]).unwrap();
        let emp = sample_chi2_values(&f, 2, 200_000, 26).unwrap();
        // χ²(2) is exponential with mean 2.
        let d = emp.ks_distance(|t| if t <= 0.0 { 0.0 } else { 1.0 - (-t / 2.0).exp() });
        assert!(d < 0.005, "{d}");
        let v = check_chi2_concavity(&f, 2, 200_000, 26).unwrap();
        assert!(v.passed);
        assert!(check_chi2_concavity(&f, 1, 1000, 1).is_err());
        assert!(check_chi2_concavity(&parse_key("monomial:k=1").unwrap(), 2, 1000, 1).is_err());
    }
}
