//! One-dimensional Gaussian rearrangement f* of a sampled law, its property
//! checks, and the 1-D functionals (Orlicz norms, weighted derivative
//! integrals) built on it.

mod orlicz;

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

pub use orlicz::{orlicz_norm, YoungFunction};

use crate::catalog::FunctionSpec;
use crate::error::{Error, Result};
use crate::fmt::real;
use crate::gaussian::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
use crate::mc::{EmpiricalDistribution, Estimate};
use crate::quad::integrate_with_breaks;
use crate::rng::{derive_seed, RngStream};

/// Points of the default grid, equispaced in probability.
pub const GRID_POINTS: usize = 2048;
/// Fine-grid stride of the analysis sub-grid used for slopes and curvature.
pub const ANALYSIS_STRIDE: usize = 64;
/// Bootstrap replicates for the curvature and slope noise.
pub const BOOTSTRAP_REPLICATES: usize = 200;

/// f* sampled on an ascending s-grid.
#[derive(Debug, Clone, Serialize)]
pub struct RearrangementCurve {
    pub source: String,
    pub s_grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// s_i = Φ⁻¹((i + ½)/points).
pub fn probability_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| std_normal_quantile((i as f64 + 0.5) / points as f64).expect("interior probability"))
        .collect()
}

fn check_grid(n: usize, s_grid: &[f64]) -> Result<()> {
    let pmin = 1.0 / n as f64;
    let (lo, hi) = (std_normal_quantile(pmin)?, -std_normal_quantile(pmin)?);
    if s_grid.is_empty() || s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("rearrangement grid must be strictly ascending"));
    }
    if s_grid[0] <= lo || s_grid[s_grid.len() - 1] >= hi {
        return Err(Error::domain(format!(
            "rearrangement grid must lie inside ({lo:.4}, {hi:.4}) for {n} samples"
        )));
    }
    Ok(())
}

/// f*(s) = empirical quantile at level Φ(s).
pub fn gaussian_rearrangement(emp: &EmpiricalDistribution, s_grid: &[f64]) -> Result<RearrangementCurve> {
    check_grid(emp.len(), s_grid)?;
    Ok(RearrangementCurve {
        source: emp.key().to_string(),
        s_grid: s_grid.to_vec(),
        values: s_grid.iter().map(|&s| emp.quantile(std_normal_cdf(s))).collect(),
    })
}

impl RearrangementCurve {
    /// Distribution function of f*(ζ) with ζ ∼ N(0,1), and its left limit.
    fn pushforward(&self, x: f64, left: bool) -> f64 {
        let v = &self.values;
        let j = if left {
            v.partition_point(|y| *y < x)
        } else {
            v.partition_point(|y| *y <= x)
        };
        if j == 0 {
            return 0.0;
        }
        if j == v.len() {
            return 1.0;
        }
        let (s0, s1) = (self.s_grid[j - 1], self.s_grid[j]);
        let (v0, v1) = (v[j - 1], v[j]);
        let s = if v1 > v0 { s0 + (x - v0) / (v1 - v0) * (s1 - s0) } else { s0 };
        std_normal_cdf(s)
    }

    /// Kolmogorov distance between the law of f*(ζ) and the source sample,
    /// exact for laws with atoms.
    pub fn ks_to_source(&self, emp: &EmpiricalDistribution) -> f64 {
        let x = emp.values();
        let n = x.len() as f64;
        let mut d: f64 = 0.0;
        let mut i = 0;
        while i < x.len() {
            let mut j = i;
            while j < x.len() && x[j] == x[i] {
                j += 1;
            }
            d = d
                .max((j as f64 / n - self.pushforward(x[i], false)).abs())
                .max((i as f64 / n - self.pushforward(x[i], true)).abs());
            i = j;
        }
        d
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("s,f_star\n");
        for (a, b) in self.s_grid.iter().zip(&self.values) {
            s.push_str(&format!("{},{}\n", real(*a), real(*b)));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Forward slope of f* on one analysis interval.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlopePoint {
    pub s: f64,
    pub slope: f64,
    pub sd: f64,
}

/// Divided second difference at one interior analysis point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvaturePoint {
    pub s: f64,
    pub second_difference: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RearrangementReport {
    pub key: String,
    pub n_samples: usize,
    pub monotone_ok: bool,
    /// Smallest divided second difference on the analysis grid.
    pub convexity_margin: f64,
    /// Smallest second difference in bootstrap SD units.
    pub convexity_z: f64,
    pub convex_ok: bool,
    /// Largest forward slope on the analysis grid.
    pub lip_estimate: f64,
    /// Largest forward slope minus three bootstrap SDs.
    pub lip_lower: f64,
    pub lipschitz: Option<f64>,
    pub lip_ok: Option<bool>,
    pub ks_distance: f64,
    pub ks_ok: bool,
    /// ∫|(f*)′|² dγ from fine-grid secants, less their bootstrap noise.
    pub dirichlet: f64,
    pub grad_sq: Option<Estimate>,
    pub dirichlet_ok: Option<bool>,
    pub derivative_curve: Vec<SlopePoint>,
    pub curvature: Vec<CurvaturePoint>,
}

/// Indices of the analysis grid inside a fine grid of `len` points.
fn analysis_indices(len: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).step_by(ANALYSIS_STRIDE).collect();
    if *idx.last().expect("non-empty grid") != len - 1 {
        idx.push(len - 1);
    }
    idx
}

fn slopes(s: &[f64], v: &[f64]) -> Vec<f64> {
    (0..s.len() - 1).map(|i| (v[i + 1] - v[i]) / (s[i + 1] - s[i])).collect()
}

fn second_differences(s: &[f64], v: &[f64]) -> Vec<f64> {
    let sl = slopes(s, v);
    (1..s.len() - 1)
        .map(|i| 2.0 * (sl[i] - sl[i - 1]) / (s[i + 1] - s[i - 1]))
        .collect()
}

/// Quantiles at levels `probs` of a bootstrap resample of `sorted`, drawn
/// as multinomial counts over the sorted values so no re-sort is needed.
pub(crate) fn bootstrap_quantiles(sorted: &[f64], probs: &[f64], stream: RngStream) -> Vec<f64> {
    let n = sorted.len();
    let mut counts = vec![0u32; n];
    let mut rng = stream.generator();
    for _ in 0..n {
        counts[rng.below(n)] += 1;
    }
    // Order statistic k of the resample is the value at the first index whose
    // cumulative count exceeds k.
    let order_stat = |targets: &[usize]| -> Vec<f64> {
        let mut out = Vec::with_capacity(targets.len());
        let mut cum = 0usize;
        let mut i = 0usize;
        for &k in targets {
            while cum + (counts[i] as usize) <= k {
                cum += counts[i] as usize;
                i += 1;
            }
            out.push(sorted[i]);
        }
        out
    };
    let pos: Vec<f64> = probs.iter().map(|p| (n - 1) as f64 * p).collect();
    let lo: Vec<usize> = pos.iter().map(|h| h.floor() as usize).collect();
    let hi: Vec<usize> = lo.iter().map(|k| (k + 1).min(n - 1)).collect();
    let a = order_stat(&lo);
    let b = order_stat(&hi);
    (0..probs.len())
        .map(|j| a[j] + (pos[j] - lo[j] as f64) * (b[j] - a[j]))
        .collect()
}

pub(crate) fn column_sd(rows: &[Vec<f64>], j: usize) -> f64 {
    let n = rows.len() as f64;
    let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
    (rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Monotonicity, convexity, Lipschitz contraction, equi-measurability and
/// Dirichlet contraction of the rearrangement of `emp`.
///
/// `grad_sq` is 𝔼‖∇f‖₂² for the same function when available.
pub fn check_rearrangement_properties(
    curve: &RearrangementCurve,
    emp: &EmpiricalDistribution,
    spec: &FunctionSpec,
    grad_sq: Option<Estimate>,
    seed: u64,
) -> RearrangementReport {
    let idx = analysis_indices(curve.s_grid.len());
    let s: Vec<f64> = idx.iter().map(|&i| curve.s_grid[i]).collect();
    let v: Vec<f64> = idx.iter().map(|&i| curve.values[i]).collect();
    let fine_probs: Vec<f64> = curve.s_grid.iter().map(|&x| std_normal_cdf(x)).collect();

    let boot_seed = derive_seed(seed, "rearrangement-bootstrap");
    let fine_reps: Vec<Vec<f64>> = (0..BOOTSTRAP_REPLICATES)
        .into_par_iter()
        .map(|r| bootstrap_quantiles(emp.values(), &fine_probs, RngStream::new(boot_seed, r as u64)))
        .collect();
    let reps: Vec<Vec<f64>> = fine_reps.iter().map(|q| idx.iter().map(|&i| q[i]).collect()).collect();
    let rep_slopes: Vec<Vec<f64>> = reps.iter().map(|q| slopes(&s, q)).collect();
    let rep_curv: Vec<Vec<f64>> = reps.iter().map(|q| second_differences(&s, q)).collect();

    let sl = slopes(&s, &v);
    let derivative_curve: Vec<SlopePoint> = (0..sl.len())
        .map(|i| SlopePoint {
            s: s[i],
            slope: sl[i],
            sd: column_sd(&rep_slopes, i),
        })
        .collect();
    let d2 = second_differences(&s, &v);
    let curvature: Vec<CurvaturePoint> = (0..d2.len())
        .map(|i| CurvaturePoint {
            s: s[i + 1],
            second_difference: d2[i],
            sd: column_sd(&rep_curv, i),
        })
        .collect();

    let convexity_margin = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let convexity_z = curvature
        .iter()
        .map(|c| {
            if c.sd > 0.0 {
                c.second_difference / c.sd
            } else if c.second_difference < 0.0 {
                f64::NEG_INFINITY
            } else {
                0.0
            }
        })
        .fold(f64::INFINITY, f64::min);
    let lip_estimate = sl.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lip_lower = derivative_curve
        .iter()
        .map(|p| p.slope - 3.0 * p.sd)
        .fold(f64::NEG_INFINITY, f64::max);
    let lipschitz = spec.lipschitz();

    // Fine-grid secants, extended flat into both tails. Each squared secant
    // is corrected by its bootstrap variance, the bias of squaring noise.
    let fine_sl = slopes(&curve.s_grid, &curve.values);
    let fine_rep_slopes: Vec<Vec<f64>> = fine_reps.iter().map(|q| slopes(&curve.s_grid, q)).collect();
    let last = fine_sl.len() - 1;
    let mut dirichlet = 0.0;
    for i in 0..=last {
        let sd = column_sd(&fine_rep_slopes, i);
        let mut w = fine_probs[i + 1] - fine_probs[i];
        if i == 0 {
            w += fine_probs[0];
        }
        if i == last {
            w += 1.0 - fine_probs[last + 1];
        }
        dirichlet += (fine_sl[i] * fine_sl[i] - sd * sd) * w;
    }
    let dirichlet = dirichlet.max(0.0);

    let ks_distance = curve.ks_to_source(emp);
    RearrangementReport {
        key: emp.key().to_string(),
        n_samples: emp.len(),
        monotone_ok: curve.is_monotone(),
        convexity_margin,
        convexity_z,
        convex_ok: convexity_z >= -3.0,
        lip_estimate,
        lip_lower,
        lipschitz,
        lip_ok: lipschitz.map(|l| lip_lower <= 1.02 * l),
        ks_distance,
        ks_ok: ks_distance <= 0.01,
        dirichlet,
        grad_sq,
        dirichlet_ok: grad_sq.map(|g| dirichlet <= 1.05 * g.hi),
        derivative_curve,
        curvature,
    }
}

/// ∫ g′(t)²/(1+t²) dγ(t) over [−10, 10] for a 1-D function.
pub fn weighted_derivative_integral(g: &FunctionSpec) -> Result<f64> {
    if g.dim() != 1 {
        return Err(Error::invalid(format!("`{}` is not one-dimensional", g.key())));
    }
    let f = |t: f64| {
        let d = g.derivative_1d(t);
        d * d * std_normal_pdf(t) / (1.0 + t * t)
    };
    Ok(integrate_with_breaks(f, -10.0, 10.0, &g.kinks(), 1e-14, 1e-9))
}
