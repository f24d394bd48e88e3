use rayon::prelude::*;
use serde::Serialize;

use super::empirical::{quantile_sorted, EmpiricalDistribution};
use super::sampling::sample_values_and_grad_sq;
use crate::catalog::FunctionSpec;
use crate::error::Result;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;
/// Blocks used by every delete-block jackknife.
pub const JACKKNIFE_BLOCKS: usize = 100;

/// A point estimate with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_se(value: f64, se: f64) -> Self {
        Estimate {
            value,
            lo: value - Z95 * se,
            hi: value + Z95 * se,
            se,
        }
    }

    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            lo: value,
            hi: value,
            se: 0.0,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Monotone transform of value and interval ends.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let (a, b) = (f(self.lo), f(self.hi));
        Estimate {
            value: f(self.value),
            lo: a.min(b),
            hi: a.max(b),
            se: f64::NAN,
        }
    }
}

/// Wilson score interval for k successes in n trials.
pub fn wilson(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Boundaries of jackknife block `b` over `n` draws.
pub(crate) fn block_range(n: usize, b: usize) -> std::ops::Range<usize> {
    (b * n / JACKKNIFE_BLOCKS)..((b + 1) * n / JACKKNIFE_BLOCKS)
}

/// Standard error from leave-one-block-out replicates.
pub fn jackknife_se(replicates: &[f64]) -> f64 {
    let b = replicates.len() as f64;
    let mean = replicates.iter().sum::<f64>() / b;
    ((b - 1.0) / b * replicates.iter().map(|x| (x - mean).powi(2)).sum::<f64>()).sqrt()
}

/// Per-block sums of several per-draw quantities; replicate `b` is
/// computed from totals minus block `b`.
pub(crate) struct BlockSums {
    pub total: Vec<f64>,
    pub blocks: Vec<Vec<f64>>,
    pub count: Vec<f64>,
    pub n: f64,
}

impl BlockSums {
    pub fn new(n: usize, fields: usize, row: impl Fn(usize, &mut [f64]) + Sync) -> Self {
        let blocks: Vec<Vec<f64>> = (0..JACKKNIFE_BLOCKS)
            .into_par_iter()
            .map(|b| {
                let mut acc = vec![0.0; fields];
                let mut tmp = vec![0.0; fields];
                for i in block_range(n, b) {
                    row(i, &mut tmp);
                    for (a, t) in acc.iter_mut().zip(&tmp) {
                        *a += t;
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![0.0; fields];
        for blk in &blocks {
            for (t, v) in total.iter_mut().zip(blk) {
                *t += v;
            }
        }
        let count = (0..JACKKNIFE_BLOCKS).map(|b| block_range(n, b).len() as f64).collect();
        BlockSums {
            total,
            blocks,
            count,
            n: n as f64,
        }
    }

    /// Sums with block `b` removed, and the remaining count.
    pub fn without(&self, b: usize) -> (Vec<f64>, f64) {
        let s = self.total.iter().zip(&self.blocks[b]).map(|(t, v)| t - v).collect();
        (s, self.n - self.count[b])
    }

    /// Jackknife estimate of `stat(sums, count)`.
    pub fn estimate(&self, stat: impl Fn(&[f64], f64) -> f64) -> Estimate {
        let full = stat(&self.total, self.n);
        let reps: Vec<f64> = (0..JACKKNIFE_BLOCKS)
            .map(|b| {
                let (s, c) = self.without(b);
                stat(&s, c)
            })
            .collect();
        Estimate::from_se(full, jackknife_se(&reps))
    }
}

/// Distribution-free 95% interval for the median from binomial order
/// statistics.
pub fn median_interval(sorted: &[f64]) -> (f64, f64) {
    median_interval_at(sorted, Z95)
}

/// Order-statistic interval for the median at normal quantile `z`.
pub fn median_interval_at(sorted: &[f64], z: f64) -> (f64, f64) {
    let n = sorted.len() as f64;
    let half = z * n.sqrt() / 2.0;
    let lo = ((n / 2.0 - half).floor().max(0.0)) as usize;
    let hi = (((n / 2.0 + half).ceil()) as usize).min(sorted.len() - 1);
    (sorted[lo], sorted[hi])
}

/// Medians of the sample with each jackknife block removed.
pub fn leave_out_medians(raw: &[f64]) -> Vec<f64> {
    let n = raw.len();
    (0..JACKKNIFE_BLOCKS)
        .into_par_iter()
        .map(|b| {
            let r = block_range(n, b);
            let mut rest: Vec<f64> = raw[..r.start].iter().chain(&raw[r.end..]).copied().collect();
            rest.sort_unstable_by(f64::total_cmp);
            quantile_sorted(&rest, 0.5)
        })
        .collect()
}

/// 𝔼|f − c|^p for one order p.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentEstimate {
    pub p: f64,
    pub moment: Estimate,
}

impl MomentEstimate {
    /// (𝔼|f − c|^p)^{1/p}
    pub fn norm(&self) -> Estimate {
        let p = self.p;
        self.moment.map(|m| m.max(0.0).powf(1.0 / p))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryStats {
    pub n_samples: usize,
    pub mean: Estimate,
    pub median: Estimate,
    pub variance: Estimate,
    /// 𝔼|f − med|^p
    pub moments_about_median: Vec<MomentEstimate>,
    /// 𝔼|f − 𝔼f|^p
    pub moments_about_mean: Vec<MomentEstimate>,
}

impl SummaryStats {
    pub fn moment_about_median(&self, p: f64) -> Option<&MomentEstimate> {
        self.moments_about_median.iter().find(|m| m.p == p)
    }

    pub fn moment_about_mean(&self, p: f64) -> Option<&MomentEstimate> {
        self.moments_about_mean.iter().find(|m| m.p == p)
    }
}

/// Absolute centered moments with a jackknife that follows the moving
/// center to first order: removing a block shifts the center from c to c_b
/// and the sum by (c_b − c)·∂/∂c Σ|x − c|^p.
fn centered_moments(raw: &[f64], center: f64, leave_out_centers: &[f64], p_list: &[f64]) -> Vec<MomentEstimate> {
    let n = raw.len();
    p_list
        .iter()
        .map(|&p| {
            let sums = BlockSums::new(n, 2, |i, out| {
                let d = raw[i] - center;
                let a = d.abs();
                out[0] = a.powf(p);
                // d/dc |x − c|^p
                out[1] = if a == 0.0 { 0.0 } else { -p * a.powf(p - 1.0) * d.signum() };
            });
            let full = sums.total[0] / sums.n;
            let reps: Vec<f64> = (0..JACKKNIFE_BLOCKS)
                .map(|b| {
                    let (s, c) = sums.without(b);
                    (s[0] + (leave_out_centers[b] - center) * s[1]) / c
                })
                .collect();
            MomentEstimate {
                p,
                moment: Estimate::from_se(full, jackknife_se(&reps)),
            }
        })
        .collect()
}

/// Mean, median, variance and centered moments for orders in `p_list`.
pub fn estimate_stats(emp: &EmpiricalDistribution, p_list: &[f64]) -> SummaryStats {
    let raw = emp.raw();
    let n = raw.len();
    // Shift by the median before summing squares.
    let med = emp.median();
    let sums = BlockSums::new(n, 2, |i, out| {
        let d = raw[i] - med;
        out[0] = d;
        out[1] = d * d;
    });
    let mean_est = sums.estimate(|s, c| med + s[0] / c);
    let variance = sums.estimate(|s, c| (s[1] - s[0] * s[0] / c) / (c - 1.0));
    let (mlo, mhi) = median_interval(emp.values());
    let median = Estimate {
        value: med,
        lo: mlo,
        hi: mhi,
        se: (mhi - mlo) / (2.0 * Z95),
    };
    let med_b = leave_out_medians(raw);
    let mean_b: Vec<f64> = (0..JACKKNIFE_BLOCKS)
        .map(|b| {
            let (s, c) = sums.without(b);
            med + s[0] / c
        })
        .collect();
    SummaryStats {
        n_samples: n,
        mean: mean_est,
        median,
        variance,
        moments_about_median: centered_moments(raw, med, &med_b, p_list),
        moments_about_mean: centered_moments(raw, mean_est.value, &mean_b, p_list),
    }
}

/// 𝔼‖∇f(Z)‖₂² with a jackknife interval.
pub fn estimate_grad_sq(spec: &FunctionSpec, n: usize, seed: u64) -> Result<Estimate> {
    let (_, g) = sample_values_and_grad_sq(spec, n, seed)?;
    Ok(mean_estimate(&g))
}

/// Unbiased variance of the sample with a jackknife interval.
pub fn variance_estimate(emp: &EmpiricalDistribution) -> Estimate {
    let raw = emp.raw();
    let shift = emp.median();
    let sums = BlockSums::new(raw.len(), 2, |i, out| {
        let d = raw[i] - shift;
        out[0] = d;
        out[1] = d * d;
    });
    sums.estimate(|s, c| (s[1] - s[0] * s[0] / c) / (c - 1.0))
}

pub(crate) fn mean_estimate(v: &[f64]) -> Estimate {
    let sums = BlockSums::new(v.len(), 1, |i, out| out[0] = v[i]);
    sums.estimate(|s, c| s[0] / c)
}

/// Variance, 𝔼‖∇f‖², ov(f) = √Var/L and s(f) = √(Var/𝔼‖∇f‖²).
#[derive(Debug, Clone, Serialize)]
pub struct ConcConstants {
    pub key: String,
    pub n_samples: usize,
    pub variance: Estimate,
    pub grad_sq_mean: Estimate,
    pub lipschitz: Option<f64>,
    pub ov: Option<Estimate>,
    pub s: Estimate,
}

pub fn concentration_constants(spec: &FunctionSpec, n: usize, seed: u64) -> Result<ConcConstants> {
    let (emp, g) = sample_values_and_grad_sq(spec, n, seed)?;
    Ok(constants_from(spec, &emp, &g))
}

/// Constants from values and squared gradient norms of the same draws.
pub fn constants_from(spec: &FunctionSpec, emp: &EmpiricalDistribution, g: &[f64]) -> ConcConstants {
    let raw = emp.raw();
    let shift = emp.median();
    let sums = BlockSums::new(raw.len(), 3, |i, out| {
        let d = raw[i] - shift;
        out[0] = d;
        out[1] = d * d;
        out[2] = g[i];
    });
    let var = |s: &[f64], c: f64| (s[1] - s[0] * s[0] / c) / (c - 1.0);
    let variance = sums.estimate(var);
    let grad_sq_mean = sums.estimate(|s, c| s[2] / c);
    let s = sums.estimate(|s, c| {
        let gm = s[2] / c;
        if gm > 0.0 {
            (var(s, c).max(0.0) / gm).sqrt()
        } else {
            f64::NAN
        }
    });
    let lipschitz = spec.lipschitz();
    let ov = lipschitz.map(|l| variance.map(|v| v.max(0.0).sqrt() / l));
    ConcConstants {
        key: spec.key().to_string(),
        n_samples: raw.len(),
        variance,
        grad_sq_mean,
        lipschitz,
        ov,
        s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_linear, parse_key};
    use crate::mc::sample_values;

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson(50, 100, Z95);
        assert!((lo - 0.403_831_4).abs() < 1e-6 && (hi - 0.596_168_6).abs() < 1e-6);
        let (lo, hi) = wilson(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.03 && hi < 0.04);
    }

    #[test]
    fn linear_stats_match_gaussian() {
        let f = make_linear(vec![0.6, 0.8]).unwrap();
        let emp = sample_values(&f, 400_000, 3).unwrap();
        let st = estimate_stats(&emp, &[1.0, 2.0]);
        assert!(st.variance.lo - 0.01 < 1.0 && 1.0 < st.variance.hi + 0.01);
        assert!((st.mean.value - st.median.value).abs() < 0.01);
        let m1 = st.moment_about_median(1.0).unwrap();
        assert!((m1.moment.value - 0.797_884_56).abs() < 5.0 * m1.moment.se + 1e-3);
        let m2 = st.moment_about_mean(2.0).unwrap();
        assert!((m2.moment.value - 1.0).abs() < 5.0 * m2.moment.se);
    }

    #[test]
    fn gradient_constants_for_sup_norm() {
        let f = parse_key("linf:n=64").unwrap();
        let c = concentration_constants(&f, 20_000, 1).unwrap();
        assert_eq!(c.grad_sq_mean.value, 1.0);
        assert_eq!(c.grad_sq_mean.se, 0.0);
        let ov = c.ov.unwrap();
        assert!((ov.value - c.s.value).abs() < 1e-12);
        assert!(c.s.value < 1.0);
    }

    #[test]
    fn median_interval_brackets_middle() {
        let v: Vec<f64> = (0..1001).map(|i| i as f64).collect();
        let (lo, hi) = median_interval(&v);
        assert!(lo < 500.0 && hi > 500.0);
        assert!(hi - lo < 80.0);
    }
}
