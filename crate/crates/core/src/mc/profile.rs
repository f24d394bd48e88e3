use std::path::Path;

use serde::Serialize;

use super::empirical::EmpiricalDistribution;
use super::stats::{wilson, Z95};
use crate::error::{Error, Result};
use crate::fmt::{real, to_json};

/// Exceedance counts below this are reported as unresolved.
pub const MIN_RESOLVED_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterKind {
    Median,
    Mean,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleKind {
    Lipschitz,
    StdDev,
    Unit,
    Fixed,
}

/// An empirical probability with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailPoint {
    pub count: usize,
    pub p: f64,
    pub lo: f64,
    pub hi: f64,
    pub resolved: bool,
}

impl TailPoint {
    pub fn new(count: usize, n: usize) -> Self {
        let (lo, hi) = wilson(count, n, Z95);
        TailPoint {
            count,
            p: count as f64 / n as f64,
            lo,
            hi,
            resolved: count >= MIN_RESOLVED_COUNT,
        }
    }

    /// Same count with an interval at another confidence level.
    pub fn with_z(&self, n: usize, z: f64) -> (f64, f64) {
        wilson(self.count, n, z)
    }
}

/// Tail probabilities P(f ≥ c + t·σ), P(f ≤ c − t·σ), P(|f − c| ≥ t·σ).
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationProfile {
    pub key: String,
    pub n_samples: usize,
    pub center: f64,
    pub center_kind: CenterKind,
    pub scale: f64,
    pub scale_kind: ScaleKind,
    pub t_grid: Vec<f64>,
    pub upper: Vec<TailPoint>,
    pub lower: Vec<TailPoint>,
    pub two_sided: Vec<TailPoint>,
}

pub fn tail_curve(
    emp: &EmpiricalDistribution,
    center: f64,
    center_kind: CenterKind,
    scale: f64,
    scale_kind: ScaleKind,
    t_grid: &[f64],
) -> Result<ConcentrationProfile> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::domain(format!("tail scale must be positive, got {scale}")));
    }
    if t_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("tail grid must be nonnegative and strictly ascending"));
    }
    let n = emp.len();
    let mut upper = Vec::with_capacity(t_grid.len());
    let mut lower = Vec::with_capacity(t_grid.len());
    let mut two = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let (a, b) = (center - t * scale, center + t * scale);
        let up = emp.count_ge(b);
        let lo = emp.count_le(a);
        // Complement of the open band (a, b) counts |f − c| ≥ tσ exactly.
        let inside = emp.count_lt(b).saturating_sub(emp.count_le(a));
        upper.push(TailPoint::new(up, n));
        lower.push(TailPoint::new(lo, n));
        two.push(TailPoint::new(n - inside, n));
    }
    Ok(ConcentrationProfile {
        key: emp.key().to_string(),
        n_samples: n,
        center,
        center_kind,
        scale,
        scale_kind,
        t_grid: t_grid.to_vec(),
        upper,
        lower,
        two_sided: two,
    })
}

impl ConcentrationProfile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,upper,upper_lo,upper_hi,lower,lower_lo,lower_hi\n");
        for (i, t) in self.t_grid.iter().enumerate() {
            let (u, l) = (&self.upper[i], &self.lower[i]);
            let row = [*t, u.p, u.lo, u.hi, l.p, l.lo, l.hi].map(real).join(",");
            s.push_str(&row);
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, to_json(self)?).map_err(|e| Error::io(path, e))
    }
}

/// Evenly spaced grid `start, start+step, …` with `count` points.
pub fn linear_grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + step * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::make_linear;
    use crate::gaussian::std_normal_sf;
    use crate::mc::sample_values;

    #[test]
    fn linear_two_sided_tail_at_one() {
        let f = make_linear(vec![1.0, 0.0]).unwrap();
        let emp = sample_values(&f, 200_000, 9).unwrap();
        let prof = tail_curve(&emp, 0.0, CenterKind::Fixed, 1.0, ScaleKind::Unit, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(prof.two_sided[0].p, 1.0);
        let want = 2.0 * std_normal_sf(1.0);
        let pt = &prof.two_sided[1];
        assert!(pt.lo - 0.002 < want && want < pt.hi + 0.002, "{pt:?} vs {want}");
        for side in [&prof.upper, &prof.lower, &prof.two_sided] {
            assert!(side.windows(2).all(|w| w[1].count <= w[0].count));
        }
        for i in 1..3 {
            assert_eq!(prof.two_sided[i].count, prof.upper[i].count + prof.lower[i].count);
        }
    }

    #[test]
    fn sparse_tail_points_are_unresolved() {
        let f = make_linear(vec![1.0]).unwrap();
        let emp = sample_values(&f, 1000, 2).unwrap();
        let prof = tail_curve(&emp, 0.0, CenterKind::Fixed, 1.0, ScaleKind::Unit, &[1.0, 5.0]).unwrap();
        assert!(prof.upper[0].resolved);
        assert!(!prof.upper[1].resolved);
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = make_linear(vec![1.0]).unwrap();
        let emp = sample_values(&f, 1000, 2).unwrap();
        assert!(tail_curve(&emp, 0.0, CenterKind::Fixed, 0.0, ScaleKind::Unit, &[1.0]).is_err());
        assert!(tail_curve(&emp, 0.0, CenterKind::Fixed, 1.0, ScaleKind::Unit, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn csv_layout() {
        let f = make_linear(vec![1.0]).unwrap();
        let emp = sample_values(&f, 1000, 2).unwrap();
        let prof = tail_curve(&emp, 0.0, CenterKind::Fixed, 1.0, ScaleKind::Unit, &[0.5, 1.0]).unwrap();
        let csv = prof.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,upper,upper_lo,upper_hi,lower,lower_lo,lower_hi");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), 7);
        assert!(lines[1].starts_with("5.0000000000000000e-1,"));
    }
}
