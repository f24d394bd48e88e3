use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt::{real, to_json};
use crate::mc::{Estimate, TailPoint};

/// Admissible range for a fitted constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantBox {
    pub lower: f64,
    pub upper: f64,
}

/// Relative slack for comparing a bound recomputed from a fitted constant.
const ROUNDING: f64 = 1e-12;

/// Lattice resolution: 16 points per factor of two.
const LATTICE_STEPS_PER_OCTAVE: f64 = 16.0;

impl ConstantBox {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0) || !(lower <= upper) || !upper.is_finite() {
            return Err(Error::domain(format!("constant box needs 0 < lower <= upper, got [{lower}, {upper}]")));
        }
        Ok(ConstantBox { lower, upper })
    }

    pub(crate) fn pow2(lo: i32, hi: i32) -> Self {
        ConstantBox {
            lower: 2f64.powi(lo),
            upper: 2f64.powi(hi),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// Ascending candidates: the powers 2^{j/16} inside the box and both ends.
    ///
    /// Every box draws from the same global lattice, so a larger box only
    /// adds candidates (apart from its own end points).
    pub fn lattice(&self) -> Vec<f64> {
        let j0 = (self.lower.log2() * LATTICE_STEPS_PER_OCTAVE).ceil() as i64;
        let j1 = (self.upper.log2() * LATTICE_STEPS_PER_OCTAVE).floor() as i64;
        let mut out = vec![self.lower];
        for j in j0..=j1 {
            let x = (j as f64 / LATTICE_STEPS_PER_OCTAVE).exp2();
            if x > self.lower && x < self.upper {
                out.push(x);
            }
        }
        if self.upper > self.lower {
            out.push(self.upper);
        }
        out
    }
}

/// A value with a confidence interval; exact values have lo = hi.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn exact(value: f64) -> Self {
        Interval {
            value,
            lo: value,
            hi: value,
        }
    }
}

impl From<Estimate> for Interval {
    fn from(e: Estimate) -> Self {
        Interval {
            value: e.value,
            lo: e.lo,
            hi: e.hi,
        }
    }
}

impl From<&TailPoint> for Interval {
    fn from(p: &TailPoint) -> Self {
        Interval {
            value: p.p,
            lo: p.lo,
            hi: p.hi,
        }
    }
}

/// One comparison lhs ≤ rhs; it holds when lhs.lo ≤ rhs.hi up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRecord {
    pub side: String,
    pub t: f64,
    /// Transformed abscissa (rate value, h(t), …) when the bound uses one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub lhs: Interval,
    pub rhs: Interval,
    /// rhs.hi − lhs.lo
    pub margin: f64,
    pub resolved: bool,
    pub holds: bool,
}

impl GridRecord {
    pub fn new(side: &str, t: f64, lhs: Interval, rhs: Interval, resolved: bool) -> Self {
        let margin = rhs.hi - lhs.lo;
        GridRecord {
            side: side.to_string(),
            t,
            h: None,
            lhs,
            rhs,
            margin,
            resolved,
            holds: margin >= -ROUNDING * lhs.lo.abs().max(rhs.hi.abs()),
        }
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = Some(h);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Pass,
    Fail,
    /// The premise of the inequality was not met; nothing was tested.
    HypothesisNotMet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FittedConstant {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margins {
    /// Smallest margin over resolved grid points (+inf if none).
    pub worst: f64,
    pub resolved_points: usize,
    pub failing_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityVerdict {
    pub name: String,
    pub key: String,
    pub passed: bool,
    pub status: VerdictStatus,
    pub constants: BTreeMap<String, FittedConstant>,
    pub margins: Margins,
    pub diagnostics: BTreeMap<String, f64>,
    pub grid: Vec<GridRecord>,
}

impl InequalityVerdict {
    pub fn worst_margin(&self) -> f64 {
        self.margins.worst
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.get(name).map(|c| c.value)
    }

    pub fn diagnostic(&self, name: &str) -> Option<f64> {
        self.diagnostics.get(name).copied()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(to_json(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// One row per verdict: name, key, status, passed, worst margin and the
/// fitted constants as `name=value` pairs separated by `;`.
pub fn rollup_csv(verdicts: &[InequalityVerdict]) -> String {
    let mut s = String::from("name,key,status,passed,worst_margin,constants\n");
    for v in verdicts {
        let status = match v.status {
            VerdictStatus::Pass => "pass",
            VerdictStatus::Fail => "fail",
            VerdictStatus::HypothesisNotMet => "hypothesis_not_met",
        };
        let consts: Vec<String> = v.constants.iter().map(|(k, c)| format!("{k}={}", real(c.value))).collect();
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            v.name,
            v.key,
            status,
            v.passed,
            real(v.margins.worst),
            consts.join(";")
        ));
    }
    s
}

pub(crate) struct VerdictBuilder {
    name: String,
    key: String,
    constants: BTreeMap<String, FittedConstant>,
    diagnostics: BTreeMap<String, f64>,
    grid: Vec<GridRecord>,
    feasible: bool,
    hypothesis_met: bool,
}

impl VerdictBuilder {
    pub fn new(name: &str, key: &str) -> Self {
        VerdictBuilder {
            name: name.to_string(),
            key: key.to_string(),
            constants: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            grid: Vec::new(),
            feasible: true,
            hypothesis_met: true,
        }
    }

    pub fn record(&mut self, r: GridRecord) {
        self.grid.push(r);
    }

    pub fn constant(&mut self, name: &str, value: f64, bx: ConstantBox, feasible: bool) {
        self.feasible &= feasible;
        self.constants.insert(
            name.to_string(),
            FittedConstant {
                value,
                lower: bx.lower,
                upper: bx.upper,
                feasible,
            },
        );
    }

    pub fn diag(&mut self, name: &str, value: f64) {
        self.diagnostics.insert(name.to_string(), value);
    }

    pub fn hypothesis_not_met(&mut self) {
        self.hypothesis_met = false;
    }

    pub fn finish(self) -> InequalityVerdict {
        let resolved: Vec<&GridRecord> = self.grid.iter().filter(|r| r.resolved).collect();
        let worst = resolved.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
        let failing = resolved.iter().filter(|r| !r.holds).count();
        let status = if !self.hypothesis_met {
            VerdictStatus::HypothesisNotMet
        } else if self.feasible && failing == 0 {
            VerdictStatus::Pass
        } else {
            VerdictStatus::Fail
        };
        InequalityVerdict {
            name: self.name,
            key: self.key,
            passed: status == VerdictStatus::Pass,
            status,
            constants: self.constants,
            margins: Margins {
                worst,
                resolved_points: resolved.len(),
                failing_points: failing,
            },
            diagnostics: self.diagnostics,
            grid: self.grid,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_contains_ends_and_powers() {
        let b = ConstantBox::new(0.25, 64.0).unwrap();
        let l = b.lattice();
        assert_eq!(l[0], 0.25);
        assert_eq!(*l.last().unwrap(), 64.0);
        assert_eq!(l.len(), 8 * 16 + 1);
        assert!(l.windows(2).all(|w| w[1] > w[0]));
        assert!(l.contains(&1.0));
        let odd = ConstantBox::new(0.3, 0.3).unwrap().lattice();
        assert_eq!(odd, vec![0.3]);
    }

    #[test]
    fn box_validation() {
        assert!(ConstantBox::new(0.0, 1.0).is_err());
        assert!(ConstantBox::new(2.0, 1.0).is_err());
        assert!(ConstantBox::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn builder_status() {
        let mut b = VerdictBuilder::new("x", "k");
        b.record(GridRecord::new("s", 1.0, Interval::exact(1.0), Interval::exact(2.0), true));
        b.record(GridRecord::new("s", 2.0, Interval::exact(3.0), Interval::exact(2.0), false));
        let v = b.finish();
        assert!(v.passed);
        assert_eq!(v.margins.worst, 1.0);
        assert_eq!(v.margins.resolved_points, 1);

        let mut b = VerdictBuilder::new("x", "k");
        b.constant("C", 1.0, ConstantBox::pow2(0, 1), false);
        assert_eq!(b.finish().status, VerdictStatus::Fail);

        let mut b = VerdictBuilder::new("x", "k");
        b.hypothesis_not_met();
        let v = b.finish();
        assert_eq!(v.status, VerdictStatus::HypothesisNotMet);
        assert!(!v.passed);
    }

    #[test]
    fn rollup_has_one_row_per_verdict() {
        let mut b = VerdictBuilder::new("upper_gaussian", "linear:n=2");
        b.constant("C", 0.5, ConstantBox::pow2(-1, 0), true);
        let v = b.finish();
        let csv = rollup_csv(&[v.clone(), v]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "upper_gaussian,linear:n=2,pass,true,inf,C=5.0000000000000000e-1");
    }
}
