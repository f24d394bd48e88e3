//! Feasibility searches for bounds with unspecified constants.

use super::verdict::ConstantBox;

/// Result of fitting amplitude·e^{−rate·h} below a set of targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LowerFit {
    pub amplitude: f64,
    pub rate: f64,
    pub feasible: bool,
}

/// Fits a·e^{−r·h} ≤ target at every (h, target) with a ∈ `amp`, r ∈ `rate`.
///
/// For a fixed r the best a is min(target·e^{r·h}); among feasible pairs the
/// one with the smallest r/a wins. With no feasible pair the reported r is
/// the one that comes closest and a is pinned at the box floor.
pub(crate) fn fit_lower_envelope(points: &[(f64, f64)], amp: ConstantBox, rate: ConstantBox) -> LowerFit {
    let mut best: Option<(f64, LowerFit)> = None;
    let mut closest = (f64::NEG_INFINITY, rate.upper);
    for r in rate.lattice() {
        let a_star = points
            .iter()
            .map(|&(h, p)| p * (r * h).exp())
            .fold(f64::INFINITY, f64::min);
        if a_star * (1.0 + 1e-12) >= amp.lower {
            let a = a_star.min(amp.upper);
            let score = r.ln() - a.ln();
            if best.as_ref().is_none_or(|(s, _)| score < *s) {
                best = Some((
                    score,
                    LowerFit {
                        amplitude: a,
                        rate: r,
                        feasible: true,
                    },
                ));
            }
        } else if a_star / amp.lower > closest.0 {
            closest = (a_star / amp.lower, r);
        }
    }
    best.map(|(_, f)| f).unwrap_or(LowerFit {
        amplitude: amp.lower,
        rate: closest.1,
        feasible: false,
    })
}

/// Result of fitting c·e^{−C·h} ≤ P ≤ C·e^{−c·h}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SandwichFit {
    pub small: f64,
    pub large: f64,
    pub feasible: bool,
}

/// Shared-constant sandwich over (h, p_lo, p_hi) points with c, C ∈ `bx`.
/// Among feasible pairs the one with the smallest C/c wins.
pub(crate) fn fit_sandwich(points: &[(f64, f64, f64)], bx: ConstantBox) -> SandwichFit {
    let lattice = bx.lattice();
    let mut best: Option<(f64, SandwichFit)> = None;
    let mut closest = (f64::NEG_INFINITY, bx.upper);
    for &big in &lattice {
        // Largest c allowed by each side for this C.
        let from_lower = points
            .iter()
            .map(|&(h, _, hi)| hi * (big * h).exp())
            .fold(f64::INFINITY, f64::min);
        let from_upper = points
            .iter()
            .map(|&(h, lo, _)| {
                if lo <= big {
                    if h > 0.0 {
                        (big.ln() - lo.ln()) / h
                    } else {
                        f64::INFINITY
                    }
                } else {
                    f64::NEG_INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min);
        let cap = from_lower.min(from_upper) * (1.0 + 1e-12);
        match lattice.iter().rev().find(|&&c| c <= cap) {
            Some(&small) => {
                let score = big.ln() - small.ln();
                if best.as_ref().is_none_or(|(s, _)| score < *s) {
                    best = Some((
                        score,
                        SandwichFit {
                            small,
                            large: big,
                            feasible: true,
                        },
                    ));
                }
            }
            None => {
                let gap = cap / bx.lower;
                if gap > closest.0 {
                    closest = (gap, big);
                }
            }
        }
    }
    best.map(|(_, f)| f).unwrap_or(SandwichFit {
        small: bx.lower,
        large: closest.1,
        feasible: false,
    })
}

/// Smallest lattice point of `bx` passing a test that is monotone in the
/// constant (once true, true for every larger value).
pub(crate) fn smallest_feasible(bx: ConstantBox, ok: impl Fn(f64) -> bool) -> Option<f64> {
    bx.lattice().into_iter().find(|&x| ok(x))
}

/// Largest lattice point of `bx` passing a test that is monotone downwards.
pub(crate) fn largest_feasible(bx: ConstantBox, ok: impl Fn(f64) -> bool) -> Option<f64> {
    bx.lattice().into_iter().rev().find(|&x| ok(x))
}
