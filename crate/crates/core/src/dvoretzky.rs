//! Random almost-spherical sections of normed spaces.
//!
//! A section is the span of a Haar-random orthonormal k-frame. Its
//! sphericity, max/min of the norm over the Euclidean unit sphere of the
//! section, is estimated from random directions with a local polish, and
//! k(X, ε) is the largest k for which random sections are (1+ε)-spherical
//! with probability at least 2/3.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{make_tilted, FunctionSpec};
use crate::error::{Error, Result};
use crate::fmt::{real, to_json};
use crate::inequalities::{fit_sandwich, ConstantBox, GridRecord, InequalityVerdict, Interval, VerdictBuilder};
use crate::linalg::{dot, norm2, orthonormalize_rows};
use crate::mc::{map_gaussian_samples, mean_estimate, wilson, Estimate, TailPoint, Z95};
use crate::rng::{derive_seed, RngStream};

/// Success threshold for a random section.
pub const SUCCESS_PROBABILITY: f64 = 2.0 / 3.0;
/// Default number of subspace trials per dimension.
pub const DEFAULT_TRIALS: usize = 60;
/// Smallest admissible direction count.
pub const MIN_DIRECTIONS: usize = 1000;
/// Draws used for k(X) when it only seeds the search bracket.
pub const BRACKET_SAMPLES: usize = 20_000;

/// Orthonormal k-frame in ℝⁿ, rows stored contiguously.
#[derive(Debug, Clone, Serialize)]
pub struct SubspaceSample {
    pub n: usize,
    pub k: usize,
    pub basis: Vec<f64>,
    pub stream: RngStream,
}

impl SubspaceSample {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.basis[i * self.n..(i + 1) * self.n]
    }

    /// Σᵢ cᵢ·rowᵢ
    pub fn combine(&self, c: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, &ci) in c.iter().enumerate() {
            for (o, b) in out.iter_mut().zip(self.row(i)) {
                *o += ci * b;
            }
        }
    }

    /// max |B·Bᵀ − I| over entries.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.k {
            for j in 0..=i {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(self.row(i), self.row(j)) - target).abs());
            }
        }
        worst
    }
}

/// Rows of a k×n Gaussian matrix orthonormalized by modified Gram–Schmidt.
/// A numerically rank-deficient draw is replaced by the next one on the
/// same stream.
pub fn sample_subspace(n: usize, k: usize, stream: RngStream) -> Result<SubspaceSample> {
    if k == 0 || k > n {
        return Err(Error::domain(format!("subspace dimension must lie in 1..={n}, got {k}")));
    }
    let mut s = stream;
    loop {
        let mut basis = vec![0.0; k * n];
        s.with_rng(|g| g.fill_gauss(&mut basis));
        if orthonormalize_rows(&mut basis, k, n) {
            return Ok(SubspaceSample { n, k, basis, stream });
        }
    }
}

/// Extremes and mean of the norm on the unit sphere of a section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionStats {
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// Mean of the norm over the sampled directions.
    pub mean_ratio: f64,
    pub sphericity: f64,
    pub direction_count: usize,
}

/// Default direction count for a k-dimensional section: max(10⁴, 200k).
pub fn default_directions(k: usize) -> usize {
    (200 * k).max(10_000)
}

struct Section<'a> {
    spec: &'a FunctionSpec,
    sub: &'a SubspaceSample,
}

impl Section<'_> {
    fn ratio(&self, c: &[f64], buf: &mut [f64]) -> f64 {
        self.sub.combine(c, buf);
        self.spec.eval(buf) / norm2(buf)
    }

    /// Coordinate sweeps along great circles through `c` and each axis,
    /// golden-section on the angle, keeping only improvements. The second
    /// sweep searches a narrower arc.
    fn polish(&self, c: &[f64], start: f64, sign: f64, buf: &mut [f64]) -> f64 {
        const HALF_WIDTHS: [f64; 2] = [0.25, 0.02];
        const STEPS: usize = 16;
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let k = c.len();
        let mut cur = c.to_vec();
        let mut best = sign * start;
        let mut point = vec![0.0; k];
        for (half_width, j) in HALF_WIDTHS.iter().flat_map(|&w| (0..k).map(move |j| (w, j))) {
            let mut e: Vec<f64> = (0..k).map(|i| if i == j { 1.0 } else { 0.0 } - cur[j] * cur[i]).collect();
            let en = norm2(&e);
            if en < 1e-8 {
                continue;
            }
            e.iter_mut().for_each(|x| *x /= en);
            let mut at = |theta: f64, point: &mut [f64]| {
                let (s, co) = theta.sin_cos();
                for i in 0..k {
                    point[i] = co * cur[i] + s * e[i];
                }
                sign * self.ratio(point, buf)
            };
            let (mut a, mut b) = (-half_width, half_width);
            let mut x1 = b - inv_phi * (b - a);
            let mut x2 = a + inv_phi * (b - a);
            let mut f1 = at(x1, &mut point);
            let mut f2 = at(x2, &mut point);
            for _ in 0..STEPS {
                if f1 > f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - inv_phi * (b - a);
                    f1 = at(x1, &mut point);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + inv_phi * (b - a);
                    f2 = at(x2, &mut point);
                }
            }
            let (theta, val) = if f1 > f2 { (x1, f1) } else { (x2, f2) };
            if val > best {
                best = val;
                let (s, co) = theta.sin_cos();
                let next: Vec<f64> = (0..k).map(|i| co * cur[i] + s * e[i]).collect();
                let nn = norm2(&next);
                cur = next.into_iter().map(|x| x / nn).collect();
            }
        }
        sign * best
    }
}

/// Sphericity of the section spanned by `sub` from `m` random directions
/// drawn on `directions`, polished around the running extremes.
///
/// The polish starts from the extremes of every prefix of length
/// 1000·2^j below `m` and of the full set, so doubling `m` from such a
/// length never lowers the reported sphericity. For k = 1 the two unit
/// vectors ±θ are evaluated directly.
pub fn section_sphericity(
    spec: &FunctionSpec,
    sub: &SubspaceSample,
    m: usize,
    directions: RngStream,
) -> Result<SectionStats> {
    if spec.dim() != sub.n {
        return Err(Error::domain(format!("`{}` lives in dimension {}, the section in {}", spec.key(), spec.dim(), sub.n)));
    }
    let sec = Section { spec, sub };
    let mut buf = vec![0.0; sub.n];
    if sub.k == 1 {
        let a = sec.ratio(&[1.0], &mut buf);
        let b = sec.ratio(&[-1.0], &mut buf);
        let (hi, lo) = (a.max(b), a.min(b));
        return Ok(SectionStats {
            max_ratio: hi,
            min_ratio: lo,
            mean_ratio: 0.5 * (a + b),
            sphericity: hi / lo,
            direction_count: 2,
        });
    }
    if m < MIN_DIRECTIONS {
        return Err(Error::domain(format!("need at least {MIN_DIRECTIONS} directions, got {m}")));
    }
    let k = sub.k;
    let mut stream = directions;
    let mut c = vec![0.0; k];
    let (mut best_hi, mut best_lo) = ((f64::NEG_INFINITY, vec![0.0; k]), (f64::INFINITY, vec![0.0; k]));
    let mut starts: Vec<(f64, Vec<f64>, f64, Vec<f64>)> = Vec::new();
    let mut sum = 0.0;
    let mut checkpoint = MIN_DIRECTIONS;
    stream.with_rng(|g| {
        for j in 1..=m {
            loop {
                g.fill_gauss(&mut c);
                let nc = norm2(&c);
                if nc > 0.0 {
                    c.iter_mut().for_each(|x| *x /= nc);
                    break;
                }
            }
            let r = sec.ratio(&c, &mut buf);
            sum += r;
            if r > best_hi.0 {
                best_hi = (r, c.clone());
            }
            if r < best_lo.0 {
                best_lo = (r, c.clone());
            }
            if j == checkpoint || j == m {
                starts.push((best_hi.0, best_hi.1.clone(), best_lo.0, best_lo.1.clone()));
                if j == checkpoint {
                    checkpoint *= 2;
                }
            }
        }
    });
    starts.dedup_by(|a, b| a.0 == b.0 && a.2 == b.2);
    let (mut hi, mut lo) = (best_hi.0, best_lo.0);
    for (vh, ch, vl, cl) in &starts {
        hi = hi.max(sec.polish(ch, *vh, 1.0, &mut buf));
        lo = lo.min(sec.polish(cl, *vl, -1.0, &mut buf));
    }
    Ok(SectionStats {
        max_ratio: hi,
        min_ratio: lo,
        mean_ratio: sum / m as f64,
        sphericity: hi / lo,
        direction_count: m,
    })
}

/// k(X) = (𝔼‖Z‖/b(X))² with a delta-method interval.
pub fn critical_dimension(spec: &FunctionSpec, n: usize, seed: u64) -> Result<Estimate> {
    let b = spec
        .b()
        .ok_or_else(|| Error::invalid(format!("`{}` is not a norm with known b(X)", spec.key())))?;
    let values = map_gaussian_samples(spec.dim(), n, seed, |z| spec.eval(z));
    let mean = mean_estimate(&values);
    let k = (mean.value / b).powi(2);
    let se = 2.0 * mean.value * mean.se / (b * b);
    Ok(Estimate::from_se(k, se))
}

/// (1+t)⁻²(√k + t√(2/π))², the critical dimension of the tilted norm.
pub fn tilted_critical_dimension(k: f64, t: f64) -> f64 {
    let s = k.sqrt() + t * (2.0 / std::f64::consts::PI).sqrt();
    s * s / ((1.0 + t) * (1.0 + t))
}

/// 𝔼‖Z‖₂ for Z standard Gaussian in ℝⁿ.
pub fn gaussian_euclidean_mean(n: usize) -> f64 {
    let n = n as f64;
    std::f64::consts::SQRT_2 * (libm::lgamma((n + 1.0) / 2.0) - libm::lgamma(n / 2.0)).exp()
}

/// Outcome of the subspace trials at one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KRecord {
    pub k: usize,
    pub successes: usize,
    pub trials: usize,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    /// Success probability ≥ 2/3 not rejected (Wilson upper end ≥ 2/3).
    pub success: bool,
}

/// Estimated k(X, ε) with every dimension visited.
#[derive(Debug, Clone, Serialize)]
pub struct DvoretzkyEstimate {
    pub key: String,
    pub epsilon: f64,
    pub k_estimate: usize,
    pub bracket: (usize, usize),
    /// Per-dimension records in increasing k.
    pub records: Vec<KRecord>,
    /// Dimensions in the order the search visited them.
    pub trace: Vec<usize>,
}

impl DvoretzkyEstimate {
    /// Success rates never increase with k beyond what the intervals allow.
    pub fn is_monotone_within_ci(&self) -> bool {
        self.records.windows(2).all(|w| w[1].wilson_lo <= w[0].wilson_hi)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(to_json(self)?)
    }
}

/// Header of the per-(ε, k) success table.
pub const SUCCESS_CSV_HEADER: &str = "epsilon,k,successes,trials,wilson_lo,wilson_hi";

/// Success table for a set of estimates, one row per (ε, k).
pub fn success_csv(estimates: &[DvoretzkyEstimate]) -> String {
    let mut s = format!("{SUCCESS_CSV_HEADER}\n");
    for e in estimates {
        for r in &e.records {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                real(e.epsilon),
                r.k,
                r.successes,
                r.trials,
                real(r.wilson_lo),
                real(r.wilson_hi)
            ));
        }
    }
    s
}

pub fn write_success_csv(estimates: &[DvoretzkyEstimate], path: &Path) -> Result<()> {
    std::fs::write(path, success_csv(estimates)).map_err(|e| Error::io(path, e))
}

/// Search settings for k(X, ε).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    pub trials: usize,
    /// Direction count per section; `None` uses max(10⁴, 200k).
    pub directions: Option<usize>,
    pub bracket_samples: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            trials: DEFAULT_TRIALS,
            directions: None,
            bracket_samples: BRACKET_SAMPLES,
        }
    }
}

/// Sphericities of the trial sections at each visited k, shared across ε.
struct TrialCache<'a> {
    spec: &'a FunctionSpec,
    opts: SearchOptions,
    seed: u64,
    by_k: BTreeMap<usize, Vec<f64>>,
}

impl TrialCache<'_> {
    fn sphericities(&mut self, k: usize) -> Result<&[f64]> {
        if !self.by_k.contains_key(&k) {
            let sub_seed = derive_seed(self.seed, "subspace");
            let dir_seed = derive_seed(self.seed, "directions");
            let m = self.opts.directions.unwrap_or_else(|| default_directions(k));
            let (spec, n) = (self.spec, self.spec.dim());
            let vals = (0..self.opts.trials)
                .into_par_iter()
                .map(|i| {
                    let id = ((k as u64) << 32) | i as u64;
                    let sub = sample_subspace(n, k, RngStream::new(sub_seed, id))?;
                    Ok(section_sphericity(spec, &sub, m, RngStream::new(dir_seed, id))?.sphericity)
                })
                .collect::<Result<Vec<f64>>>()?;
            self.by_k.insert(k, vals);
        }
        Ok(&self.by_k[&k])
    }

    fn record(&mut self, k: usize, epsilon: f64) -> Result<KRecord> {
        let trials = self.opts.trials;
        let successes = self.sphericities(k)?.iter().filter(|&&s| s < 1.0 + epsilon).count();
        let (lo, hi) = wilson(successes, trials, Z95);
        Ok(KRecord {
            k,
            successes,
            trials,
            wilson_lo: lo,
            wilson_hi: hi,
            success: hi >= SUCCESS_PROBABILITY,
        })
    }
}

fn check_search(spec: &FunctionSpec, opts: &SearchOptions) -> Result<f64> {
    if opts.trials < 40 {
        return Err(Error::domain(format!("need at least 40 trials, got {}", opts.trials)));
    }
    if let Some(m) = opts.directions {
        if m < MIN_DIRECTIONS {
            return Err(Error::domain(format!("need at least {MIN_DIRECTIONS} directions, got {m}")));
        }
    }
    spec.b()
        .ok_or_else(|| Error::invalid(format!("`{}` is not a norm with known b(X)", spec.key())))
}

/// k(X, ε) for every ε in `epsilons`, bisecting between k = 1 and
/// min(n, ⌈8k(X)⌉). Trial sections at a given k are the same for every ε.
pub fn estimate_k_eps_grid(
    spec: &FunctionSpec,
    epsilons: &[f64],
    opts: SearchOptions,
    seed: u64,
) -> Result<Vec<DvoretzkyEstimate>> {
    check_search(spec, &opts)?;
    if let Some(e) = epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1), got {e}")));
    }
    let n = spec.dim();
    let kx = critical_dimension(spec, opts.bracket_samples, derive_seed(seed, "bracket"))?;
    let top = ((8.0 * kx.value).ceil() as usize).clamp(1, n);
    let mut cache = TrialCache {
        spec,
        opts,
        seed,
        by_k: BTreeMap::new(),
    };
    let mut out = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut records: BTreeMap<usize, KRecord> = BTreeMap::new();
        let mut trace = Vec::new();
        let mut visit = |k: usize, cache: &mut TrialCache| -> Result<bool> {
            let r = cache.record(k, eps)?;
            trace.push(k);
            records.insert(k, r);
            Ok(r.success)
        };
        let k_estimate = if !visit(1, &mut cache)? {
            0
        } else if top == 1 || visit(top, &mut cache)? {
            top
        } else {
            let (mut good, mut bad) = (1, top);
            while bad - good > 1 {
                let mid = good + (bad - good) / 2;
                if visit(mid, &mut cache)? {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            good
        };
        out.push(DvoretzkyEstimate {
            key: spec.key().to_string(),
            epsilon: eps,
            k_estimate,
            bracket: (1, top),
            records: records.into_values().collect(),
            trace,
        });
    }
    Ok(out)
}

pub fn estimate_k_eps(spec: &FunctionSpec, epsilon: f64, opts: SearchOptions, seed: u64) -> Result<DvoretzkyEstimate> {
    Ok(estimate_k_eps_grid(spec, &[epsilon], opts, seed)?.remove(0))
}

/// Largest tolerated max/min of k(X, ε)/(ε²·k(X)) over the ε grid.
pub const INSTABILITY_BAND: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstabilityRow {
    pub epsilon: f64,
    pub k_eps: usize,
    /// k(X, ε)/(ε²·k(X))
    pub ratio: f64,
}

/// k(X, ε) ≃ ε²k(X) across an ε grid, for a tilted norm or its base.
#[derive(Debug, Clone, Serialize)]
pub struct InstabilityReport {
    pub key: String,
    pub tilt: Option<f64>,
    /// Critical dimension of the base norm.
    pub k_base: Estimate,
    /// Critical dimension of the tested norm.
    pub k_critical: Estimate,
    /// Closed form for the tilted critical dimension at k_base (tilted runs).
    pub k_closed_form: Option<f64>,
    /// t ≤ √k(base), using the upper end of its interval.
    pub hypothesis_met: bool,
    pub rows: Vec<InstabilityRow>,
    /// max/min of the ratio over the grid (∞ if some k(X, ε) is 0).
    pub band: f64,
    pub band_ok: bool,
    pub passed: bool,
    pub estimates: Vec<DvoretzkyEstimate>,
}

impl InstabilityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(to_json(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    /// Summary as a verdict: one record per ε comparing the ratio with
    /// band × the smallest ratio.
    pub fn verdict(&self) -> InequalityVerdict {
        let mut b = VerdictBuilder::new("tilted_instability", &self.key);
        if !self.hypothesis_met {
            b.hypothesis_not_met();
        }
        b.diag("band", self.band);
        b.diag("k_critical", self.k_critical.value);
        if let Some(t) = self.tilt {
            b.diag("t", t);
        }
        let floor = self.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        for r in &self.rows {
            b.record(GridRecord::new(
                "ratio",
                r.epsilon,
                Interval::exact(r.ratio),
                Interval::exact(INSTABILITY_BAND * floor),
                true,
            ));
        }
        b.finish()
    }
}

/// Critical dimensions use this many draws in the instability experiment.
pub const CRITICAL_SAMPLES: usize = 200_000;

fn instability(
    spec: &FunctionSpec,
    base_k: Estimate,
    tilt: Option<f64>,
    epsilons: &[f64],
    opts: SearchOptions,
    seed: u64,
) -> Result<InstabilityReport> {
    let k_critical = match tilt {
        Some(_) => critical_dimension(spec, CRITICAL_SAMPLES, derive_seed(seed, "critical"))?,
        None => base_k,
    };
    let estimates = estimate_k_eps_grid(spec, epsilons, opts, seed)?;
    let rows: Vec<InstabilityRow> = estimates
        .iter()
        .map(|e| InstabilityRow {
            epsilon: e.epsilon,
            k_eps: e.k_estimate,
            ratio: e.k_estimate as f64 / (e.epsilon * e.epsilon * k_critical.value),
        })
        .collect();
    let hi = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let band = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let band_ok = band <= INSTABILITY_BAND;
    let hypothesis_met = tilt.is_none_or(|t| t <= base_k.hi.max(0.0).sqrt());
    Ok(InstabilityReport {
        key: spec.key().to_string(),
        tilt,
        k_base: base_k,
        k_critical,
        k_closed_form: tilt.map(|t| tilted_critical_dimension(base_k.value, t)),
        hypothesis_met,
        rows,
        band,
        band_ok,
        passed: band_ok && hypothesis_met,
        estimates,
    })
}

/// Smallest tilt accepted by the tilted experiments.
pub const MIN_TILT: f64 = 4.0;

/// Estimates k(X_t, ε) over `epsilons` for the tilted norm X_t and the
/// ratio k(X_t, ε)/(ε²k(X_t)). A tilt below 4 is rejected; a tilt beyond
/// √k(X) is run but reported as not meeting the hypothesis.
pub fn tilted_instability_experiment(
    base: &FunctionSpec,
    t: f64,
    epsilons: &[f64],
    opts: SearchOptions,
    seed: u64,
) -> Result<InstabilityReport> {
    if !(t >= MIN_TILT) || !t.is_finite() {
        return Err(Error::domain(format!("tilt must be at least {MIN_TILT}, got {t}")));
    }
    let tilted = make_tilted(base.clone(), t)?;
    let base_k = critical_dimension(base, CRITICAL_SAMPLES, derive_seed(seed, "base-critical"))?;
    instability(&tilted, base_k, Some(t), epsilons, opts, seed)
}

/// The same ratio for an untilted norm, as a contrast.
pub fn untilted_instability_experiment(
    spec: &FunctionSpec,
    epsilons: &[f64],
    opts: SearchOptions,
    seed: u64,
) -> Result<InstabilityReport> {
    let base_k = critical_dimension(spec, CRITICAL_SAMPLES, derive_seed(seed, "base-critical"))?;
    instability(spec, base_k, None, epsilons, opts, seed)
}

/// Two-sided deviation of the tilted norm from its Euclidean proxy:
/// P(f_t(Z) ≤ (1−δ)ρ‖Z‖₂ or f_t(Z) ≥ (1+δ)ρ‖Z‖₂), ρ = 𝔼f_t/𝔼‖Z‖₂, is
/// sandwiched between c·e^{−C δ² k_t} and C·e^{−c δ² k_t} with c, C ∈
/// [2⁻⁸, 2⁸]. 𝔼f_t and k_t are plug-in estimates from the same draws.
pub fn tilted_tail_sandwich(
    base: &FunctionSpec,
    t: f64,
    deltas: &[f64],
    n: usize,
    seed: u64,
) -> Result<InequalityVerdict> {
    if !(t >= MIN_TILT) || !t.is_finite() {
        return Err(Error::domain(format!("tilt must be at least {MIN_TILT}, got {t}")));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0 / 3.0)) {
        return Err(Error::domain(format!("delta must lie in (0, 1/3), got {d}")));
    }
    let ft = make_tilted(base.clone(), t)?;
    let bt = ft.b().expect("tilted norms carry b");
    let pairs = map_gaussian_samples(ft.dim(), n, seed, |z| (ft.eval(z), norm2(z)));
    let mean_ft = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let rho = mean_ft / gaussian_euclidean_mean(ft.dim());
    let k_t = (mean_ft / bt).powi(2);
    let mut pts = Vec::new();
    let mut tails = Vec::new();
    for &d in deltas {
        let count = pairs
            .iter()
            .filter(|(f, e)| *f <= (1.0 - d) * rho * e || *f >= (1.0 + d) * rho * e)
            .count();
        let tp = TailPoint::new(count, n);
        let h = d * d * k_t;
        if tp.resolved {
            pts.push((h, tp.lo, tp.hi));
        }
        tails.push((d, h, tp));
    }
    let bx = ConstantBox::pow2(-8, 8);
    let fit = fit_sandwich(&pts, bx);
    let mut b = VerdictBuilder::new("tilted_tail_sandwich", ft.key());
    b.constant("c", fit.small, bx, fit.feasible);
    b.constant("C", fit.large, bx, fit.feasible);
    b.diag("k_t", k_t);
    b.diag("rho", rho);
    for (d, h, tp) in tails {
        let p: Interval = (&tp).into();
        let lower = Interval::exact(fit.small * (-fit.large * h).exp());
        let upper = Interval::exact(fit.large * (-fit.small * h).exp());
        b.record(GridRecord::new("lower", d, lower, p, tp.resolved).with_h(h));
        b.record(GridRecord::new("upper", d, p, upper, tp.resolved).with_h(h));
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_lp_norm, parse_key};
    use crate::mc::ks_two_sample;

    #[test]
    fn frames_are_orthonormal() {
        for &(n, k) in &[(8usize, 8usize), (50, 3), (128, 1)] {
            let s = sample_subspace(n, k, RngStream::new(1, 7)).unwrap();
            assert!(s.orthonormality_error() < 1e-10);
        }
        assert!(sample_subspace(4, 5, RngStream::new(1, 0)).is_err());
        assert!(sample_subspace(4, 0, RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn uniform_direction_has_centred_coordinates() {
        let n = 5;
        let mean: f64 = (0..100_000u64)
            .map(|i| sample_subspace(n, 1, RngStream::new(2, i)).unwrap().row(0)[0])
            .sum::<f64>()
            / 1e5;
        // sd of one coordinate is 1/√n; 0.01 is ~7 standard errors.
        assert!(mean.abs() < 0.01, "{mean}");
    }

    #[test]
    fn first_row_sup_norm_matches_normalized_gaussian() {
        let n = 10;
        let mut a: Vec<f64> = (0..4000u64)
            .map(|i| {
                let s = sample_subspace(n, 3, RngStream::new(3, i)).unwrap();
                s.row(0).iter().fold(0.0f64, |m, x| m.max(x.abs()))
            })
            .collect();
        let mut b: Vec<f64> = (0..4000u64)
            .map(|i| {
                let mut st = RngStream::new(4, i);
                let z = crate::rng::sample_gaussian_vector(&mut st, n);
                let nz = norm2(&z);
                z.iter().fold(0.0f64, |m, x| m.max(x.abs())) / nz
            })
            .collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        // two-sample KS critical value at 1%: 1.63·√(2/4000) ≈ 0.036
        assert!(ks_two_sample(&a, &b) < 0.036);
    }

    #[test]
    fn euclidean_sections_are_round() {
        let f = make_lp_norm(20, 2.0).unwrap();
        let sub = sample_subspace(20, 6, RngStream::new(5, 0)).unwrap();
        let s = section_sphericity(&f, &sub, 2000, RngStream::new(6, 0)).unwrap();
        assert_eq!(s.sphericity, 1.0);
    }

    #[test]
    fn line_sections_use_two_evaluations() {
        let f = parse_key("linf:n=16").unwrap();
        let sub = sample_subspace(16, 1, RngStream::new(7, 0)).unwrap();
        let s = section_sphericity(&f, &sub, 5000, RngStream::new(8, 0)).unwrap();
        assert_eq!(s.direction_count, 2);
        assert_eq!(s.sphericity, 1.0);
        assert!(s.min_ratio <= s.mean_ratio && s.mean_ratio <= s.max_ratio);
    }

    #[test]
    fn doubling_directions_never_lowers_sphericity() {
        let f = parse_key("linf:n=64").unwrap();
        for trial in 0..5u64 {
            let sub = sample_subspace(64, 3, RngStream::new(9, trial)).unwrap();
            let mut prev = 1.0;
            for m in [1000, 2000, 4000, 8000] {
                let s = section_sphericity(&f, &sub, m, RngStream::new(10, trial)).unwrap();
                assert!(s.sphericity >= prev, "{m}: {} < {prev}", s.sphericity);
                assert!(s.min_ratio <= s.mean_ratio && s.mean_ratio <= s.max_ratio);
                prev = s.sphericity;
            }
        }
        let sub = sample_subspace(64, 3, RngStream::new(9, 0)).unwrap();
        assert!(section_sphericity(&f, &sub, 999, RngStream::new(10, 0)).is_err());
    }

    #[test]
    fn polish_reaches_the_exact_extremes_in_the_plane() {
        // In a coordinate plane of ℓ∞ the ratio ranges over [1/√2, 1].
        let f = parse_key("linf:n=4").unwrap();
        let sub = SubspaceSample {
            n: 4,
            k: 2,
            basis: vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            stream: RngStream::new(0, 0),
        };
        let s = section_sphericity(&f, &sub, 1000, RngStream::new(11, 0)).unwrap();
        assert!((s.sphericity - 2f64.sqrt()).abs() < 1e-4, "{s:?}");
    }

    #[test]
    fn sphericity_shrinks_with_ambient_dimension() {
        // Mean sphericity of 2-planes in ℓ∞ⁿ: lower at n = 256 than n = 16.
        let mean = |n: usize| {
            let f = make_lp_norm(n, f64::INFINITY).unwrap();
            (0..30u64)
                .map(|i| {
                    let sub = sample_subspace(n, 2, RngStream::new(12, i)).unwrap();
                    section_sphericity(&f, &sub, 1000, RngStream::new(13, i)).unwrap().sphericity
                })
                .sum::<f64>()
                / 30.0
        };
        assert!(mean(256) < mean(16));
    }

    #[test]
    fn euclidean_critical_dimension() {
        let f = make_lp_norm(100, 2.0).unwrap();
        let k = critical_dimension(&f, 200_000, 14).unwrap();
        let exact = gaussian_euclidean_mean(100).powi(2);
        assert!((exact - 99.5).abs() < 0.01);
        assert!((k.value - exact).abs() < 4.0 * k.se + 1e-9, "{k:?} vs {exact}");
    }

    #[test]
    fn sup_norm_critical_dimension_band() {
        let f = parse_key("linf:n=1024").unwrap();
        let k = critical_dimension(&f, 50_000, 15).unwrap();
        let l = 2.0 * 1024f64.ln();
        assert!(k.value > l / 3.0 && k.value < 3.0 * l, "{k:?}");
    }

    #[test]
    fn tilted_closed_form() {
        assert!((tilted_critical_dimension(100.0, 4.0) - 6.9607).abs() < 1e-3);
        for base in ["linf:n=256", "lp:n=100:p=2"] {
            let f = parse_key(base).unwrap();
            for t in [4.0, 6.0] {
                let kx = critical_dimension(&f, 100_000, 16).unwrap();
                let kt = critical_dimension(&make_tilted(f.clone(), t).unwrap(), 100_000, 17).unwrap();
                let lo = tilted_critical_dimension(kx.lo, t);
                let hi = tilted_critical_dimension(kx.hi, t);
                assert!(kt.lo <= hi && lo <= kt.hi, "{base} t={t}: {kt:?} vs [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn euclidean_space_is_fully_spherical() {
        let f = make_lp_norm(12, 2.0).unwrap();
        let opts = SearchOptions {
            directions: Some(1000),
            ..SearchOptions::default()
        };
        for e in estimate_k_eps_grid(&f, &[0.05, 0.3], opts, 18).unwrap() {
            assert_eq!(e.k_estimate, 12);
        }
    }

    #[test]
    fn k_eps_is_monotone_in_epsilon() {
        let f = parse_key("linf:n=64").unwrap();
        let opts = SearchOptions {
            directions: Some(1000),
            ..SearchOptions::default()
        };
        let est = estimate_k_eps_grid(&f, &[0.1, 0.3, 0.6], opts, 19).unwrap();
        for w in est.windows(2) {
            assert!(w[0].k_estimate <= w[1].k_estimate);
        }
        for e in &est {
            assert!(e.k_estimate >= 1 && e.k_estimate <= 64);
            assert!(e.is_monotone_within_ci());
            assert_eq!(e.trace[0], 1);
        }
        let csv = success_csv(&est);
        assert!(csv.starts_with(SUCCESS_CSV_HEADER));
        assert_eq!(csv.lines().count(), 1 + est.iter().map(|e| e.records.len()).sum::<usize>());
    }

    #[test]
    fn search_rejects_bad_settings() {
        let f = parse_key("linf:n=16").unwrap();
        let few = SearchOptions {
            trials: 10,
            ..SearchOptions::default()
        };
        assert!(estimate_k_eps(&f, 0.2, few, 1).is_err());
        assert!(estimate_k_eps(&f, 1.5, SearchOptions::default(), 1).is_err());
        assert!(estimate_k_eps(&parse_key("relu").unwrap(), 0.2, SearchOptions::default(), 1).is_err());
        assert!(tilted_instability_experiment(&f, 2.0, &[0.2], SearchOptions::default(), 1).is_err());
    }

    #[test]
    fn tail_sandwich_on_tilted_sup_norm() {
        let f = parse_key("linf:n=256").unwrap();
        let deltas = [0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3];
        let v = tilted_tail_sandwich(&f, 4.0, &deltas, 100_000, 20).unwrap();
        assert!(v.passed, "{v:?}");
        let counts: Vec<f64> = v.grid.iter().filter(|r| r.side == "upper").map(|r| r.lhs.value).collect();
        assert!(counts.windows(2).all(|w| w[1] <= w[0]));
        assert!(counts[0] > 0.9);
        assert!(tilted_tail_sandwich(&f, 4.0, &[0.4], 1000, 1).is_err());
    }
}
