//! Batch experiments: a TOML config names catalog keys and checks, the
//! runner executes every (key, check) pair and writes a JSON report, a
//! roll-up CSV and plot data.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::catalog::{parse_key, FunctionSpec, RateFunction};
use crate::dvoretzky::{
    success_csv, tilted_instability_experiment, tilted_tail_sandwich, untilted_instability_experiment, SearchOptions,
};
use crate::error::{Error, Result};
use crate::fmt::{real, to_json};
use crate::inequalities::{
    check_bobkov_houdre, check_chi2_concavity, check_equivalence_triangle, check_kwapien, check_lemma_key,
    check_lower_deviation_var, check_mean_median_chain, check_moment_bounds, check_positive_moments,
    check_prop_reversal_tail, check_reversal, check_skewness, check_small_deviation, check_talagrand,
    check_theorem_main, check_two_sided_rates, check_upper_gaussian, rearrangement_right_slope, rollup_csv,
    GridRecord, InequalityVerdict, Interval, VerdictBuilder, VerdictStatus,
};
use crate::mc::{
    constants_from, estimate_stats, linear_grid, sample_values_and_grad_sq, tail_curve, CenterKind, ConcConstants,
    ConcentrationProfile, EmpiricalDistribution, ScaleKind,
};
use crate::rearrangement::{check_rearrangement_properties, gaussian_rearrangement, probability_grid, RearrangementCurve, GRID_POINTS};
use crate::rng::derive_seed;

/// Every check a config may request.
pub const CHECK_NAMES: &[&str] = &[
    "upper_gaussian",
    "lower_deviation_var",
    "reversal",
    "theorem_main",
    "prop_reversal_tail",
    "two_sided_rates",
    "skewness",
    "kwapien",
    "small_deviation",
    "moment_bounds",
    "mean_median_chain",
    "equivalence_triangle",
    "talagrand",
    "bobkov_houdre",
    "lemma_key",
    "chi2_concavity",
    "rearrangement",
    "tilted_instability",
    "untilted_instability",
    "tilted_tail_sandwich",
];

/// Accepted range for the per-key sample count.
pub const SAMPLE_RANGE: (usize, usize) = (1_000, 100_000_000);

fn default_t() -> Vec<f64> {
    linear_grid(0.0, 0.25, 25)
}
fn default_p() -> Vec<f64> {
    vec![2.0, 4.0, 8.0, 16.0]
}
fn default_epsilon() -> Vec<f64> {
    vec![0.1, 0.2, 0.3]
}
fn default_delta() -> Vec<f64> {
    vec![0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(default = "default_t")]
    pub t: Vec<f64>,
    #[serde(default = "default_p")]
    pub p: Vec<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: Vec<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            t: default_t(),
            p: default_p(),
            epsilon: default_epsilon(),
            delta: default_delta(),
        }
    }
}

fn default_alpha() -> f64 {
    0.5
}
fn default_tilt() -> f64 {
    4.0
}
fn default_chi2_k() -> usize {
    2
}
fn default_trials() -> usize {
    crate::dvoretzky::DEFAULT_TRIALS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Premise level for theorem_main and equivalence_triangle.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Tilt for the tilted experiments on an untilted norm.
    #[serde(default = "default_tilt")]
    pub tilt: f64,
    /// Degrees of freedom of the χ² coordinates.
    #[serde(default = "default_chi2_k")]
    pub chi2_k: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<usize>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            alpha: default_alpha(),
            tilt: default_tilt(),
            chi2_k: default_chi2_k(),
            trials: default_trials(),
            directions: None,
        }
    }
}

/// A batch experiment.
///
/// ```toml
/// keys = ["linear:n=2"]
/// samples = 100000
/// seed = 7
/// checks = ["upper_gaussian"]
///
/// [grids]
/// t = [0.0, 0.5, 1.0]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub keys: Vec<String>,
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub params: Params,
}

impl ExperimentConfig {
    pub fn new(keys: &[&str], samples: usize, seed: u64, checks: &[&str]) -> Self {
        ExperimentConfig {
            keys: keys.iter().map(|s| s.to_string()).collect(),
            samples,
            seed,
            checks: checks.iter().map(|s| s.to_string()).collect(),
            out: None,
            grids: Grids::default(),
            params: Params::default(),
        }
    }

    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.keys.is_empty() {
            return Err(Error::Config("no function keys".into()));
        }
        for k in &self.keys {
            parse_key(k)?;
        }
        for c in &self.checks {
            if !CHECK_NAMES.contains(&c.as_str()) {
                return Err(Error::UnknownCheck(c.clone()));
            }
        }
        let (lo, hi) = SAMPLE_RANGE;
        if self.samples < lo || self.samples > hi {
            return Err(Error::Config(format!("samples must lie in [{lo}, {hi}], got {}", self.samples)));
        }
        let grids = [
            ("t", &self.grids.t),
            ("p", &self.grids.p),
            ("epsilon", &self.grids.epsilon),
            ("delta", &self.grids.delta),
        ];
        for (name, g) in grids {
            if g.is_empty() || g.iter().any(|x| !x.is_finite()) || g.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config(format!("grid `{name}` must be finite and strictly ascending")));
            }
        }
        if !(self.params.alpha > 0.0 && self.params.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1], got {}", self.params.alpha)));
        }
        Ok(())
    }
}

/// Outcome of one (key, check) pair.
#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub check: String,
    pub key: String,
    /// pass, fail, hypothesis_not_met or error
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<InequalityVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckEntry {
    /// Fail and error both count as failures.
    pub fn failed(&self) -> bool {
        self.status == "fail" || self.status == "error"
    }
}

/// Everything needed to reproduce a run, without wall-clock data.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub version: String,
    pub seed: u64,
    pub entries: Vec<CheckEntry>,
    pub passed: bool,
}

/// Wall-clock seconds per entry, kept apart from the report body.
#[derive(Debug, Clone, Serialize)]
pub struct RunTiming {
    pub total_seconds: f64,
    pub entries: Vec<(String, String, f64)>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(to_json(self)?)
    }

    pub fn verdicts(&self) -> Vec<InequalityVerdict> {
        self.entries.iter().filter_map(|e| e.verdict.clone()).collect()
    }

    /// 0 when nothing failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Samples and derived statistics shared by every check on one key.
struct KeyContext {
    spec: FunctionSpec,
    emp: EmpiricalDistribution,
    constants: ConcConstants,
    seed: u64,
}

impl KeyContext {
    fn new(key: &str, samples: usize, seed: u64) -> Result<Self> {
        let spec = parse_key(key)?;
        let (emp, g) = sample_values_and_grad_sq(&spec, samples, seed)?;
        let constants = constants_from(&spec, &emp, &g);
        Ok(KeyContext {
            spec,
            emp,
            constants,
            seed,
        })
    }

    fn sd(&self) -> f64 {
        self.constants.variance.value.max(0.0).sqrt()
    }

    fn lipschitz(&self) -> Result<f64> {
        self.spec
            .lipschitz()
            .ok_or_else(|| Error::domain(format!("`{}` has no Lipschitz constant", self.spec.key())))
    }

    fn profile(&self, center: CenterKind, scale: ScaleKind, grid: &[f64]) -> Result<ConcentrationProfile> {
        let c = match center {
            CenterKind::Mean => self.emp.mean(),
            _ => self.emp.median(),
        };
        let s = match scale {
            ScaleKind::Lipschitz => self.lipschitz()?,
            ScaleKind::StdDev => self.sd(),
            _ => 1.0,
        };
        tail_curve(&self.emp, c, center, s, scale, grid)
    }

    fn check_seed(&self, check: &str) -> u64 {
        derive_seed(self.seed, check)
    }
}

fn positive_grid(g: &[f64]) -> Vec<f64> {
    g.iter().copied().filter(|t| *t > 0.0).collect()
}

/// Untilted base and tilt for the tilted experiments.
fn tilt_pair(spec: &FunctionSpec, default_t: f64) -> (FunctionSpec, f64) {
    match (spec.tilt_base(), spec.tilt_params()) {
        (Some(b), Some(p)) => (b.clone(), p.t),
        _ => (spec.clone(), default_t),
    }
}

/// Verdict form of the rearrangement property report.
pub fn rearrangement_verdict(
    curve: &RearrangementCurve,
    emp: &EmpiricalDistribution,
    spec: &FunctionSpec,
    constants: &ConcConstants,
    seed: u64,
) -> InequalityVerdict {
    let r = check_rearrangement_properties(curve, emp, spec, Some(constants.grad_sq_mean), seed);
    let mut b = VerdictBuilder::new("rearrangement", emp.key());
    b.diag("ks_distance", r.ks_distance);
    b.diag("convexity_z", r.convexity_z);
    b.diag("lip_estimate", r.lip_estimate);
    b.diag("dirichlet", r.dirichlet);
    let flag = |ok: bool| Interval::exact(if ok { 0.0 } else { 1.0 });
    b.record(GridRecord::new("monotone", 0.0, flag(r.monotone_ok), Interval::exact(0.0), true));
    b.record(GridRecord::new("ks", 0.0, Interval::exact(r.ks_distance), Interval::exact(0.01), true));
    if let Some(l) = r.lipschitz {
        b.record(GridRecord::new("lipschitz", 0.0, Interval::exact(r.lip_lower), Interval::exact(1.02 * l), true));
    }
    b.record(GridRecord::new(
        "convexity",
        0.0,
        Interval::exact(-3.0),
        Interval::exact(r.convexity_z),
        spec.is_convex(),
    ));
    if let Some(g) = r.grad_sq {
        b.record(GridRecord::new("dirichlet", 0.0, Interval::exact(r.dirichlet), Interval::exact(1.05 * g.hi), true));
    }
    b.finish()
}

struct Extra {
    files: Vec<(String, String)>,
}

fn run_check(check: &str, ctx: &KeyContext, cfg: &ExperimentConfig, extra: &mut Extra) -> Result<InequalityVerdict> {
    let g = &cfg.grids;
    let seed = ctx.check_seed(check);
    let spec = &ctx.spec;
    match check {
        "upper_gaussian" => {
            let l = ctx.lipschitz()?;
            check_upper_gaussian(&ctx.profile(CenterKind::Median, ScaleKind::Lipschitz, &g.t)?, l)
        }
        "lower_deviation_var" => check_lower_deviation_var(&ctx.profile(CenterKind::Median, ScaleKind::StdDev, &g.t)?),
        "reversal" => check_reversal(&ctx.profile(CenterKind::Median, ScaleKind::Lipschitz, &g.t)?, &ctx.constants),
        "theorem_main" => check_theorem_main(
            &ctx.profile(CenterKind::Median, ScaleKind::Lipschitz, &g.t)?,
            &ctx.constants,
            cfg.params.alpha,
        ),
        "prop_reversal_tail" => check_prop_reversal_tail(
            &ctx.profile(CenterKind::Median, ScaleKind::StdDev, &g.t)?,
            &ctx.constants,
            spec.galpha(),
        ),
        "two_sided_rates" => {
            let rate = RateFunction::for_spec(spec)?;
            check_two_sided_rates(&ctx.profile(CenterKind::Mean, ScaleKind::Unit, &g.t)?, &rate)
        }
        "skewness" => {
            let sd = ctx.sd();
            let grid: Vec<f64> = positive_grid(&g.t).iter().map(|t| t * sd).collect();
            check_skewness(&ctx.emp, &grid)
        }
        "kwapien" => Ok(check_kwapien(&estimate_stats(&ctx.emp, &[]), spec.key())),
        "small_deviation" => check_small_deviation(&ctx.emp, &positive_grid(&g.t), spec.is_affine()),
        "moment_bounds" => check_moment_bounds(&estimate_stats(&ctx.emp, &g.p), &ctx.constants),
        "mean_median_chain" => check_mean_median_chain(&ctx.emp, &g.p),
        "equivalence_triangle" => check_equivalence_triangle(spec, cfg.samples, seed, cfg.params.alpha),
        "talagrand" => check_talagrand(spec, cfg.samples, seed),
        "bobkov_houdre" => check_bobkov_houdre(spec, cfg.samples, seed),
        "lemma_key" => {
            if spec.dim() == 1 && spec.is_convex() && spec.is_nondecreasing_1d() {
                check_lemma_key(spec, cfg.samples, seed)
            } else {
                check_positive_moments(&ctx.emp, rearrangement_right_slope(&ctx.emp), &[1.0, 2.0, 4.0, 8.0])
            }
        }
        "chi2_concavity" => check_chi2_concavity(spec, cfg.params.chi2_k, cfg.samples, seed),
        "rearrangement" => {
            let curve = gaussian_rearrangement(&ctx.emp, &probability_grid(GRID_POINTS))?;
            Ok(rearrangement_verdict(&curve, &ctx.emp, spec, &ctx.constants, seed))
        }
        "tilted_instability" | "untilted_instability" => {
            let opts = SearchOptions {
                trials: cfg.params.trials,
                directions: cfg.params.directions,
                ..SearchOptions::default()
            };
            let r = if check == "tilted_instability" {
                let (base, t) = tilt_pair(spec, cfg.params.tilt);
                tilted_instability_experiment(&base, t, &g.epsilon, opts, seed)?
            } else {
                untilted_instability_experiment(spec, &g.epsilon, opts, seed)?
            };
            extra.files.push((format!("{check}__{}.csv", file_stem(spec.key())), success_csv(&r.estimates)));
            Ok(r.verdict())
        }
        "tilted_tail_sandwich" => {
            let (base, t) = tilt_pair(spec, cfg.params.tilt);
            tilted_tail_sandwich(&base, t, &g.delta, cfg.samples, seed)
        }
        other => Err(Error::UnknownCheck(other.to_string())),
    }
}

fn status_name(s: VerdictStatus) -> &'static str {
    match s {
        VerdictStatus::Pass => "pass",
        VerdictStatus::Fail => "fail",
        VerdictStatus::HypothesisNotMet => "hypothesis_not_met",
    }
}

/// Runs every requested check on every key. A check that cannot be
/// applied to a key is recorded as an error entry and counts as a failure.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(RunReport, RunTiming, Vec<(String, String)>)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut entries = Vec::new();
    let mut timing = Vec::new();
    let mut extra = Extra { files: Vec::new() };
    for key in &cfg.keys {
        let ctx = KeyContext::new(key, cfg.samples, derive_seed(cfg.seed, key))?;
        for check in &cfg.checks {
            let t0 = Instant::now();
            let entry = match run_check(check, &ctx, cfg, &mut extra) {
                Ok(v) => CheckEntry {
                    check: check.clone(),
                    key: key.clone(),
                    status: status_name(v.status).to_string(),
                    verdict: Some(v),
                    error: None,
                },
                Err(e) => CheckEntry {
                    check: check.clone(),
                    key: key.clone(),
                    status: "error".to_string(),
                    verdict: None,
                    error: Some(e.to_string()),
                },
            };
            timing.push((check.clone(), key.clone(), t0.elapsed().as_secs_f64()));
            entries.push(entry);
        }
    }
    let passed = entries.iter().all(|e| !e.failed());
    let report = RunReport {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        entries,
        passed,
    };
    let timing = RunTiming {
        total_seconds: start.elapsed().as_secs_f64(),
        entries: timing,
    };
    Ok((report, timing, extra.files))
}

fn file_stem(key: &str) -> String {
    key.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect()
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs the experiment and writes `report.json`, `rollup.csv`,
/// `config.toml`, `timing.json`, side tables and `plots/` under `out`.
/// The report is written even when checks fail.
pub fn run_and_write(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport> {
    let (report, timing, files) = run_experiment(cfg)?;
    let plots = out.join("plots");
    std::fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;
    write(&out.join("report.json"), &report.to_json()?)?;
    write(&out.join("rollup.csv"), &rollup_csv(&report.verdicts()))?;
    write(&out.join("config.toml"), &cfg.to_toml()?)?;
    write(&out.join("timing.json"), &to_json(&timing)?)?;
    for (name, text) in files {
        write(&out.join(name), &text)?;
    }
    for e in &report.entries {
        if let Some(v) = &e.verdict {
            let kind = if v.grid.iter().any(|r| r.h.is_some()) && v.name == "two_sided_rates" {
                PlotData::Rates(v)
            } else {
                PlotData::Verdict(v)
            };
            emit_plot_data(&kind, &plots.join(format!("{}__{}.csv", e.check, file_stem(&e.key))))?;
        }
    }
    Ok(report)
}

/// Inputs for [`emit_plot_data`].
pub enum PlotData<'a> {
    /// Two-sided tail curve with upper and lower bound curves in t.
    Profile {
        profile: &'a ConcentrationProfile,
        bound_upper: &'a dyn Fn(f64) -> f64,
        bound_lower: &'a dyn Fn(f64) -> f64,
    },
    /// A two_sided_rates verdict.
    Rates(&'a InequalityVerdict),
    /// Any verdict grid.
    Verdict(&'a InequalityVerdict),
    Rearrangement(&'a RearrangementCurve),
}

/// CSV text for a plot: a `#` line documenting the columns, the header,
/// then one row per point.
pub fn plot_csv(data: &PlotData) -> String {
    let mut s = String::new();
    let mut push = |cells: Vec<String>| {
        s.push_str(&cells.join(","));
        s.push('\n');
    };
    match data {
        PlotData::Profile {
            profile,
            bound_upper,
            bound_lower,
        } => {
            push(vec!["# t: grid point in profile scale units; empirical: two-sided tail P(|f - center| >= t*scale); ci_lo/ci_hi: Wilson 95%; bound_upper/bound_lower: bound curves".into()]);
            push(["t", "empirical", "ci_lo", "ci_hi", "bound_upper", "bound_lower"].map(String::from).to_vec());
            for (i, &t) in profile.t_grid.iter().enumerate() {
                let p = &profile.two_sided[i];
                push(vec![real(t), real(p.p), real(p.lo), real(p.hi), real(bound_upper(t)), real(bound_lower(t))]);
            }
        }
        PlotData::Rates(v) => {
            push(vec!["# t: deviation; alpha_value: rate at t; log_empirical: ln P(|f - Ef| >= t); fitted_upper: ln(C exp(-c alpha)); fitted_lower: ln(c exp(-C alpha))".into()]);
            push(["t", "alpha_value", "log_empirical", "fitted_upper", "fitted_lower"].map(String::from).to_vec());
            let lowers: BTreeMap<u64, &GridRecord> =
                v.grid.iter().filter(|r| r.side == "lower").map(|r| (r.t.to_bits(), r)).collect();
            for up in v.grid.iter().filter(|r| r.side == "upper") {
                let Some(lo) = lowers.get(&up.t.to_bits()) else { continue };
                push(vec![
                    real(up.t),
                    real(up.h.unwrap_or(f64::NAN)),
                    real(up.lhs.value.ln()),
                    real(up.rhs.value.ln()),
                    real(lo.lhs.value.ln()),
                ]);
            }
        }
        PlotData::Verdict(v) => {
            push(vec!["# side: comparison family; t: grid point; h: transformed abscissa; lhs <= rhs is checked as lhs_lo <= rhs_hi".into()]);
            push(
                ["side", "t", "h", "lhs", "lhs_lo", "lhs_hi", "rhs", "rhs_lo", "rhs_hi", "resolved", "holds"]
                    .map(String::from)
                    .to_vec(),
            );
            for r in &v.grid {
                push(vec![
                    r.side.clone(),
                    real(r.t),
                    r.h.map(real).unwrap_or_default(),
                    real(r.lhs.value),
                    real(r.lhs.lo),
                    real(r.lhs.hi),
                    real(r.rhs.value),
                    real(r.rhs.lo),
                    real(r.rhs.hi),
                    r.resolved.to_string(),
                    r.holds.to_string(),
                ]);
            }
        }
        PlotData::Rearrangement(c) => {
            push(vec!["# s: Gaussian abscissa; f_star: rearrangement value at s".into()]);
            push(vec!["s".into(), "f_star".into()]);
            for (s, v) in c.s_grid.iter().zip(&c.values) {
                push(vec![real(*s), real(*v)]);
            }
        }
    }
    s
}

pub fn emit_plot_data(data: &PlotData, path: &Path) -> Result<()> {
    write(path, &plot_csv(data))
}
