//! Empirical checks of two-sided concentration inequalities, with fitted
//! constants where the inequality only asserts that some constant exists.
//!
//! Every check returns an [`InequalityVerdict`]. A comparison A ≤ B passes
//! when the lower end of A's interval is at most the upper end of B's;
//! tail points with fewer than ten exceedances take no part.

mod fit;
mod moments;
mod one_dim;
mod tails;
mod verdict;

pub use moments::{check_equivalence_triangle, check_mean_median_chain, check_moment_bounds, MOMENT_ORDERS};
pub use one_dim::{
    check_bobkov_houdre, check_chi2_concavity, check_lemma_key, check_lemma_key_family, check_positive_moments,
    check_talagrand, rearrangement_right_slope, sample_chi2_values, CHI2_LEVELS,
};
pub use tails::{
    check_kwapien, check_lower_deviation_var, check_prop_reversal_tail, check_reversal, check_skewness,
    check_small_deviation, check_theorem_main, check_two_sided_rates, check_upper_gaussian,
    theorem_main_alpha_monotone,
};
pub use verdict::{
    rollup_csv, ConstantBox, FittedConstant, GridRecord, InequalityVerdict, Interval, Margins, VerdictStatus,
};

pub(crate) use fit::fit_sandwich;
pub(crate) use verdict::VerdictBuilder;
