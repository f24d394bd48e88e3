//! Reproducible parallel Monte Carlo estimation of laws of f(Z).

mod empirical;
mod profile;
mod sampling;
mod stats;

pub use empirical::{ks_against, ks_two_sample, read_samples, write_samples, EmpiricalDistribution, Provenance};
pub use profile::{
    linear_grid, tail_curve, CenterKind, ConcentrationProfile, ScaleKind, TailPoint, MIN_RESOLVED_COUNT,
};
pub use sampling::{map_chunks, map_gaussian_samples, sample_values, sample_values_and_grad_sq, CHUNK, MIN_SAMPLES};
pub use stats::{
    concentration_constants, constants_from, estimate_grad_sq, estimate_stats, jackknife_se, leave_out_medians, median_interval,
    median_interval_at, variance_estimate,
    wilson, ConcConstants, Estimate, MomentEstimate, SummaryStats, JACKKNIFE_BLOCKS, Z95, Z99,
};

pub(crate) use stats::{mean_estimate, BlockSums};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::parse_key;

    fn with_threads<T: Send>(k: usize, f: impl FnOnce() -> T + Send) -> T {
        rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap().install(f)
    }

    #[test]
    fn thread_count_does_not_change_samples() {
        let f = parse_key("lp:n=16:p=4").unwrap();
        let n = 3 * CHUNK + 17;
        let a = with_threads(1, || sample_values(&f, n, 5).unwrap());
        let b = with_threads(4, || sample_values(&f, n, 5).unwrap());
        assert_eq!(a.raw(), b.raw());
        let sa = with_threads(1, || estimate_stats(&a, &[1.0, 2.0]));
        let sb = with_threads(3, || estimate_stats(&b, &[1.0, 2.0]));
        assert_eq!(crate::fmt::to_json(&sa).unwrap(), crate::fmt::to_json(&sb).unwrap());
    }

    #[test]
    fn sup_norm_values_are_positive_and_replayable() {
        let f = parse_key("linf:n=1024").unwrap();
        let a = sample_values(&f, 2000, 8).unwrap();
        assert!(a.values()[0] > 0.0);
        assert_eq!(a.raw(), sample_values(&f, 2000, 8).unwrap().raw());
        assert_eq!(a.provenance().stream_count, 1);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let f = parse_key("relu").unwrap();
        assert!(sample_values(&f, 10, 1).is_err());
    }
}
