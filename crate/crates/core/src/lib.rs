//! Monte Carlo laboratory for two-sided concentration of convex Lipschitz
//! functions of a standard Gaussian vector.

pub mod catalog;
pub mod dvoretzky;
pub mod error;
pub mod fmt;
pub mod gaussian;
pub mod inequalities;
pub mod linalg;
pub mod mc;
pub mod quad;
pub mod rearrangement;
pub mod report;
pub mod rng;

pub use error::{Error, Result};

/// Sizes the global worker pool. Must run before any parallel work.
pub fn set_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}
