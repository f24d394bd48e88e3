use rayon::prelude::*;

use super::empirical::{EmpiricalDistribution, Provenance};
use crate::catalog::FunctionSpec;
use crate::error::{Error, Result};
use crate::rng::{RngStream, StreamRng};

/// Samples per random stream.
pub const CHUNK: usize = 1 << 14;

/// Smallest sample count accepted by the estimators.
pub const MIN_SAMPLES: usize = 100;

fn chunk_count(n: usize) -> usize {
    n.div_ceil(CHUNK)
}

/// Runs `per_chunk` on every chunk in parallel. Chunk `c` owns stream id `c`
/// and covers samples `[c·CHUNK, min((c+1)·CHUNK, n))`; results come back in
/// chunk order whatever the thread count.
pub fn map_chunks<T, F>(n: usize, seed: u64, per_chunk: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng, usize) -> T + Sync,
{
    (0..chunk_count(n))
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(n - c * CHUNK);
            let mut rng = RngStream::new(seed, c as u64).generator();
            per_chunk(&mut rng, len)
        })
        .collect()
}

/// Applies `f` to `n` independent standard Gaussian vectors in ℝ^dim, in
/// sample order.
pub fn map_gaussian_samples<T, F>(dim: usize, n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[f64]) -> T + Sync,
{
    let chunks = map_chunks(n, seed, |rng, len| {
        let mut z = vec![0.0; dim];
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            rng.fill_gauss(&mut z);
            out.push(f(&z));
        }
        out
    });
    chunks.into_iter().flatten().collect()
}

fn check_count(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::domain(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    Ok(())
}

fn provenance(n: usize, seed: u64) -> Provenance {
    Provenance {
        master_seed: seed,
        first_stream: 0,
        stream_count: chunk_count(n) as u64,
    }
}

fn collect_finite<T>(spec: &FunctionSpec, rows: Vec<std::result::Result<T, Vec<f64>>>) -> Result<Vec<T>> {
    rows.into_iter()
        .map(|r| {
            r.map_err(|input| Error::NonFinite {
                key: spec.key().to_string(),
                input,
            })
        })
        .collect()
}

/// f(Z) for `n` independent draws.
pub fn sample_values(spec: &FunctionSpec, n: usize, seed: u64) -> Result<EmpiricalDistribution> {
    check_count(n)?;
    let rows = map_gaussian_samples(spec.dim(), n, seed, |z| {
        let v = spec.eval(z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(z.to_vec())
        }
    });
    let raw = collect_finite(spec, rows)?;
    Ok(EmpiricalDistribution::from_raw(spec.key(), raw, provenance(n, seed)))
}

/// f(Z) and ‖∇f(Z)‖₂² from the same draws.
pub fn sample_values_and_grad_sq(spec: &FunctionSpec, n: usize, seed: u64) -> Result<(EmpiricalDistribution, Vec<f64>)> {
    check_count(n)?;
    let rows = map_gaussian_samples(spec.dim(), n, seed, |z| {
        let v = spec.eval(z);
        let g = spec.grad_sq(z);
        if v.is_finite() && g.is_finite() {
            Ok((v, g))
        } else {
            Err(z.to_vec())
        }
    });
    let (raw, grad): (Vec<f64>, Vec<f64>) = collect_finite(spec, rows)?.into_iter().unzip();
    Ok((EmpiricalDistribution::from_raw(spec.key(), raw, provenance(n, seed)), grad))
}
