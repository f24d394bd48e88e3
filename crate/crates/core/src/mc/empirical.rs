use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which streams produced a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub first_stream: u64,
    pub stream_count: u64,
}

/// Sample of f(Z): values in draw order and sorted ascending.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    key: String,
    raw: Vec<f64>,
    sorted: Vec<f64>,
    provenance: Provenance,
}

impl EmpiricalDistribution {
    /// Panics on an empty or non-finite sample.
    pub fn from_raw(key: &str, raw: Vec<f64>, provenance: Provenance) -> Self {
        assert!(!raw.is_empty(), "empty sample");
        assert!(raw.iter().all(|x| x.is_finite()), "non-finite sample value");
        let mut sorted = raw.clone();
        sorted.sort_by(f64::total_cmp);
        EmpiricalDistribution {
            key: key.to_string(),
            raw,
            sorted,
            provenance,
        }
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Ascending values.
    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Values in draw order.
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Linear interpolation between order statistics at position (N−1)p.
    pub fn quantile(&self, p: f64) -> f64 {
        quantile_sorted(&self.sorted, p)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn mean(&self) -> f64 {
        self.raw.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let n = self.len() as f64;
        self.raw.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    }

    pub fn count_le(&self, x: f64) -> usize {
        self.sorted.partition_point(|v| *v <= x)
    }

    pub fn count_lt(&self, x: f64) -> usize {
        self.sorted.partition_point(|v| *v < x)
    }

    pub fn count_ge(&self, x: f64) -> usize {
        self.len() - self.count_lt(x)
    }

    pub fn count_gt(&self, x: f64) -> usize {
        self.len() - self.count_le(x)
    }

    /// Empirical distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.len() as f64
    }

    /// sup |F_N − F| against a continuous reference distribution function.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        ks_against(&self.sorted, cdf)
    }

    /// Writes the draw-order values: 8-byte magic, little-endian u64 count,
    /// then little-endian f64 values.
    pub fn write_samples(&self, path: &Path) -> Result<()> {
        write_samples(path, &self.raw)
    }
}

pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// One-sample Kolmogorov–Smirnov statistic of ascending `sorted`.
pub fn ks_against(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// Two-sample Kolmogorov–Smirnov statistic of two ascending samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

const MAGIC: &[u8; 8] = b"CLABSMP1";

pub fn write_samples(path: &Path, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(16 + 8 * values.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::Format {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if buf.len() < 16 || &buf[..8] != MAGIC {
        return Err(bad("missing sample-file header"));
    }
    let n = u64::from_le_bytes(buf[8..16].try_into().expect("8 bytes")) as usize;
    if buf.len() != 16 + 8 * n {
        return Err(bad("sample count does not match file length"));
    }
    Ok(buf[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emp(v: Vec<f64>) -> EmpiricalDistribution {
        EmpiricalDistribution::from_raw(
            "t",
            v,
            Provenance {
                master_seed: 0,
                first_stream: 0,
                stream_count: 1,
            },
        )
    }

    #[test]
    fn order_statistics() {
        let e = emp(vec![3.0, 1.0, 4.0, 1.5]);
        assert_eq!(e.values(), &[1.0, 1.5, 3.0, 4.0]);
        assert_eq!(e.median(), 2.25);
        assert_eq!(e.count_ge(3.0), 2);
        assert_eq!(e.count_gt(3.0), 1);
        assert_eq!(e.count_le(1.5), 2);
        assert_eq!(e.cdf(0.0), 0.0);
        assert_eq!(emp(vec![2.0, 0.0, 1.0]).median(), 1.0);
    }

    #[test]
    fn ks_of_uniform_grid() {
        let v: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_against(&v, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.005).abs() < 1e-12);
        assert_eq!(ks_two_sample(&v, &v), 0.0);
        let shifted: Vec<f64> = v.iter().map(|x| x + 0.105).collect();
        assert!((ks_two_sample(&v, &shifted) - 0.11).abs() < 1e-9);
    }

    #[test]
    fn sample_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        let e = emp(vec![0.25, -1.0, 3.5]);
        e.write_samples(&path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 16 + 24);
        assert_eq!(read_samples(&path).unwrap(), vec![0.25, -1.0, 3.5]);
        std::fs::write(&path, b"garbage").unwrap();
        assert!(read_samples(&path).is_err());
    }
}
