//! Small dense linear algebra: a row-major matrix, one-sided Jacobi
//! singular values and modified Gram–Schmidt.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix of shape {rows}x{cols} cannot hold {} entries",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_col_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix of shape {rows}x{cols} cannot hold {} entries",
                data.len()
            )));
        }
        let mut out = vec![0.0; rows * cols];
        for j in 0..cols {
            for i in 0..rows {
                out[i * cols + j] = data[j * rows + i];
            }
        }
        Matrix::from_row_major(rows, cols, out)
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut data = vec![0.0; n * n];
        for (i, &v) in d.iter().enumerate() {
            data[i * n + i] = v;
        }
        Matrix { rows: n, cols: n, data }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::diag(&vec![1.0; n])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Diagonal entries when the matrix is square and diagonal.
    pub fn as_diagonal(&self) -> Option<Vec<f64>> {
        if self.rows != self.cols {
            return None;
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j && self.get(i, j) != 0.0 {
                    return None;
                }
            }
        }
        Some((0..self.rows).map(|i| self.get(i, i)).collect())
    }

    /// A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// Aᵀ y
    pub fn t_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                for (o, &a) in out.iter_mut().zip(self.row(i)) {
                    *o += yi * a;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Reads `m n` followed by m·n reals in column-major order.
    pub fn load_text(path: &Path) -> Result<Matrix> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |reason: String| Error::Format {
            path: path.to_path_buf(),
            reason,
        };
        let mut tokens = text.split_whitespace();
        let mut dim = |name: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| bad(format!("missing {name} in header")))?
                .parse::<usize>()
                .map_err(|e| bad(format!("bad {name} in header: {e}")))
        };
        let m = dim("row count")?;
        let n = dim("column count")?;
        let values = tokens
            .map(|t| t.parse::<f64>().map_err(|e| bad(format!("bad entry `{t}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != m * n {
            return Err(bad(format!("header says {m}x{n} but found {} entries", values.len())));
        }
        Matrix::from_col_major(m, n, &values)
    }

    pub fn save_text(&self, path: &Path) -> Result<()> {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                s.push_str(&crate::fmt::real(self.get(i, j)));
                s.push('\n');
            }
        }
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Singular values (descending) by one-sided Jacobi rotations.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    // Orthogonalise the columns of whichever orientation has fewer columns.
    let work = if a.cols() > a.rows() { a.transpose() } else { a.clone() };
    let (m, n) = (work.rows(), work.cols());
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| work.get(i, j)).collect()).collect();

    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (u, v) = (*x, *y);
                    *x = c * u - s * v;
                    *y = s * u + c * v;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Orthonormalises the `k` rows (each of length `n`) of `rows` in place by
/// modified Gram–Schmidt with one re-orthogonalisation pass. Returns false if
/// a row collapses numerically.
pub fn orthonormalize_rows(rows: &mut [f64], k: usize, n: usize) -> bool {
    debug_assert_eq!(rows.len(), k * n);
    for i in 0..k {
        let before = norm2(&rows[i * n..(i + 1) * n]);
        for _pass in 0..2 {
            for j in 0..i {
                let (head, tail) = rows.split_at_mut(i * n);
                let qj = &head[j * n..(j + 1) * n];
                let ri = &mut tail[..n];
                let proj = dot(qj, ri);
                for (r, q) in ri.iter_mut().zip(qj) {
                    *r -= proj * q;
                }
            }
        }
        let ri = &mut rows[i * n..(i + 1) * n];
        let nrm = norm2(ri);
        if !(nrm > 1e-10 * before) || nrm == 0.0 {
            return false;
        }
        for r in ri.iter_mut() {
            *r /= nrm;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_singular_values() {
        let sv = singular_values(&Matrix::diag(&[2.0, -1.0, 0.5]));
        assert!((sv[0] - 2.0).abs() < 1e-14);
        assert!((sv[1] - 1.0).abs() < 1e-14);
        assert!((sv[2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn jacobi_agrees_with_nalgebra_svd() {
        let data: Vec<f64> = (0..35).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        for &(m, n) in &[(5usize, 7usize), (7, 5)] {
            let a = Matrix::from_row_major(m, n, data[..m * n].to_vec()).unwrap();
            let sv = singular_values(&a);
            let na = nalgebra::DMatrix::from_row_slice(m, n, &data[..m * n]);
            let mut reference: Vec<f64> = na.singular_values().iter().copied().collect();
            reference.sort_by(|a, b| b.total_cmp(a));
            for (x, y) in sv.iter().zip(&reference) {
                assert!((x - y).abs() <= 1e-10 * reference[0], "{x} vs {y}");
            }
        }
    }

    #[test]
    fn gram_schmidt_orthonormal() {
        let mut rows = vec![1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
        assert!(orthonormalize_rows(&mut rows, 3, 3));
        for i in 0..3 {
            for j in 0..3 {
                let d = dot(&rows[i * 3..i * 3 + 3], &rows[j * 3..j * 3 + 3]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gram_schmidt_detects_rank_deficiency() {
        let mut rows = vec![1.0, 2.0, 2.0, 4.0];
        assert!(!orthonormalize_rows(&mut rows, 2, 2));
    }

    #[test]
    fn text_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.txt");
        std::fs::write(&path, "2 3\n1 4\n2 5\n3 6\n").unwrap();
        let a = Matrix::load_text(&path).unwrap();
        assert_eq!(a.row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(a.row(1), &[4.0, 5.0, 6.0]);
        let out = dir.path().join("b.txt");
        a.save_text(&out).unwrap();
        assert_eq!(Matrix::load_text(&out).unwrap(), a);
        std::fs::write(&path, "2 2\n1 2 3\n").unwrap();
        assert!(Matrix::load_text(&path).is_err());
    }
}
