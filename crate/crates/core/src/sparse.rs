//! Symmetric sparse matrices addressed with 1-based `(i, j)` indices.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric matrix storing only its upper triangle.
///
/// Indices are 1-based. `get(i, j) == get(j, i)` for all valid pairs, and
/// exact zeros are never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseSymMatrix {
    dim: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl SparseSymMatrix {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// Builds a matrix from upper-triangle triplets. Duplicate positions are summed.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut m = Self::new(dim);
        for &(i, j, v) in triplets {
            if i > j {
                return Err(Error::MalformedInstance(format!(
                    "triplet ({i}, {j}) is below the diagonal"
                )));
            }
            m.check(i, j)?;
            let cur = m.get(i, j);
            m.set(i, j, cur + v)?;
        }
        Ok(m)
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::new(dim);
        for i in 1..=dim {
            m.entries.insert((i, i), 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, i: usize, j: usize) -> Result<()> {
        if i == 0 || j == 0 || i > self.dim || j > self.dim {
            return Err(Error::IndexOutOfRange(i, j, self.dim));
        }
        Ok(())
    }

    /// Sets entry `(i, j)` (and its mirror). Writing zero removes the entry.
    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        self.check(i, j)?;
        let key = (i.min(j), i.max(j));
        if value == 0.0 {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, value);
        }
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries
            .get(&(i.min(j), i.max(j)))
            .copied()
            .unwrap_or(0.0)
    }

    /// Stored upper-triangle entries `((i, j), v)` with `i <= j`, in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.keys().all(|&(i, j)| i == j)
    }

    /// Trace inner product `tr(self * x)` against a dense symmetric matrix.
    ///
    /// `x` is 0-based; off-diagonal stored entries count twice.
    pub fn inner_dense(&self, x: &DMatrix<f64>) -> f64 {
        self.iter()
            .map(|((i, j), v)| {
                let xv = x[(i - 1, j - 1)];
                if i == j {
                    v * xv
                } else {
                    2.0 * v * xv
                }
            })
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.dim, self.dim);
        for ((i, j), v) in self.iter() {
            d[(i - 1, j - 1)] = v;
            d[(j - 1, i - 1)] = v;
        }
        d
    }

    /// Upper-triangle triplets, 1-based.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        self.iter().map(|((i, j), v)| (i, j, v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_access_and_zero_removal() {
        let mut m = SparseSymMatrix::new(3);
        m.set(3, 1, 2.5).unwrap();
        assert_eq!(m.get(1, 3), 2.5);
        assert_eq!(m.get(3, 1), 2.5);
        m.set(1, 3, 0.0).unwrap();
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn out_of_range_is_rejected() {
        let mut m = SparseSymMatrix::new(2);
        assert!(m.set(0, 1, 1.0).is_err());
        assert!(m.set(1, 3, 1.0).is_err());
        assert!(SparseSymMatrix::from_triplets(2, &[(2, 1, 1.0)]).is_err());
    }

    #[test]
    fn inner_product_doubles_off_diagonal() {
        let m = SparseSymMatrix::from_triplets(2, &[(1, 1, 1.0), (1, 2, 3.0)]).unwrap();
        let x = DMatrix::from_row_slice(2, 2, &[2.0, 5.0, 5.0, 7.0]);
        assert_eq!(m.inner_dense(&x), 2.0 + 2.0 * 15.0);
    }
}

/// Row-compressed sparse matrix with 0-based indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl CsrMatrix {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    /// Builds from per-row `(col, value)` lists; zero values are dropped and
    /// duplicate columns within a row are summed.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.sort_by_key(|e| e.0);
                let mut out: Vec<(usize, f64)> = Vec::with_capacity(r.len());
                for (c, v) in r {
                    assert!(c < ncols, "column {c} out of range");
                    match out.last_mut() {
                        Some(last) if last.0 == c => last.1 += v,
                        _ => out.push((c, v)),
                    }
                }
                out.retain(|e| e.1 != 0.0);
                out
            })
            .collect::<Vec<_>>();
        Self {
            nrows: rows.len(),
            ncols,
            rows,
        }
    }

    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); nrows];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        Self::from_rows(ncols, rows)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
            .collect()
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `A' y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (r, &yi) in self.rows.iter().zip(y) {
            if yi != 0.0 {
                for &(j, v) in r {
                    out[j] += v * yi;
                }
            }
        }
        out
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, keep: &[usize]) -> Self {
        Self {
            nrows: keep.len(),
            ncols: self.ncols,
            rows: keep.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Column-wise view: for each column the `(row, value)` entries.
    pub fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.ncols];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                cols[j].push((i, v));
            }
        }
        cols
    }
}
