//! Dense normal matrix `A H Aᵀ` assembled block by block, and its Cholesky
//! factorization (faer) with regularization fallback and refinement.

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, Side};

use super::cones::{Cone, Scaling};
use crate::sparse::CsrMatrix;

enum BlockRows {
    NonNeg {
        /// per local column: `(row, value)`
        cols: Vec<Vec<(usize, f64)>>,
    },
    Soc {
        d: usize,
        rows: Vec<usize>,
        /// `rows.len() × d`, row-major
        dense: Vec<f64>,
    },
    Psd {
        /// per touched row: `(row, [(a, b, value)])` in local matrix indices
        rows: Vec<(usize, Vec<(usize, usize, f64)>)>,
    },
}

pub(super) struct NormalMatrix {
    m: usize,
    blocks: Vec<BlockRows>,
}

fn decode_svec(k: usize) -> (usize, usize) {
    let mut b = ((((8 * k + 1) as f64).sqrt() - 1.0) / 2.0) as usize;
    while b * (b + 1) / 2 > k {
        b -= 1;
    }
    while (b + 1) * (b + 2) / 2 <= k {
        b += 1;
    }
    (k - b * (b + 1) / 2, b)
}

impl NormalMatrix {
    pub(super) fn new(a: &CsrMatrix, cones: &[(Cone, usize)]) -> Self {
        let cols = a.columns();
        let blocks = cones
            .iter()
            .map(|&(cone, off)| {
                let range = off..off + cone.size();
                match cone {
                    Cone::NonNeg(_) => BlockRows::NonNeg {
                        cols: cols[range].to_vec(),
                    },
                    Cone::Soc(d) => {
                        let mut rows: Vec<usize> = cols[range.clone()]
                            .iter()
                            .flat_map(|c| c.iter().map(|e| e.0))
                            .collect();
                        rows.sort_unstable();
                        rows.dedup();
                        let mut dense = vec![0.0; rows.len() * d];
                        for (l, col) in cols[range].iter().enumerate() {
                            for &(r, v) in col {
                                let k = rows.binary_search(&r).unwrap();
                                dense[k * d + l] = v;
                            }
                        }
                        BlockRows::Soc { d, rows, dense }
                    }
                    Cone::Psd(_) => {
                        let mut map: std::collections::BTreeMap<usize, Vec<(usize, usize, f64)>> =
                            Default::default();
                        for (l, col) in cols[range].iter().enumerate() {
                            let (ia, ib) = decode_svec(l);
                            for &(r, v) in col {
                                map.entry(r).or_default().push((ia, ib, v));
                            }
                        }
                        BlockRows::Psd {
                            rows: map.into_iter().collect(),
                        }
                    }
                }
            })
            .collect();
        Self { m: a.nrows(), blocks }
    }

    /// Lower triangle of `A H Aᵀ` at the given scalings.
    fn assemble(&self, scalings: &[Scaling]) -> Mat<f64> {
        let m = self.m;
        let mut mat = Mat::<f64>::zeros(m, m);
        let mut add = |i: usize, j: usize, v: f64| {
            if i >= j {
                mat[(i, j)] += v;
            }
        };
        for (blk, sc) in self.blocks.iter().zip(scalings) {
            match (blk, sc) {
                (BlockRows::NonNeg { cols }, Scaling::NonNeg { w }) => {
                    for (col, wj) in cols.iter().zip(w) {
                        let h = wj * wj;
                        for &(r1, v1) in col {
                            for &(r2, v2) in col {
                                add(r1, r2, h * v1 * v2);
                            }
                        }
                    }
                }
                (BlockRows::Soc { d, rows, dense }, sc) => {
                    let d = *d;
                    let k = rows.len();
                    // H Bᵀ column by column
                    let mut hb = vec![0.0; k * d];
                    for r in 0..k {
                        sc.apply_h(&dense[r * d..(r + 1) * d], &mut hb[r * d..(r + 1) * d]);
                    }
                    for r1 in 0..k {
                        for r2 in 0..=r1 {
                            let v: f64 = (0..d).map(|l| dense[r1 * d + l] * hb[r2 * d + l]).sum();
                            let (i, j) = (rows[r1], rows[r2]);
                            if i >= j {
                                add(i, j, v);
                            } else {
                                add(j, i, v);
                            }
                        }
                    }
                }
                (BlockRows::Psd { rows }, Scaling::Psd { g, .. }) => {
                    let f = |a: usize, b: usize| if a == b { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 };
                    for (x1, (r1, e1)) in rows.iter().enumerate() {
                        for (r2, e2) in &rows[..=x1] {
                            let mut v = 0.0;
                            for &(a, b, c) in e1 {
                                let fa = f(a, b) * c;
                                for &(a2, b2, c2) in e2 {
                                    let kk = if a == b {
                                        g[(a2, a)] * g[(b2, a)]
                                    } else {
                                        g[(a2, a)] * g[(b2, b)] + g[(a2, b)] * g[(b2, a)]
                                    };
                                    // svec picks √2 for off-diagonal positions
                                    let s2 = if a2 == b2 { 1.0 } else { std::f64::consts::SQRT_2 };
                                    v += fa * c2 * s2 * kk;
                                }
                            }
                            let (i, j) = (*r1, *r2);
                            if i >= j {
                                add(i, j, v);
                            } else {
                                add(j, i, v);
                            }
                        }
                    }
                }
                _ => unreachable!("scaling kind matches cone kind"),
            }
        }
        mat
    }

    /// Factors `A H Aᵀ`, adding a growing diagonal shift if needed.
    pub(super) fn factor(&self, scalings: &[Scaling]) -> Option<Factor> {
        let mat = self.assemble(scalings);
        Factor::new(mat)
    }
}

pub(super) struct Factor {
    mat: Mat<f64>,
    /// Jacobi scaling `1/√M_ii` applied symmetrically before factoring.
    dinv: Vec<f64>,
    llt: Option<Llt<f64>>,
    shifted: bool,
}

impl Factor {
    fn new(mat: Mat<f64>) -> Option<Self> {
        let m = mat.nrows();
        if m == 0 {
            return Some(Self {
                mat,
                dinv: Vec::new(),
                llt: None,
                shifted: false,
            });
        }
        let dinv: Vec<f64> = (0..m)
            .map(|i| {
                let d = mat[(i, i)];
                if d > 0.0 && d.is_finite() {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let scaled = Mat::<f64>::from_fn(m, m, |i, j| {
            if i >= j {
                mat[(i, j)] * dinv[i] * dinv[j]
            } else {
                0.0
            }
        });
        if let Ok(llt) = scaled.llt(Side::Lower) {
            return Some(Self {
                mat,
                dinv,
                llt: Some(llt),
                shifted: false,
            });
        }
        // The scaled diagonal is one, so the shift is relative per row.
        let mut delta = 1e-14;
        for _ in 0..8 {
            let mut shifted = scaled.clone();
            for i in 0..m {
                shifted[(i, i)] += delta;
            }
            if let Ok(llt) = shifted.llt(Side::Lower) {
                return Some(Self {
                    mat,
                    dinv,
                    llt: Some(llt),
                    shifted: true,
                });
            }
            delta *= 100.0;
        }
        None
    }

    fn raw_solve(&self, r: &[f64]) -> Vec<f64> {
        let llt = self.llt.as_ref().unwrap();
        let rhs = Mat::<f64>::from_fn(r.len(), 1, |i, _| r[i] * self.dinv[i]);
        let z = llt.solve(&rhs);
        (0..r.len()).map(|i| z[(i, 0)] * self.dinv[i]).collect()
    }

    fn mul(&self, z: &[f64]) -> Vec<f64> {
        let m = z.len();
        let mut out = vec![0.0; m];
        for j in 0..m {
            let zj = z[j];
            out[j] += self.mat[(j, j)] * zj;
            for i in j + 1..m {
                let v = self.mat[(i, j)];
                out[i] += v * zj;
                out[j] += v * z[i];
            }
        }
        out
    }

    /// Solves `A H Aᵀ z = r` with iterative refinement.
    pub(super) fn solve(&self, r: &[f64]) -> Vec<f64> {
        if r.is_empty() {
            return Vec::new();
        }
        let mut z = self.raw_solve(r);
        let steps = if self.shifted { 5 } else { 1 };
        for _ in 0..steps {
            let mz = self.mul(&z);
            let res: Vec<f64> = r.iter().zip(&mz).map(|(a, b)| a - b).collect();
            let dz = self.raw_solve(&res);
            for (zi, di) in z.iter_mut().zip(&dz) {
                *zi += di;
            }
        }
        z
    }
}

/// Rows of `a` kept after dropping numerically dependent ones (pivot
/// threshold 1e-12 relative to the row's squared norm).
pub(super) fn independent_rows(a: &CsrMatrix) -> Vec<usize> {
    let m = a.nrows();
    if m == 0 {
        return Vec::new();
    }
    let mut g = Mat::<f64>::zeros(m, m);
    for col in a.columns() {
        for &(r1, v1) in &col {
            for &(r2, v2) in &col {
                if r1 >= r2 {
                    g[(r1, r2)] += v1 * v2;
                }
            }
        }
    }
    let diag: Vec<f64> = (0..m).map(|i| g[(i, i)]).collect();
    if let Ok(llt) = g.llt(Side::Lower) {
        let l = llt.L();
        if (0..m).all(|i| l[(i, i)] * l[(i, i)] > 1e-12 * diag[i]) {
            return (0..m).collect();
        }
    }
    // Greedy left-looking Cholesky that skips small pivots.
    let mut keep: Vec<usize> = Vec::new();
    let mut lrows: Vec<Vec<f64>> = Vec::new();
    for i in 0..m {
        if diag[i] == 0.0 {
            continue;
        }
        let gi: Vec<f64> = keep
            .iter()
            .map(|&k| if i >= k { g[(i, k)] } else { g[(k, i)] })
            .collect();
        let mut li = vec![0.0; keep.len()];
        for t in 0..keep.len() {
            let s: f64 = (0..t).map(|u| li[u] * lrows[t][u]).sum();
            li[t] = (gi[t] - s) / lrows[t][t];
        }
        let pivot = diag[i] - li.iter().map(|v| v * v).sum::<f64>();
        if pivot > 1e-12 * diag[i] {
            li.push(pivot.sqrt());
            lrows.push(li);
            keep.push(i);
        }
    }
    keep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_decoding() {
        let mut k = 0;
        for b in 0..6 {
            for a in 0..=b {
                assert_eq!(decode_svec(k), (a, b));
                k += 1;
            }
        }
    }

    #[test]
    fn dependent_rows_are_dropped() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 2.0), (1, 1, 2.0), (2, 2, 1.0)],
        );
        assert_eq!(independent_rows(&a), vec![0, 2]);
        let b = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 1.0)]);
        assert_eq!(independent_rows(&b), vec![0, 1]);
    }
}
