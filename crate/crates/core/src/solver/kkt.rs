//! Sparse quasi-definite augmented system
//! `[−H⁻¹ − εI, Aᵀ; A, εI]`, factored with faer's sparse LDLᵀ (AMD order,
//! dynamic pivot regularization) and refined against the unregularized
//! matrix. Better conditioned than `A H Aᵀ` on degenerate problems.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::ldlt::factor::LdltRegularization;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, LdltRef, SymbolicCholesky,
    SymmetricOrdering,
};
use faer::sparse::{SparseColMat, SparseColMatRef, SymbolicSparseColMatRef, Triplet};
use faer::{Conj, Mat, Par, Side};

use super::cones::{Cone, Scaling};
use crate::sparse::CsrMatrix;

/// Static regularization on the diagonal (negative on x, positive on y).
const STATIC_REG: f64 = 1e-8;
/// Pivots below `DYNAMIC_EPS` are bumped to `DYNAMIC_DELTA` during factorization.
const DYNAMIC_EPS: f64 = 1e-13;
const DYNAMIC_DELTA: f64 = 2e-7;
const MAX_REFINE: usize = 10;

enum BlockPos {
    /// diagonal positions, one per coordinate
    Diag(Vec<usize>),
    /// lower-triangle positions of a dense block, column-major
    Dense(usize, Vec<usize>),
}

pub(super) struct Kkt {
    n: usize,
    m: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    symbolic: SymbolicCholesky<usize>,
    blocks: Vec<BlockPos>,
    /// `(position, value)` of each entry of `A`
    a_pos: Vec<(usize, f64)>,
    xdiag: Vec<usize>,
    ydiag: Vec<usize>,
}

pub(super) struct KktFactor<'a> {
    kkt: &'a Kkt,
    /// unregularized values, for refinement
    values: Vec<f64>,
    l_values: Vec<f64>,
}

impl Kkt {
    pub(super) fn new(a: &CsrMatrix, cones: &[(Cone, usize)]) -> Option<Self> {
        let n = a.ncols();
        let m = a.nrows();
        let dim = n + m;
        let mut trip: Vec<Triplet<usize, usize, f64>> = Vec::new();
        for &(cone, off) in cones {
            match cone {
                Cone::NonNeg(d) => {
                    for i in off..off + d {
                        trip.push(Triplet::new(i, i, 1.0));
                    }
                }
                _ => {
                    let d = cone.size();
                    for j in 0..d {
                        for i in j..d {
                            trip.push(Triplet::new(off + i, off + j, 1.0));
                        }
                    }
                }
            }
        }
        let a_trip = a.triplets();
        for &(r, j, _) in &a_trip {
            trip.push(Triplet::new(n + r, j, 1.0));
        }
        for r in 0..m {
            trip.push(Triplet::new(n + r, n + r, 1.0));
        }
        let pattern = SparseColMat::<usize, f64>::try_new_from_triplets(dim, dim, &trip).ok()?;
        let col_ptr = pattern.symbolic().col_ptr().to_vec();
        let row_idx = pattern.symbolic().row_idx().to_vec();
        let symbolic = factorize_symbolic_cholesky(
            pattern.symbolic(),
            Side::Lower,
            SymmetricOrdering::Amd,
            CholeskySymbolicParams::default(),
        )
        .ok()?;

        let pos = |row: usize, col: usize| -> usize {
            let (lo, hi) = (col_ptr[col], col_ptr[col + 1]);
            lo + row_idx[lo..hi].binary_search(&row).expect("entry in pattern")
        };
        let blocks = cones
            .iter()
            .map(|&(cone, off)| match cone {
                Cone::NonNeg(d) => BlockPos::Diag((off..off + d).map(|i| pos(i, i)).collect()),
                _ => {
                    let d = cone.size();
                    let mut p = Vec::with_capacity(d * (d + 1) / 2);
                    for j in 0..d {
                        for i in j..d {
                            p.push(pos(off + i, off + j));
                        }
                    }
                    BlockPos::Dense(d, p)
                }
            })
            .collect();
        let a_pos = a_trip.iter().map(|&(r, j, v)| (pos(n + r, j), v)).collect();
        let xdiag = (0..n).map(|i| pos(i, i)).collect();
        let ydiag = (0..m).map(|r| pos(n + r, n + r)).collect();
        Some(Self {
            n,
            m,
            col_ptr,
            row_idx,
            symbolic,
            blocks,
            a_pos,
            xdiag,
            ydiag,
        })
    }

    fn pattern(&self) -> SymbolicSparseColMatRef<'_, usize> {
        let dim = self.n + self.m;
        SymbolicSparseColMatRef::new_checked(dim, dim, &self.col_ptr, None, &self.row_idx)
    }

    pub(super) fn factor(&self, scalings: &[Scaling]) -> Option<KktFactor<'_>> {
        let mut values = vec![0.0; self.row_idx.len()];
        for (bp, sc) in self.blocks.iter().zip(scalings) {
            match bp {
                BlockPos::Diag(p) => {
                    let ones = vec![1.0; p.len()];
                    let hinv = apply_hinv(sc, &ones);
                    for (k, &q) in p.iter().enumerate() {
                        values[q] = -hinv[k];
                    }
                }
                BlockPos::Dense(d, p) => {
                    let mut e = vec![0.0; *d];
                    let mut k = 0;
                    for j in 0..*d {
                        e[j] = 1.0;
                        let col = apply_hinv(sc, &e);
                        e[j] = 0.0;
                        for i in j..*d {
                            values[p[k]] = -col[i];
                            k += 1;
                        }
                    }
                }
            }
        }
        for &(q, v) in &self.a_pos {
            values[q] = v;
        }
        if values.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut reg = values.clone();
        for &q in &self.xdiag {
            reg[q] -= STATIC_REG;
        }
        for &q in &self.ydiag {
            reg[q] += STATIC_REG;
        }
        let mat = SparseColMatRef::new(self.pattern(), &reg);
        let mut l_values = vec![0.0; self.symbolic.len_val()];
        let par = Par::Seq;
        let mut mem =
            MemBuffer::new(self.symbolic.factorize_numeric_ldlt_scratch::<f64>(par, Default::default()));
        self.symbolic
            .factorize_numeric_ldlt(
                &mut l_values,
                mat,
                Side::Lower,
                LdltRegularization {
                    // forcing signs made faer report zero pivots on degenerate cones
                    dynamic_regularization_signs: None,
                    dynamic_regularization_delta: DYNAMIC_DELTA,
                    dynamic_regularization_epsilon: DYNAMIC_EPS,
                },
                par,
                MemStack::new(&mut mem),
                Default::default(),
            )
            .ok()?;
        if l_values.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(KktFactor {
            kkt: self,
            values,
            l_values,
        })
    }
}

fn apply_hinv(sc: &Scaling, v: &[f64]) -> Vec<f64> {
    let mut t = vec![0.0; v.len()];
    sc.apply_winv_t(v, &mut t);
    let mut out = vec![0.0; v.len()];
    sc.apply_winv(&t, &mut out);
    out
}

impl KktFactor<'_> {
    fn raw_solve(&self, r: &[f64]) -> Vec<f64> {
        let k = self.kkt;
        let mut rhs = Mat::<f64>::from_fn(r.len(), 1, |i, _| r[i]);
        let ldlt = LdltRef::new(&k.symbolic, &self.l_values);
        let mut mem = MemBuffer::new(k.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        ldlt.solve_in_place_with_conj(Conj::No, rhs.as_mut(), Par::Seq, MemStack::new(&mut mem));
        (0..r.len()).map(|i| rhs[(i, 0)]).collect()
    }

    /// Unregularized `K z` from the stored lower triangle.
    fn mul(&self, z: &[f64]) -> Vec<f64> {
        let k = self.kkt;
        let mut out = vec![0.0; z.len()];
        for j in 0..z.len() {
            for q in k.col_ptr[j]..k.col_ptr[j + 1] {
                let i = k.row_idx[q];
                let v = self.values[q];
                out[i] += v * z[j];
                if i != j {
                    out[j] += v * z[i];
                }
            }
        }
        out
    }

    /// Solves `−H⁻¹ dx + Aᵀ dy = rx`, `A dx = ry`.
    pub(super) fn solve(&self, rx: &[f64], ry: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.kkt.n;
        let r: Vec<f64> = rx.iter().chain(ry).copied().collect();
        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let rnorm = max_abs(&r);
        let mut z = self.raw_solve(&r);
        let kz = self.mul(&z);
        let mut res: Vec<f64> = r.iter().zip(&kz).map(|(a, b)| a - b).collect();
        let mut err = max_abs(&res);
        for _ in 0..MAX_REFINE {
            if err <= 1e-14 * (1.0 + rnorm) {
                break;
            }
            let dz = self.raw_solve(&res);
            let trial: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a + b).collect();
            let kt = self.mul(&trial);
            let tres: Vec<f64> = r.iter().zip(&kt).map(|(a, b)| a - b).collect();
            let terr = max_abs(&tres);
            if !(terr < 0.5 * err) {
                if terr < err {
                    z = trial;
                }
                break;
            }
            z = trial;
            res = tres;
            err = terr;
        }
        let dy = z.split_off(n);
        (z, dy)
    }
}
