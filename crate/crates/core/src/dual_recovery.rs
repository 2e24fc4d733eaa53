//! Conversions between dual solutions of the sparse and the full SOCP
//! relaxation. Both maps only regroup terms of `Σ W + Σ w e eᵀ`, so the
//! dual objective `ξ` and the matrix-equality residual are preserved.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{AggregatePattern, HomogenizedData};
use crate::relax::{ConicProgram, Layout};

/// A 2×2 block at positions `(i,i)`, `(i,j)`, `(j,j)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WBlock {
    pub ii: f64,
    pub jj: f64,
    pub ij: f64,
}

impl WBlock {
    pub fn min_eig(&self) -> f64 {
        let half = 0.5 * (self.ii - self.jj);
        0.5 * (self.ii + self.jj) - (half * half + self.ij * self.ij).sqrt()
    }
}

/// Dual variables `(y, ξ, {W^{ij}}, {w_i})`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub dim: usize,
    pub y: Vec<f64>,
    pub xi: f64,
    pub w: BTreeMap<(usize, usize), WBlock>,
    pub w_diag: BTreeMap<usize, f64>,
}

/// Tolerance on off-diagonal entries of off-pattern blocks.
pub const OFF_PATTERN_TOL: f64 = 1e-8;

impl DualSolution {
    /// Reads the dual variables of a solved SOCP dual program.
    pub fn from_values(prog: &ConicProgram, vals: &[f64]) -> Option<Self> {
        let Layout::Dual {
            dim,
            y,
            xi,
            w_blocks,
            w_diag,
        } = prog.layout()
        else {
            return None;
        };
        Some(Self {
            dim: *dim,
            y: y.iter().map(|&v| vals[v]).collect(),
            xi: vals[*xi],
            w: w_blocks
                .iter()
                .map(|(&e, &v)| {
                    let (a, b, c) = (vals[v], vals[v + 1], vals[v + 2]);
                    (e, WBlock { ii: a + b, jj: a - b, ij: c })
                })
                .collect(),
            w_diag: w_diag.iter().map(|(&i, &v)| (i, vals[v])).collect(),
        })
    }

    /// `Σ W^{ij} + Σ w_i e_i e_iᵀ` as a dense matrix.
    pub fn aggregate(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (&(i, j), b) in &self.w {
            m[(i - 1, i - 1)] += b.ii;
            m[(j - 1, j - 1)] += b.jj;
            m[(i - 1, j - 1)] += b.ij;
            m[(j - 1, i - 1)] += b.ij;
        }
        for (&i, &v) in &self.w_diag {
            m[(i - 1, i - 1)] += v;
        }
        m
    }

    /// Largest entry of `|Q_0 + Σ y_k Q_k − ξ H_0 − aggregate|`.
    pub fn residual(&self, data: &HomogenizedData) -> f64 {
        let mut r = data.objective().to_dense();
        for (k, q) in data.constraints().iter().enumerate() {
            r += q.to_dense() * self.y[k];
        }
        r[(0, 0)] -= self.xi;
        r -= self.aggregate();
        r.amax()
    }

    /// Most negative of `y`, `w` and block eigenvalues (0 if none negative).
    pub fn worst_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for v in self.y.iter().chain(self.w_diag.values()) {
            worst = worst.min(*v);
        }
        for b in self.w.values() {
            worst = worst.min(b.min_eig());
        }
        worst
    }
}

/// Smallest pair `(a, b)` in lexicographic order containing vertex `i`.
fn smallest_pair_with(i: usize) -> (usize, usize) {
    if i == 1 {
        (1, 2)
    } else {
        (1, i)
    }
}

/// Lifts a sparse dual to the full index set: on-pattern blocks are kept,
/// each `w_i` goes to the diagonal of the smallest pair containing `i`, and
/// all other blocks are zero.
pub fn sparse_to_full(d: &DualSolution, pattern: &AggregatePattern) -> DualSolution {
    let dim = d.dim;
    let mut w: BTreeMap<(usize, usize), WBlock> = BTreeMap::new();
    for j in 2..=dim {
        for i in 1..j {
            w.insert((i, j), d.w.get(&(i, j)).copied().unwrap_or_default());
        }
    }
    for (&i, &v) in &d.w_diag {
        debug_assert!(pattern.is_isolated(i));
        let key = smallest_pair_with(i);
        let blk = w.get_mut(&key).expect("dim >= 2");
        if key.0 == i {
            blk.ii += v;
        } else {
            blk.jj += v;
        }
    }
    DualSolution {
        dim,
        y: d.y.clone(),
        xi: d.xi,
        w,
        w_diag: BTreeMap::new(),
    }
}

/// Projects a full dual onto the pattern. Off-pattern blocks must be
/// diagonal; their diagonal mass goes to `w_i` for isolated `i` and to the
/// smallest on-pattern block incident to `i` otherwise.
pub fn full_to_sparse(d: &DualSolution, pattern: &AggregatePattern) -> Result<DualSolution> {
    let mut w: BTreeMap<(usize, usize), WBlock> = BTreeMap::new();
    for &e in pattern.edges() {
        w.insert(e, d.w.get(&e).copied().unwrap_or_default());
    }
    let mut w_diag: BTreeMap<usize, f64> = pattern.isolated().iter().map(|&i| (i, 0.0)).collect();
    for (&i, &v) in &d.w_diag {
        *w_diag.entry(i).or_insert(0.0) += v;
    }
    let incident = |i: usize| -> Option<(usize, usize)> {
        pattern.edges().iter().copied().find(|&(a, b)| a == i || b == i)
    };
    let mut push = |i: usize, mass: f64, w: &mut BTreeMap<(usize, usize), WBlock>| {
        if mass == 0.0 {
            return;
        }
        if pattern.is_isolated(i) {
            *w_diag.get_mut(&i).unwrap() += mass;
        } else {
            let e = incident(i).expect("non-isolated vertex has an edge");
            let blk = w.get_mut(&e).unwrap();
            if e.0 == i {
                blk.ii += mass;
            } else {
                blk.jj += mass;
            }
        }
    };
    for (&(i, j), b) in &d.w {
        if pattern.contains(i, j) {
            continue;
        }
        let scale = 1.0 + b.ii.abs().max(b.jj.abs());
        if b.ij.abs() > OFF_PATTERN_TOL * scale {
            return Err(Error::InconsistentDual(format!(
                "off-pattern block ({i}, {j}) has off-diagonal entry {:.3e}",
                b.ij
            )));
        }
        push(i, b.ii, &mut w);
        push(j, b.jj, &mut w);
    }
    Ok(DualSolution {
        dim: d.dim,
        y: d.y.clone(),
        xi: d.xi,
        w,
        w_diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseSymMatrix;

    #[test]
    fn empty_pattern_lift() {
        // Ē = ∅, m = 0, Q_0 = diag(0, 2, 3), ξ = 0, w_i = [Q_0]_ii
        let q0 = SparseSymMatrix::from_triplets(3, &[(2, 2, 2.0), (3, 3, 3.0)]).unwrap();
        let data = HomogenizedData::from_matrices(vec![q0]).unwrap();
        let pattern = AggregatePattern::from_edges(3, []).unwrap();
        let sparse = DualSolution {
            dim: 3,
            y: vec![],
            xi: 0.0,
            w: BTreeMap::new(),
            w_diag: [(1, 0.0), (2, 2.0), (3, 3.0)].into_iter().collect(),
        };
        assert_eq!(sparse.residual(&data), 0.0);
        let full = sparse_to_full(&sparse, &pattern);
        assert_eq!(full.w.len(), 3);
        assert_eq!(full.residual(&data), 0.0);
        assert_eq!(full.w[&(1, 2)].jj, 2.0);
        assert_eq!(full.w[&(1, 3)].jj, 3.0);
        assert_eq!(full.w[&(2, 3)], WBlock::default());
        let back = full_to_sparse(&full, &pattern).unwrap();
        assert_eq!(back.aggregate(), sparse.aggregate());
        assert_eq!(back.xi.to_bits(), sparse.xi.to_bits());
    }

    #[test]
    fn off_pattern_diagonal_goes_to_isolated() {
        let pattern = AggregatePattern::from_edges(3, []).unwrap();
        let full = DualSolution {
            dim: 3,
            y: vec![],
            xi: 1.5,
            w: [((2, 3), WBlock { ii: 0.5, jj: 0.25, ij: 0.0 })].into_iter().collect(),
            w_diag: BTreeMap::new(),
        };
        let s = full_to_sparse(&full, &pattern).unwrap();
        assert_eq!(s.w_diag[&2], 0.5);
        assert_eq!(s.w_diag[&3], 0.25);
        let bad = DualSolution {
            w: [((2, 3), WBlock { ii: 1.0, jj: 1.0, ij: 0.5 })].into_iter().collect(),
            ..full
        };
        assert!(matches!(full_to_sparse(&bad, &pattern), Err(Error::InconsistentDual(_))));
    }

    #[test]
    fn folding_into_incident_edge() {
        let pattern = AggregatePattern::from_edges(3, [(2, 3)]).unwrap();
        let full = DualSolution {
            dim: 3,
            y: vec![],
            xi: 0.0,
            w: [
                ((1, 2), WBlock { ii: 1.0, jj: 2.0, ij: 0.0 }),
                ((2, 3), WBlock { ii: 1.0, jj: 1.0, ij: 0.5 }),
            ]
            .into_iter()
            .collect(),
            w_diag: BTreeMap::new(),
        };
        let s = full_to_sparse(&full, &pattern).unwrap();
        assert_eq!(s.w_diag[&1], 1.0);
        assert_eq!(s.w[&(2, 3)].ii, 3.0);
        assert_eq!(s.aggregate(), full.aggregate());
        assert!(s.worst_violation() >= 0.0);
    }
}
