//! Matrix completion: zero-fill over a sparse pattern, the minor-product
//! determinant `det_T`, feasible ranges, cone membership predicates, and the
//! clique-ordered maximum-determinant PSD completion.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::{is_chordal, CliqueSet, Graph};

/// Tolerance for PSD-ness of 2×2 minors.
pub const MINOR_TOL: f64 = 1e-10;
/// Relative eigenvalue tolerance for PSD-ness of larger blocks.
pub const PSD_TOL: f64 = 1e-10;
/// Diagonal shift applied to singular clique blocks in [`sdp_complete`].
pub const SINGULAR_SHIFT: f64 = 1e-10;

pub type CompletedMatrix = DMatrix<f64>;

/// Symmetric matrix known on a pattern `E` and the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialMatrix {
    dim: usize,
    edges: BTreeSet<(usize, usize)>,
    known: BTreeMap<(usize, usize), f64>,
}

impl PartialMatrix {
    /// `known` must contain exactly the diagonal and `edges` (`i < j`, 1-based).
    pub fn new(
        dim: usize,
        edges: BTreeSet<(usize, usize)>,
        known: BTreeMap<(usize, usize), f64>,
    ) -> Result<Self> {
        for &(i, j) in &edges {
            if !(1 <= i && i < j && j <= dim) {
                return Err(Error::IndexOutOfRange(i, j, dim));
            }
        }
        let expected = edges.len() + dim;
        let covers = (1..=dim).all(|i| known.contains_key(&(i, i)))
            && edges.iter().all(|e| known.contains_key(e));
        if !covers || known.len() != expected {
            return Err(Error::PatternMismatch(
                "known entries must cover exactly the pattern and the diagonal".into(),
            ));
        }
        Ok(Self { dim, edges, known })
    }

    /// Builds from `(i, j) → value` (`i ≤ j`); off-diagonal keys form the pattern.
    pub fn from_entries(dim: usize, known: BTreeMap<(usize, usize), f64>) -> Result<Self> {
        let edges = known.keys().copied().filter(|(i, j)| i != j).collect();
        Self::new(dim, edges, known)
    }

    /// Restriction of a dense matrix to `edges` and the diagonal.
    pub fn from_dense(x: &DMatrix<f64>, edges: &BTreeSet<(usize, usize)>) -> Result<Self> {
        let dim = x.nrows();
        let mut known = BTreeMap::new();
        for i in 1..=dim {
            known.insert((i, i), x[(i - 1, i - 1)]);
        }
        for &(i, j) in edges {
            if j > dim {
                return Err(Error::IndexOutOfRange(i, j, dim));
            }
            known.insert((i, j), x[(i - 1, j - 1)]);
        }
        Self::new(dim, edges.clone(), known)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn known(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.known
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.known.get(&(i.min(j), i.max(j))).copied()
    }

    /// Vertices not touched by any pattern edge.
    pub fn isolated(&self) -> BTreeSet<usize> {
        let touched: BTreeSet<usize> = self.edges.iter().flat_map(|&(i, j)| [i, j]).collect();
        (1..=self.dim).filter(|i| !touched.contains(i)).collect()
    }
}

/// Closed interval of admissible values for an unknown entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Smallest eigenvalue of the 2×2 minor at `(i, j)` (0-based).
fn minor_min_eig(x: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let (a, b, c) = (x[(i, i)], x[(j, j)], x[(i, j)]);
    let half = 0.5 * (a - b);
    0.5 * (a + b) - (half * half + c * c).sqrt()
}

/// Fills every unknown entry with zero.
pub fn zero_fill(p: &PartialMatrix) -> CompletedMatrix {
    let n = p.dim;
    let mut x = DMatrix::zeros(n, n);
    for (&(i, j), &v) in &p.known {
        x[(i - 1, j - 1)] = v;
        x[(j - 1, i - 1)] = v;
    }
    x
}

/// Zero-fill plus the worst 2×2 minor eigenvalue of the result (negative when
/// the input was not in the sparse cone).
pub fn zero_fill_checked(p: &PartialMatrix) -> (CompletedMatrix, f64) {
    let x = zero_fill(p);
    let worst = worst_minor(&x);
    if worst < -MINOR_TOL {
        log::warn!("zero-fill input violates a 2x2 minor by {:.3e}", -worst);
    }
    (x, worst)
}

/// Smallest eigenvalue over all 2×2 principal minors (`+∞` for dim < 2).
pub fn worst_minor(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let mut w = f64::INFINITY;
    for j in 0..n {
        for i in 0..j {
            w = w.min(minor_min_eig(x, i, j));
        }
    }
    w
}

/// `Π_{i<j} (X_ii X_jj − X_ij²)`.
pub fn det_t(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let mut d = 1.0;
    for j in 0..n {
        for i in 0..j {
            d *= x[(i, i)] * x[(j, j)] - x[(i, j)] * x[(i, j)];
        }
    }
    d
}

/// `log det_T(X)`, `−∞` as soon as one minor determinant is nonpositive.
pub fn log_det_t(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..j {
            let d = x[(i, i)] * x[(j, j)] - x[(i, j)] * x[(i, j)];
            if d <= 0.0 {
                return f64::NEG_INFINITY;
            }
            s += d.ln();
        }
    }
    s
}

/// Interval `[−√(X_ii X_jj), √(X_ii X_jj)]` for an unknown position.
pub fn feasible_range(p: &PartialMatrix, i: usize, j: usize) -> Result<Range> {
    let (i, j) = (i.min(j), i.max(j));
    if i == j || j > p.dim || i == 0 {
        return Err(Error::IndexOutOfRange(i, j, p.dim));
    }
    if p.edges.contains(&(i, j)) {
        return Err(Error::Domain(format!("({i}, {j}) is a known position")));
    }
    let (a, b) = (p.known[&(i, i)], p.known[&(j, j)]);
    if a < 0.0 || b < 0.0 {
        return Err(Error::Domain(format!(
            "negative diagonal at ({i}, {i}) or ({j}, {j})"
        )));
    }
    let r = (a * b).sqrt();
    Ok(Range { lo: -r, hi: r })
}

/// Every 2×2 principal minor PSD (tolerance [`MINOR_TOL`]).
pub fn in_t_plus(x: &DMatrix<f64>) -> bool {
    let n = x.nrows();
    (0..n).all(|i| x[(i, i)] >= -MINOR_TOL) && worst_minor(x) >= -MINOR_TOL
}

/// Minors on `edges` PSD and `X_ii ≥ 0` on vertices outside every edge.
pub fn in_t_bar(x: &DMatrix<f64>, edges: &BTreeSet<(usize, usize)>) -> bool {
    let n = x.nrows();
    let touched: BTreeSet<usize> = edges.iter().flat_map(|&(i, j)| [i, j]).collect();
    edges
        .iter()
        .all(|&(i, j)| minor_min_eig(x, i - 1, j - 1) >= -MINOR_TOL)
        && (1..=n)
            .filter(|i| !touched.contains(i))
            .all(|i| x[(i - 1, i - 1)] >= -MINOR_TOL)
}

fn is_psd(m: &DMatrix<f64>) -> bool {
    if m.nrows() == 0 {
        return true;
    }
    let scale = m.norm().max(1.0);
    SymmetricEigen::new(m.clone()).eigenvalues.min() >= -PSD_TOL * scale
}

fn clique_block(p: &PartialMatrix, c: &[usize]) -> Result<DMatrix<f64>> {
    let k = c.len();
    let mut m = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let v = p
                .get(c[a], c[b])
                .ok_or_else(|| Error::PatternMismatch(format!("clique entry ({}, {}) unknown", c[a], c[b])))?;
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    Ok(m)
}

fn check_chordal(p: &PartialMatrix) -> Result<()> {
    if !is_chordal(&Graph::from_edges(p.dim, p.edges.iter().copied())) {
        return Err(Error::NotChordal);
    }
    Ok(())
}

/// Grone's criterion: a chordal partial matrix has a PSD completion iff all
/// clique blocks are PSD.
pub fn is_psd_completable(p: &PartialMatrix, cs: &CliqueSet) -> Result<bool> {
    check_chordal(p)?;
    for c in cs.cliques() {
        if !is_psd(&clique_block(p, c)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Maximum-determinant PSD completion, clique by clique:
/// `X[N, R] = X[N, S] X[S, S]⁻¹ X[S, R]` with `S` the separator of the
/// current clique, `R` its new vertices and `N` the earlier ones.
pub fn sdp_complete(p: &PartialMatrix, cs: &CliqueSet) -> Result<CompletedMatrix> {
    if !is_psd_completable(p, cs)? {
        return Err(Error::Degenerate("partial matrix has no PSD completion".into()));
    }
    let mut x = zero_fill(p);
    let mut seen: Vec<usize> = Vec::new();
    for c in cs.cliques() {
        let sep: Vec<usize> = c.iter().copied().filter(|v| seen.contains(v)).collect();
        let new: Vec<usize> = c.iter().copied().filter(|v| !seen.contains(v)).collect();
        let old: Vec<usize> = seen.iter().copied().filter(|v| !c.contains(v)).collect();
        if !sep.is_empty() && !new.is_empty() && !old.is_empty() {
            let idx = |v: &[usize]| v.iter().map(|i| i - 1).collect::<Vec<_>>();
            let (s, r, o) = (idx(&sep), idx(&new), idx(&old));
            let mut xss = x.select_rows(&s).select_columns(&s);
            let xsr = x.select_rows(&s).select_columns(&r);
            let xos = x.select_rows(&o).select_columns(&s);
            let chol = match xss.clone().cholesky() {
                Some(ch) => ch,
                None => {
                    log::warn!("singular separator block; shifting by {SINGULAR_SHIFT:e}");
                    for k in 0..s.len() {
                        xss[(k, k)] += SINGULAR_SHIFT;
                    }
                    xss.cholesky()
                        .ok_or_else(|| Error::Degenerate("separator block is not PSD".into()))?
                }
            };
            let fill = &xos * chol.solve(&xsr);
            for (a, &oi) in o.iter().enumerate() {
                for (b, &ri) in r.iter().enumerate() {
                    if p.get(oi + 1, ri + 1).is_none() {
                        x[(oi, ri)] = fill[(a, b)];
                        x[(ri, oi)] = fill[(a, b)];
                    }
                }
            }
        }
        seen.extend(new);
    }
    Ok(x)
}
