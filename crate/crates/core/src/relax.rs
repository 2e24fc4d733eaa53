//! Relaxation builders: full/sparse SDP, full/sparse SOCP and the two SOCP
//! duals, all expressed as a [`ConicProgram`] over scalar variables.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ChordalExtension, CliqueSet, OverlapSet};
use crate::model::{AggregatePattern, HomogenizedData, STRUCTURAL_ZERO};
use crate::solver::cones::{svec_index, svec_len};
use crate::sparse::SparseSymMatrix;

/// One block of the cone product. `Free` carries unconstrained scalars that
/// lowering eliminates or turns into dual variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeBlock {
    NonNeg(usize),
    SecondOrder(usize),
    Psd(usize),
    Zero(usize),
    Free(usize),
}

impl ConeBlock {
    /// Number of scalar coordinates.
    pub fn size(self) -> usize {
        match self {
            ConeBlock::Psd(p) => svec_len(p),
            ConeBlock::NonNeg(d)
            | ConeBlock::SecondOrder(d)
            | ConeBlock::Zero(d)
            | ConeBlock::Free(d) => d,
        }
    }

    pub fn kind(self) -> &'static str {
        match self {
            ConeBlock::NonNeg(_) => "nonneg",
            ConeBlock::SecondOrder(_) => "soc",
            ConeBlock::Psd(_) => "psd",
            ConeBlock::Zero(_) => "zero",
            ConeBlock::Free(_) => "free",
        }
    }

    /// The `dim` field of the JSON dump (side length for PSD).
    pub fn dim(self) -> usize {
        match self {
            ConeBlock::NonNeg(d)
            | ConeBlock::SecondOrder(d)
            | ConeBlock::Psd(d)
            | ConeBlock::Zero(d)
            | ConeBlock::Free(d) => d,
        }
    }

    pub fn from_kind(kind: &str, dim: usize) -> Option<Self> {
        Some(match kind {
            "nonneg" => ConeBlock::NonNeg(dim),
            "soc" => ConeBlock::SecondOrder(dim),
            "psd" => ConeBlock::Psd(dim),
            "zero" => ConeBlock::Zero(dim),
            "free" => ConeBlock::Free(dim),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxationKind {
    Fsdp,
    Ssdp,
    Fsocp,
    Ssocp,
    DualFsocp,
    DualSsocp,
}

impl RelaxationKind {
    pub fn name(self) -> &'static str {
        match self {
            RelaxationKind::Fsdp => "fsdp",
            RelaxationKind::Ssdp => "ssdp",
            RelaxationKind::Fsocp => "fsocp",
            RelaxationKind::Ssocp => "ssocp",
            RelaxationKind::DualFsocp => "dual-fsocp",
            RelaxationKind::DualSsocp => "dual-ssocp",
        }
    }
}

impl std::fmt::Display for RelaxationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Origin of an equality row, used for counting and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Ties an auxiliary cone coordinate to shared variables.
    Link,
    /// `Q_k • X + s_k = 0` (k is 1-based).
    Constraint(usize),
    /// `[X]_11 = 1` (one per clique containing vertex 1 for S-SDP).
    Pin,
    /// Equates two clique copies of one matrix position.
    Overlap,
    /// Entrywise dual matrix equality at position `(i, j)`.
    Entry(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub kind: RowKind,
}

/// How program variables map back to relaxation quantities.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    /// `X_ij = Σ coef · var` for every represented position `i ≤ j`.
    Primal {
        dim: usize,
        entries: BTreeMap<(usize, usize), Vec<(usize, f64)>>,
    },
    /// Variables of the SOCP duals; `w_blocks[(i,j)]` is the first of three
    /// SOC coordinates `(a, b, c)` with `W_ii = a + b`, `W_jj = a − b`, `W_ij = c`.
    Dual {
        dim: usize,
        y: Vec<usize>,
        xi: usize,
        w_blocks: BTreeMap<(usize, usize), usize>,
        w_diag: BTreeMap<usize, usize>,
    },
}

/// Counts of each cone kind.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeInventory {
    /// Nonnegative scalars (over all NonNeg blocks).
    pub nonneg: usize,
    pub soc: usize,
    pub psd_sides: Vec<usize>,
    pub free: usize,
    pub zero: usize,
}

impl ConeInventory {
    pub fn of(blocks: &[ConeBlock]) -> Self {
        let mut inv = ConeInventory::default();
        for b in blocks {
            match *b {
                ConeBlock::NonNeg(d) => inv.nonneg += d,
                ConeBlock::SecondOrder(_) => inv.soc += 1,
                ConeBlock::Psd(p) => inv.psd_sides.push(p),
                ConeBlock::Free(d) => inv.free += d,
                ConeBlock::Zero(d) => inv.zero += d,
            }
        }
        inv
    }
}

/// A relaxation as linear objective + equality rows over a product of cones.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    kind: RelaxationKind,
    blocks: Vec<ConeBlock>,
    offsets: Vec<usize>,
    num_vars: usize,
    objective: Vec<(usize, f64)>,
    objective_constant: f64,
    sense: Sense,
    rows: Vec<LinearRow>,
    layout: Layout,
    pattern: AggregatePattern,
}

impl ConicProgram {
    pub fn kind(&self) -> RelaxationKind {
        self.kind
    }

    pub fn blocks(&self) -> &[ConeBlock] {
        &self.blocks
    }

    /// First variable index of each block.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Objective coefficients in the program's own sense.
    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn rows(&self) -> &[LinearRow] {
        &self.rows
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Pattern the program was built over (Ê for S-SDP, J for full programs).
    pub fn pattern(&self) -> &AggregatePattern {
        &self.pattern
    }

    pub fn inventory(&self) -> ConeInventory {
        ConeInventory::of(&self.blocks)
    }

    pub fn count_rows(&self, pred: impl Fn(RowKind) -> bool) -> usize {
        self.rows.iter().filter(|r| pred(r.kind)).count()
    }

    /// Objective value at a full variable vector, in the program's sense.
    pub fn evaluate_objective(&self, vals: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(v, c)| c * vals[v]).sum::<f64>()
    }

    /// Largest absolute equality violation at `vals`.
    pub fn max_row_violation(&self, vals: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.coeffs.iter().map(|&(v, c)| c * vals[v]).sum::<f64>() - r.rhs).abs())
            .fold(0.0, f64::max)
    }

    /// Represented matrix entries `X_ij` (`i ≤ j`) of a primal program.
    pub fn extract_entries(&self, vals: &[f64]) -> Option<BTreeMap<(usize, usize), f64>> {
        match &self.layout {
            Layout::Primal { entries, .. } => Some(
                entries
                    .iter()
                    .map(|(&k, e)| (k, e.iter().map(|&(v, c)| c * vals[v]).sum()))
                    .collect(),
            ),
            Layout::Dual { .. } => None,
        }
    }
}

struct Builder {
    blocks: Vec<ConeBlock>,
    offsets: Vec<usize>,
    next: usize,
    objective: BTreeMap<usize, f64>,
    rows: Vec<LinearRow>,
}

impl Builder {
    fn new() -> Self {
        Self {
            blocks: Vec::new(),
            offsets: Vec::new(),
            next: 0,
            objective: BTreeMap::new(),
            rows: Vec::new(),
        }
    }

    /// Appends a block and returns its first variable index.
    fn block(&mut self, b: ConeBlock) -> usize {
        let start = self.next;
        if b.size() > 0 {
            self.blocks.push(b);
            self.offsets.push(start);
            self.next += b.size();
        }
        start
    }

    fn obj(&mut self, v: usize, c: f64) {
        *self.objective.entry(v).or_insert(0.0) += c;
    }

    fn row(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64, kind: RowKind) {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (v, c) in coeffs {
            *acc.entry(v).or_insert(0.0) += c;
        }
        let coeffs = acc.into_iter().filter(|e| e.1 != 0.0).collect();
        self.rows.push(LinearRow { coeffs, rhs, kind });
    }

    fn finish(
        self,
        kind: RelaxationKind,
        sense: Sense,
        layout: Layout,
        pattern: AggregatePattern,
    ) -> ConicProgram {
        ConicProgram {
            kind,
            blocks: self.blocks,
            offsets: self.offsets,
            num_vars: self.next,
            objective: self.objective.into_iter().filter(|e| e.1 != 0.0).collect(),
            objective_constant: 0.0,
            sense,
            rows: self.rows,
            layout,
            pattern,
        }
    }
}

/// `(var, coef)` terms of `Q • X` given a per-entry variable map.
fn inner_terms(
    q: &SparseSymMatrix,
    entry: impl Fn(usize, usize) -> Vec<(usize, f64)>,
) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for ((i, j), v) in q.iter() {
        let f = if i == j { v } else { 2.0 * v };
        for (var, c) in entry(i, j) {
            out.push((var, f * c));
        }
    }
    out
}

/// Full SDP relaxation: one PSD block of side `n+1`.
pub fn build_fsdp(data: &HomogenizedData) -> ConicProgram {
    let dim = data.dim();
    let m = data.m();
    let mut b = Builder::new();
    let x0 = b.block(ConeBlock::Psd(dim));
    let s0 = b.block(ConeBlock::NonNeg(m));
    let coord = |i: usize, j: usize| -> Vec<(usize, f64)> {
        let k = x0 + svec_index(i - 1, j - 1);
        vec![(k, if i == j { 1.0 } else { 1.0 / SQRT_2 })]
    };
    for (v, c) in inner_terms(data.objective(), coord) {
        b.obj(v, c);
    }
    for (k, q) in data.constraints().iter().enumerate() {
        let mut row = inner_terms(q, coord);
        row.push((s0 + k, 1.0));
        b.row(row, 0.0, RowKind::Constraint(k + 1));
    }
    b.row(coord(1, 1), 1.0, RowKind::Pin);
    let entries = (1..=dim)
        .flat_map(|j| (1..=j).map(move |i| (i, j)))
        .map(|(i, j)| ((i, j), coord(i, j)))
        .collect();
    b.finish(
        RelaxationKind::Fsdp,
        Sense::Minimize,
        Layout::Primal { dim, entries },
        AggregatePattern::full(dim),
    )
}

/// Splits `q` into per-clique pieces: every entry goes wholly to the first
/// clique (in clique order) covering its position.
pub fn decompose_data(
    q: &SparseSymMatrix,
    ext: &ChordalExtension,
    cs: &CliqueSet,
) -> Result<Vec<SparseSymMatrix>> {
    let dim = q.dim();
    let extended = ext.extended_edges();
    let mut parts = vec![SparseSymMatrix::new(dim); cs.len()];
    for ((i, j), v) in q.iter() {
        if i != j && !extended.contains(&(i, j)) {
            return Err(Error::Decomposition(i, j));
        }
        let l = *cs.covering(i, j).first().ok_or(Error::Decomposition(i, j))?;
        parts[l].set(i, j, v)?;
    }
    Ok(parts)
}

/// Clique-decomposed SDP relaxation: one PSD block per maximal clique.
pub fn build_ssdp(
    data: &HomogenizedData,
    ext: &ChordalExtension,
    cs: &CliqueSet,
    u: &OverlapSet,
) -> Result<ConicProgram> {
    let dim = data.dim();
    let m = data.m();
    let mut b = Builder::new();
    let starts: Vec<usize> = cs
        .cliques()
        .iter()
        .map(|c| b.block(ConeBlock::Psd(c.len())))
        .collect();
    let s0 = b.block(ConeBlock::NonNeg(m));
    let cliques = cs.cliques();
    let coord = |l: usize, i: usize, j: usize| -> Result<(usize, f64)> {
        let c = &cliques[l];
        let a = c.binary_search(&i).map_err(|_| Error::Decomposition(i, j))?;
        let bb = c.binary_search(&j).map_err(|_| Error::Decomposition(i, j))?;
        let (a, bb) = (a.min(bb), a.max(bb));
        Ok((starts[l] + svec_index(a, bb), if i == j { 1.0 } else { 1.0 / SQRT_2 }))
    };
    let pieces: Vec<Vec<SparseSymMatrix>> = data
        .q()
        .iter()
        .map(|q| decompose_data(q, ext, cs))
        .collect::<Result<_>>()?;
    let terms = |parts: &[SparseSymMatrix]| -> Result<Vec<(usize, f64)>> {
        let mut out = Vec::new();
        for (l, p) in parts.iter().enumerate() {
            for ((i, j), v) in p.iter() {
                let (var, c) = coord(l, i, j)?;
                out.push((var, if i == j { v * c } else { 2.0 * v * c }));
            }
        }
        Ok(out)
    };
    for (v, c) in terms(&pieces[0])? {
        b.obj(v, c);
    }
    for k in 1..=m {
        let mut row = terms(&pieces[k])?;
        row.push((s0 + k - 1, 1.0));
        b.row(row, 0.0, RowKind::Constraint(k));
    }
    for l in 0..cs.len() {
        if cliques[l].binary_search(&1).is_ok() {
            let (var, _) = coord(l, 1, 1)?;
            b.row(vec![(var, 1.0)], 1.0, RowKind::Pin);
        }
    }
    for o in u.entries() {
        let (a, _) = coord(o.u, o.i, o.j)?;
        let (c, _) = coord(o.v, o.i, o.j)?;
        b.row(vec![(a, 1.0), (c, -1.0)], 0.0, RowKind::Overlap);
    }
    let extended = ext.extended_edges();
    let mut entries = BTreeMap::new();
    for pos in (1..=dim).map(|i| (i, i)).chain(extended.iter().copied()) {
        let l = *cs
            .covering(pos.0, pos.1)
            .first()
            .ok_or(Error::Decomposition(pos.0, pos.1))?;
        entries.insert(pos, vec![coord(l, pos.0, pos.1)?]);
    }
    let pattern = AggregatePattern::from_edges(dim, extended)?;
    Ok(b.finish(
        RelaxationKind::Ssdp,
        Sense::Minimize,
        Layout::Primal { dim, entries },
        pattern,
    ))
}

/// Checks that every data entry lies on the pattern or the diagonal.
fn check_support(data: &HomogenizedData, pattern: &AggregatePattern) -> Result<()> {
    if pattern.dim() != data.dim() {
        return Err(Error::PatternMismatch(format!(
            "pattern dimension {} differs from data dimension {}",
            pattern.dim(),
            data.dim()
        )));
    }
    for (k, q) in data.q().iter().enumerate() {
        for ((i, j), v) in q.iter() {
            if i != j && v.abs() >= STRUCTURAL_ZERO && !pattern.contains(i, j) {
                return Err(Error::PatternMismatch(format!(
                    "Q_{k} has entry ({i}, {j}) outside the pattern"
                )));
            }
        }
    }
    Ok(())
}

fn build_socp(
    data: &HomogenizedData,
    pattern: &AggregatePattern,
    kind: RelaxationKind,
) -> Result<ConicProgram> {
    check_support(data, pattern)?;
    let dim = data.dim();
    let m = data.m();
    let edges: Vec<(usize, usize)> = pattern.edges().iter().copied().collect();
    let mut b = Builder::new();
    let soc: Vec<usize> = edges
        .iter()
        .map(|_| b.block(ConeBlock::SecondOrder(3)))
        .collect();
    let iso: Vec<(usize, usize)> = pattern
        .isolated()
        .iter()
        .map(|&i| (i, b.block(ConeBlock::NonNeg(1))))
        .collect();
    let s0 = b.block(ConeBlock::NonNeg(m));
    // X entries: diagonal then pattern edges.
    let xs = b.block(ConeBlock::Free(dim + edges.len()));
    let mut xvar: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for i in 1..=dim {
        xvar.insert((i, i), xs + i - 1);
    }
    for (e, &(i, j)) in edges.iter().enumerate() {
        xvar.insert((i, j), xs + dim + e);
    }
    for (e, &(i, j)) in edges.iter().enumerate() {
        let (t, u, v) = (soc[e], soc[e] + 1, soc[e] + 2);
        let (xi, xj, xij) = (xvar[&(i, i)], xvar[&(j, j)], xvar[&(i, j)]);
        b.row(vec![(t, 1.0), (xi, -0.5), (xj, -0.5)], 0.0, RowKind::Link);
        b.row(vec![(u, 1.0), (xi, -0.5), (xj, 0.5)], 0.0, RowKind::Link);
        b.row(vec![(v, 1.0), (xij, -1.0)], 0.0, RowKind::Link);
    }
    for &(i, w) in &iso {
        b.row(vec![(w, 1.0), (xvar[&(i, i)], -1.0)], 0.0, RowKind::Link);
    }
    let entry = |i: usize, j: usize| -> Vec<(usize, f64)> {
        xvar.get(&(i, j)).map(|&v| vec![(v, 1.0)]).unwrap_or_default()
    };
    for (v, c) in inner_terms(data.objective(), entry) {
        b.obj(v, c);
    }
    for (k, q) in data.constraints().iter().enumerate() {
        let mut row = inner_terms(q, entry);
        row.push((s0 + k, 1.0));
        b.row(row, 0.0, RowKind::Constraint(k + 1));
    }
    b.row(vec![(xvar[&(1, 1)], 1.0)], 1.0, RowKind::Pin);
    let entries = xvar.iter().map(|(&k, &v)| (k, vec![(v, 1.0)])).collect();
    Ok(b.finish(
        kind,
        Sense::Minimize,
        Layout::Primal { dim, entries },
        pattern.clone(),
    ))
}

/// SOCP relaxation over every 2×2 principal minor.
pub fn build_fsocp(data: &HomogenizedData) -> ConicProgram {
    build_socp(data, &AggregatePattern::full(data.dim()), RelaxationKind::Fsocp)
        .expect("the full pattern covers every entry")
}

/// SOCP relaxation restricted to the minors on `pattern` plus `X_ii ≥ 0` for
/// isolated vertices.
pub fn build_ssocp(data: &HomogenizedData, pattern: &AggregatePattern) -> Result<ConicProgram> {
    build_socp(data, pattern, RelaxationKind::Ssocp)
}

fn build_dual_socp(
    data: &HomogenizedData,
    pattern: &AggregatePattern,
    kind: RelaxationKind,
) -> Result<ConicProgram> {
    check_support(data, pattern)?;
    let dim = data.dim();
    let m = data.m();
    let mut b = Builder::new();
    let y0 = b.block(ConeBlock::NonNeg(m));
    let xi = b.block(ConeBlock::Free(1));
    let mut w_blocks = BTreeMap::new();
    for &e in pattern.edges() {
        w_blocks.insert(e, b.block(ConeBlock::SecondOrder(3)));
    }
    let mut w_diag = BTreeMap::new();
    for &i in pattern.isolated() {
        w_diag.insert(i, b.block(ConeBlock::NonNeg(1)));
    }
    b.obj(xi, 1.0);

    // Σ_k Q_k y_k − H_0 ξ − Σ W − Σ w e eᵀ = −Q_0, entrywise on Ē ∪ D.
    let mut rows: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
    for i in 1..=dim {
        rows.insert((i, i), Vec::new());
    }
    for &e in pattern.edges() {
        rows.insert(e, Vec::new());
    }
    for (k, q) in data.constraints().iter().enumerate() {
        for ((i, j), v) in q.iter() {
            if let Some(r) = rows.get_mut(&(i, j)) {
                r.push((y0 + k, v));
            }
        }
    }
    rows.get_mut(&(1, 1)).expect("diagonal").push((xi, -1.0));
    for (&(i, j), &w) in &w_blocks {
        let (a, bb, c) = (w, w + 1, w + 2);
        rows.get_mut(&(i, i)).unwrap().extend([(a, -1.0), (bb, -1.0)]);
        rows.get_mut(&(j, j)).unwrap().extend([(a, -1.0), (bb, 1.0)]);
        rows.get_mut(&(i, j)).unwrap().push((c, -1.0));
    }
    for (&i, &w) in &w_diag {
        rows.get_mut(&(i, i)).unwrap().push((w, -1.0));
    }
    for ((i, j), coeffs) in rows {
        let rhs = -data.objective().get(i, j);
        b.row(coeffs, rhs, RowKind::Entry(i, j));
    }
    let y = (0..m).map(|k| y0 + k).collect();
    Ok(b.finish(
        kind,
        Sense::Maximize,
        Layout::Dual {
            dim,
            y,
            xi,
            w_blocks,
            w_diag,
        },
        pattern.clone(),
    ))
}

/// Dual of the full SOCP relaxation.
pub fn build_dual_fsocp(data: &HomogenizedData) -> ConicProgram {
    build_dual_socp(data, &AggregatePattern::full(data.dim()), RelaxationKind::DualFsocp)
        .expect("the full pattern covers every entry")
}

/// Dual of the sparse SOCP relaxation; fails if data lie off `pattern`.
pub fn build_dual_ssocp(data: &HomogenizedData, pattern: &AggregatePattern) -> Result<ConicProgram> {
    build_dual_socp(data, pattern, RelaxationKind::DualSsocp)
}

/// Vertices touched by pattern edges, for callers that need `V \ V_e`.
pub fn covered_vertices(pattern: &AggregatePattern) -> BTreeSet<usize> {
    pattern.edges().iter().flat_map(|&(i, j)| [i, j]).collect()
}
