//! Lowering of a [`ConicProgram`] to the standard primal form
//! `min cᵀx, Ax = b, x ∈ K` or the dual form `max bᵀy, c − Aᵀy ∈ K`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::relax::{ConeBlock, ConicProgram, Sense};
use crate::solver::Solution;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Form {
    P,
    D,
}

impl std::fmt::Display for Form {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Form::P => "P",
            Form::D => "D",
        })
    }
}

impl std::str::FromStr for Form {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "P" | "p" => Ok(Form::P),
            "D" | "d" => Ok(Form::D),
            _ => Err(format!("unknown form {s:?} (expected P or D)")),
        }
    }
}

/// Affine expression `constant + Σ coef · var`.
#[derive(Debug, Clone, Default, PartialEq)]
struct Affine {
    constant: f64,
    terms: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
struct Recovery {
    num_vars: usize,
    /// Program variable → position in the solver vector (`x` for P, `y` for D).
    kept: Vec<(usize, usize)>,
    /// Eliminated variables in elimination order.
    eliminated: Vec<(usize, Affine)>,
    sense: Sense,
}

/// `(A, b, c, K)` plus the bookkeeping to map a solution back.
#[derive(Debug, Clone)]
pub struct StandardForm {
    pub form: Form,
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub cones: Vec<ConeBlock>,
    /// Constant added to the reported objective (`cᵀx` for P, `bᵀy` for D).
    pub offset: f64,
    recovery: Option<Recovery>,
}

impl StandardForm {
    /// Wraps raw data with no link to a program.
    pub fn new(form: Form, a: CsrMatrix, b: Vec<f64>, c: Vec<f64>, cones: Vec<ConeBlock>) -> Self {
        Self {
            form,
            a,
            b,
            c,
            cones,
            offset: 0.0,
            recovery: None,
        }
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    /// Values of every program variable at a solver solution.
    pub fn recover(&self, sol: &Solution) -> Option<Vec<f64>> {
        let rec = self.recovery.as_ref()?;
        let src = match self.form {
            Form::P => &sol.x,
            Form::D => &sol.y,
        };
        let mut vals = vec![0.0; rec.num_vars];
        for &(v, pos) in &rec.kept {
            vals[v] = src[pos];
        }
        for (v, expr) in rec.eliminated.iter().rev() {
            vals[*v] = expr.constant + expr.terms.iter().map(|&(k, c)| c * vals[k]).sum::<f64>();
        }
        Some(vals)
    }

    /// The program's objective value (in its own sense) at a solution.
    pub fn program_objective(&self, sol: &Solution) -> f64 {
        // Both forms carry the program's minimization value as ±primal_obj.
        let min_value = match self.form {
            Form::P => sol.primal_obj,
            Form::D => -sol.primal_obj,
        };
        match self.recovery.as_ref().map(|r| r.sense) {
            Some(Sense::Maximize) => -min_value,
            _ => min_value,
        }
    }
}

const DROP_TOL: f64 = 1e-13;
const PIVOT_THRESHOLD: f64 = 0.1;

struct Eliminator {
    rows: Vec<Option<BTreeMap<usize, f64>>>,
    rhs: Vec<f64>,
    col_rows: Vec<BTreeSet<usize>>,
    objective: BTreeMap<usize, f64>,
    obj_const: f64,
    eliminated: Vec<(usize, Affine)>,
    alive: Vec<bool>,
}

impl Eliminator {
    fn new(prog: &ConicProgram, extra_rows: Vec<(Vec<(usize, f64)>, f64)>) -> Self {
        let nv = prog.num_vars();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut col_rows = vec![BTreeSet::new(); nv];
        let it = prog
            .rows()
            .iter()
            .map(|r| (r.coeffs.clone(), r.rhs))
            .chain(extra_rows);
        for (coeffs, b) in it {
            let r = rows.len();
            let mut map = BTreeMap::new();
            for (v, c) in coeffs {
                *map.entry(v).or_insert(0.0) += c;
            }
            map.retain(|_, c: &mut f64| *c != 0.0);
            for &v in map.keys() {
                col_rows[v].insert(r);
            }
            rows.push(Some(map));
            rhs.push(b);
        }
        let sign = match prog.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let objective = prog.objective().iter().map(|&(v, c)| (v, sign * c)).collect();
        Self {
            rows,
            rhs,
            col_rows,
            objective,
            obj_const: sign * prog.objective_constant(),
            eliminated: Vec::new(),
            alive: vec![true; nv],
        }
    }

    fn nnz(&self, r: usize) -> usize {
        self.rows[r].as_ref().map_or(0, BTreeMap::len)
    }

    /// Eligible pivot in row `r` on variable `v` (threshold pivoting).
    fn pivot_ok(&self, r: usize, v: usize) -> bool {
        let row = self.rows[r].as_ref().unwrap();
        let big = row.values().fold(0.0f64, |a, c| a.max(c.abs()));
        row[&v].abs() >= PIVOT_THRESHOLD * big
    }

    /// First alive variable among `cands` that occurs in exactly one row.
    fn singleton(&self, cands: impl Iterator<Item = usize>) -> Option<(usize, usize)> {
        for v in cands {
            if self.alive[v] && self.col_rows[v].len() == 1 {
                let r = *self.col_rows[v].first().unwrap();
                if self.pivot_ok(r, v) {
                    return Some((r, v));
                }
            }
        }
        None
    }

    fn cost(&self, r: usize, v: usize) -> usize {
        (self.col_rows[v].len() - 1) * (self.nnz(r) - 1)
    }

    /// Solves row `r` for `v` and substitutes everywhere.
    fn eliminate(&mut self, r: usize, v: usize) {
        let row = self.rows[r].take().unwrap();
        let piv = row[&v];
        let b = self.rhs[r];
        for &k in row.keys() {
            self.col_rows[k].remove(&r);
        }
        let expr = Affine {
            constant: b / piv,
            terms: row
                .iter()
                .filter(|e| *e.0 != v)
                .map(|(&k, &c)| (k, -c / piv))
                .collect(),
        };
        let touched: Vec<usize> = self.col_rows[v].iter().copied().collect();
        for r2 in touched {
            let target = self.rows[r2].as_mut().unwrap();
            let f = target.remove(&v).unwrap();
            self.rhs[r2] -= f * expr.constant;
            for &(k, c) in &expr.terms {
                let add = f * c;
                let e = target.entry(k).or_insert(0.0);
                let scale = e.abs().max(add.abs());
                *e += add;
                if e.abs() <= DROP_TOL * scale {
                    target.remove(&k);
                    self.col_rows[k].remove(&r2);
                } else {
                    self.col_rows[k].insert(r2);
                }
            }
        }
        self.col_rows[v].clear();
        if let Some(f) = self.objective.remove(&v) {
            self.obj_const += f * expr.constant;
            for &(k, c) in &expr.terms {
                let add = f * c;
                let e = self.objective.entry(k).or_insert(0.0);
                let scale = e.abs().max(add.abs());
                *e += add;
                if e.abs() <= DROP_TOL * scale {
                    self.objective.remove(&k);
                }
            }
        }
        self.alive[v] = false;
        self.eliminated.push((v, expr));
    }

    /// Removes rows that became empty; `0 = b ≠ 0` is an error.
    fn sweep_empty(&mut self) -> Result<()> {
        for r in 0..self.rows.len() {
            if matches!(&self.rows[r], Some(m) if m.is_empty()) {
                if self.rhs[r].abs() > 1e-9 * (1.0 + self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()))) {
                    return Err(Error::Lowering(format!(
                        "equality rows are inconsistent (0 = {})",
                        self.rhs[r]
                    )));
                }
                log::warn!("dropping redundant equality row {r}");
                self.rows[r] = None;
            }
        }
        Ok(())
    }
}

fn var_blocks(prog: &ConicProgram) -> Vec<ConeBlock> {
    let mut out = vec![ConeBlock::Free(0); prog.num_vars()];
    for (b, &o) in prog.blocks().iter().zip(prog.offsets()) {
        for v in o..o + b.size() {
            out[v] = *b;
        }
    }
    out
}

/// Lowers `prog` to `form`.
///
/// P: free variables are eliminated through the equality rows; the remaining
/// cone variables form `x`. D: every equality row is eliminated; the surviving
/// variables become `y` and each cone coordinate is an affine function of `y`.
pub fn to_standard_form(prog: &ConicProgram, form: Form) -> Result<StandardForm> {
    let kinds = var_blocks(prog);
    match form {
        Form::P => lower_primal(prog, &kinds),
        Form::D => lower_dual(prog, &kinds),
    }
}

fn lower_primal(prog: &ConicProgram, kinds: &[ConeBlock]) -> Result<StandardForm> {
    if prog.blocks().iter().any(|b| matches!(b, ConeBlock::Zero(_))) {
        return Err(Error::Lowering("zero cone has no primal standard form".into()));
    }
    let mut el = Eliminator::new(prog, Vec::new());
    let free: Vec<usize> = (0..prog.num_vars())
        .filter(|&v| matches!(kinds[v], ConeBlock::Free(_)))
        .collect();
    loop {
        if let Some((r, v)) = el.singleton(free.iter().copied()) {
            el.eliminate(r, v);
            el.sweep_empty()?;
            continue;
        }
        let mut best: Option<(usize, usize, usize)> = None;
        for &v in &free {
            if !el.alive[v] {
                continue;
            }
            for &r in &el.col_rows[v] {
                if !el.pivot_ok(r, v) {
                    continue;
                }
                let cost = el.cost(r, v);
                if best.is_none_or(|b| cost < b.0) {
                    best = Some((cost, r, v));
                }
            }
            if matches!(best, Some((0, _, _))) {
                break;
            }
        }
        let Some((_, r, v)) = best else { break };
        el.eliminate(r, v);
        el.sweep_empty()?;
    }
    if let Some(&v) = free.iter().find(|&&v| el.alive[v]) {
        return Err(Error::Lowering(format!(
            "free variable {v} is not determined by the equality rows"
        )));
    }
    let mut col_of = vec![usize::MAX; prog.num_vars()];
    let mut ncols = 0;
    let mut cones = Vec::new();
    for (b, &o) in prog.blocks().iter().zip(prog.offsets()) {
        if matches!(b, ConeBlock::Free(_)) {
            continue;
        }
        cones.push(*b);
        for v in o..o + b.size() {
            col_of[v] = ncols;
            ncols += 1;
        }
    }
    let mut a_rows = Vec::new();
    let mut b = Vec::new();
    for (r, row) in el.rows.iter().enumerate() {
        if let Some(row) = row {
            a_rows.push(row.iter().map(|(&v, &c)| (col_of[v], c)).collect());
            b.push(el.rhs[r]);
        }
    }
    let mut c = vec![0.0; ncols];
    for (&v, &coef) in &el.objective {
        c[col_of[v]] += coef;
    }
    let kept = (0..prog.num_vars())
        .filter(|&v| col_of[v] != usize::MAX)
        .map(|v| (v, col_of[v]))
        .collect();
    Ok(StandardForm {
        form: Form::P,
        a: CsrMatrix::from_rows(ncols, a_rows),
        b,
        c,
        cones,
        offset: el.obj_const,
        recovery: Some(Recovery {
            num_vars: prog.num_vars(),
            kept,
            eliminated: el.eliminated,
            sense: prog.sense(),
        }),
    })
}

fn lower_dual(prog: &ConicProgram, kinds: &[ConeBlock]) -> Result<StandardForm> {
    // Zero-cone variables are pinned to 0 by extra rows.
    let extra: Vec<(Vec<(usize, f64)>, f64)> = (0..prog.num_vars())
        .filter(|&v| matches!(kinds[v], ConeBlock::Zero(_)))
        .map(|v| (vec![(v, 1.0)], 0.0))
        .collect();
    let mut el = Eliminator::new(prog, extra);
    let is_free = |v: usize| matches!(kinds[v], ConeBlock::Free(_));
    let order: Vec<usize> = (0..prog.num_vars())
        .filter(|&v| !is_free(v))
        .chain((0..prog.num_vars()).filter(|&v| is_free(v)))
        .collect();
    let mut cursor = 0;
    loop {
        if let Some((r, v)) = el.singleton(order.iter().copied()) {
            el.eliminate(r, v);
            el.sweep_empty()?;
            continue;
        }
        let nrows = el.rows.len();
        let mut best: Option<(usize, bool, usize, usize)> = None;
        for step in 0..nrows {
            let r = (cursor + step) % nrows;
            let Some(row) = el.rows[r].as_ref() else {
                continue;
            };
            for &v in row.keys() {
                if !el.pivot_ok(r, v) {
                    continue;
                }
                // prefer eliminating cone variables so free ones remain as y
                let key = (el.cost(r, v), is_free(v));
                if best.is_none_or(|b| key < (b.0, b.1)) {
                    best = Some((key.0, key.1, r, v));
                }
            }
            if matches!(best, Some((0, false, _, _))) {
                break;
            }
        }
        let Some((_, _, r, v)) = best else { break };
        cursor = r;
        el.eliminate(r, v);
        el.sweep_empty()?;
    }
    let mut y_of = vec![usize::MAX; prog.num_vars()];
    let mut ny = 0;
    for v in 0..prog.num_vars() {
        if el.alive[v] {
            y_of[v] = ny;
            ny += 1;
        }
    }
    // Resolve every eliminated variable as an affine function of y.
    let mut resolved: Vec<Option<Affine>> = vec![None; prog.num_vars()];
    for (v, expr) in el.eliminated.iter().rev() {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        let mut constant = expr.constant;
        for &(k, c) in &expr.terms {
            if el.alive[k] {
                *acc.entry(y_of[k]).or_insert(0.0) += c;
            } else {
                let sub = resolved[k].as_ref().expect("resolved in reverse order");
                constant += c * sub.constant;
                for &(yk, c2) in &sub.terms {
                    *acc.entry(yk).or_insert(0.0) += c * c2;
                }
            }
        }
        resolved[*v] = Some(Affine {
            constant,
            terms: acc.into_iter().filter(|e| e.1 != 0.0).collect(),
        });
    }
    let mut cones = Vec::new();
    let mut c = Vec::new();
    let mut triplets = Vec::new();
    for (b, &o) in prog.blocks().iter().zip(prog.offsets()) {
        if matches!(b, ConeBlock::Free(_) | ConeBlock::Zero(_)) {
            continue;
        }
        cones.push(*b);
        for v in o..o + b.size() {
            let col = c.len();
            if el.alive[v] {
                c.push(0.0);
                triplets.push((y_of[v], col, -1.0));
            } else {
                let e = resolved[v].as_ref().unwrap();
                c.push(e.constant);
                for &(yk, coef) in &e.terms {
                    triplets.push((yk, col, -coef));
                }
            }
        }
    }
    let mut b = vec![0.0; ny];
    for (&v, &coef) in &el.objective {
        b[y_of[v]] -= coef;
    }
    Ok(StandardForm {
        form: Form::D,
        a: CsrMatrix::from_triplets(ny, c.len(), &triplets),
        b,
        c,
        cones,
        offset: -el.obj_const,
        recovery: Some(Recovery {
            num_vars: prog.num_vars(),
            kept: (0..prog.num_vars())
                .filter(|&v| el.alive[v])
                .map(|v| (v, y_of[v]))
                .collect(),
            eliminated: el.eliminated,
            sense: prog.sense(),
        }),
    })
}
