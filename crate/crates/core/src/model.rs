//! QCQP instances, their homogenized matrix data, and the aggregate sparsity pattern.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseSymMatrix;

/// Entries with magnitude below this are ignored when forming the aggregate pattern.
pub const STRUCTURAL_ZERO: f64 = 1e-12;

/// One quadratic function `x'Px + 2q'x + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadForm {
    pub p: SparseSymMatrix,
    pub q: Vec<f64>,
    pub r: f64,
}

impl QuadForm {
    pub fn zero(n: usize) -> Self {
        Self {
            p: SparseSymMatrix::new(n),
            q: vec![0.0; n],
            r: 0.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let quad: f64 = self
            .p
            .iter()
            .map(|((i, j), v)| {
                let t = v * x[i - 1] * x[j - 1];
                if i == j {
                    t
                } else {
                    2.0 * t
                }
            })
            .sum();
        let lin: f64 = self.q.iter().zip(x).map(|(a, b)| a * b).sum();
        quad + 2.0 * lin + self.r
    }
}

/// minimize `f_0(x)` subject to `f_k(x) <= 0` for `k = 1..m`.
#[derive(Debug, Clone, PartialEq)]
pub struct QcqpInstance {
    n: usize,
    objective: QuadForm,
    constraints: Vec<QuadForm>,
}

impl QcqpInstance {
    pub fn new(n: usize, objective: QuadForm, constraints: Vec<QuadForm>) -> Result<Self> {
        let inst = Self {
            n,
            objective,
            constraints,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::MalformedInstance("n must be positive".into()));
        }
        for (k, f) in self.forms().enumerate() {
            if f.p.dim() != self.n {
                return Err(Error::MalformedInstance(format!(
                    "P_{k} has dimension {} but n = {}",
                    f.p.dim(),
                    self.n
                )));
            }
            if f.q.len() != self.n {
                return Err(Error::MalformedInstance(format!(
                    "q_{k} has length {} but n = {}",
                    f.q.len(),
                    self.n
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &QuadForm {
        &self.objective
    }

    pub fn constraints(&self) -> &[QuadForm] {
        &self.constraints
    }

    /// Objective followed by the constraints.
    pub fn forms(&self) -> impl Iterator<Item = &QuadForm> {
        std::iter::once(&self.objective).chain(self.constraints.iter())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: InstanceJson = serde_json::from_str(s)?;
        raw.try_into()
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct FormJson {
    #[serde(rename = "P")]
    p: Vec<(usize, usize, f64)>,
    q: Vec<f64>,
    r: f64,
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    n: usize,
    m: usize,
    objective: FormJson,
    constraints: Vec<FormJson>,
}

impl From<&QuadForm> for FormJson {
    fn from(f: &QuadForm) -> Self {
        Self {
            p: f.p.triplets(),
            q: f.q.clone(),
            r: f.r,
        }
    }
}

impl From<&QcqpInstance> for InstanceJson {
    fn from(inst: &QcqpInstance) -> Self {
        Self {
            n: inst.n,
            m: inst.m(),
            objective: (&inst.objective).into(),
            constraints: inst.constraints.iter().map(FormJson::from).collect(),
        }
    }
}

impl TryFrom<InstanceJson> for QcqpInstance {
    type Error = Error;

    fn try_from(raw: InstanceJson) -> Result<Self> {
        if raw.m != raw.constraints.len() {
            return Err(Error::MalformedInstance(format!(
                "m = {} but {} constraints given",
                raw.m,
                raw.constraints.len()
            )));
        }
        let n = raw.n;
        let conv = |f: FormJson| -> Result<QuadForm> {
            Ok(QuadForm {
                p: SparseSymMatrix::from_triplets(n, &f.p)?,
                q: f.q,
                r: f.r,
            })
        };
        let objective = conv(raw.objective)?;
        let constraints = raw
            .constraints
            .into_iter()
            .map(conv)
            .collect::<Result<Vec<_>>>()?;
        QcqpInstance::new(n, objective, constraints)
    }
}

/// Lifted data `Q_0..Q_m` over dimension `n + 1` and the pinning matrix `H_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedData {
    dim: usize,
    q: Vec<SparseSymMatrix>,
    h0: SparseSymMatrix,
}

impl HomogenizedData {
    /// Wraps already-lifted matrices. All must share dimension `dim >= 1`.
    pub fn from_matrices(q: Vec<SparseSymMatrix>) -> Result<Self> {
        let dim = q
            .first()
            .map(|m| m.dim())
            .ok_or_else(|| Error::MalformedInstance("no objective matrix".into()))?;
        if dim == 0 || q.iter().any(|m| m.dim() != dim) {
            return Err(Error::MalformedInstance(
                "lifted matrices must share one positive dimension".into(),
            ));
        }
        let mut h0 = SparseSymMatrix::new(dim);
        h0.set(1, 1, 1.0)?;
        Ok(Self { dim, q, h0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of inequality constraints.
    pub fn m(&self) -> usize {
        self.q.len() - 1
    }

    /// `Q_0` (objective) followed by `Q_1..Q_m`.
    pub fn q(&self) -> &[SparseSymMatrix] {
        &self.q
    }

    pub fn objective(&self) -> &SparseSymMatrix {
        &self.q[0]
    }

    pub fn constraints(&self) -> &[SparseSymMatrix] {
        &self.q[1..]
    }

    pub fn h0(&self) -> &SparseSymMatrix {
        &self.h0
    }
}

/// Lays out `[[r_k, q_k'], [q_k, P_k]]` for every quadratic function.
pub fn homogenize(instance: &QcqpInstance) -> Result<HomogenizedData> {
    instance.validate()?;
    let n = instance.n();
    let mut qs = Vec::with_capacity(instance.m() + 1);
    for f in instance.forms() {
        let mut qk = SparseSymMatrix::new(n + 1);
        qk.set(1, 1, f.r)?;
        for (j, &v) in f.q.iter().enumerate() {
            qk.set(1, j + 2, v)?;
        }
        for ((i, j), v) in f.p.iter() {
            qk.set(i + 1, j + 1, v)?;
        }
        qs.push(qk);
    }
    HomogenizedData::from_matrices(qs)
}

/// Off-diagonal union support of the lifted data, plus the vertices it leaves untouched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregatePattern {
    dim: usize,
    edges: BTreeSet<(usize, usize)>,
    isolated: BTreeSet<usize>,
}

impl AggregatePattern {
    /// Builds a pattern from an arbitrary edge list; pairs are normalized to `i < j`.
    pub fn from_edges(dim: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::PatternMismatch(format!("self loop at {i}")));
            }
            let (a, b) = (i.min(j), i.max(j));
            if a == 0 || b > dim {
                return Err(Error::IndexOutOfRange(a, b, dim));
            }
            set.insert((a, b));
        }
        let mut isolated: BTreeSet<usize> = (1..=dim).collect();
        for &(a, b) in &set {
            isolated.remove(&a);
            isolated.remove(&b);
        }
        Ok(Self {
            dim,
            edges: set,
            isolated,
        })
    }

    /// The complete pattern `J`.
    pub fn full(dim: usize) -> Self {
        let edges = (1..=dim).flat_map(|i| ((i + 1)..=dim).map(move |j| (i, j)));
        Self::from_edges(dim, edges).expect("complete pattern is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn isolated(&self) -> &BTreeSet<usize> {
        &self.isolated
    }

    /// `|J| = dim (dim - 1) / 2`.
    pub fn j_size(&self) -> usize {
        self.dim * (self.dim.saturating_sub(1)) / 2
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn is_isolated(&self, i: usize) -> bool {
        self.isolated.contains(&i)
    }
}

/// Edge `(i, j)` is present iff some `Q_k` has `|[Q_k]_ij| >= STRUCTURAL_ZERO` with `i < j`.
pub fn aggregate_pattern(data: &HomogenizedData) -> AggregatePattern {
    let edges = data
        .q()
        .iter()
        .flat_map(|qk| qk.iter())
        .filter(|&((i, j), v)| i < j && v.abs() >= STRUCTURAL_ZERO)
        .map(|(k, _)| k)
        .collect::<Vec<_>>();
    AggregatePattern::from_edges(data.dim(), edges).expect("data indices are in range")
}
