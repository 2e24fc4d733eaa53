//! Seeded instance generators: lattice QCQPs with nonpositive off-diagonal
//! data, and zero-diagonal QCQPs over the unit box.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{QcqpInstance, QuadForm};
use crate::sparse::SparseSymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub n_l: usize,
    pub m: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroDiagSpec {
    pub n: usize,
    pub m: usize,
    pub density: f64,
    pub seed: u64,
}

/// Horizontal and vertical edges of the `n_l × n_l` grid, vertices numbered
/// row by row from 1.
pub fn lattice_edges(n_l: usize) -> BTreeSet<(usize, usize)> {
    let mut e = BTreeSet::new();
    for i in 1..=n_l {
        for j in 1..=n_l {
            let v = (i - 1) * n_l + j;
            if j < n_l {
                e.insert((v, v + 1));
            }
            if i < n_l {
                e.insert((v, v + n_l));
            }
        }
    }
    e
}

/// Uniform on `[-1, 0)`, never zero.
fn neg_unit(rng: &mut ChaCha8Rng) -> f64 {
    -(1.0 - rng.random::<f64>())
}

/// Lattice QCQP: `P_k` supported on the grid edges plus the diagonal with
/// off-diagonals in `[-1, 0)`, `P_1` a positive diagonal, no linear terms,
/// `r_k ∈ [-1, -0.1]` for constraints and `r_0 = 0`.
pub fn gen_lattice(spec: &LatticeSpec) -> Result<QcqpInstance> {
    if spec.n_l < 2 || spec.m < 1 {
        return Err(Error::MalformedInstance(
            "lattice needs n_l >= 2 and m >= 1".into(),
        ));
    }
    let n = spec.n_l * spec.n_l;
    let edges = lattice_edges(spec.n_l);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let general = |rng: &mut ChaCha8Rng| -> Result<SparseSymMatrix> {
        let mut p = SparseSymMatrix::new(n);
        for i in 1..=n {
            p.set(i, i, rng.random_range(-1.0..=1.0))?;
        }
        for &(i, j) in &edges {
            p.set(i, j, neg_unit(rng))?;
        }
        Ok(p)
    };
    let objective = QuadForm {
        p: general(&mut rng)?,
        q: vec![0.0; n],
        r: 0.0,
    };
    let mut constraints = Vec::with_capacity(spec.m);
    for k in 1..=spec.m {
        let p = if k == 1 {
            let mut p = SparseSymMatrix::new(n);
            for i in 1..=n {
                p.set(i, i, 1.0 - rng.random::<f64>())?;
            }
            p
        } else {
            general(&mut rng)?
        };
        let r = rng.random_range(-1.0..=-0.1);
        constraints.push(QuadForm {
            p,
            q: vec![0.0; n],
            r,
        });
    }
    QcqpInstance::new(n, objective, constraints)
}

/// Zero-diagonal QCQP over `[0, 1]^n`.
///
/// `m` random constraints with off-diagonal density `density` are made
/// strictly feasible at a random interior point. The box is encoded as `2n`
/// linear constraints, and every product `x_i x_j` that appears in the data
/// gets its four McCormick envelope constraints so the relaxations stay
/// bounded. All `P_k` have zero diagonal.
pub fn gen_zero_diag(spec: &ZeroDiagSpec) -> Result<QcqpInstance> {
    if spec.n < 2 || !(spec.density > 0.0 && spec.density <= 1.0) {
        return Err(Error::MalformedInstance(
            "zero-diagonal class needs n >= 2 and density in (0, 1]".into(),
        ));
    }
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..0.8)).collect();
    let mut support: BTreeSet<(usize, usize)> = BTreeSet::new();
    let random_form = |rng: &mut ChaCha8Rng, support: &mut BTreeSet<(usize, usize)>| -> Result<QuadForm> {
        let mut p = SparseSymMatrix::new(n);
        for j in 2..=n {
            for i in 1..j {
                if rng.random::<f64>() < spec.density {
                    let mut v: f64 = rng.random_range(-1.0..1.0);
                    if v == 0.0 {
                        v = 0.5;
                    }
                    p.set(i, j, v)?;
                    support.insert((i, j));
                }
            }
        }
        let q = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Ok(QuadForm { p, q, r: 0.0 })
    };
    let objective = random_form(&mut rng, &mut support)?;
    let mut constraints = Vec::new();
    for _ in 0..spec.m {
        let mut f = random_form(&mut rng, &mut support)?;
        f.r = -f.eval(&x0) - rng.random_range(0.1..1.0);
        constraints.push(f);
    }
    let unit = |i: usize, v: f64| {
        let mut q = vec![0.0; n];
        q[i - 1] = v;
        q
    };
    for i in 1..=n {
        // −x_i ≤ 0 and x_i − 1 ≤ 0
        constraints.push(QuadForm {
            p: SparseSymMatrix::new(n),
            q: unit(i, -0.5),
            r: 0.0,
        });
        constraints.push(QuadForm {
            p: SparseSymMatrix::new(n),
            q: unit(i, 0.5),
            r: -1.0,
        });
    }
    for &(i, j) in &support {
        let prod = |v: f64| SparseSymMatrix::from_triplets(n, &[(i, j, v / 2.0)]);
        let lin = |a: f64, b: f64| {
            let mut q = vec![0.0; n];
            q[i - 1] = a / 2.0;
            q[j - 1] = b / 2.0;
            q
        };
        // x_i x_j ≥ 0, x_i x_j ≤ x_i, x_i x_j ≤ x_j, x_i x_j ≥ x_i + x_j − 1
        constraints.push(QuadForm { p: prod(-1.0)?, q: vec![0.0; n], r: 0.0 });
        constraints.push(QuadForm { p: prod(1.0)?, q: lin(-1.0, 0.0), r: 0.0 });
        constraints.push(QuadForm { p: prod(1.0)?, q: lin(0.0, -1.0), r: 0.0 });
        constraints.push(QuadForm { p: prod(-1.0)?, q: lin(1.0, 1.0), r: -1.0 });
    }
    QcqpInstance::new(n, objective, constraints)
}
