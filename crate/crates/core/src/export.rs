//! Problem dumps: a JSON description of any [`StandardForm`], and SDPA
//! sparse format (`.dat-s`) for programs made only of PSD and LP blocks.
//!
//! Both standard forms map onto the SDPA pair the same way: the SDPA
//! variable vector is `y`, `F_i = −A_i`, `F_0 = −C` and the SDPA cost is
//! `−b`, so SDPA's primal is our (D) and SDPA's dual is our (P).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relax::ConeBlock;
use crate::solver::cones::svec_index;
use crate::sparse::CsrMatrix;
use crate::standard::{Form, StandardForm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeJson {
    pub kind: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemJson {
    pub form: String,
    /// `[row, col, value]`, 0-based.
    #[serde(rename = "A")]
    pub a: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub cones: Vec<ConeJson>,
}

impl ProblemJson {
    pub fn of(sf: &StandardForm) -> Self {
        Self {
            form: sf.form.to_string(),
            a: sf.a.triplets(),
            b: sf.b.clone(),
            c: sf.c.clone(),
            cones: sf
                .cones
                .iter()
                .map(|k| ConeJson {
                    kind: k.kind().to_string(),
                    dim: k.dim(),
                })
                .collect(),
        }
    }

    pub fn to_standard_form(&self) -> Result<StandardForm> {
        let form: Form = self.form.parse().map_err(Error::SolverInput)?;
        let cones = self
            .cones
            .iter()
            .map(|c| {
                ConeBlock::from_kind(&c.kind, c.dim)
                    .ok_or_else(|| Error::SolverInput(format!("unknown cone kind {:?}", c.kind)))
            })
            .collect::<Result<Vec<_>>>()?;
        let ncols = self.c.len();
        if let Some(&(i, j, _)) = self.a.iter().find(|&&(i, j, _)| i >= self.b.len() || j >= ncols) {
            return Err(Error::SolverInput(format!("triplet ({i}, {j}) outside A")));
        }
        let a = CsrMatrix::from_triplets(self.b.len(), ncols, &self.a);
        Ok(StandardForm::new(form, a, self.b.clone(), self.c.clone(), cones))
    }
}

pub fn to_json(sf: &StandardForm) -> Result<String> {
    Ok(serde_json::to_string(&ProblemJson::of(sf))?)
}

/// Where coordinate `k` of a cone vector lands in SDPA's block matrices:
/// `(block, i, j, factor)` with 1-based `i <= j`.
fn sdpa_positions(cones: &[ConeBlock]) -> Result<Vec<(usize, usize, usize, f64)>> {
    let mut out = Vec::new();
    for (blk, cone) in cones.iter().enumerate() {
        match *cone {
            ConeBlock::NonNeg(d) => out.extend((1..=d).map(|i| (blk + 1, i, i, 1.0))),
            ConeBlock::Psd(p) => {
                let start = out.len();
                out.resize(start + cone.size(), (0, 0, 0, 0.0));
                for b in 0..p {
                    for a in 0..=b {
                        // svec carries √2 on off-diagonals; F•X counts them twice
                        let f = if a == b { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 };
                        out[start + svec_index(a, b)] = (blk + 1, a + 1, b + 1, f);
                    }
                }
            }
            other => {
                return Err(Error::Sdpa(format!(
                    "{} cones have no .dat-s representation; use the JSON dump",
                    other.kind()
                )))
            }
        }
    }
    Ok(out)
}

/// SDPA sparse text for a program whose cones are all PSD or nonnegative.
pub fn to_sdpa(sf: &StandardForm) -> Result<String> {
    let pos = sdpa_positions(&sf.cones)?;
    let mut s = String::new();
    let _ = writeln!(s, "\"{} form, exported\"", sf.form);
    let _ = writeln!(s, "{}", sf.rows());
    let _ = writeln!(s, "{}", sf.cones.len());
    let sizes: Vec<String> = sf
        .cones
        .iter()
        .map(|c| match *c {
            ConeBlock::NonNeg(d) => format!("-{d}"),
            other => other.dim().to_string(),
        })
        .collect();
    let _ = writeln!(s, "{}", sizes.join(" "));
    // `0 − v` rather than `−v` so zero costs print unsigned
    let costs: Vec<String> = sf.b.iter().map(|&v| format!("{:e}", 0.0 - v)).collect();
    let _ = writeln!(s, "{}", costs.join(" "));
    let mut emit = |mat: usize, k: usize, v: f64| {
        if v != 0.0 {
            let (blk, i, j, f) = pos[k];
            let _ = writeln!(s, "{mat} {blk} {i} {j} {:e}", -v * f);
        }
    };
    for (k, &v) in sf.c.iter().enumerate() {
        emit(0, k, v);
    }
    for i in 0..sf.rows() {
        for &(k, v) in sf.a.row(i) {
            emit(i + 1, k, v);
        }
    }
    Ok(s)
}

/// Parses SDPA sparse text back into a (D)-form [`StandardForm`].
pub fn from_sdpa(text: &str) -> Result<StandardForm> {
    let bad = |msg: &str| Error::Sdpa(msg.to_string());
    let mut lines = text
        .lines()
        .map(|l| l.split(['*', '"']).next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let mut next = |what: &str| lines.next().ok_or_else(|| bad(&format!("missing {what}")));
    let nums = |l: &str| -> Result<Vec<f64>> {
        l.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')'))
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|_| bad(&format!("bad number {t:?}"))))
            .collect()
    };
    let m = nums(next("constraint count")?)?.first().copied().ok_or_else(|| bad("constraint count"))? as usize;
    let nblocks = nums(next("block count")?)?.first().copied().ok_or_else(|| bad("block count"))? as usize;
    let sizes = nums(next("block sizes")?)?;
    if sizes.len() != nblocks {
        return Err(bad("block size list length"));
    }
    let cones: Vec<ConeBlock> = sizes
        .iter()
        .map(|&s| if s < 0.0 { ConeBlock::NonNeg(-s as usize) } else { ConeBlock::Psd(s as usize) })
        .collect();
    let costs = nums(next("cost vector")?)?;
    if costs.len() != m {
        return Err(bad("cost vector length"));
    }
    let mut offsets = Vec::with_capacity(nblocks);
    let mut n = 0;
    for c in &cones {
        offsets.push(n);
        n += c.size();
    }
    let mut c = vec![0.0; n];
    let mut trip = Vec::new();
    for line in lines {
        let v = nums(line)?;
        if v.len() != 5 {
            return Err(bad(&format!("entry line {line:?}")));
        }
        let (mat, blk, i, j) = (v[0] as usize, v[1] as usize, v[2] as usize, v[3] as usize);
        if mat > m || blk == 0 || blk > nblocks || i == 0 || j == 0 {
            return Err(bad(&format!("entry index in {line:?}")));
        }
        let (i, j) = (i.min(j) - 1, i.max(j) - 1);
        let k = match cones[blk - 1] {
            ConeBlock::NonNeg(d) if i == j && j < d => offsets[blk - 1] + i,
            ConeBlock::Psd(p) if j < p => offsets[blk - 1] + svec_index(i, j),
            _ => return Err(bad(&format!("entry outside its block in {line:?}"))),
        };
        let f = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
        let val = -v[4] * f;
        if mat == 0 {
            c[k] += val;
        } else {
            trip.push((mat - 1, k, val));
        }
    }
    let a = CsrMatrix::from_triplets(m, n, &trip);
    let b = costs.iter().map(|v| -v).collect();
    Ok(StandardForm::new(Form::D, a, b, c, cones))
}
