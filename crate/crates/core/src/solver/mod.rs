//! Primal–dual interior-point solver for `min cᵀx, Ax = b, x ∈ K` over
//! products of nonnegative orthants, second-order cones and PSD cones.
//!
//! Homogeneous self-dual embedding, Nesterov–Todd scaling, Mehrotra
//! predictor–corrector. Newton systems go through a sparse quasi-definite
//! KKT factorization, with dense normal equations as the fallback.

pub mod cones;
mod kkt;
mod normal;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relax::ConeBlock;
use crate::sparse::CsrMatrix;
use crate::standard::{Form, StandardForm};
use cones::{dot, jordan_div, norm, Cone, Scaling};
use kkt::{Kkt, KktFactor};
use normal::{Factor, NormalMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub tol_gap: f64,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iterations: usize,
    pub step_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_gap: 1e-8,
            tol_primal: 1e-8,
            tol_dual: 1e-8,
            max_iterations: 200,
            step_fraction: 0.99,
        }
    }
}

impl SolverConfig {
    /// All three tolerances set to `tol`.
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol_gap: tol,
            tol_primal: tol,
            tol_dual: tol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let tols = [self.tol_gap, self.tol_primal, self.tol_dual];
        if tols.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::SolverInput("tolerances must be positive".into()));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::SolverInput("step_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    IterationLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Per-iteration diagnostics of the (normalized) iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateInfo {
    pub mu: f64,
    pub tau: f64,
    pub kappa: f64,
    /// `cᵀx̂ − bᵀŷ` at `x̂ = x/τ`, `ŷ = y/τ`.
    pub gap: f64,
    pub residuals: Residuals,
    /// Smallest cone margin of `x` and of `s` (positive means interior).
    pub x_margin: f64,
    pub s_margin: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    /// `cᵀx + offset` for P; `bᵀy + offset` for D.
    pub primal_obj: f64,
    /// The other side of the pair.
    pub dual_obj: f64,
    pub iterations: usize,
    pub residuals: Residuals,
    pub trace: Vec<IterateInfo>,
    pub seconds: f64,
}

/// Relative KKT residuals of `(x, y, s)`.
pub fn residuals(sf: &StandardForm, sol: &Solution) -> Residuals {
    kkt_residuals(sf, &sol.x, &sol.y, &sol.s)
}

fn kkt_residuals(sf: &StandardForm, x: &[f64], y: &[f64], s: &[f64]) -> Residuals {
    let ax = sf.a.mul_vec(x);
    let rp: Vec<f64> = ax.iter().zip(&sf.b).map(|(a, b)| a - b).collect();
    let aty = sf.a.tr_mul_vec(y);
    let rd: Vec<f64> = (0..x.len()).map(|i| aty[i] + s[i] - sf.c[i]).collect();
    let cx = dot(&sf.c, x);
    let by = dot(&sf.b, y);
    Residuals {
        primal: norm(&rp) / (1.0 + norm(&sf.b)),
        dual: norm(&rd) / (1.0 + norm(&sf.c)),
        gap: (cx - by).abs() / (1.0 + cx.abs() + by.abs()),
    }
}

fn cone_list(sf: &StandardForm) -> Result<Vec<(Cone, usize)>> {
    let mut out = Vec::new();
    let mut off = 0;
    for b in &sf.cones {
        let cone = match *b {
            ConeBlock::NonNeg(d) => Cone::NonNeg(d),
            ConeBlock::SecondOrder(d) if d >= 1 => Cone::Soc(d),
            ConeBlock::Psd(p) => Cone::Psd(p),
            other => {
                return Err(Error::SolverInput(format!(
                    "cone {other:?} is not supported by the solver"
                )))
            }
        };
        if cone.size() > 0 {
            out.push((cone, off));
        }
        off += cone.size();
    }
    if off != sf.c.len() {
        return Err(Error::SolverInput(format!(
            "cone sizes sum to {off} but c has length {}",
            sf.c.len()
        )));
    }
    Ok(out)
}

fn check_dims(sf: &StandardForm) -> Result<()> {
    if sf.a.ncols() != sf.c.len() || sf.a.nrows() != sf.b.len() {
        return Err(Error::SolverInput(format!(
            "A is {}x{}, b has length {}, c has length {}",
            sf.a.nrows(),
            sf.a.ncols(),
            sf.b.len(),
            sf.c.len()
        )));
    }
    if sf.cones.is_empty() {
        return Err(Error::SolverInput("empty cone".into()));
    }
    if sf.b.iter().chain(&sf.c).any(|v| !v.is_finite()) {
        return Err(Error::SolverInput("non-finite data".into()));
    }
    Ok(())
}

struct Workspace {
    cones: Vec<(Cone, usize)>,
    scalings: Vec<Scaling>,
    /// λ per cone (PSD: diagonal entries).
    lam: Vec<Vec<f64>>,
}

impl Workspace {
    fn for_each<F: FnMut(usize, Cone, std::ops::Range<usize>)>(&self, mut f: F) {
        for (k, &(cone, off)) in self.cones.iter().enumerate() {
            f(k, cone, off..off + cone.size());
        }
    }

    /// λ as a full vector (PSD: svec of the diagonal matrix).
    /// Smallest squared eigenvalue of the scaled point over all cones, or
    /// `None` when `(x, s)` is not interior.
    fn min_lambda_sq(&self, x: &[f64], s: &[f64]) -> Option<f64> {
        let mut worst = f64::INFINITY;
        for &(cone, off) in &self.cones {
            let r = off..off + cone.size();
            let (_, lam) = Scaling::compute(cone, &x[r.clone()], &s[r])?;
            let lo = match cone {
                Cone::Soc(_) => lam[0] - norm(&lam[1..]),
                _ => lam.iter().copied().fold(f64::INFINITY, f64::min),
            };
            if !(lo > 0.0) {
                return None;
            }
            worst = worst.min(lo * lo);
        }
        Some(worst)
    }

    fn lambda_vec(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.for_each(|k, cone, r| match cone {
            Cone::Psd(p) => {
                for a in 0..p {
                    out[r.start + cones::svec_index(a, a)] = self.lam[k][a];
                }
            }
            _ => out[r].copy_from_slice(&self.lam[k]),
        });
        out
    }

    fn magnitude(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.for_each(|k, _, r| self.scalings[k].magnitude(&mut out[r]));
        out
    }

    fn apply(&self, which: Op, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.for_each(|k, _, r| {
            let sc = &self.scalings[k];
            let (src, dst) = (&v[r.clone()], &mut out[r]);
            match which {
                Op::W => sc.apply_w(src, dst),
                Op::WinvT => sc.apply_winv_t(src, dst),
                Op::Winv => sc.apply_winv(src, dst),
                Op::H => sc.apply_h(src, dst),
            }
        });
        out
    }

    /// `λ ⋄ v` (solve `λ ∘ z = v`).
    fn lam_div(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.for_each(|k, cone, r| jordan_div(cone, &self.lam[k], &v[r.clone()], &mut out[r]));
        out
    }

    fn jordan(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.for_each(|_, cone, r| cone.jordan_prod(&u[r.clone()], &v[r.clone()], &mut out[r]));
        out
    }

    fn unit(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.for_each(|_, cone, r| cone.unit(&mut out[r]));
        out
    }

    fn max_step(&self, x: &[f64], d: &[f64]) -> f64 {
        let mut a = f64::INFINITY;
        self.for_each(|_, cone, r| a = a.min(cone.max_step(&x[r.clone()], &d[r])));
        a
    }

    fn margin(&self, x: &[f64]) -> f64 {
        let mut m = f64::INFINITY;
        self.for_each(|_, cone, r| m = m.min(cone.margin(&x[r])));
        m
    }
}

enum Backend {
    Normal(NormalMatrix),
    Kkt(Kkt),
}

impl Backend {
    fn new(a: &CsrMatrix, cones: &[(Cone, usize)]) -> Self {
        match Kkt::new(a, cones) {
            Some(k) => Backend::Kkt(k),
            None => Backend::Normal(NormalMatrix::new(a, cones)),
        }
    }

    /// The other formulation, if it can be built.
    fn other(&self, a: &CsrMatrix, cones: &[(Cone, usize)]) -> Option<Self> {
        match self {
            Backend::Kkt(_) => Some(Backend::Normal(NormalMatrix::new(a, cones))),
            Backend::Normal(_) => Kkt::new(a, cones).map(Backend::Kkt),
        }
    }
}

/// Centrality requirement `λ_min² ≥ NEIGHBORHOOD · μ` for accepted steps.
const NEIGHBORHOOD: f64 = 1e-8;
const BACKTRACK: f64 = 0.8;
const MAX_BACKTRACK: usize = 30;

/// Backend switches allowed per solve.
const MAX_SWITCHES: usize = 2;
/// A step shorter than this counts as a stall.
const STALL_STEP: f64 = 1e-3;

enum LinearSystem<'a> {
    Normal(Factor),
    Kkt(KktFactor<'a>),
}

#[derive(Clone, Copy)]
enum Op {
    W,
    WinvT,
    Winv,
    H,
}

/// Rows of `A` that are numerically independent (pivot threshold 1e-12 on
/// `A Aᵀ`); dependent rows are reported with a warning.
fn independent_rows(sf: &StandardForm) -> Vec<usize> {
    let keep = normal::independent_rows(&sf.a);
    if keep.len() < sf.a.nrows() {
        log::warn!(
            "dropping {} linearly dependent equality rows",
            sf.a.nrows() - keep.len()
        );
    }
    keep
}

fn finish(
    sf: &StandardForm,
    status: Status,
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    iterations: usize,
    trace: Vec<IterateInfo>,
    start: Instant,
) -> Solution {
    let residuals = kkt_residuals(sf, &x, &y, &s);
    let cx = dot(&sf.c, &x);
    let by = dot(&sf.b, &y);
    let (primal_obj, dual_obj) = match sf.form {
        Form::P => (cx + sf.offset, by + sf.offset),
        Form::D => (by + sf.offset, cx + sf.offset),
    };
    Solution {
        status,
        x,
        y,
        s,
        primal_obj,
        dual_obj,
        iterations,
        residuals,
        trace,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Solves the standard-form pair `(P) min cᵀx, Ax = b, x ∈ K` and
/// `(D) max bᵀy, Aᵀy + s = c, s ∈ K`.
pub fn solve(sf: &StandardForm, cfg: &SolverConfig) -> Result<Solution> {
    let start = Instant::now();
    cfg.validate()?;
    check_dims(sf)?;
    let cone_list = cone_list(sf)?;
    let n = sf.c.len();
    let m_full = sf.b.len();
    let keep = independent_rows(sf);
    let a = sf.a.select_rows(&keep);
    let b: Vec<f64> = keep.iter().map(|&i| sf.b[i]).collect();
    let c = &sf.c;
    let m = keep.len();
    let nu: usize = cone_list.iter().map(|(k, _)| k.degree()).sum();
    let mut backend = Backend::new(&a, &cone_list);
    let mut switches = 0;
    let mut want_switch = false;
    // last accepted iterate, restored when the next one proves unusable
    let mut prev: Option<(Vec<f64>, Vec<f64>, Vec<f64>, f64, f64)> = None;

    let mut ws = Workspace {
        cones: cone_list,
        scalings: Vec::new(),
        lam: Vec::new(),
    };
    let scale = 1f64.max(norm(&b)).max(norm(c));
    let e = ws.unit(n);
    let mut x: Vec<f64> = e.iter().map(|v| v * scale).collect();
    let mut s = x.clone();
    let mut y = vec![0.0; m];
    let mut tau = 1.0;
    let mut kappa = scale * scale;
    let mut trace = Vec::new();

    let expand_y = |y: &[f64], tau: f64| -> Vec<f64> {
        let mut full = vec![0.0; m_full];
        for (k, &i) in keep.iter().enumerate() {
            full[i] = y[k] / tau;
        }
        full
    };
    let scaled = |v: &[f64], tau: f64| -> Vec<f64> { v.iter().map(|z| z / tau).collect() };

    let nb = norm(&b).max(1.0);
    let nc = norm(c).max(1.0);

    for iter in 0..cfg.max_iterations {
        // A stalled or failed step is retried with the other linear system;
        // the two formulations lose accuracy on different problems.
        if want_switch {
            want_switch = false;
            if let Some(other) = backend.other(&a, &ws.cones) {
                log::debug!("switching linear system at iteration {iter}");
                backend = other;
                switches += 1;
            }
        }
        // residuals of the embedding
        let ax = a.mul_vec(&x);
        let aty = a.tr_mul_vec(&y);
        let rp: Vec<f64> = (0..m).map(|i| ax[i] - b[i] * tau).collect();
        let rd: Vec<f64> = (0..n).map(|i| aty[i] + s[i] - c[i] * tau).collect();
        let cx = dot(c, &x);
        let by = dot(&b, &y);
        let rg = by - cx - kappa;
        let mu = (dot(&x, &s) + tau * kappa) / (nu as f64 + 1.0);

        let xh = scaled(&x, tau);
        let sh = scaled(&s, tau);
        let yh = expand_y(&y, tau);
        let res = kkt_residuals(sf, &xh, &yh, &sh);
        trace.push(IterateInfo {
            mu,
            tau,
            kappa,
            gap: (cx - by) / tau,
            residuals: res,
            x_margin: ws.margin(&x),
            s_margin: ws.margin(&s),
        });
        log::debug!(
            "iter {iter:3} mu {mu:.3e} pres {:.2e} dres {:.2e} gap {:.2e} tau {tau:.2e} kappa {kappa:.2e}",
            res.primal,
            res.dual,
            res.gap
        );
        if res.primal <= cfg.tol_primal && res.dual <= cfg.tol_dual && res.gap <= cfg.tol_gap {
            return Ok(finish(sf, Status::Optimal, xh, yh, sh, iter, trace, start));
        }
        // infeasibility certificates
        if by > 0.0 {
            let aty_s: Vec<f64> = (0..n).map(|i| aty[i] + s[i]).collect();
            if norm(&aty_s) / by <= cfg.tol_dual * nc && tau / kappa < 1e-6 {
                let yc: Vec<f64> = expand_y(&y, by);
                let sc = scaled(&s, by);
                return Ok(finish(sf, Status::PrimalInfeasible, vec![0.0; n], yc, sc, iter, trace, start));
            }
        }
        if cx < 0.0 {
            if norm(&ax) / -cx <= cfg.tol_primal * nb && tau / kappa < 1e-6 {
                let xc = scaled(&x, -cx);
                return Ok(finish(sf, Status::DualInfeasible, xc, vec![0.0; m_full], vec![0.0; n], iter, trace, start));
            }
        }
        if tau / kappa < 1e-10 {
            let status = if by > -cx {
                Status::PrimalInfeasible
            } else {
                Status::DualInfeasible
            };
            return Ok(finish(sf, status, xh, yh, sh, iter, trace, start));
        }

        // scaling
        ws.scalings.clear();
        ws.lam.clear();
        for &(cone, off) in &ws.cones {
            let r = off..off + cone.size();
            match Scaling::compute(cone, &x[r.clone()], &s[r]) {
                Some((sc, lam)) => {
                    ws.scalings.push(sc);
                    ws.lam.push(lam);
                }
                None => {
                    log::warn!("iterate left the cone interior at iteration {iter}");
                    if switches < MAX_SWITCHES {
                        if let Some((px, ps, py, pt, pk)) = prev.take() {
                            (x, s, y, tau, kappa) = (px, ps, py, pt, pk);
                            want_switch = true;
                            break;
                        }
                    }
                    return Ok(finish(sf, Status::NumericalFailure, xh, yh, sh, iter, trace, start));
                }
            }
        }
        if want_switch {
            continue;
        }
        let system = match &backend {
            Backend::Normal(nm) => nm.factor(&ws.scalings).map(LinearSystem::Normal),
            Backend::Kkt(k) => k.factor(&ws.scalings).map(LinearSystem::Kkt),
        };
        let Some(system) = system else {
            log::warn!("linear system factorization failed at iteration {iter}");
            if switches < MAX_SWITCHES {
                want_switch = true;
                continue;
            }
            return Ok(finish(sf, Status::NumericalFailure, xh, yh, sh, iter, trace, start));
        };
        // Solves −H⁻¹dx + Aᵀdy = rx, A dx = ry.
        let kkt_solve = |rx: &[f64], ry: &[f64]| -> (Vec<f64>, Vec<f64>) {
            match &system {
                LinearSystem::Normal(f) => {
                    let ahr = a.mul_vec(&ws.apply(Op::H, rx));
                    let rhs: Vec<f64> = (0..m).map(|i| ry[i] + ahr[i]).collect();
                    let dy = f.solve(&rhs);
                    let aty = a.tr_mul_vec(&dy);
                    let dx = ws.apply(Op::H, &(0..n).map(|i| aty[i] - rx[i]).collect::<Vec<_>>());
                    (dx, dy)
                }
                LinearSystem::Kkt(f) => f.solve(rx, ry),
            }
        };
        let (v2, u2) = kkt_solve(c, &b);
        let denom_base = dot(&b, &u2) - dot(c, &v2) + kappa / tau;

        let dual_ds: Vec<bool> = match &system {
            LinearSystem::Normal(_) => vec![true; n],
            LinearSystem::Kkt(_) => ws.magnitude(n).iter().map(|&w| w < 1.0).collect(),
        };

        let lam_v = ws.lambda_vec(n);
        let lam_sq = ws.jordan(&lam_v, &lam_v);

        // Solves the linearized system for given right-hand sides.
        let direction = |eta: f64, q: &[f64], r_tk: f64| {
            let rpv: Vec<f64> = rp.iter().map(|v| -eta * v).collect();
            let rdv: Vec<f64> = rd.iter().map(|v| -eta * v).collect();
            let rgv = -eta * rg;
            let winvq = ws.apply(Op::Winv, q);
            let rx: Vec<f64> = (0..n).map(|i| rdv[i] - winvq[i]).collect();
            let (v1, u1) = kkt_solve(&rx, &rpv);
            let dtau = (rgv - dot(&b, &u1) + dot(c, &v1) + r_tk / tau) / denom_base;
            let mut dx: Vec<f64> = (0..n).map(|i| v1[i] + dtau * v2[i]).collect();
            let mut dy: Vec<f64> = (0..m).map(|i| u1[i] + dtau * u2[i]).collect();
            // Correct the primal equation along (H Aᵀδ, δ, −Aᵀδ), which leaves
            // the dual equation and the linearized complementarity intact.
            for _ in 0..2 {
                let adx = a.mul_vec(&dx);
                let defect: Vec<f64> = (0..m).map(|i| rpv[i] + b[i] * dtau - adx[i]).collect();
                if norm(&defect) <= 1e-15 * nb {
                    break;
                }
                let (hat, du) = kkt_solve(&vec![0.0; n], &defect);
                for i in 0..n {
                    dx[i] += hat[i];
                }
                for i in 0..m {
                    dy[i] += du[i];
                }
            }
            let dkappa = (r_tk - kappa * dtau) / tau;
            // Δs from the dual equation keeps dual feasibility exact but puts
            // the solve error `e` of the first block into complementarity as
            // `W e`; from complementarity it goes into the dual residual. Pick
            // per cone whichever is damped.
            let atdy = a.tr_mul_vec(&dy);
            let hdx = ws.apply(Op::Winv, &ws.apply(Op::WinvT, &dx));
            let ds: Vec<f64> = (0..n)
                .map(|i| {
                    if dual_ds[i] {
                        rdv[i] - atdy[i] + c[i] * dtau
                    } else {
                        winvq[i] - hdx[i]
                    }
                })
                .collect();
            (dx, dy, ds, dtau, dkappa)
        };
        let step_len = |dx: &[f64], ds: &[f64], dtau: f64, dkappa: f64| {
            let mut a = ws.max_step(&x, dx).min(ws.max_step(&s, ds));
            if dtau < 0.0 {
                a = a.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                a = a.min(-kappa / dkappa);
            }
            a
        };

        // predictor
        let q_aff: Vec<f64> = lam_v.iter().map(|v| -v).collect();
        let (dxa, _dya, dsa, dtaua, dkappaa) = direction(1.0, &q_aff, -tau * kappa);
        let alpha_aff = step_len(&dxa, &dsa, dtaua, dkappaa).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector
        let corr = ws.jordan(&ws.apply(Op::WinvT, &dxa), &ws.apply(Op::W, &dsa));
        let target: Vec<f64> = (0..n)
            .map(|i| sigma * mu * e[i] - lam_sq[i] - corr[i])
            .collect();
        let q = ws.lam_div(&target);
        let r_tk = sigma * mu - tau * kappa - dtaua * dkappaa;
        let (dx, dy, ds, dtau, dkappa) = direction(1.0 - sigma, &q, r_tk);
        let mut alpha = (cfg.step_fraction * step_len(&dx, &ds, dtau, dkappa)).min(1.0);
        // Backtrack into a wide neighborhood of the central path: no cone may
        // approach its boundary much faster than μ shrinks.
        for _ in 0..MAX_BACKTRACK {
            let xt: Vec<f64> = (0..n).map(|i| x[i] + alpha * dx[i]).collect();
            let st: Vec<f64> = (0..n).map(|i| s[i] + alpha * ds[i]).collect();
            let (tt, kt) = (tau + alpha * dtau, kappa + alpha * dkappa);
            let mu_t = (dot(&xt, &st) + tt * kt) / (nu as f64 + 1.0);
            let central = ws
                .min_lambda_sq(&xt, &st)
                .is_some_and(|l| l >= NEIGHBORHOOD * mu_t && tt * kt >= NEIGHBORHOOD * mu_t);
            if central {
                break;
            }
            alpha *= BACKTRACK;
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            if switches < MAX_SWITCHES {
                want_switch = true;
                continue;
            }
            return Ok(finish(sf, Status::NumericalFailure, xh, yh, sh, iter, trace, start));
        }
        if alpha < STALL_STEP && switches < MAX_SWITCHES {
            want_switch = true;
        }
        prev = Some((x.clone(), s.clone(), y.clone(), tau, kappa));
        for i in 0..n {
            x[i] += alpha * dx[i];
            s[i] += alpha * ds[i];
        }
        for i in 0..m {
            y[i] += alpha * dy[i];
        }
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        if x.iter().chain(&s).chain(&y).any(|v| !v.is_finite()) {
            return Ok(finish(sf, Status::NumericalFailure, xh, yh, sh, iter, trace, start));
        }
    }
    let xh = scaled(&x, tau);
    let sh = scaled(&s, tau);
    let yh = expand_y(&y, tau);
    Ok(finish(
        sf,
        Status::IterationLimit,
        xh,
        yh,
        sh,
        cfg.max_iterations,
        trace,
        start,
    ))
}
