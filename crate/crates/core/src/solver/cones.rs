//! Per-cone primitives: identity element, Nesterov–Todd scaling, Jordan
//! product and division, and maximal step to the boundary.

use nalgebra::{DMatrix, SymmetricEigen};

/// Symmetric-vector (`svec`) index of entry `(a, b)`, `a <= b`, 0-based.
#[inline]
pub fn svec_index(a: usize, b: usize) -> usize {
    debug_assert!(a <= b);
    b * (b + 1) / 2 + a
}

pub fn svec_len(side: usize) -> usize {
    side * (side + 1) / 2
}

/// Dense symmetric matrix from its `svec` (off-diagonals carry a √2 factor).
pub fn smat(v: &[f64], side: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(side, side);
    for b in 0..side {
        for a in 0..=b {
            let x = v[svec_index(a, b)];
            if a == b {
                m[(a, a)] = x;
            } else {
                let y = x * std::f64::consts::FRAC_1_SQRT_2;
                m[(a, b)] = y;
                m[(b, a)] = y;
            }
        }
    }
    m
}

pub fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let side = m.nrows();
    for b in 0..side {
        for a in 0..=b {
            out[svec_index(a, b)] = if a == b {
                m[(a, a)]
            } else {
                (m[(a, b)] + m[(b, a)]) * std::f64::consts::FRAC_1_SQRT_2
            };
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    NonNeg(usize),
    Soc(usize),
    Psd(usize),
}

impl Cone {
    pub fn size(self) -> usize {
        match self {
            Cone::NonNeg(d) | Cone::Soc(d) => d,
            Cone::Psd(p) => svec_len(p),
        }
    }

    pub fn degree(self) -> usize {
        match self {
            Cone::NonNeg(d) => d,
            Cone::Soc(_) => 1,
            Cone::Psd(p) => p,
        }
    }

    pub fn unit(self, out: &mut [f64]) {
        out.fill(0.0);
        match self {
            Cone::NonNeg(_) => out.fill(1.0),
            Cone::Soc(_) => out[0] = 1.0,
            Cone::Psd(p) => {
                for a in 0..p {
                    out[svec_index(a, a)] = 1.0;
                }
            }
        }
    }

    /// Distance-like interior measure: positive iff `x` is in the interior.
    pub fn margin(self, x: &[f64]) -> f64 {
        match self {
            Cone::NonNeg(_) => x.iter().copied().fold(f64::INFINITY, f64::min),
            Cone::Soc(_) => x[0] - norm(&x[1..]),
            Cone::Psd(p) => {
                let m = smat(x, p);
                SymmetricEigen::new(m).eigenvalues.min()
            }
        }
    }

    /// Largest `α` such that `x + α d` stays in the cone (`x` interior);
    /// `f64::INFINITY` when unbounded.
    pub fn max_step(self, x: &[f64], d: &[f64]) -> f64 {
        match self {
            Cone::NonNeg(_) => {
                let mut a = f64::INFINITY;
                for (xi, di) in x.iter().zip(d) {
                    if *di < 0.0 {
                        a = a.min(-xi / di);
                    }
                }
                a
            }
            Cone::Soc(_) => soc_max_step(x, d),
            Cone::Psd(p) => {
                let xm = smat(x, p);
                let dm = smat(d, p);
                let Some(ch) = xm.cholesky() else {
                    return 0.0;
                };
                let l = ch.l();
                // L⁻¹ D L⁻ᵀ
                let Some(y) = l.solve_lower_triangular(&dm) else {
                    return 0.0;
                };
                let Some(z) = l.solve_lower_triangular(&y.transpose()) else {
                    return 0.0;
                };
                let z = (&z + z.transpose()) * 0.5;
                let lmin = SymmetricEigen::new(z).eigenvalues.min();
                if lmin < 0.0 {
                    -1.0 / lmin
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Jordan product `u ∘ v`.
    pub fn jordan_prod(self, u: &[f64], v: &[f64], out: &mut [f64]) {
        match self {
            Cone::NonNeg(_) => {
                for i in 0..u.len() {
                    out[i] = u[i] * v[i];
                }
            }
            Cone::Soc(_) => {
                out[0] = dot(u, v);
                for i in 1..u.len() {
                    out[i] = u[0] * v[i] + v[0] * u[i];
                }
            }
            Cone::Psd(p) => {
                let um = smat(u, p);
                let vm = smat(v, p);
                let w = &um * &vm;
                let s = (&w + w.transpose()) * 0.5;
                svec_into(&s, out);
            }
        }
    }
}

/// Solve `λ ∘ z = v` for `z`. For the PSD cone `λ` is diagonal and `lam`
/// holds its diagonal entries.
pub fn jordan_div(cone: Cone, lam: &[f64], v: &[f64], out: &mut [f64]) {
    match cone {
        Cone::NonNeg(_) => {
            for i in 0..v.len() {
                out[i] = v[i] / lam[i];
            }
        }
        Cone::Soc(_) => {
            // λ∘z = v with arrow matrix; closed form inverse.
            let l0 = lam[0];
            let l1 = &lam[1..];
            let det = l0 * l0 - dot(l1, l1);
            let l1v1 = dot(l1, &v[1..]);
            let z0 = (l0 * v[0] - l1v1) / det;
            out[0] = z0;
            for i in 1..v.len() {
                out[i] = (v[i] - z0 * lam[i]) / l0;
            }
        }
        Cone::Psd(p) => {
            for b in 0..p {
                for a in 0..=b {
                    let k = svec_index(a, b);
                    out[k] = 2.0 * v[k] / (lam[a] + lam[b]);
                }
            }
        }
    }
}

fn soc_max_step(x: &[f64], d: &[f64]) -> f64 {
    let a = d[0] * d[0] - dot(&d[1..], &d[1..]);
    let b = 2.0 * (x[0] * d[0] - dot(&x[1..], &d[1..]));
    let c = x[0] * x[0] - dot(&x[1..], &x[1..]);
    let c = c.max(0.0);
    let mut alpha = f64::INFINITY;
    // smallest positive root of a α² + b α + c
    if a.abs() < 1e-300 {
        if b < 0.0 {
            alpha = -c / b;
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let q = -0.5 * (b + b.signum() * sq);
            let mut roots = [f64::INFINITY; 2];
            if q != 0.0 {
                roots[0] = q / a;
                roots[1] = c / q;
            } else {
                roots[0] = 0.0;
            }
            for r in roots {
                if r > 0.0 && r < alpha {
                    alpha = r;
                }
            }
            if a > 0.0 && b >= 0.0 {
                alpha = f64::INFINITY;
            }
        }
    }
    // the first coordinate must stay nonnegative too
    if d[0] < 0.0 {
        alpha = alpha.min(-x[0] / d[0]);
    }
    alpha
}

/// Nesterov–Todd scaling of one cone at `(x, s)`: `W⁻ᵀ x = W s = λ`.
#[derive(Debug, Clone)]
pub enum Scaling {
    NonNeg {
        w: Vec<f64>,
    },
    Soc {
        beta: f64,
        wbar: Vec<f64>,
    },
    Psd {
        side: usize,
        r: DMatrix<f64>,
        rinv: DMatrix<f64>,
        g: DMatrix<f64>,
    },
}

impl Scaling {
    /// Returns the scaling and the scaled point `λ` (PSD: its diagonal).
    pub fn compute(cone: Cone, x: &[f64], s: &[f64]) -> Option<(Scaling, Vec<f64>)> {
        match cone {
            Cone::NonNeg(_) => {
                if x.iter().chain(s).any(|v| *v <= 0.0 || !v.is_finite()) {
                    return None;
                }
                let w: Vec<f64> = x.iter().zip(s).map(|(a, b)| (a / b).sqrt()).collect();
                let lam = x.iter().zip(s).map(|(a, b)| (a * b).sqrt()).collect();
                Some((Scaling::NonNeg { w }, lam))
            }
            Cone::Soc(d) => {
                let xjx = x[0] * x[0] - dot(&x[1..], &x[1..]);
                let sjs = s[0] * s[0] - dot(&s[1..], &s[1..]);
                if !(xjx > 0.0 && sjs > 0.0 && x[0] > 0.0 && s[0] > 0.0) {
                    return None;
                }
                let xn = xjx.sqrt();
                let sn = sjs.sqrt();
                let xb: Vec<f64> = x.iter().map(|v| v / xn).collect();
                let sb: Vec<f64> = s.iter().map(|v| v / sn).collect();
                let gamma = ((1.0 + dot(&xb, &sb)) / 2.0).sqrt();
                let mut wbar = vec![0.0; d];
                wbar[0] = (xb[0] + sb[0]) / (2.0 * gamma);
                for i in 1..d {
                    wbar[i] = (xb[i] - sb[i]) / (2.0 * gamma);
                }
                let beta = (xn / sn).sqrt();
                let sc = Scaling::Soc { beta, wbar };
                let mut lam = vec![0.0; d];
                sc.apply_w(s, &mut lam);
                Some((sc, lam))
            }
            Cone::Psd(p) => {
                let xm = smat(x, p);
                let sm = smat(s, p);
                let l1 = xm.cholesky()?.l();
                let l2 = sm.cholesky()?.l();
                let prod = l2.transpose() * &l1;
                let svd = prod.svd(true, true);
                let u = svd.u?;
                let vt = svd.v_t?;
                let sig = svd.singular_values;
                if sig.iter().any(|v| *v <= 0.0 || !v.is_finite()) {
                    return None;
                }
                let mut r = &l1 * vt.transpose();
                let mut rinv = u.transpose() * l2.transpose();
                for k in 0..p {
                    let f = sig[k].sqrt();
                    r.column_mut(k).scale_mut(1.0 / f);
                    rinv.row_mut(k).scale_mut(1.0 / f);
                }
                let g = &r * r.transpose();
                Some((
                    Scaling::Psd { side: p, r, rinv, g },
                    sig.iter().copied().collect(),
                ))
            }
        }
    }

    /// `W v` (for SOC and NonNeg `W` is symmetric).
    /// Per-coordinate size of `W` (NonNeg: `w_i`; SOC: `β`; PSD: the
    /// geometric mean of the eigenvalues of `R`'s Gram matrix, square-rooted).
    pub fn magnitude(&self, out: &mut [f64]) {
        match self {
            Scaling::NonNeg { w } => out.copy_from_slice(w),
            Scaling::Soc { beta, .. } => out.fill(*beta),
            Scaling::Psd { side, g, .. } => {
                let v = match g.clone().cholesky() {
                    Some(ch) => {
                        let l = ch.l();
                        let logdet: f64 = (0..*side).map(|i| l[(i, i)].ln()).sum();
                        (logdet / *side as f64).exp()
                    }
                    None => 1.0,
                };
                out.fill(v);
            }
        }
    }

    pub fn apply_w(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { w } => {
                for i in 0..v.len() {
                    out[i] = v[i] * w[i];
                }
            }
            Scaling::Soc { beta, wbar } => hyperbolic(wbar, 1.0, *beta, v, out),
            Scaling::Psd { side, r, .. } => {
                // Rᵀ V R
                let m = smat(v, *side);
                svec_into(&(r.transpose() * m * r), out);
            }
        }
    }

    /// `W⁻ᵀ v`
    pub fn apply_winv_t(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { w } => {
                for i in 0..v.len() {
                    out[i] = v[i] / w[i];
                }
            }
            Scaling::Soc { beta, wbar } => hyperbolic(wbar, -1.0, 1.0 / beta, v, out),
            Scaling::Psd { side, rinv, .. } => {
                let m = smat(v, *side);
                svec_into(&(rinv * m * rinv.transpose()), out);
            }
        }
    }

    /// `Wᵀ v`
    pub fn apply_wt(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { w } => {
                for i in 0..v.len() {
                    out[i] = v[i] * w[i];
                }
            }
            Scaling::Soc { beta, wbar } => hyperbolic(wbar, 1.0, *beta, v, out),
            Scaling::Psd { side, r, .. } => {
                let m = smat(v, *side);
                svec_into(&(r * m * r.transpose()), out);
            }
        }
    }

    /// `W⁻¹ v`
    pub fn apply_winv(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { w } => {
                for i in 0..v.len() {
                    out[i] = v[i] / w[i];
                }
            }
            Scaling::Soc { beta, wbar } => hyperbolic(wbar, -1.0, 1.0 / beta, v, out),
            Scaling::Psd { side, rinv, .. } => {
                let m = smat(v, *side);
                svec_into(&(rinv.transpose() * m * rinv), out);
            }
        }
    }

    /// `H v = Wᵀ W v`
    pub fn apply_h(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Scaling::NonNeg { w } => {
                for i in 0..v.len() {
                    out[i] = v[i] * w[i] * w[i];
                }
            }
            Scaling::Soc { beta, wbar } => {
                // β² (2 w̄ w̄ᵀ − J) v
                let b2 = beta * beta;
                let wv = dot(wbar, v);
                out[0] = b2 * (2.0 * wbar[0] * wv - v[0]);
                for i in 1..v.len() {
                    out[i] = b2 * (2.0 * wbar[i] * wv + v[i]);
                }
            }
            Scaling::Psd { side, g, .. } => {
                let m = smat(v, *side);
                svec_into(&(g * m * g), out);
            }
        }
    }
}

/// Hyperbolic Householder `H(w̄)` (sign = 1) or its inverse (sign = −1),
/// scaled by `scale`.
fn hyperbolic(wbar: &[f64], sign: f64, scale: f64, v: &[f64], out: &mut [f64]) {
    let w0 = wbar[0];
    let w1 = &wbar[1..];
    let v0 = v[0];
    let v1 = &v[1..];
    let w1v1 = dot(w1, v1);
    out[0] = scale * (w0 * v0 + sign * w1v1);
    let coef = sign * v0 + w1v1 / (1.0 + w0);
    for i in 1..v.len() {
        out[i] = scale * (v[i] + coef * wbar[i]);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
