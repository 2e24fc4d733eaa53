//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! `PASS`/`FAIL` line per criterion; exits nonzero if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use qcqp_conic::completion::*;
use qcqp_conic::dual_recovery::{full_to_sparse, sparse_to_full, DualSolution};
use qcqp_conic::generators::*;
use qcqp_conic::graph::{chordal_extension, maximal_cliques, Graph};
use qcqp_conic::pipeline::{build, run};
use qcqp_conic::{
    aggregate_pattern, homogenize, residuals, solve, ConeBlock, CsrMatrix, Form, HomogenizedData, RelaxationKind,
    SolverConfig, StandardForm, Status,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OPT_TOL: f64 = 1e-6;

type Check = Result<String, String>;

fn agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= OPT_TOL * (1.0 + a.abs().max(b.abs()))
}

fn optimum(data: &HomogenizedData, kind: RelaxationKind, form: Form) -> Result<f64, String> {
    let out = run(data, kind, form, &SolverConfig::default()).map_err(|e| format!("{kind}: {e}"))?;
    out.objective.ok_or_else(|| format!("{kind} ({form}): {:?}", out.status()))
}

fn lattice_specs() -> Vec<LatticeSpec> {
    (0..20u64)
        .map(|k| LatticeSpec { n_l: 3 + (k as usize % 4), m: 3 + (k as usize * 3 % 8), seed: 1000 + k })
        .collect()
}

fn lattice_data(spec: &LatticeSpec) -> HomogenizedData {
    homogenize(&gen_lattice(spec).expect("valid spec")).expect("homogenizable")
}

/// Runs `pair` on every spec and reports the worst relative disagreement.
fn parity(
    specs: &[LatticeSpec],
    pair: impl Fn(&HomogenizedData) -> Result<(f64, f64), String>,
) -> Check {
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for s in specs {
        let (a, b) = pair(&lattice_data(s))?;
        worst = worst.max((a - b).abs() / (1.0 + a.abs().max(b.abs())));
        if !agree(a, b) {
            bad.push(format!("n_L={} m={} seed={}: {a} vs {b}", s.n_l, s.m, s.seed));
        }
    }
    let msg = format!("{} instances, worst relative gap {worst:.2e}", specs.len());
    if bad.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{msg}; {}", bad.join("; ")))
    }
}

fn criterion_1() -> Check {
    let t = Instant::now();
    let res = parity(&lattice_specs(), |d| {
        Ok((optimum(d, RelaxationKind::Fsocp, Form::D)?, optimum(d, RelaxationKind::Ssocp, Form::P)?))
    })?;
    let secs = t.elapsed().as_secs_f64();
    if secs > 120.0 {
        return Err(format!("{res}, but took {secs:.1}s"));
    }
    Ok(format!("{res}, {secs:.1}s"))
}

fn criterion_2() -> Check {
    parity(&lattice_specs(), |d| {
        Ok((optimum(d, RelaxationKind::Fsdp, Form::P)?, optimum(d, RelaxationKind::Fsocp, Form::D)?))
    })
}

fn criterion_3() -> Check {
    let specs: Vec<_> = lattice_specs().into_iter().filter(|s| s.n_l <= 4).collect();
    parity(&specs, |d| Ok((optimum(d, RelaxationKind::Ssdp, Form::P)?, optimum(d, RelaxationKind::Fsdp, Form::P)?)))
}

/// Random member of the sparse cone with positive diagonal; a few pattern
/// entries sit exactly on the boundary of their minor.
fn random_t_bar_member(rng: &mut ChaCha8Rng) -> PartialMatrix {
    let dim = rng.random_range(2..=6);
    let diag: Vec<f64> = (0..dim).map(|_| rng.random_range(0.05..3.0)).collect();
    let mut known: BTreeMap<_, _> = (1..=dim).map(|i| ((i, i), diag[i - 1])).collect();
    for j in 2..=dim {
        for i in 1..j {
            if rng.random_bool(0.5) {
                let f = if rng.random_bool(0.1) { 1.0 } else { rng.random_range(-1.0..=1.0) };
                known.insert((i, j), f * (diag[i - 1] * diag[j - 1]).sqrt());
            }
        }
    }
    PartialMatrix::from_entries(dim, known).expect("valid partial")
}

fn sample_completion(p: &PartialMatrix, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut y = zero_fill(p);
    for j in 2..=p.dim() {
        for i in 1..j {
            if !p.edges().contains(&(i, j)) {
                let r = feasible_range(p, i, j).expect("unknown position");
                let v = rng.random_range(r.lo..=r.hi);
                y[(i - 1, j - 1)] = v;
                y[(j - 1, i - 1)] = v;
            }
        }
    }
    y
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut margin = f64::INFINITY;
    for k in 0..50 {
        let p = random_t_bar_member(&mut rng);
        let x = zero_fill(&p);
        if !in_t_bar(&x, p.edges()) {
            return Err(format!("partial {k} is not in the sparse cone"));
        }
        let best = log_det_t(&x);
        for _ in 0..1000 {
            let v = log_det_t(&sample_completion(&p, &mut rng));
            if v > best + 1e-9 {
                return Err(format!("partial {k}: sample log det_T {v} exceeds zero-fill {best}"));
            }
            if v.is_finite() && v < best {
                margin = margin.min(best - v);
            }
        }
    }
    Ok(format!("50 partials x 1000 samples, smallest log-domain margin {margin:.2e}"))
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::INFINITY;
    for k in 0..50 {
        let p = random_t_bar_member(&mut rng);
        let (x, w) = zero_fill_checked(&p);
        worst = worst.min(w);
        let diag_ok = (0..x.nrows()).all(|i| x[(i, i)] >= 0.0);
        if w < -1e-10 || !diag_ok {
            return Err(format!("partial {k}: worst minor eigenvalue {w:.3e}"));
        }
        // keep the stream aligned with criterion 4
        for _ in 0..1000 {
            sample_completion(&p, &mut rng);
        }
    }
    Ok(format!("50 partials, worst minor eigenvalue {worst:.3e}"))
}

fn criterion_6() -> Check {
    let mut worst_res: f64 = 0.0;
    let mut worst_trip: f64 = 0.0;
    let specs = lattice_specs();
    for s in specs.iter().take(8) {
        let data = lattice_data(s);
        let pat = aggregate_pattern(&data);
        let out = run(&data, RelaxationKind::DualSsocp, Form::D, &SolverConfig::default()).map_err(|e| e.to_string())?;
        if out.status() != Status::Optimal {
            return Err(format!("seed {}: {:?}", s.seed, out.status()));
        }
        let sparse = DualSolution::from_values(&out.program, &out.values).ok_or("no dual layout")?;
        let full = sparse_to_full(&sparse, &pat);
        if full.xi.to_bits() != sparse.xi.to_bits() {
            return Err(format!("seed {}: ξ changed {} → {}", s.seed, sparse.xi, full.xi));
        }
        let back = full_to_sparse(&full, &pat).map_err(|e| e.to_string())?;
        if back.xi.to_bits() != sparse.xi.to_bits() {
            return Err(format!("seed {}: ξ changed on the way back", s.seed));
        }
        worst_res = worst_res.max(full.residual(&data));
        worst_trip = worst_trip.max((back.aggregate() - sparse.aggregate()).amax());
    }
    let msg = format!("8 instances, full-dual residual {worst_res:.2e}, round-trip drift {worst_trip:.2e}");
    if worst_res <= 1e-8 && worst_trip <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_7() -> Check {
    let mut counts = Vec::new();
    for n_l in 2..=8 {
        let data = lattice_data(&LatticeSpec { n_l, m: 3, seed: n_l as u64 });
        let s = build(&data, RelaxationKind::Ssocp).map_err(|e| e.to_string())?.inventory().soc;
        let f = build(&data, RelaxationKind::Fsocp).map_err(|e| e.to_string())?.inventory().soc;
        let n = n_l * n_l;
        if s != 2 * n_l * (n_l - 1) || f != (n + 1) * n / 2 {
            return Err(format!("n_L={n_l}: S-SOCP {s}, F-SOCP {f}"));
        }
        counts.push(format!("{s}/{f}"));
    }
    Ok(format!("S/F SOC blocks for n_L=2..8: {}", counts.join(" ")))
}

fn criterion_8() -> Check {
    let mut worst: f64 = 0.0;
    for k in 0..10u64 {
        let spec = ZeroDiagSpec { n: 4 + (k as usize % 7), m: 2 + (k as usize % 4), density: 0.5, seed: 2000 + k };
        let data = homogenize(&gen_zero_diag(&spec).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let a = optimum(&data, RelaxationKind::Fsdp, Form::P)?;
        let b = optimum(&data, RelaxationKind::Fsocp, Form::D)?;
        worst = worst.max((a - b).abs() / (1.0 + a.abs().max(b.abs())));
        if !agree(a, b) {
            return Err(format!("n={} seed={}: F-SDP {a} vs F-SOCP {b}", spec.n, spec.seed));
        }
    }
    Ok(format!("10 instances, worst relative gap {worst:.2e}"))
}

fn log_det(m: &DMatrix<f64>) -> Option<f64> {
    let l = Cholesky::new(m.clone())?;
    Some(2.0 * l.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut tried = 0usize;
    let mut worst_inv: f64 = 0.0;
    for k in 0..20 {
        let dim = rng.random_range(4..=6);
        let g = DMatrix::from_fn(dim, dim + 2, |_, _| rng.random_range(-1.0..1.0));
        let full = &g * g.transpose() + DMatrix::identity(dim, dim) * 0.5;
        let pairs: Vec<_> = (1..=dim).flat_map(|j| (1..j).map(move |i| (i, j))).collect();
        let graph = Graph::from_edges(dim, pairs.iter().copied().filter(|_| rng.random_bool(0.5)));
        let ext = chordal_extension(&graph);
        let cs = maximal_cliques(&ext).map_err(|e| e.to_string())?;
        let p = PartialMatrix::from_dense(&full, &ext.extended_edges()).map_err(|e| e.to_string())?;
        let x = sdp_complete(&p, &cs).map_err(|e| e.to_string())?;
        if SymmetricEigen::new(x.clone()).eigenvalues.min() < 0.0 {
            return Err(format!("partial {k}: completion not PSD"));
        }
        if p.known().iter().any(|(&(i, j), &v)| x[(i - 1, j - 1)] != v || x[(j - 1, i - 1)] != v) {
            return Err(format!("partial {k}: a known entry changed"));
        }
        let inv = x.clone().try_inverse().ok_or("singular completion")?;
        for &(i, j) in pairs.iter().filter(|e| !p.edges().contains(e)) {
            worst_inv = worst_inv.max(inv[(i - 1, j - 1)].abs());
        }
        let best = log_det(&x).ok_or("completion not positive definite")?;
        let mut accepted = 0;
        while accepted < 1000 {
            tried += 1;
            if let Some(v) = log_det(&sample_completion(&p, &mut rng)) {
                accepted += 1;
                if v > best + 1e-9 {
                    return Err(format!("partial {k}: sample log det {v} beats completion {best}"));
                }
            }
        }
    }
    let msg = format!("20 partials, 20000 accepted of {tried} draws, off-pattern |inverse| ≤ {worst_inv:.2e}");
    if worst_inv <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_10() -> Check {
    let data = lattice_data(&LatticeSpec { n_l: 8, m: 20, seed: 10 });
    let cfg = SolverConfig::default();
    let timed = |kind| -> Result<f64, String> {
        let out = run(&data, kind, Form::D, &cfg).map_err(|e| e.to_string())?;
        match out.status() {
            Status::Optimal => Ok(out.seconds()),
            st => Err(format!("{kind}: {st:?}")),
        }
    };
    let s = timed(RelaxationKind::Ssocp)?;
    let f = timed(RelaxationKind::Fsocp)?;
    let msg = format!("S-SOCP {s:.3}s vs F-SOCP {f:.3}s");
    if s < f {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn reference(sf: StandardForm, expected: f64) -> Result<String, String> {
    let sol = solve(&sf, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let r = residuals(&sf, &sol);
    let msg = format!("{:.9} in {} its", sol.primal_obj, sol.iterations);
    let ok = sol.status == Status::Optimal
        && sol.iterations <= 50
        && (sol.primal_obj - expected).abs() <= 1e-6 * (1.0 + expected.abs())
        && r.primal <= 1e-8
        && r.dual <= 1e-8
        && r.gap <= 1e-8;
    if ok {
        Ok(msg)
    } else {
        Err(format!("{msg}, {:?}, residuals {r:?}", sol.status))
    }
}

fn criterion_11() -> Check {
    // min x s.t. x − s = 1, x, s ≥ 0
    let lp = StandardForm::new(
        Form::P,
        CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, -1.0)]),
        vec![1.0],
        vec![1.0, 0.0],
        vec![ConeBlock::NonNeg(2)],
    );
    // min t s.t. ‖(3, 4)‖ ≤ t
    let soc = StandardForm::new(
        Form::P,
        CsrMatrix::from_triplets(2, 3, &[(0, 1, 1.0), (1, 2, 1.0)]),
        vec![3.0, 4.0],
        vec![1.0, 0.0, 0.0],
        vec![ConeBlock::SecondOrder(3)],
    );
    // min tr(diag(1, 2) X) s.t. tr X = 1, X ⪰ 0
    let sdp = StandardForm::new(
        Form::P,
        CsrMatrix::from_triplets(1, 3, &[(0, 0, 1.0), (0, 2, 1.0)]),
        vec![1.0],
        vec![1.0, 0.0, 2.0],
        vec![ConeBlock::Psd(2)],
    );
    let lines = [("LP", reference(lp, 1.0)), ("SOC", reference(soc, 5.0)), ("SDP", reference(sdp, 1.0))];
    let text: Vec<String> = lines
        .iter()
        .map(|(name, r)| format!("{name} {}", r.as_ref().unwrap_or_else(|e| e)))
        .collect();
    if lines.iter().all(|(_, r)| r.is_ok()) {
        Ok(text.join(", "))
    } else {
        Err(text.join(", "))
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("F-SOCP = S-SOCP on lattice instances", criterion_1),
        ("F-SDP = F-SOCP on lattice instances", criterion_2),
        ("S-SDP = F-SDP for n_L <= 4", criterion_3),
        ("zero-fill maximizes det_T", criterion_4),
        ("zero-fill lands in T_+", criterion_5),
        ("sparse dual lifts to full dual", criterion_6),
        ("SOC block counts", criterion_7),
        ("F-SDP = F-SOCP on zero-diagonal instances", criterion_8),
        ("max-det PSD completion", criterion_9),
        ("S-SOCP faster than F-SOCP at n_L = 8, m = 20", criterion_10),
        ("solver reference problems", criterion_11),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = check();
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} [{secs:.1}s]", k + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
