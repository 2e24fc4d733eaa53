use qcqp_conic::solver::{residuals, solve, SolverConfig, Status};
use qcqp_conic::{ConeBlock, CsrMatrix, Form, StandardForm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lp_min_x() -> StandardForm {
    // min x s.t. x − s = 1, x, s ≥ 0
    StandardForm::new(
        Form::P,
        CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, -1.0)]),
        vec![1.0],
        vec![1.0, 0.0],
        vec![ConeBlock::NonNeg(2)],
    )
}

fn soc_norm() -> StandardForm {
    // min t s.t. (t, u, v) ∈ SOC, u = 3, v = 4
    StandardForm::new(
        Form::P,
        CsrMatrix::from_triplets(2, 3, &[(0, 1, 1.0), (1, 2, 1.0)]),
        vec![3.0, 4.0],
        vec![1.0, 0.0, 0.0],
        vec![ConeBlock::SecondOrder(3)],
    )
}

fn sdp_trace() -> StandardForm {
    // min tr(diag(1,2) X) s.t. tr X = 1, X ⪰ 0; svec = (X11, √2 X12, X22)
    StandardForm::new(
        Form::P,
        CsrMatrix::from_triplets(1, 3, &[(0, 0, 1.0), (0, 2, 1.0)]),
        vec![1.0],
        vec![1.0, 0.0, 2.0],
        vec![ConeBlock::Psd(2)],
    )
}

fn check_reference(sf: &StandardForm, expected: f64) {
    let sol = solve(sf, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!(sol.iterations <= 50, "{} iterations", sol.iterations);
    assert!((sol.primal_obj - expected).abs() <= 1e-6 * (1.0 + expected.abs()), "{} vs {expected}", sol.primal_obj);
    let r = residuals(sf, &sol);
    assert!(r.primal <= 1e-8 && r.dual <= 1e-8 && r.gap <= 1e-8, "{r:?}");
}

#[test]
fn lp_reference() {
    check_reference(&lp_min_x(), 1.0);
}

#[test]
fn soc_reference() {
    check_reference(&soc_norm(), 5.0);
}

#[test]
fn sdp_reference() {
    check_reference(&sdp_trace(), 1.0);
}

#[test]
fn exact_lp_solution_has_zero_residuals() {
    let sf = lp_min_x();
    let mut sol = solve(&sf, &SolverConfig::default()).unwrap();
    sol.x = vec![1.0, 0.0];
    sol.y = vec![1.0];
    sol.s = vec![0.0, 1.0];
    let r = residuals(&sf, &sol);
    assert_eq!((r.primal, r.dual, r.gap), (0.0, 0.0, 0.0));
    // perturbing x by 1e-3 gives primal residual 1e-3 / (1 + ‖b‖)
    sol.x[0] += 1e-3;
    let r = residuals(&sf, &sol);
    assert!((r.primal - 1e-3 / 2.0).abs() < 1e-15);
}

#[test]
fn zero_problem_residuals() {
    let sf = StandardForm::new(
        Form::P,
        CsrMatrix::new(1, 1),
        vec![0.0],
        vec![0.0],
        vec![ConeBlock::NonNeg(1)],
    );
    let mut sol = solve(&sf, &SolverConfig::default()).unwrap();
    for x in [0.0, 0.5, 3.0] {
        sol.x = vec![x];
        sol.y = vec![0.0];
        sol.s = vec![0.0];
        let r = residuals(&sf, &sol);
        assert_eq!((r.primal, r.dual, r.gap), (0.0, 0.0, 0.0));
    }
}

#[test]
fn infeasible_lp_is_detected() {
    // x1 + x2 = −1 with x ≥ 0
    let sf = StandardForm::new(
        Form::P,
        CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]),
        vec![-1.0],
        vec![1.0, 1.0],
        vec![ConeBlock::NonNeg(2)],
    );
    let sol = solve(&sf, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, Status::PrimalInfeasible);
}

#[test]
fn unbounded_lp_is_detected() {
    // min −x1 s.t. x1 − x2 = 0
    let sf = StandardForm::new(
        Form::P,
        CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, -1.0)]),
        vec![0.0],
        vec![-1.0, 0.0],
        vec![ConeBlock::NonNeg(2)],
    );
    let sol = solve(&sf, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, Status::DualInfeasible);
}

#[test]
fn unsupported_cones_are_input_errors() {
    let mut sf = lp_min_x();
    sf.cones = vec![ConeBlock::Free(2)];
    assert!(solve(&sf, &SolverConfig::default()).is_err());
    let mut sf = lp_min_x();
    sf.b = vec![1.0, 2.0];
    assert!(solve(&sf, &SolverConfig::default()).is_err());
    let cfg = SolverConfig {
        step_fraction: 1.0,
        ..SolverConfig::default()
    };
    assert!(solve(&lp_min_x(), &cfg).is_err());
}

/// Brute-force LP optimum over `{x ≥ 0 : Ax = b}` by enumerating basic
/// solutions (all column subsets of size rank(A)).
fn brute_force_lp(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let m = a.len();
    let n = c.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let cols: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let bm = nalgebra::DMatrix::from_fn(m, m, |i, k| a[i][cols[k]]);
        let Some(inv) = bm.try_inverse() else { continue };
        let xb = inv * nalgebra::DVector::from_column_slice(b);
        if xb.iter().any(|v| *v < -1e-9) {
            continue;
        }
        let val: f64 = cols.iter().zip(xb.iter()).map(|(&j, v)| c[j] * v).sum();
        best = Some(best.map_or(val, |b: f64| b.min(val)));
    }
    best
}

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut solved = 0;
    while solved < 10 {
        let n = 4;
        let m = rng.random_range(1..=2);
        // feasible by construction, bounded since c > 0
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        let a: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let b: Vec<f64> = a.iter().map(|r| r.iter().zip(&x0).map(|(p, q)| p * q).sum()).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let Some(expected) = brute_force_lp(&a, &b, &c) else { continue };
        let trip: Vec<(usize, usize, f64)> = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, a[i][j]))
            .collect();
        let sf = StandardForm::new(
            Form::P,
            CsrMatrix::from_triplets(m, n, &trip),
            b,
            c,
            vec![ConeBlock::NonNeg(n)],
        );
        let sol = solve(&sf, &SolverConfig::default()).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        assert!(
            (sol.primal_obj - expected).abs() <= 1e-6 * (1.0 + expected.abs()),
            "{} vs {expected}",
            sol.primal_obj
        );
        solved += 1;
    }
}

#[test]
fn iterates_stay_interior_and_gap_shrinks() {
    for sf in [lp_min_x(), soc_norm(), sdp_trace()] {
        let sol = solve(&sf, &SolverConfig::default()).unwrap();
        for (k, it) in sol.trace.iter().enumerate() {
            assert!(it.x_margin > 0.0 && it.s_margin > 0.0 && it.tau > 0.0 && it.kappa > 0.0);
            if k > 0 {
                assert!(it.mu <= 10.0 * sol.trace[k - 1].mu);
            }
            if it.residuals.primal <= 1e-7 && it.residuals.dual <= 1e-7 {
                assert!(it.gap >= -1e-6, "weak duality violated: {}", it.gap);
            }
        }
    }
}
