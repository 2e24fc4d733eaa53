use std::collections::BTreeSet;

use proptest::prelude::*;
use qcqp_conic::generators::*;
use qcqp_conic::pipeline::run;
use qcqp_conic::*;

#[test]
fn lattice_edge_sets() {
    let e2: BTreeSet<_> = [(1, 2), (3, 4), (1, 3), (2, 4)].into_iter().collect();
    assert_eq!(lattice_edges(2), e2);
    assert_eq!(lattice_edges(4).len(), 24);
    for n_l in 2..10 {
        assert_eq!(lattice_edges(n_l).len(), 2 * n_l * (n_l - 1));
    }
}

#[test]
fn generators_are_deterministic() {
    let spec = LatticeSpec { n_l: 4, m: 6, seed: 99 };
    assert_eq!(gen_lattice(&spec).unwrap().to_json().unwrap(), gen_lattice(&spec).unwrap().to_json().unwrap());
    assert_ne!(gen_lattice(&spec).unwrap(), gen_lattice(&LatticeSpec { seed: 100, ..spec }).unwrap());
    let z = ZeroDiagSpec { n: 6, m: 4, density: 0.5, seed: 1 };
    assert_eq!(gen_zero_diag(&z).unwrap().to_json().unwrap(), gen_zero_diag(&z).unwrap().to_json().unwrap());
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(gen_lattice(&LatticeSpec { n_l: 1, m: 2, seed: 0 }).is_err());
    assert!(gen_lattice(&LatticeSpec { n_l: 3, m: 0, seed: 0 }).is_err());
    assert!(gen_zero_diag(&ZeroDiagSpec { n: 4, m: 1, density: 0.0, seed: 0 }).is_err());
    assert!(gen_zero_diag(&ZeroDiagSpec { n: 4, m: 1, density: 1.5, seed: 0 }).is_err());
}

#[test]
fn two_variable_zero_diag_has_one_product() {
    let inst = gen_zero_diag(&ZeroDiagSpec { n: 2, m: 3, density: 1.0, seed: 4 }).unwrap();
    for f in inst.forms() {
        let off: Vec<_> = f.p.iter().filter(|((i, j), _)| i != j).collect();
        assert!(off.len() <= 1);
        assert!(off.iter().all(|((i, j), _)| (*i, *j) == (1, 2)));
    }
}

#[test]
fn zero_diag_instances_are_feasible_and_bounded() {
    for seed in 0..3 {
        let inst = gen_zero_diag(&ZeroDiagSpec { n: 5, m: 3, density: 0.6, seed }).unwrap();
        let data = homogenize(&inst).unwrap();
        let out = run(&data, RelaxationKind::Fsdp, Form::P, &SolverConfig::default()).unwrap();
        assert_eq!(out.status(), Status::Optimal, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lattice_postconditions(n_l in 2usize..7, m in 1usize..8, seed in any::<u64>()) {
        let inst = gen_lattice(&LatticeSpec { n_l, m, seed }).unwrap();
        let edges = lattice_edges(n_l);
        prop_assert_eq!(inst.n(), n_l * n_l);
        prop_assert_eq!(inst.m(), m);
        prop_assert_eq!(inst.objective().r, 0.0);
        for (k, f) in inst.forms().enumerate() {
            prop_assert!(f.q.iter().all(|&v| v == 0.0));
            for ((i, j), v) in f.p.iter() {
                if i == j {
                    prop_assert!((-1.0..=1.0).contains(&v));
                } else {
                    prop_assert!(edges.contains(&(i, j)));
                    prop_assert!(v < 0.0 && v >= -1.0);
                }
            }
            if k >= 1 {
                prop_assert!((-1.0..=-0.1).contains(&f.r));
            }
        }
        let p1 = &inst.constraints()[0].p;
        prop_assert!(p1.is_diagonal());
        prop_assert!((1..=inst.n()).all(|i| p1.get(i, i) > 0.0));
        let back = QcqpInstance::from_json(&inst.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn zero_diag_postconditions(n in 2usize..9, m in 0usize..5, density in 0.05..=1.0f64, seed in any::<u64>()) {
        let inst = gen_zero_diag(&ZeroDiagSpec { n, m, density, seed }).unwrap();
        let worst = inst
            .forms()
            .flat_map(|f| (1..=n).map(move |i| f.p.get(i, i).abs()))
            .fold(0.0, f64::max);
        prop_assert_eq!(worst, 0.0);
        // box rows: 2n linear constraints with no quadratic part
        let linear = inst.constraints().iter().filter(|f| f.p.is_zero()).count();
        prop_assert!(linear >= 2 * n);
    }
}
