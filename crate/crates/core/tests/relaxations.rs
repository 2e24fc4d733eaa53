use proptest::prelude::*;
use qcqp_conic::generators::{gen_lattice, LatticeSpec};
use qcqp_conic::graph::{chordal_extension, maximal_cliques, Graph};
use qcqp_conic::pipeline::{build, run};
use qcqp_conic::relax::{build_ssocp, decompose_data, Layout, RowKind};
use qcqp_conic::*;

const TOL: f64 = 1e-6;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()))
}

fn opt(data: &HomogenizedData, kind: RelaxationKind, form: Form) -> f64 {
    let out = run(data, kind, form, &SolverConfig::default()).unwrap();
    assert_eq!(out.status(), Status::Optimal, "{kind} ({form})");
    out.objective.unwrap()
}

/// min p0·x² s.t. x² − 1 ≤ 0.
fn one_dim(p0: f64) -> HomogenizedData {
    let sq = |v| SparseSymMatrix::from_triplets(1, &[(1, 1, v)]).unwrap();
    let inst = QcqpInstance::new(
        1,
        QuadForm { p: sq(p0), q: vec![0.0], r: 0.0 },
        vec![QuadForm { p: sq(1.0), q: vec![0.0], r: -1.0 }],
    )
    .unwrap();
    homogenize(&inst).unwrap()
}

#[test]
fn one_dimensional_optima() {
    for form in [Form::P, Form::D] {
        assert!(close(opt(&one_dim(1.0), RelaxationKind::Fsdp, form), 0.0));
        assert!(close(opt(&one_dim(-1.0), RelaxationKind::Fsdp, form), -1.0));
        assert!(close(opt(&one_dim(-1.0), RelaxationKind::Fsocp, form), -1.0));
        assert!(close(opt(&one_dim(-1.0), RelaxationKind::Ssocp, form), -1.0));
        assert!(close(opt(&one_dim(-1.0), RelaxationKind::DualFsocp, form), -1.0));
    }
}

#[test]
fn diagonal_instance_lowers_to_an_lp() {
    // min −x1² − 2x2² s.t. x1² ≤ 1, x2² ≤ 1
    let d = |a, b| SparseSymMatrix::from_triplets(2, &[(1, 1, a), (2, 2, b)]).unwrap();
    let inst = QcqpInstance::new(
        2,
        QuadForm { p: d(-1.0, -2.0), q: vec![0.0; 2], r: 0.0 },
        vec![
            QuadForm { p: d(1.0, 0.0), q: vec![0.0; 2], r: -1.0 },
            QuadForm { p: d(0.0, 1.0), q: vec![0.0; 2], r: -1.0 },
        ],
    )
    .unwrap();
    let data = homogenize(&inst).unwrap();
    for form in [Form::P, Form::D] {
        let out = run(&data, RelaxationKind::Ssocp, form, &SolverConfig::default()).unwrap();
        assert!(out.standard.cones.iter().all(|c| matches!(c, ConeBlock::NonNeg(_))));
        assert!(close(out.objective.unwrap(), -3.0));
    }
}

#[test]
fn fsocp_standard_form_cones() {
    let inst = QcqpInstance::new(2, QuadForm::zero(2), vec![]).unwrap();
    let data = homogenize(&inst).unwrap();
    for form in [Form::P, Form::D] {
        let sf = to_standard_form(&build(&data, RelaxationKind::Fsocp).unwrap(), form).unwrap();
        let soc = sf.cones.iter().filter(|c| **c == ConeBlock::SecondOrder(3)).count();
        assert_eq!(soc, 3);
    }
}

#[test]
fn ssocp_dual_form_rows_are_free_entries() {
    let data = homogenize(&gen_lattice(&LatticeSpec { n_l: 3, m: 4, seed: 0 }).unwrap()).unwrap();
    let prog = build(&data, RelaxationKind::Ssocp).unwrap();
    let Layout::Primal { entries, .. } = prog.layout() else { panic!() };
    let sf = to_standard_form(&prog, Form::D).unwrap();
    // every represented entry except the pinned X_11 is a dual-form variable
    assert_eq!(sf.rows(), entries.len() - 1);
    assert_eq!(entries.len(), 12 + 10);
}

#[test]
fn full_pattern_ssocp_matches_fsocp_inventory() {
    let p = SparseSymMatrix::from_triplets(3, &[(1, 2, 1.0), (1, 3, 1.0), (2, 3, -1.0)]).unwrap();
    let inst = QcqpInstance::new(3, QuadForm { p, q: vec![1.0; 3], r: 0.0 }, vec![]).unwrap();
    let data = homogenize(&inst).unwrap();
    let pat = aggregate_pattern(&data);
    assert_eq!(pat.edges().len(), pat.j_size());
    let s = build_ssocp(&data, &pat).unwrap();
    let f = build(&data, RelaxationKind::Fsocp).unwrap();
    assert_eq!(s.inventory(), f.inventory());
}

#[test]
fn four_cycle_ssdp_inventory() {
    // 4-cycle 1-2-3-4 with chord (1,3); (1,1) is never equated
    let q = SparseSymMatrix::from_triplets(4, &[(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (1, 4, 1.0), (1, 3, 0.5)])
        .unwrap();
    let data = HomogenizedData::from_matrices(vec![q]).unwrap();
    let prog = build(&data, RelaxationKind::Ssdp).unwrap();
    assert_eq!(prog.inventory().psd_sides, vec![3, 3]);
    assert_eq!(prog.count_rows(|k| k == RowKind::Overlap), 2);
}

#[test]
fn dual_with_objective_h0_has_unit_xi() {
    // m = 0 and Q_0 = H_0: max ξ s.t. H_0 − ξ H_0 = Σ W
    let h0 = SparseSymMatrix::from_triplets(3, &[(1, 1, 1.0)]).unwrap();
    let data = HomogenizedData::from_matrices(vec![h0]).unwrap();
    for kind in [RelaxationKind::DualFsocp, RelaxationKind::DualSsocp] {
        let out = run(&data, kind, Form::P, &SolverConfig::default()).unwrap();
        assert!(close(out.objective.unwrap(), 1.0));
        let prog = build(&data, kind).unwrap();
        assert!(prog.count_rows(|k| matches!(k, RowKind::Entry(..))) > 0);
    }
    let full = build(&data, RelaxationKind::DualFsocp).unwrap();
    assert_eq!(full.count_rows(|k| matches!(k, RowKind::Entry(..))), 3 * 4 / 2);
}

#[test]
fn lattice_dual_ssocp_blocks() {
    let data = homogenize(&gen_lattice(&LatticeSpec { n_l: 2, m: 2, seed: 3 }).unwrap()).unwrap();
    let prog = build(&data, RelaxationKind::DualSsocp).unwrap();
    let Layout::Dual { w_blocks, w_diag, .. } = prog.layout() else { panic!() };
    assert_eq!(w_blocks.len(), 4);
    assert_eq!(w_diag.len(), 1);
    assert!(w_diag.contains_key(&1));
}

#[test]
fn strong_duality_and_relaxation_chain_on_lattice() {
    for seed in 0..3 {
        let spec = LatticeSpec { n_l: 3, m: 3 + seed as usize, seed };
        let data = homogenize(&gen_lattice(&spec).unwrap()).unwrap();
        let fsocp = opt(&data, RelaxationKind::Fsocp, Form::D);
        let ssocp = opt(&data, RelaxationKind::Ssocp, Form::P);
        let dual_f = opt(&data, RelaxationKind::DualFsocp, Form::P);
        let dual_s = opt(&data, RelaxationKind::DualSsocp, Form::D);
        let fsdp = opt(&data, RelaxationKind::Fsdp, Form::P);
        assert!(close(fsocp, dual_f), "seed {seed}: {fsocp} vs {dual_f}");
        assert!(close(ssocp, dual_s), "seed {seed}: {ssocp} vs {dual_s}");
        assert!(fsdp >= fsocp - TOL * (1.0 + fsocp.abs()));
    }
}

#[test]
fn sparse_socp_matches_full_on_random_sparse_instances() {
    // general (not lattice) data: linear terms and mixed-sign off-diagonals
    for seed in 0..4u64 {
        let n = 4;
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut rnd = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let mut p0 = SparseSymMatrix::new(n);
        for (i, j) in [(1, 2), (2, 3), (3, 4)] {
            p0.set(i, j, rnd()).unwrap();
        }
        for i in 1..=n {
            p0.set(i, i, rnd()).unwrap();
        }
        let q0 = (0..n).map(|_| 0.5 * rnd()).collect();
        let ball = QuadForm {
            p: SparseSymMatrix::from_triplets(n, &(1..=n).map(|i| (i, i, 1.0)).collect::<Vec<_>>()).unwrap(),
            q: vec![0.0; n],
            r: -2.0,
        };
        let inst = QcqpInstance::new(n, QuadForm { p: p0, q: q0, r: 0.0 }, vec![ball]).unwrap();
        let data = homogenize(&inst).unwrap();
        let f = opt(&data, RelaxationKind::Fsocp, Form::D);
        let s = opt(&data, RelaxationKind::Ssocp, Form::P);
        assert!(close(f, s), "seed {seed}: {f} vs {s}");
    }
}

fn sym(dim: usize) -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    prop::collection::vec((1..=dim, 1..=dim, -3.0..3.0f64), 0..3 * dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn decomposition_sums_exactly(
        dim in 2usize..9,
        bits in prop::collection::vec(any::<bool>(), 36),
        trips in sym(8),
    ) {
        let pairs: Vec<_> = (1..=dim).flat_map(|j| (1..j).map(move |i| (i, j))).collect();
        let g = Graph::from_edges(dim, pairs.iter().zip(&bits).filter(|(_, b)| **b).map(|(e, _)| *e));
        let ext = chordal_extension(&g);
        let cs = maximal_cliques(&ext).unwrap();
        let extended = ext.extended_edges();
        let mut q = SparseSymMatrix::new(dim);
        for (i, j, v) in trips {
            let (i, j) = (i.min(j), i.max(j));
            if j <= dim && (i == j || extended.contains(&(i, j))) {
                q.set(i, j, v).unwrap();
            }
        }
        let parts = decompose_data(&q, &ext, &cs).unwrap();
        prop_assert_eq!(parts.len(), cs.len());
        let mut sum = SparseSymMatrix::new(dim);
        for (l, part) in parts.iter().enumerate() {
            for ((i, j), v) in part.iter() {
                prop_assert!(cs.cliques()[l].contains(&i) && cs.cliques()[l].contains(&j));
                prop_assert_eq!(cs.covering(i, j)[0], l);
                sum.set(i, j, sum.get(i, j) + v).unwrap();
            }
        }
        prop_assert_eq!(sum, q);
    }

    #[test]
    fn cone_counts_follow_pattern(n_l in 2usize..6, m in 1usize..4, seed in 0u64..1000) {
        let data = homogenize(&gen_lattice(&LatticeSpec { n_l, m, seed }).unwrap()).unwrap();
        let n = n_l * n_l;
        let pat = aggregate_pattern(&data);
        let s = build(&data, RelaxationKind::Ssocp).unwrap().inventory();
        let f = build(&data, RelaxationKind::Fsocp).unwrap().inventory();
        prop_assert_eq!(s.soc, pat.edges().len());
        prop_assert_eq!(s.soc, 2 * n_l * (n_l - 1));
        prop_assert_eq!(f.soc, (n + 1) * n / 2);
    }
}
