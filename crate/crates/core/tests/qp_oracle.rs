mod common;

use nalgebra::{DMatrix, DVector};
use posid::qp::{kkt_certificate, solve, ConvexQP, QPStatus, SolverOptions};
use proptest::prelude::*;

#[test]
fn matches_active_set_enumeration() {
    let mut r = common::rng(11);
    for case in 0..30 {
        let d = 2 + case % 7;
        let k = 1 + case % 8;
        let (p, q, g, l) = common::random_qp(&mut r, d, k);
        let (z_ref, obj_ref) = common::active_set_oracle(&p, &q, &g, &l).expect("feasible by construction");
        let qp = ConvexQP::new(p, q).unwrap().with_inequalities(g, l).unwrap();
        let sol = solve(&qp, &SolverOptions::default());
        assert_eq!(sol.status, QPStatus::Optimal, "case {case}");
        assert!((&sol.z - &z_ref).amax() <= 1e-7, "case {case}: {}", (&sol.z - &z_ref).amax());
        assert!((sol.objective - obj_ref).abs() <= 1e-7 * obj_ref.abs().max(1.0), "case {case}");
    }
}

#[test]
fn detects_infeasible_rows() {
    // z >= 1 and -z >= 0
    let qp = ConvexQP::new(DMatrix::identity(1, 1), DVector::zeros(1))
        .unwrap()
        .with_inequalities(DMatrix::from_row_slice(2, 1, &[1.0, -1.0]), DVector::from_vec(vec![1.0, 0.0]))
        .unwrap();
    assert_eq!(solve(&qp, &SolverOptions::default()).status, QPStatus::Infeasible);
}

#[test]
fn equality_and_inequality_mix() {
    // min (z0-2)^2 + (z1-2)^2 + z2^2, z0 + z1 = 1, z2 >= 0.5
    let p = DMatrix::identity(3, 3) * 2.0;
    let q = DVector::from_vec(vec![-4.0, -4.0, 0.0]);
    let qp = ConvexQP::new(p, q)
        .unwrap()
        .with_equalities(DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]), DVector::from_vec(vec![1.0]))
        .unwrap()
        .with_inequalities(DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]), DVector::from_vec(vec![0.5]))
        .unwrap();
    let sol = solve(&qp, &SolverOptions::default());
    assert!(sol.is_optimal());
    let want = DVector::from_vec(vec![0.5, 0.5, 0.5]);
    assert!((&sol.z - want).amax() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kkt_residuals_are_small(seed in 0u64..10_000, d in 1usize..7, k in 1usize..9) {
        let mut r = common::rng(seed);
        let (p, q, g, l) = common::random_qp(&mut r, d, k);
        let qp = ConvexQP::new(p, q).unwrap().with_inequalities(g, l).unwrap();
        let sol = solve(&qp, &SolverOptions::default());
        prop_assert!(sol.is_optimal());
        let rep = kkt_certificate(&qp, &sol);
        let scale = 1.0 + qp.p().amax() + qp.q().amax();
        prop_assert!(rep.stationarity <= 1e-7 * scale);
        prop_assert!(rep.primal_infeasibility <= 1e-8 * scale);
        prop_assert!(rep.dual_infeasibility <= 1e-8 * scale);
        prop_assert!(rep.complementarity <= 1e-6 * scale);
    }

    #[test]
    fn objective_never_beats_feasible_point(seed in 0u64..10_000, d in 1usize..6, k in 1usize..6) {
        let mut r = common::rng(seed);
        let (p, q, g, l) = common::random_qp(&mut r, d, k);
        let qp = ConvexQP::new(p, q).unwrap().with_inequalities(g, l).unwrap();
        let sol = solve(&qp, &SolverOptions::default());
        // random feasible probes never improve on the solver
        use rand::Rng;
        for _ in 0..20 {
            let z = DVector::from_fn(d, |_, _| r.random_range(-3.0..3.0));
            if (qp.g() * &z - qp.l()).iter().all(|&s| s >= 0.0) {
                prop_assert!(qp.objective(&z) >= sol.objective - 1e-8 * sol.objective.abs().max(1.0));
            }
        }
    }
}
