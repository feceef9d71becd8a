mod common;

use nalgebra::DVector;
use posid::estimator::{build_qp, fit_at_horizon, identify, predict, ModeFamily};
use posid::extensions::{
    build_zsr_qp, identify_nup, identify_snp, identify_zsr, zsr_direct_qp, zsr_response, NupConfig, SnpConfig,
    ZsrConfig,
};
use posid::kernels::KernelSpec;
use posid::qp::{solve, SolverOptions};
use posid::{PositiveIdConfig, TimeSeriesData};
use proptest::prelude::*;

fn tc_config(rho: f64, lambda: f64) -> PositiveIdConfig {
    PositiveIdConfig::new(KernelSpec::tc((0.8 * rho).powi(2)).unwrap(), rho, lambda)
}

#[test]
fn tc_loop_stops_after_one_solve() {
    for seed in 0..5 {
        let (rho, _, data) = common::instance(seed, 80, 0.05);
        let model = identify(&tc_config(rho, 0.5), &data).unwrap();
        assert_eq!(model.diagnostics.iterations, 1, "seed {seed}");
        assert!(!model.diagnostics.cap_reached);
        assert!(model.is_optimal());
    }
}

#[test]
fn extra_constraints_do_not_move_the_solution() {
    for seed in 0..3 {
        let (rho, _, data) = common::instance(100 + seed, 60, 0.05);
        let cfg = tc_config(rho, 0.5);
        let base = identify(&cfg, &data).unwrap();
        let more = fit_at_horizon(&cfg, &data, base.m + 50).unwrap();
        assert!((base.a - more.a).abs() <= 1e-6);
        let dg = base.g.values().iter().zip(more.g.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dg <= 1e-6, "seed {seed}: {dg}");
    }
}

#[test]
fn unconstrained_program_matches_normal_equations() {
    for seed in 0..4 {
        let (rho, _, data) = common::instance(200 + seed, 30, 0.1);
        let cfg = PositiveIdConfig::new(KernelSpec::dc(0.5 * rho * rho, 0.3).unwrap(), rho, 0.3);
        let m = 35;
        let qp = build_qp(&cfg, &data, m).unwrap().without_inequalities();
        let sol = solve(&qp, &SolverOptions::default());
        assert!(sol.is_optimal());
        let mats = posid::gram::assemble_core(&cfg.kernel, &data, rho, m).unwrap();
        let a = sol.z[0];
        let x = sol.z.rows(1, sol.z.len() - 1).into_owned();
        let pred = &mats.b * a + mats.output_block() * &x;
        let h = mats.constraint_block() * &x;
        let (a_ref, pred_ref, h_ref) = common::unconstrained_closed_form(&cfg.kernel, &data, rho, 0.3, m);
        assert!((a - a_ref).abs() <= 1e-8 * a_ref.abs().max(1.0), "{a} vs {a_ref}");
        assert!(common::rel_err(&pred, &pred_ref) <= 1e-8);
        assert!(common::rel_err(&h, &h_ref) <= 1e-8);
    }
}

#[test]
fn literal_program_agrees_with_production_path() {
    let (rho, _, data) = common::instance(7, 25, 0.05);
    let cfg = tc_config(rho, 0.2);
    let model = identify(&cfg, &data).unwrap();
    let qp = build_qp(&cfg, &data, model.m).unwrap();
    let sol = solve(&qp, &SolverOptions::default());
    assert!(sol.is_optimal());
    let prod = model.x.clone();
    let mut z = DVector::zeros(prod.len() + 1);
    z[0] = model.a;
    z.rows_mut(1, prod.len()).copy_from(&prod);
    let rel = (qp.objective(&z) - sol.objective).abs() / sol.objective.abs().max(1.0);
    assert!(rel <= 1e-6, "{rel}");
}

#[test]
fn zsr_coefficient_and_direct_programs_agree() {
    for (seed, n_g) in [(1u64, 8usize), (2, 14), (3, 20)] {
        let mut r = common::rng(seed);
        let u = common::binary(30, &mut r);
        let g: Vec<f64> = (0..n_g).map(|t| 0.8f64.powi(t as i32) * (1.0 + (t as f64).sin()) - 0.3).collect();
        let y = common::simulate(&g, &u);
        let data = TimeSeriesData::at_rest(u, y).unwrap();
        let cfg = ZsrConfig::windowed(&KernelSpec::tc(0.8).unwrap(), 0.5, n_g).unwrap();
        let lit = solve(&build_zsr_qp(&cfg, &data).unwrap(), &SolverOptions::default());
        let g_lit = zsr_response(&lit.z, &cfg, &data).unwrap();
        let direct = solve(&zsr_direct_qp(&cfg, &data).unwrap(), &SolverOptions::default());
        let prod = identify_zsr(&cfg, &data).unwrap();
        for t in 0..n_g {
            assert!((g_lit.at(t) - direct.z[t]).abs() <= 1e-6, "n_g {n_g} t {t}");
            assert!((prod.at(t) - direct.z[t]).abs() <= 1e-6, "n_g {n_g} t {t}");
        }
    }
}

#[test]
fn prediction_reproduces_training_fit() {
    let (rho, _, data) = common::instance(42, 60, 0.02);
    let model = identify(&tc_config(rho, 0.1), &data).unwrap();
    let pred = predict(&model, &data, data.sample_times()).unwrap();
    let mats = posid::gram::assemble_core(&model.kernel, &data, rho, model.m).unwrap();
    let fitted = &mats.b * model.a + mats.output_block() * &model.x;
    for (p, f) in pred.iter().zip(fitted.iter()) {
        assert!((p - f).abs() <= 1e-8 * (1.0 + f.abs()));
    }
}

fn min_rel(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    min / max.max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn identified_responses_are_nonnegative(seed in 0u64..1000, lambda in 0.01f64..10.0) {
        let (rho, _, data) = common::instance(seed, 40, 0.2);
        let base = identify(&tc_config(rho, lambda), &data).unwrap();
        prop_assert!(min_rel(base.g.values()) >= -1e-6);

        let dc = PositiveIdConfig::new(KernelSpec::dc(0.6 * rho * rho, 0.5).unwrap(), rho, lambda);
        let nup = identify_nup(&NupConfig::new(dc.clone(), 2), &data).unwrap();
        prop_assert!(min_rel(nup.g.values()) >= -1e-6);

        let snp = identify_snp(&SnpConfig::new(dc, 3), &data).unwrap();
        prop_assert!(min_rel(snp.g.values()) >= -1e-6);
        for t in 0..3 {
            prop_assert!(snp.family.imag_value(1.0, &snp.theta, t).abs() <= 1e-8);
        }
        let periodic = matches!(snp.family, ModeFamily::Periodic { n: 3, .. });
        prop_assert!(periodic);

        let zsr = ZsrConfig::windowed(&KernelSpec::tc(rho * rho * 0.5).unwrap(), lambda, 30).unwrap();
        let g = identify_zsr(&zsr, &data).unwrap();
        prop_assert!(min_rel(g.values()) >= -1e-6);
    }
}
