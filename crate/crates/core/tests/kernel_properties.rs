mod common;

use posid::kernels::{KernelKind, KernelSpec};
use posid::signals::{convolve, hankel_numerical_rank, ImpulseResponse};
use posid::TimeSeriesData;
use proptest::prelude::*;

fn kernel_strategy() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (0.05f64..0.99).prop_map(|b| KernelSpec::tc(b).unwrap()),
        (0.05f64..0.99, -0.99f64..0.99).prop_map(|(b, g)| KernelSpec::dc(b, g).unwrap()),
        (0.05f64..0.99).prop_map(|b| KernelSpec::ss(b).unwrap()),
    ]
}

proptest! {
    #[test]
    fn gram_is_psd(k in kernel_strategy(), n in 1usize..40) {
        let g = k.gram_square(n);
        let min = g.clone().symmetric_eigen().eigenvalues.min();
        prop_assert!(min >= -1e-10 * g.amax().max(1e-300));
    }

    #[test]
    fn diagonal_domination(k in kernel_strategy(), s in 0usize..200, t in 0usize..200) {
        let b = k.domination_bound();
        let bound = b.c * b.rho_d.powi((s + t) as i32);
        prop_assert!(k.eval(s, t).abs() <= bound * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn section_hankel_rank_is_small(beta in 0.3f64..0.95, s in 0usize..6) {
        let k = KernelSpec::tc(beta).unwrap();
        let sec = ImpulseResponse::new((0..60).map(|t| k.eval(s, t)).collect()).unwrap();
        prop_assert!(hankel_numerical_rank(&sec, 25, 1e-9).unwrap() <= s + 1);
    }

    #[test]
    fn convolution_is_linear(seed in 0u64..1000, c in -3.0f64..3.0) {
        let mut r = common::rng(seed);
        let u = common::binary(20, &mut r);
        let d = TimeSeriesData::at_rest(u, vec![0.0; 20]).unwrap();
        let g1: Vec<f64> = (0..10).map(|t| 0.9f64.powi(t)).collect();
        let g2: Vec<f64> = (0..10).map(|t| (t as f64).cos()).collect();
        let mix: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a + c * b).collect();
        let (g1, g2, mix) = (
            ImpulseResponse::new(g1).unwrap(),
            ImpulseResponse::new(g2).unwrap(),
            ImpulseResponse::new(mix).unwrap(),
        );
        for t in 0..20 {
            let lhs = convolve(&mix, &d, t).unwrap();
            let rhs = convolve(&g1, &d, t).unwrap() + c * convolve(&g2, &d, t).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }
    }
}

#[test]
fn windowed_kernel_has_finite_support() {
    let k = KernelSpec::dc(0.8, 0.5).unwrap().windowed(12).unwrap();
    assert_eq!(k.kind(), KernelKind::FiniteSupport);
    assert_eq!(k.support(), Some(12));
    assert_eq!(k.eval(12, 3), 0.0);
    assert!(k.satisfies_decay_coupling(1e-6));
}
