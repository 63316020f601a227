use nmk_core::capability::{oracle_beta, robustness, witness_one, witness_two};
use nmk_core::procrep::{compose, intermediate};
use nmk_core::randgen::{random_channel, random_state, random_tp_map, rng};
use nmk_core::{DensityMatrix, OperatorBasis, ProcessRep};
use proptest::prelude::*;

fn dim() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(4usize)]
}

fn beta(p: &ProcessRep) -> f64 {
    robustness(p).unwrap().beta
}

fn output(p: &ProcessRep, rho: &DensityMatrix) -> DensityMatrix {
    DensityMatrix::from_hermitian_part(&p.apply(rho).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn representations_round_trip(seed in any::<u64>(), d in dim(), p in 0.0..0.8f64) {
        let mut r = rng(seed);
        let m = random_tp_map(d, p, &mut r).unwrap();
        let from_choi = ProcessRep::from_choi(d, m.choi().clone()).unwrap();
        let from_superop = ProcessRep::from_superop(d, m.superop().clone()).unwrap();
        let from_chi = ProcessRep::from_chi(OperatorBasis::for_dim(d).unwrap(), m.chi().clone()).unwrap();
        for q in [&from_choi, &from_superop, &from_chi] {
            prop_assert!(q.chi().max_abs_diff(m.chi()) < 1e-10);
            prop_assert!(q.choi().max_abs_diff(m.choi()) < 1e-10);
            prop_assert!(q.superop().max_abs_diff(m.superop()) < 1e-10);
        }
        prop_assert!((m.chi().trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn intermediate_inverts_composition(seed in any::<u64>(), d in dim(), p in 0.0..0.5f64) {
        let mut r = rng(seed);
        let e1 = random_channel(d, d, &mut r).unwrap();
        let lambda = random_tp_map(d, p, &mut r).unwrap();
        let e2 = compose(&lambda, &e1).unwrap();
        let back = intermediate(&e2, &e1).unwrap();
        prop_assert!(back.superop().max_abs_diff(lambda.superop()) < 1e-7);
    }

    #[test]
    fn faithfulness(seed in any::<u64>(), d in dim()) {
        let mut r = rng(seed);
        let cp = random_channel(d, 1 + (seed % d as u64) as usize, &mut r).unwrap();
        prop_assert!(beta(&cp) <= 1e-6);
        let non_cp = random_tp_map(d, 0.6, &mut r).unwrap();
        let b = beta(&non_cp);
        let oracle = oracle_beta(&non_cp).unwrap();
        prop_assert!((b - oracle).abs() <= 1e-6);
        prop_assert_eq!(b > 1e-6, oracle > 1e-6);
    }

    #[test]
    fn monotone_under_post_composition(seed in any::<u64>(), d in dim(), p in 0.0..0.8f64) {
        let mut r = rng(seed);
        let lambda = random_tp_map(d, p, &mut r).unwrap();
        let phi = random_channel(d, 2, &mut r).unwrap();
        let after = compose(&phi, &lambda).unwrap();
        prop_assert!(beta(&after) <= beta(&lambda) + 1e-6);
    }

    #[test]
    fn convex(seed in any::<u64>(), d in dim(), w in 0.0..=1.0f64) {
        let mut r = rng(seed);
        let a = random_tp_map(d, 0.5, &mut r).unwrap();
        let b = random_tp_map(d, 0.5, &mut r).unwrap();
        let mix = ProcessRep::linear_combination(&[(w, &a), (1.0 - w, &b)]).unwrap();
        prop_assert!(beta(&mix) <= w * beta(&a) + (1.0 - w) * beta(&b) + 1e-6);
    }

    #[test]
    fn witness_floors(seed in any::<u64>(), d in dim()) {
        let mut r = rng(seed);
        let e1 = random_channel(d, 2, &mut r).unwrap();
        let e2 = random_channel(d, 2, &mut r).unwrap();
        let a = random_state(d, &mut r);
        let b = random_state(d, &mut r);
        let w2 = witness_two(&output(&e1, &a), &output(&e1, &b), &output(&e2, &a), &output(&e2, &b)).unwrap();
        prop_assert!(w2.value >= 2.0 - 1e-8);
        let w1 = witness_one(&output(&e1, &a), &output(&e2, &a)).unwrap();
        prop_assert!((w1.value - 1.0).abs() <= 1e-7);
    }
}
