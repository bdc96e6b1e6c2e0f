mod common;

use common::{hermitian, psd, relative, wires};
use proptest::prelude::*;
use qcomb_core::random::rng_from_seed;
use qcomb_core::LabeledOperator;

fn dims(max_wires: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=3, 1..=max_wires)
}

fn sorted_spectrum(op: &LabeledOperator) -> Vec<f64> {
    op.eig_hermitian().unwrap().values
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_is_multiplicative(da in dims(3), db in dims(2), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let a = hermitian(wires("a", &da), &mut rng);
        let b = hermitian(wires("b", &db), &mut rng);
        let t = a.tensor(&b).unwrap().trace();
        let expect = a.trace() * b.trace();
        prop_assert!((t - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
    }

    #[test]
    fn partial_traces_compose(d in prop::collection::vec(1usize..=3, 3..=4), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let a = hermitian(wires("w", &d), &mut rng);
        let one = a.partial_trace(&["w0"]).unwrap().partial_trace(&["w2"]).unwrap();
        let both = a.partial_trace(&["w2", "w0"]).unwrap();
        prop_assert!(one.distance(&both).unwrap() <= 1e-12 * (1.0 + a.frobenius_norm()));
    }

    #[test]
    fn partial_transpose_is_an_involution(d in prop::collection::vec(1usize..=3, 2..=3), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let a = common::general(wires("w", &d), &mut rng);
        let t = a.partial_transpose(&["w1"]).unwrap();
        prop_assert!((t.trace() - a.trace()).norm() < 1e-12 * (1.0 + a.frobenius_norm()));
        prop_assert!((t.frobenius_norm() - a.frobenius_norm()).abs() < 1e-12 * a.frobenius_norm());
        let back = t.partial_transpose(&["w1"]).unwrap();
        prop_assert!(back.distance(&a).unwrap() == 0.0);
    }

    #[test]
    fn permutation_preserves_spectrum(d in prop::collection::vec(1usize..=3, 2..=3), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let a = hermitian(wires("w", &d), &mut rng);
        let mut order: Vec<&str> = a.labels().collect();
        order.reverse();
        let p = a.permute_wires(&order).unwrap();
        let (s1, s2) = (sorted_spectrum(&a), sorted_spectrum(&p));
        for (x, y) in s1.iter().zip(&s2) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        // labels travel with their blocks
        prop_assert!(a.distance(&p).unwrap() < 1e-12);
    }

    #[test]
    fn psd_projection_is_idempotent_and_nonexpansive(d in dims(2), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let ws = wires("w", &d);
        let a = hermitian(ws.clone(), &mut rng);
        let b = hermitian(ws, &mut rng);
        let pa = a.psd_project().unwrap();
        let pb = b.psd_project().unwrap();
        prop_assert!(relative(&pa.psd_project().unwrap(), &pa) < 1e-10);
        prop_assert!(pa.distance(&pb).unwrap() <= a.distance(&b).unwrap() * (1.0 + 1e-10) + 1e-12);
        prop_assert!(pa.min_eigenvalue().unwrap() > -1e-10);
    }

    #[test]
    fn fuse_then_split_roundtrips(d in prop::collection::vec(1usize..=3, 2..=3), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let a = psd(wires("w", &d), &mut rng);
        let parts = a.wires()[..2].to_vec();
        let fused = a.fuse_wires(&["w0", "w1"], "f").unwrap();
        let back = fused.split_wire("f", &parts).unwrap();
        prop_assert_eq!(back.matrix(), a.matrix());
    }
}
