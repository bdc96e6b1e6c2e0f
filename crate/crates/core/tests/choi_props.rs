mod common;

use proptest::prelude::*;
use qcomb_core::choi::kraus_to_choi;
use qcomb_core::random::{random_channel_kraus, random_density, rng_from_seed};
use qcomb_core::{wire, KrausMap, LabeledOperator, C64};

fn random_map(din: usize, dout: usize, rank: usize, seed: u64) -> KrausMap {
    let mut rng = rng_from_seed(seed);
    let rank = rank.max(din.div_ceil(dout));
    let kraus = random_channel_kraus(din, dout, rank, &mut rng);
    KrausMap::new(wire("in", din), wire("out", dout), kraus).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn choi_action_matches_kraus(din in 1usize..=3, dout in 1usize..=3, rank in 1usize..=4, seed in any::<u64>()) {
        let m = random_map(din, dout, rank, seed);
        let c = kraus_to_choi(&m).unwrap();
        let mut rng = rng_from_seed(seed ^ 0x5a5a);
        let rho = LabeledOperator::new(vec![wire("in", din)], random_density(din, &mut rng)).unwrap();
        let via_choi = c.apply(&rho).unwrap();
        let direct = m.apply_matrix(rho.matrix());
        prop_assert!(common::mat_distance(via_choi.matrix(), &direct) < 1e-10);
        prop_assert!(c.op().min_eigenvalue().unwrap() >= -1e-10);
        prop_assert!((c.op().trace().re - din as f64).abs() < 1e-10);
    }

    #[test]
    fn choi_action_is_linear(seed in any::<u64>(), alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let m = random_map(2, 3, 2, seed);
        let c = kraus_to_choi(&m).unwrap();
        let mut rng = rng_from_seed(seed.wrapping_add(1));
        let w = vec![wire("in", 2)];
        let r1 = LabeledOperator::new(w.clone(), random_density(2, &mut rng)).unwrap();
        let r2 = LabeledOperator::new(w, random_density(2, &mut rng)).unwrap();
        let lhs = c.apply(&r1.scale(alpha).add(&r2.scale(beta)).unwrap()).unwrap();
        let rhs = c.apply(&r1).unwrap().scale(alpha).add(&c.apply(&r2).unwrap().scale(beta)).unwrap();
        prop_assert!(lhs.distance(&rhs).unwrap() < 1e-10);
    }

    #[test]
    fn kraus_extraction_roundtrips(din in 1usize..=3, dout in 1usize..=3, rank in 1usize..=3, seed in any::<u64>()) {
        let m = random_map(din, dout, rank, seed);
        let c = kraus_to_choi(&m).unwrap();
        let back = kraus_to_choi(&c.to_kraus().unwrap()).unwrap();
        prop_assert!(back.op().distance(c.op()).unwrap() < 1e-10);
    }
}

#[test]
fn unitary_choi_is_rank_one() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = nalgebra::DMatrix::from_row_slice(2, 2, &[s, s, s, -s].map(|x| C64::new(x, 0.0)));
    let c = qcomb_core::ChoiOperator::from_unitary(&h, wire("o", 2), wire("i", 2)).unwrap();
    let eig = c.op().eig_hermitian().unwrap();
    assert!((eig.max() - 2.0).abs() < 1e-12);
    assert!(eig.values[..3].iter().all(|v| v.abs() < 1e-12));
    assert!(c.is_channel(1e-12).unwrap().is_channel);
}
