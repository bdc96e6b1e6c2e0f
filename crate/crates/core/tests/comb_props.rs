mod common;

use proptest::prelude::*;
use qcomb_core::choi::kraus_to_choi;
use qcomb_core::comb::{
    postselect, project_to_comb, random_comb, register_comb, supermap_apply, verify_causality,
};
use qcomb_core::random::{random_channel_kraus, rng_from_seed};
use qcomb_core::{wire, CombStructure, KrausMap, ProbabilisticComb};
use rand::Rng;

fn structure_strategy() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((2usize..=3, 2usize..=3), 1..=3)
        .prop_filter("within the dimension cap", |t| {
            t.iter().map(|(a, b)| a * b).product::<usize>() <= 256
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn generated_combs_verify(teeth in structure_strategy(), seed in any::<u64>()) {
        let s = CombStructure::sequential(&teeth).unwrap();
        let mut rng = rng_from_seed(seed);
        let mems: Vec<usize> = (0..s.slots()).map(|_| rng.random_range(2..=4)).collect();
        let c = random_comb(&s, &mems, seed).unwrap();
        let rep = verify_causality(c.operator(), &s, 1e-10).unwrap();
        prop_assert!(rep.passed, "{:?}", rep);
        let t: usize = teeth.iter().map(|t| t.0).product();
        prop_assert!((c.operator().trace().re - t as f64).abs() < 1e-10 * t as f64);
    }

    #[test]
    fn supermaps_send_channels_to_channels(teeth in structure_strategy(), seed in any::<u64>()) {
        prop_assume!(teeth.len() >= 2);
        let s = CombStructure::sequential(&teeth).unwrap();
        let mut rng = rng_from_seed(seed);
        let mems: Vec<usize> = (0..s.slots()).map(|_| rng.random_range(2..=3)).collect();
        let c = random_comb(&s, &mems, seed).unwrap();
        let slot = rng.random_range(1..=s.slots());
        let din = teeth[slot - 1].1;
        let dout = teeth[slot].0;
        let kraus = random_channel_kraus(din, dout, 2.max(din), &mut rng);
        let m = KrausMap::new(wire("i", din), wire("o", dout), kraus).unwrap();
        let out = supermap_apply(&c, &[kraus_to_choi(&m).unwrap()], &[slot]).unwrap();
        let rep = verify_causality(out.choi.op(), &out.structure, 1e-9).unwrap();
        prop_assert!(rep.passed, "{:?}", rep);
        if out.structure.slots() == 0 {
            prop_assert!(out.choi.is_channel(1e-9).unwrap().is_channel);
        }
    }
}

#[test]
fn filling_every_slot_yields_a_channel() {
    for seed in 0..100u64 {
        let s = CombStructure::sequential(&[(2, 2), (2, 3), (3, 2)]).unwrap();
        let c = random_comb(&s, &[2, 3], seed).unwrap();
        let mut rng = rng_from_seed(seed + 1000);
        let k1 = random_channel_kraus(2, 2, 2, &mut rng);
        let k2 = random_channel_kraus(3, 3, 2, &mut rng);
        let c1 = kraus_to_choi(&KrausMap::new(wire("a", 2), wire("b", 2), k1).unwrap()).unwrap();
        let c2 = kraus_to_choi(&KrausMap::new(wire("a", 3), wire("b", 3), k2).unwrap()).unwrap();
        let out = supermap_apply(&c, &[c2, c1], &[2, 1]).unwrap();
        assert!(out.choi.is_channel(1e-9).unwrap().is_channel, "seed {seed}");
    }
}

#[test]
fn register_recovers_branches() {
    for seed in 0..10u64 {
        let s = CombStructure::sequential(&[(2, 2), (2, 2)]).unwrap();
        let r = random_comb(&s, &[2], seed).unwrap();
        // split the comb into three positive pieces with weights summing to one
        let mut rng = rng_from_seed(seed);
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = w.iter().sum();
        let branches: Vec<(String, _)> = w
            .iter()
            .enumerate()
            .map(|(i, x)| (format!("b{i}"), r.operator().scale(x / total)))
            .collect();
        let p = ProbabilisticComb::new(branches, s.clone(), 1e-10).unwrap();
        let reg = register_comb(&p).unwrap();
        assert!(reg.verify(1e-10).unwrap().passed);
        let out = s.teeth().last().unwrap().1.clone();
        for (i, (_, ri)) in p.branches().iter().enumerate() {
            let back = postselect(&reg, &out, 3, i).unwrap();
            assert!(back.distance(ri).unwrap() < 1e-12);
        }
    }
}

#[test]
fn projection_lands_inside_reported_residuals() {
    for seed in 0..10u64 {
        let s = CombStructure::sequential(&[(2, 2), (2, 2)]).unwrap();
        let mut rng = rng_from_seed(seed);
        let x = common::hermitian(s.wires(), &mut rng);
        let p = project_to_comb(&x, &s, 5000, 1e-8).unwrap();
        let rep = verify_causality(p.comb.operator(), &s, 1e-9).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.max_residual() <= p.report.max_residual() + 1e-12);
    }
}
