#![allow(dead_code)]

use nalgebra::DMatrix;
use qcomb_core::random::{ginibre, random_hermitian, rng_from_seed, CombRng};
use qcomb_core::{wire, LabeledOperator, Wire, C64};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn wires(prefix: &str, dims: &[usize]) -> Vec<Wire> {
    dims.iter()
        .enumerate()
        .map(|(k, &d)| wire(format!("{prefix}{k}"), d))
        .collect()
}

pub fn hermitian(ws: Vec<Wire>, rng: &mut CombRng) -> LabeledOperator {
    let d = ws.iter().map(Wire::dim).product();
    LabeledOperator::new(ws, random_hermitian(d, rng)).unwrap()
}

pub fn general(ws: Vec<Wire>, rng: &mut CombRng) -> LabeledOperator {
    let d = ws.iter().map(Wire::dim).product();
    LabeledOperator::new(ws, ginibre(d, d, rng)).unwrap()
}

pub fn psd(ws: Vec<Wire>, rng: &mut CombRng) -> LabeledOperator {
    let d: usize = ws.iter().map(Wire::dim).product();
    let g = ginibre(d, d, rng);
    LabeledOperator::new(ws, &g * g.adjoint()).unwrap()
}

/// Two operators sharing a random subset of labels, each with private wires,
/// and wire orders shuffled.
pub fn linked_pair(seed: u64) -> (LabeledOperator, LabeledOperator) {
    let mut rng = rng_from_seed(seed);
    let shared = rng.random_range(0..=2);
    let only_a = rng.random_range(0..=2);
    let only_b = rng.random_range(0..=2);
    let mut dim = || rng.random_range(1..=3usize);
    let s: Vec<Wire> = (0..shared).map(|k| wire(format!("s{k}"), dim())).collect();
    let a_own: Vec<Wire> = (0..only_a).map(|k| wire(format!("a{k}"), dim())).collect();
    let b_own: Vec<Wire> = (0..only_b).map(|k| wire(format!("b{k}"), dim())).collect();
    let mut wa: Vec<Wire> = s.iter().chain(&a_own).cloned().collect();
    let mut wb: Vec<Wire> = s.iter().chain(&b_own).cloned().collect();
    wa.shuffle(&mut rng);
    wb.shuffle(&mut rng);
    (general(wa, &mut rng), general(wb, &mut rng))
}

pub fn relative(a: &LabeledOperator, b: &LabeledOperator) -> f64 {
    a.distance(b).unwrap() / a.frobenius_norm().max(b.frobenius_norm()).max(1e-300)
}

pub fn mat_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).norm()
}
