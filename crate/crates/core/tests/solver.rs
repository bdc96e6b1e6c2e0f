mod common;
mod oracle;

use qcomb_core::comb::verify_causality;
use qcomb_core::objective::{cloning_objective, learning_objective};
use qcomb_core::optimizer::{dual_bound, run, solve, solve_probabilistic, SdpProblem};
use qcomb_core::random::rng_from_seed;
use qcomb_core::{CombStructure, LabeledOperator};

#[test]
fn single_tooth_matches_brute_force() {
    let s = CombStructure::sequential(&[(2, 2)]).unwrap();
    for seed in 0..20u64 {
        let mut rng = rng_from_seed(seed);
        let omega = common::hermitian(s.wires(), &mut rng);
        let sol = solve(&SdpProblem::new(omega.clone(), s.clone()).unwrap()).unwrap();
        let out_in = omega.permute_wires(&["1", "0"]).unwrap();
        let brute = oracle::max_over_channels(out_in.matrix(), 2, 2, 2, 30, seed);
        assert!((sol.value - brute).abs() < 1e-3, "seed {seed}: {} vs {brute}", sol.value);
    }
}

#[test]
fn reported_points_are_feasible() {
    let p = SdpProblem::from_objective(&learning_objective(1, 2).unwrap()).unwrap();
    let sol = solve(&p).unwrap();
    let rep = verify_causality(sol.r_star.operator(), &p.structure, p.tol_feas).unwrap();
    assert!(rep.passed);
    assert!((p.omega.trace_product(sol.r_star.operator()).unwrap().re - sol.value).abs() < 1e-12);
    let b = dual_bound(&p, &sol).unwrap();
    assert!(b >= sol.value && b - sol.value < 1e-4);
}

#[test]
fn runs_are_reproducible() {
    let p = SdpProblem::from_objective(&learning_objective(1, 2).unwrap()).unwrap().with_seed(7);
    let a = run(&p).unwrap();
    let b = run(&p).unwrap();
    assert_eq!(a.trace_log, b.trace_log);
    assert_eq!(a.r_star, b.r_star);
    assert!(a.trace_log.windows(2).all(|w| w[1].value >= w[0].value));
}

#[test]
fn iteration_budget_is_reported() {
    let p = SdpProblem::from_objective(&cloning_objective(1, 2, 2).unwrap())
        .unwrap()
        .with_max_iters(3);
    match solve(&p) {
        Err(qcomb_core::Error::NoConvergence { iterations, best, .. }) => {
            assert_eq!(iterations, 3);
            assert!(best.unwrap().verify(1e-9).unwrap().passed);
        }
        other => panic!("expected NoConvergence, got {other:?}"),
    }
}

#[test]
fn single_branch_reduces_to_solve() {
    let obj = learning_objective(1, 2).unwrap();
    let single = solve(&SdpProblem::from_objective(&obj).unwrap()).unwrap();
    let prob = solve_probabilistic(&[obj.omega().clone()], obj.structure(), 1e-6, 1e-6, 50_000).unwrap();
    assert!((prob.total - single.value).abs() < 1e-4);
}

#[test]
fn splitting_does_not_help_a_linear_objective() {
    let obj = cloning_objective(1, 2, 2).unwrap();
    let single = solve(&SdpProblem::from_objective(&obj).unwrap()).unwrap();
    let o = obj.omega().clone();
    let prob = solve_probabilistic(&[o.clone(), o], obj.structure(), 1e-6, 1e-6, 50_000).unwrap();
    assert!((prob.total - single.value).abs() < 1e-4, "{} vs {}", prob.total, single.value);
    let sum = prob.comb.sum().unwrap();
    assert!(verify_causality(&sum, obj.structure(), 1e-9).unwrap().passed);
}

#[test]
fn mismatched_objective_is_rejected() {
    let s = CombStructure::sequential(&[(2, 2)]).unwrap();
    let wrong = LabeledOperator::identity(vec![qcomb_core::wire("x", 4)]).unwrap();
    assert!(SdpProblem::new(wrong, s).is_err());
}
