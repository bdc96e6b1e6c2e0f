//! Maximization of `Tr[R Ω]` over deterministic combs.
//!
//! The feasible set is the intersection of the PSD cone with the causality
//! affine set, both of which have cheap exact projections. The solver runs
//! over-relaxed ADMM (Douglas–Rachford splitting) between the two sets with
//! residual-balanced penalty updates. Every reported value is evaluated at an
//! exactly feasible point: the current PSD iterate is projected onto the
//! affine set and mixed with the maximally mixed comb until it is PSD again.
//!
//! Upper bounds come from weak duality: for every Hermitian `Y`,
//! `Tr[R Ω] = Tr[R (Ω − Q(Y))] ≤ T · λ_max(Ω − Q(Y))` on the feasible set,
//! where `Q` is the projection onto the causality violations and `T = ∏ d_in`
//! is the fixed trace. The ADMM multiplier supplies a near-optimal `Y`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::comb::{
    verify_causality, CausalProjector, CombStructure, ProbabilisticComb, QuantumComb,
    REGISTER_LABEL,
};
use crate::error::{Error, Result};
use crate::objective::PerformanceOperator;
use crate::tensor::{wire, LabeledOperator, MAX_DIM};

/// Linear objective over the comb set of `structure`.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub omega: LabeledOperator,
    pub structure: CombStructure,
    /// Tolerance on the splitting residuals.
    pub tol_feas: f64,
    /// Relative tolerance on value stagnation and on the certified gap.
    pub tol_gap: f64,
    pub max_iters: usize,
    /// Recorded with the problem; the solver itself draws no random numbers.
    pub seed: u64,
}

impl SdpProblem {
    pub fn new(omega: LabeledOperator, structure: CombStructure) -> Result<Self> {
        structure.check_operator(&omega)?;
        let dim = structure.total_dim();
        if dim > MAX_DIM {
            return Err(Error::DimOverflow { dim, cap: MAX_DIM });
        }
        if !all_finite(&omega) {
            return Err(Error::InvalidArgument("objective has non-finite entries".into()));
        }
        let residual = omega.hermitian_residual();
        if residual > crate::tensor::HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self {
            omega: omega.hermitian_part(),
            structure,
            tol_feas: 1e-6,
            tol_gap: 1e-6,
            max_iters: 50_000,
            seed: 0,
        })
    }

    pub fn from_objective(p: &PerformanceOperator) -> Result<Self> {
        Self::new(p.omega().clone(), p.structure().clone())
    }

    pub fn with_tolerances(mut self, tol_feas: f64, tol_gap: f64) -> Result<Self> {
        if !(tol_feas > 0.0 && tol_gap > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        self.tol_feas = tol_feas;
        self.tol_gap = tol_gap;
        Ok(self)
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// One row of the solver log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// Best value at an exactly feasible point so far.
    pub value: f64,
    /// Frobenius distance between the affine and PSD iterates.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub r_star: QuantumComb,
    pub value: f64,
    /// Causality residual of `r_star`.
    pub feas_residual: f64,
    /// `bound − value` when a dual bound is available.
    pub gap_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace_log: Vec<TraceRow>,
    /// Final ADMM multiplier `Λ ⪯ 0` for the PSD constraint, in canonical wire order.
    pub multiplier: Option<LabeledOperator>,
}

const STAGNATION_WINDOW: usize = 50;
const RELAXATION: f64 = 1.6;
const PENALTY_INTERVAL: usize = 10;

/// Runs the solver to convergence; a run that exhausts `max_iters` is
/// reported as [`Error::NoConvergence`] carrying the best feasible comb.
pub fn solve(p: &SdpProblem) -> Result<SdpSolution> {
    let sol = run(p)?;
    if sol.converged {
        Ok(sol)
    } else {
        let residual = sol.trace_log.last().map_or(f64::INFINITY, |r| r.residual);
        Err(Error::NoConvergence {
            iterations: sol.iterations,
            residual,
            best: Some(alloc::boxed::Box::new(sol.r_star)),
        })
    }
}

/// Runs the solver and returns the best feasible point whether or not it converged.
pub fn run(p: &SdpProblem) -> Result<SdpSolution> {
    let proj = CausalProjector::new(&p.structure)?;
    let order = p.structure.labels();
    let omega = p.omega.permute_wires(&order)?;
    let dim = p.structure.total_dim();
    let t = proj.target_trace();
    let scale = omega.frobenius_norm();
    let mixed = p.structure.maximally_mixed()?;
    let mixed_value = mixed.trace_product(&omega)?.re;

    if scale == 0.0 || omega.sub(&mixed.scale(mixed_value / t))?.frobenius_norm() <= 1e-14 * scale {
        // the objective is constant on the feasible set
        return finish(p, &proj, mixed, mixed_value, 0, true, Vec::new(), Some(mixed_value));
    }
    // work with a unit-norm objective and a comb scaled to unit-size eigenvalues
    let w = omega.scale(1.0 / scale);
    let r_scale = t / dim as f64;

    let mut z = mixed.scale(1.0 / r_scale);
    let mut u = LabeledOperator::zeros(z.wires().to_vec())?;
    let mut rho = 1.0;
    let mut best = mixed.clone();
    let mut best_value = mixed_value;
    let mut log = Vec::new();
    let check_every = if dim <= 256 { 1 } else { 10 };
    let mut converged = false;
    let mut iterations = 0;
    let mut bound: Option<f64> = None;

    for it in 1..=p.max_iters {
        iterations = it;
        let target = z.sub(&u)?.add(&w.scale(1.0 / rho))?;
        let x = project_scaled(&proj, &target, r_scale)?;
        let x_hat = x.scale(RELAXATION).add(&z.scale(1.0 - RELAXATION))?;
        let z_prev = z;
        z = x_hat.add(&u)?.psd_project()?;
        u = u.add(&x_hat)?.sub(&z)?;

        let r_primal = x.distance(&z)?;
        let r_dual = rho * z.distance(&z_prev)?;
        let z_norm = z.frobenius_norm().max(1.0);

        if it % check_every == 0 {
            let candidate = proj.project(&z.scale(r_scale))?;
            let (feasible, _) = proj.restore_positivity(&candidate)?;
            let v = feasible.trace_product(&omega)?.re;
            if v > best_value {
                best_value = v;
                best = feasible;
            }
        }
        log.push(TraceRow {
            iteration: it,
            value: best_value,
            residual: r_primal,
        });

        let primal_ok = r_primal <= p.tol_feas * z_norm;
        let dual_ok = r_dual <= p.tol_feas * z_norm.max(rho * u.frobenius_norm());
        if it % PENALTY_INTERVAL == 0 || (primal_ok && dual_ok) {
            let b = upper_bound(&proj, &omega, &u.scale(rho * scale))?;
            bound = Some(bound.map_or(b, |old: f64| old.min(b)));
            let gap_ok = b - best_value <= p.tol_gap * (1.0 + best_value.abs());
            let stagnant = it > STAGNATION_WINDOW && {
                let past = log[it - 1 - STAGNATION_WINDOW].value;
                best_value - past <= p.tol_gap * (1.0 + best_value.abs())
            };
            if gap_ok || (primal_ok && dual_ok && stagnant) {
                converged = true;
                break;
            }
        }
        if it % PENALTY_INTERVAL == 0 {
            if r_primal > 10.0 * r_dual {
                rho *= 2.0;
                u = u.scale(0.5);
            } else if r_dual > 10.0 * r_primal {
                rho *= 0.5;
                u = u.scale(2.0);
            }
        }
    }
    let multiplier = u.scale(rho * scale);
    let mut sol = finish(p, &proj, best, best_value, iterations, converged, log, bound)?;
    sol.multiplier = Some(multiplier);
    Ok(sol)
}

fn project_scaled(proj: &CausalProjector, w: &LabeledOperator, r_scale: f64) -> Result<LabeledOperator> {
    Ok(proj.project(&w.scale(r_scale))?.scale(1.0 / r_scale))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    p: &SdpProblem,
    proj: &CausalProjector,
    r: LabeledOperator,
    value: f64,
    iterations: usize,
    converged: bool,
    trace_log: Vec<TraceRow>,
    bound: Option<f64>,
) -> Result<SdpSolution> {
    let report = verify_causality(&r, proj.structure(), 10.0 * p.tol_feas)?;
    let bound = bound.filter(|b| b.is_finite()).map(|b| b.max(value));
    Ok(SdpSolution {
        r_star: QuantumComb::new_unchecked(r, p.structure.clone()),
        value,
        feas_residual: report.feasibility_residual(),
        gap_bound: bound.map(|b| b - value),
        upper_bound: bound,
        iterations,
        converged,
        trace_log,
        multiplier: None,
    })
}

fn all_finite(op: &LabeledOperator) -> bool {
    op.matrix().iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `T · λ_max(Ω − Q(Ω − Λ))`, the weak-duality bound for multiplier `Λ`.
fn upper_bound(proj: &CausalProjector, omega: &LabeledOperator, lambda: &LabeledOperator) -> Result<f64> {
    let s = proj.project_complement(&omega.sub(lambda)?)?;
    let shifted = omega.sub(&s)?;
    Ok(proj.target_trace() * shifted.max_eigenvalue()?)
}

/// Upper bound on the optimum of `p`, certified by weak duality.
///
/// Uses the multiplier recorded in `candidate` and falls back to the trivial
/// bound `T · λ_max(Ω)`; the smaller of the two is returned.
pub fn dual_bound(p: &SdpProblem, candidate: &SdpSolution) -> Result<f64> {
    let proj = CausalProjector::new(&p.structure)?;
    let order = p.structure.labels();
    let omega = p.omega.permute_wires(&order)?;
    if !all_finite(&omega) {
        return Err(Error::BoundUnavailable("objective has non-finite entries".into()));
    }
    let mut best = proj.target_trace() * omega.max_eigenvalue()?;
    if let Some(lambda) = &candidate.multiplier {
        let b = upper_bound(&proj, &omega, &lambda.permute_wires(&order)?)?;
        if b.is_finite() {
            best = best.min(b);
        }
    }
    if !best.is_finite() {
        return Err(Error::BoundUnavailable("non-finite spectral bound".into()));
    }
    Ok(best)
}

/// Optimal probabilistic comb for branch objectives `Ω_i`.
#[derive(Debug, Clone)]
pub struct ProbabilisticSolution {
    pub comb: ProbabilisticComb,
    /// `Tr[R_i Ω_i]` per branch.
    pub values: Vec<f64>,
    pub total: f64,
    /// Solution of the register-comb problem the branches were read from.
    pub register: SdpSolution,
}

/// Maximizes `Σ_i Tr[R_i Ω_i]` over `R_i ⪰ 0` with `Σ_i R_i` a deterministic comb.
///
/// The branches are encoded in a register comb `Σ_i R_i ⊗ |i⟩⟨i|` whose last
/// output carries the outcome; with the block-diagonal objective
/// `Σ_i Ω_i ⊗ |i⟩⟨i|` the register problem is an ordinary comb problem.
pub fn solve_probabilistic(
    omegas: &[LabeledOperator],
    structure: &CombStructure,
    tol_feas: f64,
    tol_gap: f64,
    max_iters: usize,
) -> Result<ProbabilisticSolution> {
    if omegas.is_empty() {
        return Err(Error::InvalidArgument("at least one branch objective is required".into()));
    }
    if structure.labels().contains(&REGISTER_LABEL) {
        return Err(Error::DuplicateLabel(REGISTER_LABEL.into()));
    }
    for o in omegas {
        structure.check_operator(o)?;
    }
    let k = omegas.len();
    let order = structure.labels();
    let (last_in, last_out) = structure.teeth().last().expect("nonempty").clone();
    let fused = format!("{}+{}", last_out.label(), REGISTER_LABEL);
    let reg = wire(REGISTER_LABEL, k);

    let mut total: Option<LabeledOperator> = None;
    for (i, o) in omegas.iter().enumerate() {
        let term = o
            .permute_wires(&order)?
            .tensor(&LabeledOperator::basis_projector(reg.clone(), i)?)?;
        total = Some(match total {
            None => term,
            Some(acc) => acc.add(&term)?,
        });
    }
    let big = total
        .expect("nonempty")
        .fuse_wires(&[last_out.label(), REGISTER_LABEL], &fused)?;
    let mut teeth = structure.teeth().to_vec();
    let last = teeth.len() - 1;
    teeth[last] = (last_in, wire(fused.clone(), last_out.dim() * k));
    let big_structure = CombStructure::new(teeth)?;

    let problem = SdpProblem::new(big, big_structure)?
        .with_tolerances(tol_feas, tol_gap)?
        .with_max_iters(max_iters);
    let register = run(&problem)?;
    if !register.converged {
        let residual = register.trace_log.last().map_or(f64::INFINITY, |r| r.residual);
        return Err(Error::NoConvergence {
            iterations: register.iterations,
            residual,
            best: Some(alloc::boxed::Box::new(register.r_star)),
        });
    }

    // read off the diagonal register blocks; dropping the off-diagonal blocks
    // keeps positivity, the causal marginals and the value
    let split = register
        .r_star
        .operator()
        .split_wire(&fused, &[last_out.clone(), reg.clone()])?;
    let mut branches = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    for (i, o) in omegas.iter().enumerate() {
        let effect = LabeledOperator::basis_projector(reg.clone(), i)?;
        let block = split
            .matmul(&effect.tensor(&LabeledOperator::identity(structure.wires())?)?)?
            .partial_trace(&[REGISTER_LABEL])?
            .permute_wires(&order)?
            .hermitian_part();
        values.push(block.trace_product(o)?.re);
        branches.push((i.to_string(), block));
    }
    let comb = ProbabilisticComb::new(branches, structure.clone(), 10.0 * tol_feas.max(1e-9))?;
    let total = values.iter().sum();
    Ok(ProbabilisticSolution {
        comb,
        values,
        total,
        register,
    })
}
