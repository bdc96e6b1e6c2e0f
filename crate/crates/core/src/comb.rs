//! Quantum combs: causality constraints, generation, projection and supermap action.
//!
//! A comb with `N` slots has teeth `n = 0..=N`, each an (input, output) wire
//! pair. Its Choi operator `R` is a deterministic comb iff `R ⪰ 0` and
//!
//! ```text
//! Tr_{out_n}[R⁽ⁿ⁾] = I_{in_n} ⊗ R⁽ⁿ⁻¹⁾,   n = 0..N,   R⁽ᴺ⁾ = R,  R⁽⁻¹⁾ = 1,
//! ```
//!
//! where `R⁽ⁿ⁻¹⁾ = Tr_{in_n, out_n}[R⁽ⁿ⁾] / d_{in_n}`.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::choi::{ChoiOperator, KrausMap, kraus_to_choi};
use crate::error::{Error, Result};
use crate::link::{Network, link_product};
use crate::random::{random_channel_kraus, rng_from_seed};
use crate::tensor::{total_dim, wire, LabeledOperator, Wire, MAX_DIM};

/// Default tolerance for causality verification.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Ordered teeth of a comb; tooth `n` is the pair `(in_n, out_n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombStructure {
    teeth: Vec<(Wire, Wire)>,
}

impl CombStructure {
    pub fn new(teeth: Vec<(Wire, Wire)>) -> Result<Self> {
        if teeth.is_empty() {
            return Err(Error::InvalidArgument("a comb needs at least one tooth".into()));
        }
        let mut seen = BTreeSet::new();
        for (i, o) in &teeth {
            for w in [i, o] {
                if !seen.insert(w.label().to_string()) {
                    return Err(Error::DuplicateLabel(w.label().to_string()));
                }
            }
        }
        Ok(Self { teeth })
    }

    /// Teeth labeled `"2n"` (input) and `"2n+1"` (output) with the given dimensions.
    pub fn sequential(dims: &[(usize, usize)]) -> Result<Self> {
        let teeth = dims
            .iter()
            .enumerate()
            .map(|(n, &(di, dout))| {
                Ok((
                    Wire::new((2 * n).to_string(), di)?,
                    Wire::new((2 * n + 1).to_string(), dout)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(teeth)
    }

    /// From `in:out` label pairs and a dimension lookup.
    pub fn from_labels(pairs: &[(&str, &str)], dim_of: impl Fn(&str) -> Option<usize>) -> Result<Self> {
        let lookup = |l: &str| {
            dim_of(l)
                .ok_or_else(|| Error::UnknownLabel(l.to_string()))
                .and_then(|d| Wire::new(l, d))
        };
        let teeth = pairs
            .iter()
            .map(|&(i, o)| Ok((lookup(i)?, lookup(o)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(teeth)
    }

    pub fn teeth(&self) -> &[(Wire, Wire)] {
        &self.teeth
    }

    /// Number of slots `N` (one less than the number of teeth).
    pub fn slots(&self) -> usize {
        self.teeth.len() - 1
    }

    /// All wires in causal order `in_0, out_0, in_1, out_1, …`.
    pub fn wires(&self) -> Vec<Wire> {
        self.teeth
            .iter()
            .flat_map(|(i, o)| [i.clone(), o.clone()])
            .collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.teeth
            .iter()
            .flat_map(|(i, o)| [i.label(), o.label()])
            .collect()
    }

    pub fn total_dim(&self) -> usize {
        self.teeth.iter().map(|(i, o)| i.dim() * o.dim()).product()
    }

    /// `∏_n d_{in_n}`, the trace of every deterministic comb on this structure.
    pub fn input_dim_product(&self) -> usize {
        self.teeth.iter().map(|(i, _)| i.dim()).product()
    }

    /// Checks that `op` acts on exactly this structure's wires.
    pub fn check_operator(&self, op: &LabeledOperator) -> Result<()> {
        let structure_shape = self.wires();
        if op.wires().len() != structure_shape.len() {
            return Err(Error::LabelMismatch(format!(
                "operator has {} wires, comb structure has {}",
                op.wires().len(),
                structure_shape.len()
            )));
        }
        for w in &structure_shape {
            match op.wire(w.label()) {
                None => {
                    return Err(Error::LabelMismatch(format!(
                        "operator has no wire `{}`",
                        w.label()
                    )))
                }
                Some(o) if o.dim() != w.dim() => {
                    return Err(Error::DimMismatch {
                        label: w.label().to_string(),
                        left: w.dim(),
                        right: o.dim(),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// The maximally mixed comb `I · ∏d_in / D`.
    pub fn maximally_mixed(&self) -> Result<LabeledOperator> {
        let scale = self.input_dim_product() as f64 / self.total_dim() as f64;
        Ok(LabeledOperator::identity(self.wires())?.scale(scale))
    }
}

/// Choi operator of a deterministic comb.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumComb {
    r: LabeledOperator,
    structure: CombStructure,
}

impl QuantumComb {
    /// Verifies `r` against `structure` at `tol`.
    pub fn new(r: LabeledOperator, structure: CombStructure, tol: f64) -> Result<Self> {
        let report = verify_causality(&r, &structure, tol)?;
        if !report.passed {
            return Err(Error::InvalidArgument(format!(
                "operator is not a deterministic comb (worst residual {:.3e}, min eigenvalue {:.3e})",
                report.max_residual(),
                report.min_eigenvalue
            )));
        }
        Ok(Self::new_unchecked(r, structure))
    }

    pub fn new_unchecked(r: LabeledOperator, structure: CombStructure) -> Self {
        Self { r, structure }
    }

    pub fn operator(&self) -> &LabeledOperator {
        &self.r
    }

    pub fn into_operator(self) -> LabeledOperator {
        self.r
    }

    pub fn structure(&self) -> &CombStructure {
        &self.structure
    }

    pub fn verify(&self, tol: f64) -> Result<CausalityReport> {
        verify_causality(&self.r, &self.structure, tol)
    }
}

/// `R⁽ⁿ⁾` for `n ∈ -1..=N`; `n = -1` gives the scalar 1 convention (computed, not assumed).
pub fn reduced_comb(r: &LabeledOperator, structure: &CombStructure, n: i64) -> Result<LabeledOperator> {
    let top = structure.slots() as i64;
    if n < -1 || n > top {
        return Err(Error::IndexOutOfRange { index: n, max: top });
    }
    structure.check_operator(r)?;
    let mut cur = r.clone();
    for k in ((n + 1)..=top).rev() {
        let (i, o) = &structure.teeth[k as usize];
        cur = cur
            .partial_trace(&[i.label(), o.label()])?
            .scale(1.0 / i.dim() as f64);
    }
    Ok(cur)
}

/// Per-level residuals of the causality constraints plus the spectrum check.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalityReport {
    pub passed: bool,
    /// `‖Tr_{out_n} R⁽ⁿ⁾ − I_{in_n} ⊗ R⁽ⁿ⁻¹⁾‖_F` for `n = 0..=N`.
    pub residuals: Vec<f64>,
    pub min_eigenvalue: f64,
    pub hermitian_residual: f64,
    pub tol: f64,
}

impl CausalityReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// First level whose residual exceeds the tolerance.
    pub fn failing_level(&self) -> Option<usize> {
        self.residuals.iter().position(|&r| r > self.tol)
    }

    /// Largest violation across both constraint families.
    pub fn feasibility_residual(&self) -> f64 {
        self.max_residual().max(-self.min_eigenvalue).max(0.0)
    }
}

pub fn verify_causality(r: &LabeledOperator, structure: &CombStructure, tol: f64) -> Result<CausalityReport> {
    structure.check_operator(r)?;
    let n_teeth = structure.teeth.len();
    let mut residuals = alloc::vec![0.0; n_teeth];
    let mut cur = r.clone();
    for n in (0..n_teeth).rev() {
        let (i, o) = &structure.teeth[n];
        let traced_out = cur.partial_trace(&[o.label()])?;
        let lower = traced_out
            .partial_trace(&[i.label()])?
            .scale(1.0 / i.dim() as f64);
        let expected = if n == 0 {
            // R⁽⁻¹⁾ = 1
            LabeledOperator::identity(alloc::vec![i.clone()])?
        } else {
            LabeledOperator::identity(alloc::vec![i.clone()])?.tensor(&lower)?
        };
        residuals[n] = traced_out.distance(&expected)?;
        cur = lower;
    }
    let hermitian_residual = r.hermitian_residual();
    let min_eigenvalue = r.hermitian_part().min_eigenvalue()?;
    let passed = residuals.iter().all(|&x| x <= tol)
        && min_eigenvalue >= -tol
        && hermitian_residual <= tol.max(crate::tensor::HERMITIAN_TOL);
    Ok(CausalityReport {
        passed,
        residuals,
        min_eigenvalue,
        hermitian_residual,
        tol,
    })
}

/// Orthogonal (Hilbert–Schmidt) projector onto the affine set cut out by the
/// causality equalities of one comb structure.
///
/// With `T_X(W) = Tr_X[W] ⊗ I_X / d_X`, the homogeneous constraints say that
/// `Q_n = T_{out_n}(1 − T_{in_n}) ∏_{k>n} T_{in_k} T_{out_k}` annihilates `W`.
/// The `Q_n` are mutually orthogonal projectors, so `P = 1 − Σ Q_n` projects
/// onto their common kernel, and the trace is fixed by adding a multiple of `I`.
#[derive(Debug, Clone)]
pub struct CausalProjector {
    structure: CombStructure,
    order: Vec<String>,
    target_trace: f64,
    dim: usize,
}

impl CausalProjector {
    pub fn new(structure: &CombStructure) -> Result<Self> {
        let dim = structure.total_dim();
        if dim > MAX_DIM {
            return Err(Error::DimOverflow { dim, cap: MAX_DIM });
        }
        Ok(Self {
            structure: structure.clone(),
            order: structure.labels().iter().map(|s| s.to_string()).collect(),
            target_trace: structure.input_dim_product() as f64,
            dim,
        })
    }

    pub fn structure(&self) -> &CombStructure {
        &self.structure
    }

    pub fn target_trace(&self) -> f64 {
        self.target_trace
    }

    fn canonical(&self, w: &LabeledOperator) -> Result<LabeledOperator> {
        self.structure.check_operator(w)?;
        let order: Vec<&str> = self.order.iter().map(String::as_str).collect();
        if w.labels().eq(order.iter().copied()) {
            Ok(w.clone())
        } else {
            w.permute_wires(&order)
        }
    }

    /// `Σ_n Q_n(W)`, the component of `W` violating the homogeneous constraints.
    /// Input and output are in canonical wire order.
    fn violation(&self, w: &LabeledOperator) -> Result<LabeledOperator> {
        let teeth = &self.structure.teeth;
        let mut total = LabeledOperator::zeros(w.wires().to_vec())?;
        // marginals W_n = Tr_{teeth > n} W, built top-down
        let mut marg = w.clone();
        let mut tail: Vec<Wire> = Vec::new();
        for n in (0..teeth.len()).rev() {
            let (i, o) = &teeth[n];
            let traced_out = marg.partial_trace(&[o.label()])?;
            let lower = traced_out.partial_trace(&[i.label()])?;
            let lifted_lower = LabeledOperator::identity(alloc::vec![i.clone()])?
                .tensor(&lower)?
                .scale(1.0 / i.dim() as f64);
            let v = traced_out.sub(&lifted_lower)?;
            let mut pad = alloc::vec![o.clone()];
            pad.extend(tail.iter().cloned());
            let pad_dim = total_dim(&pad) as f64;
            let embedded = v
                .tensor(&LabeledOperator::identity(pad)?)?
                .scale(1.0 / pad_dim);
            total = total.add(&embedded)?;
            tail.insert(0, o.clone());
            tail.insert(0, i.clone());
            marg = lower;
        }
        Ok(total)
    }

    /// Projection onto the linear subspace of operators obeying the homogeneous constraints.
    pub fn project_linear(&self, w: &LabeledOperator) -> Result<LabeledOperator> {
        let w = self.canonical(w)?;
        let v = self.violation(&w)?;
        w.sub(&v)
    }

    /// Projection onto the affine set of the causality equalities (trace included).
    pub fn project(&self, w: &LabeledOperator) -> Result<LabeledOperator> {
        let p = self.project_linear(w)?;
        let shift = (self.target_trace - p.trace().re) / self.dim as f64;
        let id = LabeledOperator::identity(p.wires().to_vec())?;
        p.add(&id.scale(shift))
    }

    /// The orthogonal complement `W − P(W)` of the linear projection.
    pub fn project_complement(&self, w: &LabeledOperator) -> Result<LabeledOperator> {
        let w = self.canonical(w)?;
        self.violation(&w)
    }

    /// Moves an affine-feasible operator into the PSD cone by mixing with the
    /// maximally mixed comb; returns the mixed operator and the mixing weight.
    pub fn restore_positivity(&self, w: &LabeledOperator) -> Result<(LabeledOperator, f64)> {
        let w = self.canonical(w)?;
        let h = w.hermitian_part();
        let lmin = h.min_eigenvalue()?;
        if lmin >= 0.0 {
            return Ok((h, 0.0));
        }
        let floor = self.target_trace / self.dim as f64;
        let t = (-lmin) / (-lmin + floor);
        let mixed = h
            .scale(1.0 - t)
            .add(&self.structure.maximally_mixed()?.scale(t))?;
        Ok((mixed, t))
    }
}

/// Result of [`project_to_comb`].
#[derive(Debug, Clone)]
pub struct Projection {
    pub comb: QuantumComb,
    pub iterations: usize,
    /// Final Frobenius gap between the PSD and affine iterates.
    pub gap: f64,
    /// Weight of the maximally mixed comb used for the final positivity restoration.
    pub mixing: f64,
    pub report: CausalityReport,
}

/// Nearest deterministic comb to `x`, via Dykstra's alternating projections
/// between the PSD cone and the causality affine set.
pub fn project_to_comb(
    x: &LabeledOperator,
    structure: &CombStructure,
    iters: usize,
    tol: f64,
) -> Result<Projection> {
    let proj = CausalProjector::new(structure)?;
    project_to_comb_with(&proj, x, iters, tol)
}

pub fn project_to_comb_with(
    proj: &CausalProjector,
    x: &LabeledOperator,
    iters: usize,
    tol: f64,
) -> Result<Projection> {
    let residual = x.hermitian_residual();
    if residual > crate::tensor::HERMITIAN_TOL {
        return Err(Error::NotHermitian { residual });
    }
    let mut psd = proj.canonical(x)?.hermitian_part();
    let zeros = LabeledOperator::zeros(psd.wires().to_vec())?;
    let (mut p, mut q) = (zeros.clone(), zeros);
    let mut gap = f64::INFINITY;
    let mut done = 0;
    for it in 0..iters {
        let y = proj.project(&psd.add(&p)?)?;
        p = psd.add(&p)?.sub(&y)?;
        let next = y.add(&q)?.psd_project()?;
        q = y.add(&q)?.sub(&next)?;
        gap = next.distance(&y)?;
        psd = next;
        done = it + 1;
        if gap <= tol {
            break;
        }
    }
    let affine = proj.project(&psd)?;
    let (restored, mixing) = proj.restore_positivity(&affine)?;
    let report = verify_causality(&restored, &proj.structure, 10.0 * tol.max(1e-12))?;
    let comb = QuantumComb::new_unchecked(restored, proj.structure.clone());
    if gap > tol {
        return Err(Error::NoConvergence {
            iterations: done,
            residual: gap,
            best: Some(Box::new(comb)),
        });
    }
    Ok(Projection {
        comb,
        iterations: done,
        gap,
        mixing,
        report,
    })
}

fn memory_label(structure: &CombStructure, n: usize) -> String {
    let labels = structure.labels();
    let mut label = format!("mem{n}");
    while labels.contains(&label.as_str()) {
        label.insert(0, '_');
    }
    label
}

/// Random comb built as a chain of random channels with memory.
///
/// Tooth `n` is a random channel `in_n ⊗ mem_{n-1} → out_n ⊗ mem_n` obtained
/// from a Haar isometry with an environment that is traced out; the last tooth
/// has no outgoing memory. `memory_dims[n]` is the dimension of `mem_n`.
pub fn random_comb(structure: &CombStructure, memory_dims: &[usize], seed: u64) -> Result<QuantumComb> {
    let n_slots = structure.slots();
    if memory_dims.len() != n_slots {
        return Err(Error::InvalidArgument(format!(
            "{n_slots} memory dimensions needed, {} given",
            memory_dims.len()
        )));
    }
    if memory_dims.contains(&0) {
        return Err(Error::InvalidArgument("memory dimensions must be positive".into()));
    }
    let dim = structure
        .teeth
        .iter()
        .try_fold(1usize, |acc, (i, o)| acc.checked_mul(i.dim() * o.dim()))
        .unwrap_or(usize::MAX);
    if dim > MAX_DIM {
        return Err(Error::DimOverflow { dim, cap: MAX_DIM });
    }
    let mut rng = rng_from_seed(seed);
    let mems: Vec<Wire> = memory_dims
        .iter()
        .enumerate()
        .map(|(n, &d)| wire(memory_label(structure, n), d))
        .collect();

    let mut parts = Vec::with_capacity(structure.teeth.len());
    for (n, (i, o)) in structure.teeth.iter().enumerate() {
        let mut ins = alloc::vec![i.clone()];
        if n > 0 {
            ins.push(mems[n - 1].clone());
        }
        let mut outs = alloc::vec![o.clone()];
        if n < n_slots {
            outs.push(mems[n].clone());
        }
        let (din, dout) = (total_dim(&ins), total_dim(&outs));
        let rank = din.div_ceil(dout).max(2);
        let kraus = random_channel_kraus(din, dout, rank, &mut rng);
        let map = KrausMap::new(wire("__in", din), wire("__out", dout), kraus)?;
        let choi = kraus_to_choi(&map)?
            .into_op()
            .split_wire("__out", &outs)?
            .split_wire("__in", &ins)?;
        parts.push(choi);
    }
    let r = Network::new(parts)?.assemble()?;
    let order = structure.labels();
    let r = r.permute_wires(&order)?.hermitian_part();
    Ok(QuantumComb::new_unchecked(r, structure.clone()))
}

/// Output of [`supermap_apply`]: the resulting operator and the comb structure
/// that remains after the filled slots are closed.
#[derive(Debug, Clone)]
pub struct SupermapOutput {
    pub choi: ChoiOperator,
    pub structure: CombStructure,
}

/// Inserts circuits into the slots of a comb: `C' = C_1 * ⋯ * C_k * R`.
///
/// `slots[j]` (in `1..=N`) is the slot receiving `inputs[j]`. Slot `k` sits
/// between tooth `k-1` and tooth `k`: the inserted circuit reads the comb's
/// output `out_{k-1}` and feeds the comb's input `in_k`. Each input must have
/// one input and one output wire; its labels are replaced by the slot's.
pub fn supermap_apply(
    comb: &QuantumComb,
    inputs: &[ChoiOperator],
    slots: &[usize],
) -> Result<SupermapOutput> {
    let structure = &comb.structure;
    let n_slots = structure.slots();
    if inputs.len() != slots.len() {
        return Err(Error::SlotArityMismatch {
            expected: slots.len(),
            got: inputs.len(),
        });
    }
    if inputs.len() > n_slots {
        return Err(Error::SlotArityMismatch {
            expected: n_slots,
            got: inputs.len(),
        });
    }
    let mut filled = alloc::vec![false; n_slots + 1];
    let mut parts = alloc::vec![comb.r.clone()];
    for (input, &k) in inputs.iter().zip(slots) {
        if k == 0 || k > n_slots {
            return Err(Error::IndexOutOfRange {
                index: k as i64,
                max: n_slots as i64,
            });
        }
        if filled[k] {
            return Err(Error::InvalidArgument(format!("slot {k} filled twice")));
        }
        filled[k] = true;
        let (outs, ins) = (input.out_labels(), input.in_labels());
        if outs.len() != 1 || ins.len() != 1 {
            return Err(Error::LabelMismatch(
                "slot inputs need exactly one input and one output wire".into(),
            ));
        }
        let feeds = &structure.teeth[k - 1].1;
        let returns = &structure.teeth[k].0;
        let (w_out, w_in) = (&input.op().wires()[0], &input.op().wires()[1]);
        if w_in.dim() != feeds.dim() {
            return Err(Error::DimMismatch {
                label: feeds.label().to_string(),
                left: feeds.dim(),
                right: w_in.dim(),
            });
        }
        if w_out.dim() != returns.dim() {
            return Err(Error::DimMismatch {
                label: returns.label().to_string(),
                left: returns.dim(),
                right: w_out.dim(),
            });
        }
        let relabeled = LabeledOperator::new(
            alloc::vec![returns.clone(), feeds.clone()],
            input.op().matrix().clone(),
        )?;
        parts.push(relabeled);
    }
    let out = Network::new(parts)?.assemble()?;

    let mut teeth: Vec<(Wire, Wire)> = Vec::new();
    let mut open_in = structure.teeth[0].0.clone();
    for n in 0..=n_slots {
        if n < n_slots && filled[n + 1] {
            continue;
        }
        teeth.push((open_in.clone(), structure.teeth[n].1.clone()));
        if n < n_slots {
            open_in = structure.teeth[n + 1].0.clone();
        }
    }
    let residual = CombStructure::new(teeth)?;
    let out_labels: Vec<&str> = residual.teeth.iter().map(|(_, o)| o.label()).collect();
    let in_labels: Vec<&str> = residual.teeth.iter().map(|(i, _)| i.label()).collect();
    let choi = ChoiOperator::new(out, &out_labels, &in_labels)?;
    Ok(SupermapOutput {
        choi,
        structure: residual,
    })
}

/// Family of outcome-labeled positive operators summing to a deterministic comb.
#[derive(Debug, Clone)]
pub struct ProbabilisticComb {
    branches: Vec<(String, LabeledOperator)>,
    structure: CombStructure,
}

impl ProbabilisticComb {
    pub fn new(
        branches: Vec<(String, LabeledOperator)>,
        structure: CombStructure,
        tol: f64,
    ) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidArgument("a probabilistic comb needs a branch".into()));
        }
        let mut ids = BTreeSet::new();
        for (id, r) in &branches {
            if !ids.insert(id.as_str()) {
                return Err(Error::DuplicateLabel(id.clone()));
            }
            structure.check_operator(r)?;
            let lmin = r.hermitian_part().min_eigenvalue()?;
            if lmin < -tol {
                return Err(Error::NotPsd { min_eigenvalue: lmin });
            }
        }
        let p = Self {
            branches,
            structure,
        };
        let report = verify_causality(&p.sum()?, &p.structure, tol)?;
        if !report.passed {
            return Err(Error::InvalidBranchSum {
                residual: report.feasibility_residual(),
            });
        }
        Ok(p)
    }

    pub fn branches(&self) -> &[(String, LabeledOperator)] {
        &self.branches
    }

    pub fn structure(&self) -> &CombStructure {
        &self.structure
    }

    /// `Σ_i R_i`.
    pub fn sum(&self) -> Result<LabeledOperator> {
        let mut it = self.branches.iter();
        let first = it.next().expect("nonempty").1.clone();
        it.try_fold(first, |acc, (_, r)| acc.add(r))
    }

    /// Label of the enlarged final output wire `out_N ⊗ C` of the register comb.
    pub fn register_output_label(&self) -> String {
        format!("{}+C", self.structure.teeth.last().expect("nonempty").1.label())
    }
}

/// Label of the classical register wire when the enlarged output is split.
pub const REGISTER_LABEL: &str = "C";

/// `R̃ = Σ_i R_i ⊗ |i⟩⟨i|` with the register fused into the last output wire.
pub fn register_comb(p: &ProbabilisticComb) -> Result<QuantumComb> {
    let k = p.branches.len();
    let (last_in, last_out) = p.structure.teeth.last().expect("nonempty").clone();
    if p.structure.labels().contains(&REGISTER_LABEL) {
        return Err(Error::DuplicateLabel(REGISTER_LABEL.into()));
    }
    let reg = wire(REGISTER_LABEL, k);
    let fused_label = p.register_output_label();
    let order = p.structure.labels();
    let mut acc: Option<LabeledOperator> = None;
    for (idx, (_, r)) in p.branches.iter().enumerate() {
        let term = r
            .permute_wires(&order)?
            .tensor(&LabeledOperator::basis_projector(reg.clone(), idx)?)?;
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term)?,
        });
    }
    let r_tilde = acc
        .expect("nonempty")
        .fuse_wires(&[last_out.label(), REGISTER_LABEL], &fused_label)?;
    let mut teeth = p.structure.teeth.clone();
    let last = teeth.len() - 1;
    teeth[last] = (last_in, wire(fused_label, last_out.dim() * k));
    let structure = CombStructure::new(teeth)?;
    let report = verify_causality(&r_tilde, &structure, DEFAULT_TOL)?;
    if !report.passed {
        return Err(Error::InvalidBranchSum {
            residual: report.feasibility_residual(),
        });
    }
    Ok(QuantumComb::new_unchecked(r_tilde, structure))
}

/// Measures the register of a register comb and keeps outcome `index`:
/// links the split register wire with `|index⟩⟨index|`.
pub fn postselect(
    register: &QuantumComb,
    original_output: &Wire,
    branches: usize,
    index: usize,
) -> Result<LabeledOperator> {
    let fused = register
        .structure
        .teeth
        .last()
        .expect("nonempty")
        .1
        .clone();
    let split = register.r.split_wire(
        fused.label(),
        &[original_output.clone(), wire(REGISTER_LABEL, branches)],
    )?;
    let effect = LabeledOperator::basis_projector(wire(REGISTER_LABEL, branches), index)?;
    link_product(&split, &effect)
}
