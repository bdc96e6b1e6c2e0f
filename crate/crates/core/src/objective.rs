//! Haar-averaged performance operators.
//!
//! A figure of merit averaged over a unitary `U` that is inserted into the slots
//! of a comb becomes linear in the comb: `F(R) = Tr[R Ω]`. Inserting a circuit
//! through the link product transposes it, so each slot carries
//! `|Ū⟩⟩⟨⟨Ū|` while the target channel carries `|V⟩⟩⟨⟨V|`.
//!
//! Fidelities are channel fidelities `⟨⟨V|C|V⟩⟩ / d_V²`, so a perfect
//! implementation scores 1.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::choi::max_entangled;
use crate::comb::CombStructure;
use crate::design::{haar_average, Design, RepTag, TwirlSpec, WirePattern};
use crate::error::{Error, Result};
use crate::link::link_product;
use crate::tensor::{wire, LabeledOperator, MAX_DIM};

/// Hermitian `Ω` on a comb's wires with `F(R) = Tr[R Ω]`.
#[derive(Debug, Clone)]
pub struct PerformanceOperator {
    omega: LabeledOperator,
    structure: CombStructure,
    twirl: TwirlSpec,
}

impl PerformanceOperator {
    /// Wraps `omega`, permuted into the structure's wire order.
    pub fn new(omega: LabeledOperator, structure: CombStructure, twirl: TwirlSpec) -> Result<Self> {
        structure.check_operator(&omega)?;
        let residual = omega.hermitian_residual();
        if residual > 1e-12 {
            return Err(Error::NotHermitian { residual });
        }
        let order = structure.labels();
        let omega = omega.permute_wires(&order)?.hermitian_part();
        Ok(Self {
            omega,
            structure,
            twirl,
        })
    }

    pub fn omega(&self) -> &LabeledOperator {
        &self.omega
    }

    pub fn structure(&self) -> &CombStructure {
        &self.structure
    }

    /// The symmetry under which `Ω` is invariant.
    pub fn twirl(&self) -> &TwirlSpec {
        &self.twirl
    }

    /// `Tr[R Ω]`.
    pub fn value(&self, r: &LabeledOperator) -> Result<f64> {
        Ok(r.trace_product(&self.omega)?.re)
    }

    /// `Tr[R Ω]` evaluated as a full link-product contraction with `Ωᵀ`.
    pub fn value_by_link(&self, r: &LabeledOperator) -> Result<f64> {
        let c = link_product(&self.omega.transpose(), r)?;
        if !c.is_scalar() {
            return Err(Error::LabelMismatch("operator does not cover the comb".into()));
        }
        Ok(c.scalar_value().re)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            omega: self.omega.scale(s),
            ..self.clone()
        }
    }
}

fn checked_pow(d: usize, e: usize) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..e {
        acc = acc.saturating_mul(d);
        if acc > MAX_DIM {
            return Err(Error::DimOverflow { dim: acc, cap: MAX_DIM });
        }
    }
    Ok(acc)
}

fn label(n: usize) -> alloc::string::String {
    n.to_string()
}

/// `|Ω⟩⟩⟨⟨Ω|` on `(out, in)`.
fn omega_projector(out: usize, inp: usize, dim: usize) -> Result<LabeledOperator> {
    Ok(max_entangled(wire(label(out), dim), wire(label(inp), dim))?.projector())
}

/// Comb for `N → M` cloning of a `d`-dimensional unitary.
///
/// Wires `0` (dim `d^M`) and `2N+1` (dim `d^M`) carry the `M` copies to be
/// processed; slot `k` reads `2k-1` and writes `2k`.
pub fn cloning_structure(n: usize, m: usize, d: usize) -> Result<CombStructure> {
    if n == 0 || m == 0 || d < 2 {
        return Err(Error::InvalidArgument(format!(
            "cloning needs N, M >= 1 and d >= 2 (got N={n}, M={m}, d={d})"
        )));
    }
    checked_pow(d, 2 * (n + m))?;
    let dm = checked_pow(d, m)?;
    let mut dims = Vec::with_capacity(n + 1);
    dims.push((dm, d));
    dims.extend(core::iter::repeat((d, d)).take(n - 1));
    dims.push((d, dm));
    CombStructure::sequential(&dims)
}

/// `Ω` for `N → M` cloning: `F(R)` is the Haar-averaged channel fidelity of
/// the output with `U^{⊗M}`.
pub fn cloning_objective(n: usize, m: usize, d: usize) -> Result<PerformanceOperator> {
    let structure = cloning_structure(n, m, d)?;
    let dm = checked_pow(d, m)?;
    let mut base = omega_projector(2 * n + 1, 0, dm)?;
    let mut pattern = vec![WirePattern::new(label(2 * n + 1), vec![RepTag::U; m])];
    for k in 1..=n {
        base = base.tensor(&omega_projector(2 * k, 2 * k - 1, d)?)?;
        pattern.push(WirePattern::new(label(2 * k), vec![RepTag::Conj]));
    }
    let spec = TwirlSpec::new(d, pattern, Design::Auto);
    let omega = haar_average(&spec, &base)?.scale(1.0 / (dm * dm) as f64);
    PerformanceOperator::new(omega, structure, spec)
}

/// Comb for learning a `d`-dimensional unitary from `N` uses and retrieving
/// it on a later input.
///
/// Teeth `0..=N` form the storage network (trivial first input and last
/// output); tooth `N+1` maps the input `2N+2` to the output `2N+3`.
pub fn learning_structure(n: usize, d: usize) -> Result<CombStructure> {
    if n == 0 || d < 2 {
        return Err(Error::InvalidArgument(format!(
            "learning needs N >= 1 and d >= 2 (got N={n}, d={d})"
        )));
    }
    checked_pow(d, 2 * (n + 1))?;
    let mut dims = Vec::with_capacity(n + 2);
    dims.push((1, d));
    dims.extend(core::iter::repeat((d, d)).take(n - 1));
    dims.push((d, 1));
    dims.push((d, d));
    CombStructure::sequential(&dims)
}

/// `Ω` for learning: `F(R)` is the Haar-averaged channel fidelity of the
/// retrieved channel with `U`.
pub fn learning_objective(n: usize, d: usize) -> Result<PerformanceOperator> {
    let structure = learning_structure(n, d)?;
    let mut base = omega_projector(2 * n + 3, 2 * n + 2, d)?;
    let mut pattern = vec![WirePattern::new(label(2 * n + 3), vec![RepTag::U])];
    for k in 1..=n {
        base = base.tensor(&omega_projector(2 * k, 2 * k - 1, d)?)?;
        pattern.push(WirePattern::new(label(2 * k), vec![RepTag::Conj]));
    }
    let trivial = [wire(label(0), 1), wire(label(2 * n + 1), 1)];
    base = base.tensor(&LabeledOperator::identity(trivial.to_vec())?)?;
    let spec = TwirlSpec::new(d, pattern, Design::Auto);
    let omega = haar_average(&spec, &base)?.scale(1.0 / (d * d) as f64);
    PerformanceOperator::new(omega, structure, spec)
}

/// Fidelity of the best measure-and-prepare strategy for `1 → 2` cloning:
/// `5/16` for qubits and `6/d⁴` otherwise.
pub fn estimation_reference(n: usize, m: usize, d: usize) -> Result<f64> {
    if (n, m) != (1, 2) {
        return Err(Error::Unsupported(format!(
            "estimation reference known only for N=1, M=2 (got N={n}, M={m})"
        )));
    }
    match d {
        0 | 1 => Err(Error::InvalidArgument(format!("dimension {d} < 2"))),
        2 => Ok(5.0 / 16.0),
        _ => Ok(6.0 / libm::pow(d as f64, 4.0)),
    }
}

/// Optimal `1 → 2` cloning fidelity `(d + √(d²−1)) / d³`.
pub fn cloning_reference(d: usize) -> f64 {
    let d = d as f64;
    (d + libm::sqrt(d * d - 1.0)) / (d * d * d)
}

/// Optimal learning fidelity for one or two uses: `(N+1)/d²`.
pub fn learning_reference(n: usize, d: usize) -> Option<f64> {
    match n {
        1 | 2 => Some((n + 1) as f64 / (d * d) as f64),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Task {
    Cloning,
    Learning,
}

/// Memo of objectives keyed by `(task, N, M, d)`; `M` is ignored for learning.
#[derive(Debug, Default)]
pub struct ObjectiveCache {
    entries: BTreeMap<(Task, usize, usize, usize), PerformanceOperator>,
}

impl ObjectiveCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, task: Task, n: usize, m: usize, d: usize) -> Result<&PerformanceOperator> {
        let m = if task == Task::Learning { 0 } else { m };
        let key = (task, n, m, d);
        if !self.entries.contains_key(&key) {
            let op = match task {
                Task::Cloning => cloning_objective(n, m, d)?,
                Task::Learning => learning_objective(n, d)?,
            };
            self.entries.insert(key, op);
        }
        Ok(&self.entries[&key])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choi::{vectorize, ChoiOperator};
    use crate::comb::{random_comb, supermap_apply};
    use crate::design::invariance_residual;
    use crate::random::{haar_unitary, rng_from_seed};
    use crate::tensor::C64;
    use nalgebra::DMatrix;

    #[test]
    fn cloning_trace_and_hermiticity() {
        for (n, m, d) in [(1, 1, 2), (1, 2, 2), (2, 1, 2)] {
            let p = cloning_objective(n, m, d).unwrap();
            let dm = d.pow(m as u32) as f64;
            let expect = libm::pow(d as f64, (m + n) as f64) / (dm * dm);
            assert!((p.omega().trace().re - expect).abs() < 1e-12);
            assert!(p.omega().hermitian_residual() < 1e-12);
            assert_eq!(p.structure().total_dim(), d.pow(2 * (n + m) as u32));
        }
    }

    #[test]
    fn objectives_are_twirl_invariant() {
        let mut rng = rng_from_seed(11);
        for p in [
            cloning_objective(1, 2, 2).unwrap(),
            learning_objective(1, 2).unwrap(),
            learning_objective(2, 2).unwrap(),
        ] {
            let r = invariance_residual(p.twirl(), p.omega(), 100, &mut rng).unwrap();
            assert!(r < 1e-9, "{r}");
        }
    }

    #[test]
    fn pass_through_clones_perfectly() {
        // 1 → 1 cloning: the board sends its input into the slot and returns the slot output
        let p = cloning_objective(1, 1, 2).unwrap();
        let r = omega_projector(1, 0, 2)
            .unwrap()
            .tensor(&omega_projector(3, 2, 2).unwrap())
            .unwrap();
        assert!((p.value(&r).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn link_and_trace_agree() {
        let p = learning_objective(1, 2).unwrap();
        let r = random_comb(p.structure(), &[2, 2], 3).unwrap();
        let a = p.value(r.operator()).unwrap();
        let b = p.value_by_link(r.operator()).unwrap();
        assert!((a - b).abs() < 1e-11);
    }

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, libm::sqrt(var / n))
    }

    fn slot_inputs(u: &DMatrix<C64>, n: usize, d: usize) -> Vec<ChoiOperator> {
        (0..n)
            .map(|_| ChoiOperator::from_unitary(u, wire("o", d), wire("i", d)).unwrap())
            .collect()
    }

    #[test]
    fn learning_matches_monte_carlo() {
        let (n, d) = (1, 2);
        let p = learning_objective(n, d).unwrap();
        let r = random_comb(p.structure(), &[2, 2], 17).unwrap();
        let exact = p.value(r.operator()).unwrap();
        let mut rng = rng_from_seed(23);
        let samples: Vec<f64> = (0..10_000)
            .map(|_| {
                let u = haar_unitary(d, &mut rng);
                let out = supermap_apply(&r, &slot_inputs(&u, n, d), &[1]).unwrap();
                let target = vectorize(&u, wire("5", d), wire("4", d)).unwrap().projector();
                let c = out.choi.op().partial_trace(&["0", "3"]).unwrap();
                c.trace_product(&target).unwrap().re / (d * d) as f64
            })
            .collect();
        let (mean, se) = mean_and_se(&samples);
        assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
    }

    #[test]
    fn cloning_matches_monte_carlo() {
        let (n, m, d) = (1, 2, 2);
        let p = cloning_objective(n, m, d).unwrap();
        let r = random_comb(p.structure(), &[3], 29).unwrap();
        let exact = p.value(r.operator()).unwrap();
        let mut rng = rng_from_seed(31);
        let samples: Vec<f64> = (0..10_000)
            .map(|_| {
                let u = haar_unitary(d, &mut rng);
                let out = supermap_apply(&r, &slot_inputs(&u, n, d), &[1]).unwrap();
                let uu = u.kronecker(&u);
                let target = vectorize(&uu, wire("3", 4), wire("0", 4)).unwrap().projector();
                out.choi.op().trace_product(&target).unwrap().re / 16.0
            })
            .collect();
        let (mean, se) = mean_and_se(&samples);
        assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
    }

    #[test]
    fn references() {
        assert_eq!(estimation_reference(1, 2, 2).unwrap(), 0.3125);
        assert!((estimation_reference(1, 2, 3).unwrap() - 6.0 / 81.0).abs() < 1e-15);
        assert!((estimation_reference(1, 2, 4).unwrap() - 6.0 / 256.0).abs() < 1e-15);
        assert!(matches!(estimation_reference(2, 2, 2), Err(Error::Unsupported(_))));
        assert!((cloning_reference(2) - 0.466_506_350_946_109_6).abs() < 1e-15);
        assert_eq!(learning_reference(2, 2), Some(0.75));
        assert_eq!(learning_reference(3, 2), None);
    }

    #[test]
    fn oversized_problems_are_rejected() {
        assert!(matches!(cloning_objective(3, 3, 2), Err(Error::DimOverflow { .. })));
        assert!(matches!(learning_objective(5, 2), Err(Error::DimOverflow { .. })));
        assert!(cloning_objective(0, 1, 2).is_err());
    }

    #[test]
    fn cache_reuses_entries() {
        let mut cache = ObjectiveCache::new();
        let a = cache.get(Task::Learning, 1, 7, 2).unwrap().omega().clone();
        let b = cache.get(Task::Learning, 1, 0, 2).unwrap().omega().clone();
        assert_eq!(cache.len(), 1);
        assert_eq!(a.matrix(), b.matrix());
    }
}
