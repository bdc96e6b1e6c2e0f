//! Exact Haar averages of conjugations `Ω = E_U[W(U) · A · W(U)†]`.
//!
//! `W(U)` is a tensor product over the operator's wires of `U^{⊗a} ⊗ Ū^{⊗b}`
//! blocks (or the identity). The integrand is a polynomial of degree `t = Σ(a+b)`
//! in the entries of `U` and of `Ū`, so averaging over a unitary `t`-design is
//! exact. Two schemes are available:
//!
//! * the 24-element single-qubit Clifford group (a unitary 3-design), and
//! * the orthogonal projection onto the commutant of `U^{⊗t}`, spanned by the
//!   permutation operators of the `t` factors (Schur–Weyl duality), which is
//!   exact for every `t` and `d`. Conjugated factors are handled by a partial
//!   transpose, since `Ū X Uᵀ = (U Xᵀ U†)ᵀ`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::random::haar_unitary;
use crate::tensor::{hermitian_eigen, wire, LabeledOperator, Wire, C64};

/// How a unitary acts on one `d`-dimensional factor of a wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepTag {
    U,
    Conj,
}

/// Representation acting on one wire: the tensor product of its factors, or the
/// identity when `factors` is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WirePattern {
    pub label: String,
    pub factors: Vec<RepTag>,
}

impl WirePattern {
    pub fn new(label: impl Into<String>, factors: Vec<RepTag>) -> Self {
        Self {
            label: label.into(),
            factors,
        }
    }
}

/// Averaging scheme for [`haar_average`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Design {
    /// Clifford group when it is exact, commutant projection otherwise.
    Auto,
    /// Single-qubit Clifford group; exact up to degree 3 and only for `d = 2`.
    Clifford,
    /// Projection onto the permutation commutant; exact for any degree.
    Commutant,
}

impl Design {
    /// Largest degree the scheme averages exactly in dimension `d`.
    pub fn exact_degree(self, d: usize) -> usize {
        match self {
            Design::Clifford if d == 2 => 3,
            Design::Clifford => 0,
            Design::Auto | Design::Commutant => usize::MAX,
        }
    }
}

/// Which representation acts on which wire, and how to average over it.
#[derive(Debug, Clone, PartialEq)]
pub struct TwirlSpec {
    pub d: usize,
    pub pattern: Vec<WirePattern>,
    pub design: Design,
}

impl TwirlSpec {
    pub fn new(d: usize, pattern: Vec<WirePattern>, design: Design) -> Self {
        Self { d, pattern, design }
    }

    /// Polynomial degree `t` of the twirl.
    pub fn degree(&self) -> usize {
        self.pattern.iter().map(|p| p.factors.len()).sum()
    }

    fn factors_of(&self, label: &str) -> &[RepTag] {
        self.pattern
            .iter()
            .find(|p| p.label == label)
            .map(|p| p.factors.as_slice())
            .unwrap_or(&[])
    }

    fn check(&self, op: &LabeledOperator) -> Result<()> {
        for p in &self.pattern {
            let w = op
                .wire(&p.label)
                .ok_or_else(|| Error::UnknownLabel(p.label.clone()))?;
            if !p.factors.is_empty() && w.dim() != self.d.pow(p.factors.len() as u32) {
                return Err(Error::DimMismatch {
                    label: p.label.clone(),
                    left: w.dim(),
                    right: self.d.pow(p.factors.len() as u32),
                });
            }
        }
        Ok(())
    }

    /// `W(U)` as a matrix on `op`'s wire order.
    pub fn representation(&self, op: &LabeledOperator, u: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        self.check(op)?;
        let ubar = u.map(|z| z.conj());
        let mut acc = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        for w in op.wires() {
            let factors = self.factors_of(w.label());
            let block = if factors.is_empty() {
                DMatrix::identity(w.dim(), w.dim())
            } else {
                factors.iter().fold(
                    DMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
                    |b, tag| match tag {
                        RepTag::U => b.kronecker(u),
                        RepTag::Conj => b.kronecker(&ubar),
                    },
                )
            };
            acc = acc.kronecker(&block);
        }
        Ok(acc)
    }

    /// `W(U) A W(U)†`.
    pub fn conjugate(&self, op: &LabeledOperator, u: &DMatrix<C64>) -> Result<LabeledOperator> {
        let w = self.representation(op, u)?;
        let m = &w * op.matrix() * w.adjoint();
        LabeledOperator::new(op.wires().to_vec(), m)
    }
}

/// The single-qubit Clifford group modulo global phase (24 elements).
pub fn clifford_group() -> Vec<DMatrix<C64>> {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let o = C64::new(0.0, 0.0);
    let h = DMatrix::from_row_slice(2, 2, &[C64::new(s, 0.0), C64::new(s, 0.0), C64::new(s, 0.0), C64::new(-s, 0.0)]);
    let p = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), o, o, C64::new(0.0, 1.0)]);
    let gens = [h, p];
    let mut group = alloc::vec![canonical_phase(DMatrix::identity(2, 2))];
    let mut frontier = group.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for g in &frontier {
            for gen in &gens {
                let cand = canonical_phase(gen * g);
                if !group.iter().any(|e| (e - &cand).norm() < 1e-9) {
                    group.push(cand.clone());
                    next.push(cand);
                }
            }
        }
        frontier = next;
    }
    group
}

/// Fixes the global phase so that the first entry of largest modulus is real positive.
fn canonical_phase(m: DMatrix<C64>) -> DMatrix<C64> {
    let mut best = C64::new(0.0, 0.0);
    for z in m.iter() {
        if z.norm() > best.norm() + 1e-9 {
            best = *z;
        }
    }
    let phase = best / best.norm();
    m / phase
}

/// Haar-averaged operator `E_U[W(U) · base · W(U)†]`, computed exactly.
pub fn haar_average(spec: &TwirlSpec, base: &LabeledOperator) -> Result<LabeledOperator> {
    spec.check(base)?;
    let t = spec.degree();
    let design = match spec.design {
        Design::Auto if spec.d == 2 && t <= 3 => Design::Clifford,
        Design::Auto => Design::Commutant,
        other => other,
    };
    if design.exact_degree(spec.d) < t {
        return Err(Error::DesignInsufficient {
            required: t,
            available: design.exact_degree(spec.d),
        });
    }
    if t == 0 {
        return Ok(base.clone());
    }
    let avg = match design {
        Design::Clifford => clifford_average(spec, base)?,
        _ => commutant_average(spec, base)?,
    };
    if base.is_hermitian(1e-12) {
        Ok(avg.hermitian_part())
    } else {
        Ok(avg)
    }
}

fn clifford_average(spec: &TwirlSpec, base: &LabeledOperator) -> Result<LabeledOperator> {
    let group = clifford_group();
    let d = base.dim();
    let mut acc = DMatrix::zeros(d, d);
    for g in &group {
        let w = spec.representation(base, g)?;
        acc += &w * base.matrix() * w.adjoint();
    }
    LabeledOperator::new(base.wires().to_vec(), acc / C64::new(group.len() as f64, 0.0))
}

fn factor_label(label: &str, k: usize) -> String {
    format!("{label}#{k}")
}

/// All permutations of `0..t` in lexicographic order.
fn permutations(t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..t).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..t).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..t).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// Index map of the permutation operator `P_σ |x_0 … x_{t-1}⟩ = |x_{σ(0)} … x_{σ(t-1)}⟩`.
fn permutation_index_map(sigma: &[usize], d: usize) -> Vec<usize> {
    let t = sigma.len();
    let n = d.pow(t as u32);
    (0..n)
        .map(|x| {
            let digits: Vec<usize> = (0..t).map(|k| (x / d.pow((t - 1 - k) as u32)) % d).collect();
            sigma
                .iter()
                .fold(0, |acc, &s| acc * d + digits[s])
        })
        .collect()
}

fn commutant_average(spec: &TwirlSpec, base: &LabeledOperator) -> Result<LabeledOperator> {
    let d = spec.d;
    // split every patterned wire into its d-dimensional factors
    let mut split = base.clone();
    let mut twirled: Vec<String> = Vec::new();
    let mut conj: Vec<String> = Vec::new();
    for p in &spec.pattern {
        if p.factors.is_empty() {
            continue;
        }
        let parts: Vec<Wire> = (0..p.factors.len())
            .map(|k| wire(factor_label(&p.label, k), d))
            .collect();
        split = split.split_wire(&p.label, &parts)?;
        for (k, tag) in p.factors.iter().enumerate() {
            let l = factor_label(&p.label, k);
            if *tag == RepTag::Conj {
                conj.push(l.clone());
            }
            twirled.push(l);
        }
    }
    let split_order: Vec<String> = split.labels().map(ToString::to_string).collect();
    let conj_refs: Vec<&str> = conj.iter().map(String::as_str).collect();
    let a = split.partial_transpose(&conj_refs)?;

    let rest: Vec<String> = split_order
        .iter()
        .filter(|l| !twirled.contains(l))
        .cloned()
        .collect();
    let mut order: Vec<&str> = twirled.iter().map(String::as_str).collect();
    order.extend(rest.iter().map(String::as_str));
    let a = a.permute_wires(&order)?;
    let t = twirled.len();
    let dt = d.pow(t as u32);
    let dr = a.dim() / dt;

    let perms = permutations(t);
    let maps: Vec<Vec<usize>> = perms.iter().map(|s| permutation_index_map(s, d)).collect();
    // P_σ[x, y] = 1 iff x = map_σ(y)
    let np = perms.len();
    // Gram matrix G_{στ} = Tr[P_σ† P_τ] = #{y : map_σ(y) = map_τ(y)}
    let mut gram = DMatrix::<C64>::zeros(np, np);
    for s in 0..np {
        for r in 0..np {
            let count = (0..dt).filter(|&y| maps[s][y] == maps[r][y]).count();
            gram[(s, r)] = C64::new(count as f64, 0.0);
        }
    }
    let ginv = pseudo_inverse(&gram);

    // b_σ = Tr_t[(P_σ† ⊗ I) A];  (P_σ† A)[(y,r),(x,r')] = A[(map_σ(y), r),(x, r')]
    let am = a.matrix();
    let b: Vec<DMatrix<C64>> = maps
        .iter()
        .map(|m| {
            DMatrix::from_fn(dr, dr, |r, rp| {
                (0..dt)
                    .map(|y| am[(m[y] * dr + r, y * dr + rp)])
                    .fold(C64::new(0.0, 0.0), |acc, z| acc + z)
            })
        })
        .collect();
    // X_τ = Σ_σ G⁺_{τσ} b_σ ;  result = Σ_τ P_τ ⊗ X_τ
    let mut out = DMatrix::<C64>::zeros(dt * dr, dt * dr);
    for (tau, m) in maps.iter().enumerate() {
        let mut x = DMatrix::<C64>::zeros(dr, dr);
        for (sigma, bs) in b.iter().enumerate() {
            let g = ginv[(tau, sigma)];
            if g.norm() > 0.0 {
                x += bs * g;
            }
        }
        for y in 0..dt {
            let row = m[y];
            for r in 0..dr {
                for rp in 0..dr {
                    out[(row * dr + r, y * dr + rp)] += x[(r, rp)];
                }
            }
        }
    }
    let avg = LabeledOperator::new(a.wires().to_vec(), out)?;
    let split_refs: Vec<&str> = split_order.iter().map(String::as_str).collect();
    let mut avg = avg.permute_wires(&split_refs)?.partial_transpose(&conj_refs)?;
    for p in &spec.pattern {
        if p.factors.is_empty() {
            continue;
        }
        let labels: Vec<String> = (0..p.factors.len()).map(|k| factor_label(&p.label, k)).collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        avg = avg.fuse_wires(&refs, &p.label)?;
    }
    let base_order: Vec<&str> = base.labels().collect();
    avg.permute_wires(&base_order)
}

/// Moore–Penrose pseudo-inverse of a Hermitian matrix.
fn pseudo_inverse(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = hermitian_eigen(m, &[]);
    let scale = eig.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let cutoff = 1e-10 * scale.max(1.0);
    let mut scaled = eig.vectors.clone();
    for (j, &v) in eig.values.iter().enumerate() {
        let s = if v.abs() > cutoff { 1.0 / v } else { 0.0 };
        scaled.column_mut(j).scale_mut(s);
    }
    &scaled * eig.vectors.adjoint()
}

/// Largest Frobenius change of `op` under `samples` conjugations by `W(U)`
/// with Haar-random `U`.
pub fn invariance_residual<R: Rng + ?Sized>(
    spec: &TwirlSpec,
    op: &LabeledOperator,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let u = haar_unitary(spec.d, rng);
        let moved = spec.conjugate(op, &u)?;
        worst = worst.max(moved.distance(op)?);
    }
    Ok(worst)
}
