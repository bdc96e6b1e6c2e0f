//! Dense complex operators over ordered lists of labeled wires.
//!
//! Every operator carries the list of wires it acts on. The matrix is indexed
//! in Kronecker order with the leftmost wire as the most significant block, and
//! all transposes and conjugates refer to the computational basis `0..dim` of
//! each wire. Operators on the empty wire list are scalars.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest total dimension accepted for a labeled operator.
pub const MAX_DIM: usize = 1024;

/// Relative Frobenius tolerance used by the Hermiticity check.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Eigenvalues below this fraction of the spectral scale count as zero.
pub const RANK_TOL: f64 = 1e-12;

/// A named Hilbert space factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Wire {
    label: String,
    dim: usize,
}

impl Wire {
    pub fn new(label: impl Into<String>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("wire dimension must be positive".into()));
        }
        Ok(Self {
            label: label.into(),
            dim,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn with_label(&self, label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            dim: self.dim,
        }
    }
}

/// Shorthand for building a wire in code that already knows the dimension is valid.
pub fn wire(label: impl Into<String>, dim: usize) -> Wire {
    Wire::new(label, dim).expect("wire dimension must be positive")
}

pub(crate) fn total_dim(wires: &[Wire]) -> usize {
    wires.iter().map(|w| w.dim).product()
}

fn check_unique(wires: &[Wire]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for w in wires {
        if !seen.insert(w.label.as_str()) {
            return Err(Error::DuplicateLabel(w.label.clone()));
        }
    }
    Ok(())
}

fn checked_dim(wires: &[Wire]) -> Result<usize> {
    let mut d: usize = 1;
    for w in wires {
        d = d
            .checked_mul(w.dim)
            .filter(|&d| d <= MAX_DIM)
            .ok_or(Error::DimOverflow {
                dim: d.saturating_mul(w.dim),
                cap: MAX_DIM,
            })?;
    }
    Ok(d)
}

/// Row-major strides for a wire list.
fn strides(wires: &[Wire]) -> Vec<usize> {
    let mut s = alloc::vec![1usize; wires.len()];
    for i in (0..wires.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * wires[i + 1].dim;
    }
    s
}

/// For every multi-index over `sub` (in kron order of `sub`), the flat offset it
/// contributes inside an index space with strides `full_strides`.
fn offsets(sub: &[(usize, usize)], full_strides: &[usize]) -> Vec<usize> {
    // sub: (position in full wire list, dim)
    let n: usize = sub.iter().map(|&(_, d)| d).product();
    let mut out = Vec::with_capacity(n);
    let mut digits = alloc::vec![0usize; sub.len()];
    for _ in 0..n {
        out.push(
            sub.iter()
                .zip(&digits)
                .map(|(&(pos, _), &dg)| dg * full_strides[pos])
                .sum(),
        );
        for k in (0..sub.len()).rev() {
            digits[k] += 1;
            if digits[k] < sub[k].1 {
                break;
            }
            digits[k] = 0;
        }
    }
    out
}

/// A dense complex matrix on an ordered list of labeled wires.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledOperator {
    wires: Vec<Wire>,
    mat: DMatrix<C64>,
}

/// A dense complex vector on an ordered list of labeled wires.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVector {
    wires: Vec<Wire>,
    data: DVector<C64>,
}

/// Spectrum of a Hermitian operator with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the operator's wire order.
    pub vectors: DMatrix<C64>,
    pub wires: Vec<Wire>,
}

impl HermitianEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Reassembles `V f(Λ) V†`.
    pub fn rebuild(&self, f: impl Fn(f64) -> f64) -> LabeledOperator {
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let s = f(v);
            scaled.column_mut(j).scale_mut(s);
        }
        let mat = &scaled * self.vectors.adjoint();
        LabeledOperator {
            wires: self.wires.clone(),
            mat,
        }
    }

    pub fn eigenvector(&self, j: usize) -> LabeledVector {
        LabeledVector {
            wires: self.wires.clone(),
            data: self.vectors.column(j).into_owned(),
        }
    }
}

impl LabeledOperator {
    pub fn new(wires: Vec<Wire>, mat: DMatrix<C64>) -> Result<Self> {
        check_unique(&wires)?;
        let d = checked_dim(&wires)?;
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::ShapeMismatch {
                rows: mat.nrows(),
                cols: mat.ncols(),
                expected: d,
            });
        }
        Ok(Self { wires, mat })
    }

    /// Builds an operator from row-major entries.
    pub fn from_row_major(wires: Vec<Wire>, entries: &[C64]) -> Result<Self> {
        let d = checked_dim(&wires)?;
        if entries.len() != d * d {
            return Err(Error::ShapeMismatch {
                rows: entries.len(),
                cols: 1,
                expected: d * d,
            });
        }
        Self::new(wires, DMatrix::from_row_slice(d, d, entries))
    }

    pub(crate) fn from_parts_unchecked(wires: Vec<Wire>, mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), total_dim(&wires));
        Self { wires, mat }
    }

    pub fn identity(wires: Vec<Wire>) -> Result<Self> {
        let d = checked_dim(&wires)?;
        Self::new(wires, DMatrix::identity(d, d))
    }

    pub fn zeros(wires: Vec<Wire>) -> Result<Self> {
        let d = checked_dim(&wires)?;
        Self::new(wires, DMatrix::zeros(d, d))
    }

    pub fn scalar(value: C64) -> Self {
        Self {
            wires: Vec::new(),
            mat: DMatrix::from_element(1, 1, value),
        }
    }

    /// Diagonal operator on a wire list.
    pub fn diagonal(wires: Vec<Wire>, diag: &[f64]) -> Result<Self> {
        let d = checked_dim(&wires)?;
        if diag.len() != d {
            return Err(Error::ShapeMismatch {
                rows: diag.len(),
                cols: 1,
                expected: d,
            });
        }
        let v = DVector::from_iterator(d, diag.iter().map(|&x| C64::new(x, 0.0)));
        Self::new(wires, DMatrix::from_diagonal(&v))
    }

    /// Computational-basis projector `|k⟩⟨k|` on a single wire.
    pub fn basis_projector(w: Wire, k: usize) -> Result<Self> {
        if k >= w.dim {
            return Err(Error::IndexOutOfRange {
                index: k as i64,
                max: w.dim as i64 - 1,
            });
        }
        let mut m = DMatrix::zeros(w.dim, w.dim);
        m[(k, k)] = C64::new(1.0, 0.0);
        Self::new(alloc::vec![w], m)
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.wires.iter().map(|w| w.label.as_str())
    }

    pub fn label_set(&self) -> BTreeSet<String> {
        self.wires.iter().map(|w| w.label.clone()).collect()
    }

    pub fn has_label(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.wires.iter().position(|w| w.label == label)
    }

    pub fn wire(&self, label: &str) -> Option<&Wire> {
        self.wires.iter().find(|w| w.label == label)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn is_scalar(&self) -> bool {
        self.wires.is_empty()
    }

    /// Value of a scalar operator, or the `(0,0)` entry otherwise.
    pub fn scalar_value(&self) -> C64 {
        self.mat[(0, 0)]
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                out.push(self.mat[(r, c)]);
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>())
    }

    pub fn adjoint(&self) -> Self {
        Self {
            wires: self.wires.clone(),
            mat: self.mat.adjoint(),
        }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            wires: self.wires.clone(),
            mat: self.mat.map(|z| z.conj()),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            wires: self.wires.clone(),
            mat: self.mat.transpose(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            wires: self.wires.clone(),
            mat: &self.mat * C64::new(s, 0.0),
        }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self {
            wires: self.wires.clone(),
            mat: &self.mat * s,
        }
    }

    /// `‖A − A†‖_F / ‖A‖_F` (absolute residual when `A = 0`).
    pub fn hermitian_residual(&self) -> f64 {
        let d = self.dim();
        let mut diff = 0.0;
        for r in 0..d {
            for c in r..d {
                let z = self.mat[(r, c)] - self.mat[(c, r)].conj();
                diff += if r == c { z.norm_sqr() } else { 2.0 * z.norm_sqr() };
            }
        }
        let n = self.frobenius_norm();
        if n > 0.0 {
            libm::sqrt(diff) / n
        } else {
            libm::sqrt(diff)
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            wires: self.wires.clone(),
            mat: (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    /// Checks that `other` lives on the same label set with matching dimensions
    /// and returns it permuted into `self`'s wire order.
    pub fn align(&self, other: &Self) -> Result<Self> {
        if self.wires.len() != other.wires.len() {
            return Err(Error::LabelMismatch(alloc::format!(
                "operators act on {} and {} wires",
                self.wires.len(),
                other.wires.len()
            )));
        }
        for w in &self.wires {
            let o = other
                .wire(&w.label)
                .ok_or_else(|| Error::LabelMismatch(alloc::format!("`{}` missing", w.label)))?;
            if o.dim != w.dim {
                return Err(Error::DimMismatch {
                    label: w.label.clone(),
                    left: w.dim,
                    right: o.dim,
                });
            }
        }
        if self.wires == other.wires {
            return Ok(other.clone());
        }
        let order: Vec<&str> = self.labels().collect();
        other.permute_wires(&order)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let o = self.align(other)?;
        Ok(Self {
            wires: self.wires.clone(),
            mat: &self.mat + &o.mat,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let o = self.align(other)?;
        Ok(Self {
            wires: self.wires.clone(),
            mat: &self.mat - &o.mat,
        })
    }

    /// Matrix product of two operators on the same label set.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        let o = self.align(other)?;
        Ok(Self {
            wires: self.wires.clone(),
            mat: &self.mat * &o.mat,
        })
    }

    /// `Tr[A B]` for operators on the same label set.
    pub fn trace_product(&self, other: &Self) -> Result<C64> {
        let o = self.align(other)?;
        Ok(trace_of_product(&self.mat, &o.mat))
    }

    /// Frobenius distance after label alignment.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.frobenius_norm())
    }

    /// Renames wires; labels absent from `map` are kept.
    pub fn relabel(&self, map: &[(&str, &str)]) -> Result<Self> {
        let wires: Vec<Wire> = self
            .wires
            .iter()
            .map(|w| match map.iter().find(|(from, _)| *from == w.label) {
                Some((_, to)) => w.with_label(*to),
                None => w.clone(),
            })
            .collect();
        check_unique(&wires)?;
        Ok(Self {
            wires,
            mat: self.mat.clone(),
        })
    }

    /// Kronecker product with wires `A.wires ++ B.wires`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut wires = self.wires.clone();
        wires.extend(other.wires.iter().cloned());
        check_unique(&wires)?;
        checked_dim(&wires)?;
        Ok(Self {
            wires,
            mat: self.mat.kronecker(&other.mat),
        })
    }

    /// Index map from the permuted operator's flat indices to the original ones.
    fn permutation_map(&self, order: &[&str]) -> Result<(Vec<Wire>, Vec<usize>)> {
        if order.len() != self.wires.len() {
            return Err(Error::NotAPermutation);
        }
        let mut positions = Vec::with_capacity(order.len());
        for label in order {
            let p = self
                .position(label)
                .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
            if positions.contains(&p) {
                return Err(Error::NotAPermutation);
            }
            positions.push(p);
        }
        let old_strides = strides(&self.wires);
        let sub: Vec<(usize, usize)> = positions
            .iter()
            .map(|&p| (p, self.wires[p].dim))
            .collect();
        let new_wires = positions.iter().map(|&p| self.wires[p].clone()).collect();
        Ok((new_wires, offsets(&sub, &old_strides)))
    }

    /// Reorders the tensor factors to follow `order`.
    pub fn permute_wires(&self, order: &[&str]) -> Result<Self> {
        let (wires, map) = self.permutation_map(order)?;
        let d = self.dim();
        let mat = DMatrix::from_fn(d, d, |r, c| self.mat[(map[r], map[c])]);
        Ok(Self { wires, mat })
    }

    fn resolve(&self, labels: &[&str]) -> Result<Vec<bool>> {
        let mut selected = alloc::vec![false; self.wires.len()];
        for label in labels {
            let p = self
                .position(label)
                .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
            selected[p] = true;
        }
        Ok(selected)
    }

    /// Traces out the listed wires. Tracing every wire leaves a scalar.
    pub fn partial_trace(&self, labels: &[&str]) -> Result<Self> {
        let selected = self.resolve(labels)?;
        if !selected.iter().any(|&s| s) {
            return Ok(self.clone());
        }
        let st = strides(&self.wires);
        let keep: Vec<(usize, usize)> = (0..self.wires.len())
            .filter(|&i| !selected[i])
            .map(|i| (i, self.wires[i].dim))
            .collect();
        let traced: Vec<(usize, usize)> = (0..self.wires.len())
            .filter(|&i| selected[i])
            .map(|i| (i, self.wires[i].dim))
            .collect();
        let keep_off = offsets(&keep, &st);
        let tr_off = offsets(&traced, &st);
        let dk = keep_off.len();
        let mut mat = DMatrix::zeros(dk, dk);
        for c in 0..dk {
            for r in 0..dk {
                let mut acc = C64::new(0.0, 0.0);
                for &t in &tr_off {
                    acc += self.mat[(keep_off[r] + t, keep_off[c] + t)];
                }
                mat[(r, c)] = acc;
            }
        }
        let wires = keep.iter().map(|&(i, _)| self.wires[i].clone()).collect();
        Ok(Self { wires, mat })
    }

    /// Transposes the listed tensor factors in the computational basis.
    pub fn partial_transpose(&self, labels: &[&str]) -> Result<Self> {
        let selected = self.resolve(labels)?;
        let st = strides(&self.wires);
        let d = self.dim();
        // selected-part offset of every flat index
        let mut sel = alloc::vec![0usize; d];
        for (idx, s) in sel.iter_mut().enumerate() {
            let mut acc = 0;
            for (i, w) in self.wires.iter().enumerate() {
                if selected[i] {
                    acc += (idx / st[i]) % w.dim * st[i];
                }
            }
            *s = acc;
        }
        let mat = DMatrix::from_fn(d, d, |r, c| {
            let (rs, cs) = (sel[r], sel[c]);
            self.mat[(r - rs + cs, c - cs + rs)]
        });
        Ok(Self {
            wires: self.wires.clone(),
            mat,
        })
    }

    /// Merges adjacent wires (in the given order) into one wire labeled `label`.
    pub fn fuse_wires(&self, labels: &[&str], label: &str) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("nothing to fuse".into()));
        }
        let first = self
            .position(labels[0])
            .ok_or_else(|| Error::UnknownLabel(labels[0].to_string()))?;
        let mut order: Vec<&str> = Vec::with_capacity(self.wires.len());
        for w in &self.wires[..first] {
            if !labels.contains(&w.label.as_str()) {
                order.push(&w.label);
            }
        }
        order.extend_from_slice(labels);
        for w in &self.wires[first..] {
            if !labels.contains(&w.label.as_str()) {
                order.push(&w.label);
            }
        }
        let permuted = self.permute_wires(&order)?;
        let start = order.iter().position(|l| *l == labels[0]).unwrap_or(0);
        let fused_dim: usize = permuted.wires[start..start + labels.len()]
            .iter()
            .map(|w| w.dim)
            .product();
        let mut wires: Vec<Wire> = permuted.wires[..start].to_vec();
        wires.push(wire(label, fused_dim));
        wires.extend_from_slice(&permuted.wires[start + labels.len()..]);
        check_unique(&wires)?;
        Ok(Self {
            wires,
            mat: permuted.mat,
        })
    }

    /// Splits one wire into consecutive factors (kron order, first most significant).
    pub fn split_wire(&self, label: &str, parts: &[Wire]) -> Result<Self> {
        let p = self
            .position(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
        let d: usize = parts.iter().map(|w| w.dim).product();
        if d != self.wires[p].dim {
            return Err(Error::DimMismatch {
                label: label.to_string(),
                left: self.wires[p].dim,
                right: d,
            });
        }
        let mut wires = self.wires[..p].to_vec();
        wires.extend_from_slice(parts);
        wires.extend_from_slice(&self.wires[p + 1..]);
        check_unique(&wires)?;
        Ok(Self {
            wires,
            mat: self.mat.clone(),
        })
    }

    /// Eigendecomposition of a Hermitian operator, eigenvalues ascending.
    pub fn eig_hermitian(&self) -> Result<HermitianEigen> {
        let residual = self.hermitian_residual();
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        Ok(hermitian_eigen(&self.mat, &self.wires))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig_hermitian()?.min())
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig_hermitian()?.max())
    }

    /// Frobenius-nearest positive semidefinite operator (eigenvalue clipping).
    pub fn psd_project(&self) -> Result<Self> {
        Ok(self.eig_hermitian()?.rebuild(|x| x.max(0.0)))
    }
}

pub(crate) fn trace_of_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    // Tr[AB] = Σ_{ij} A_ij B_ji
    let d = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub(crate) fn hermitian_eigen(mat: &DMatrix<C64>, wires: &[Wire]) -> HermitianEigen {
    let h = (mat + mat.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(idx.iter());
    HermitianEigen {
        values,
        vectors,
        wires: wires.to_vec(),
    }
}

impl LabeledVector {
    pub fn new(wires: Vec<Wire>, data: DVector<C64>) -> Result<Self> {
        check_unique(&wires)?;
        let d = checked_dim(&wires)?;
        if data.len() != d {
            return Err(Error::ShapeMismatch {
                rows: data.len(),
                cols: 1,
                expected: d,
            });
        }
        Ok(Self { wires, data })
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    pub fn data(&self) -> &DVector<C64> {
        &self.data
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `|v⟩⟨v|`.
    pub fn projector(&self) -> LabeledOperator {
        LabeledOperator {
            wires: self.wires.clone(),
            mat: &self.data * self.data.adjoint(),
        }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            wires: self.wires.clone(),
            data: self.data.map(|z| z.conj()),
        }
    }

    /// Applies a matrix acting on the full wire space.
    pub fn apply(&self, op: &LabeledOperator) -> Result<Self> {
        let aligned = self.as_operator_shape().align(op)?;
        Ok(Self {
            wires: self.wires.clone(),
            data: aligned.mat * &self.data,
        })
    }

    fn as_operator_shape(&self) -> LabeledOperator {
        let d = self.data.len();
        LabeledOperator {
            wires: self.wires.clone(),
            mat: DMatrix::zeros(d, d),
        }
    }
}
