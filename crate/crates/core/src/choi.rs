//! Choi–Jamiołkowski correspondence between CP maps and positive operators.
//!
//! A map `C` from wire `in` to wire `out` is represented by
//! `C = (C ⊗ I)(|Ω⟩⟨Ω|)` with `|Ω⟩ = Σ_n |n⟩|n⟩`, stored with wire order
//! `[outputs…, inputs…]`. The map acts on states as `C(ρ) = Tr_in[(I ⊗ ρᵀ) C]`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tensor::{LabeledOperator, LabeledVector, Wire, C64, HERMITIAN_TOL, RANK_TOL};

/// Unnormalized maximally entangled vector `Σ_n |n⟩|n⟩` on two wires of equal dimension.
pub fn max_entangled(first: Wire, second: Wire) -> Result<LabeledVector> {
    if first.dim() != second.dim() {
        return Err(Error::DimMismatch {
            label: second.label().to_string(),
            left: first.dim(),
            right: second.dim(),
        });
    }
    let d = first.dim();
    let mut v = DVector::zeros(d * d);
    for n in 0..d {
        v[n * d + n] = C64::new(1.0, 0.0);
    }
    LabeledVector::new(alloc::vec![first, second], v)
}

/// `|K⟩⟩ = (K ⊗ I)|Ω⟩` for a `dim_out × dim_in` matrix, i.e. the row-major flattening of `K`.
pub fn vectorize(k: &DMatrix<C64>, out: Wire, input: Wire) -> Result<LabeledVector> {
    if k.nrows() != out.dim() || k.ncols() != input.dim() {
        return Err(Error::ShapeMismatch {
            rows: k.nrows(),
            cols: k.ncols(),
            expected: out.dim(),
        });
    }
    let (r, c) = (k.nrows(), k.ncols());
    let v = DVector::from_fn(r * c, |idx, _| k[(idx / c, idx % c)]);
    LabeledVector::new(alloc::vec![out, input], v)
}

/// A completely positive trace non-increasing map given by Kraus operators.
#[derive(Debug, Clone)]
pub struct KrausMap {
    in_wire: Wire,
    out_wire: Wire,
    kraus: Vec<DMatrix<C64>>,
}

impl KrausMap {
    pub fn new(in_wire: Wire, out_wire: Wire, kraus: Vec<DMatrix<C64>>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidArgument("a Kraus map needs at least one operator".into()));
        }
        if in_wire.label() == out_wire.label() {
            return Err(Error::DuplicateLabel(in_wire.label().to_string()));
        }
        for k in &kraus {
            if k.nrows() != out_wire.dim() || k.ncols() != in_wire.dim() {
                return Err(Error::ShapeMismatch {
                    rows: k.nrows(),
                    cols: k.ncols(),
                    expected: out_wire.dim(),
                });
            }
        }
        let map = Self {
            in_wire,
            out_wire,
            kraus,
        };
        let top = map.completeness().max_eigenvalue()?;
        if top > 1.0 + HERMITIAN_TOL {
            return Err(Error::InvalidArgument(alloc::format!(
                "Kraus operators increase trace (largest eigenvalue of ΣK†K is {top})"
            )));
        }
        Ok(map)
    }

    pub fn unitary(in_wire: Wire, out_wire: Wire, u: DMatrix<C64>) -> Result<Self> {
        Self::new(in_wire, out_wire, alloc::vec![u])
    }

    pub fn in_wire(&self) -> &Wire {
        &self.in_wire
    }

    pub fn out_wire(&self) -> &Wire {
        &self.out_wire
    }

    pub fn kraus(&self) -> &[DMatrix<C64>] {
        &self.kraus
    }

    /// `Σ_k K_k† K_k` on the input wire.
    pub fn completeness(&self) -> LabeledOperator {
        let d = self.in_wire.dim();
        let sum = self
            .kraus
            .iter()
            .fold(DMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k);
        LabeledOperator::from_parts_unchecked(alloc::vec![self.in_wire.clone()], sum)
    }

    /// `Σ_k K ρ K†` for `ρ` given as a matrix on the input wire.
    pub fn apply_matrix(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let d = self.out_wire.dim();
        self.kraus
            .iter()
            .fold(DMatrix::zeros(d, d), |acc, k| acc + k * rho * k.adjoint())
    }
}

/// Choi operator together with its output/input wire partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiOperator {
    op: LabeledOperator,
    out_labels: Vec<String>,
    in_labels: Vec<String>,
}

/// Outcome of the channel test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelCheck {
    pub is_channel: bool,
    /// `‖Tr_out C − I_in‖_F`.
    pub trace_residual: f64,
    pub min_eigenvalue: f64,
}

impl ChoiOperator {
    /// Wraps `op`, reordering its wires to `[outputs…, inputs…]`.
    pub fn new(op: LabeledOperator, out_labels: &[&str], in_labels: &[&str]) -> Result<Self> {
        let mut order: Vec<&str> = out_labels.to_vec();
        order.extend_from_slice(in_labels);
        if order.len() != op.wires().len() {
            return Err(Error::LabelMismatch(alloc::format!(
                "partition names {} labels, operator has {} wires",
                order.len(),
                op.wires().len()
            )));
        }
        let op = op.permute_wires(&order).map_err(|e| match e {
            Error::NotAPermutation => {
                Error::LabelMismatch("output and input labels overlap".into())
            }
            other => other,
        })?;
        Ok(Self {
            op,
            out_labels: out_labels.iter().map(|s| s.to_string()).collect(),
            in_labels: in_labels.iter().map(|s| s.to_string()).collect(),
        })
    }

    /// `|U⟩⟨U|` with `|U⟩ = (U ⊗ I)|Ω⟩`.
    pub fn from_unitary(u: &DMatrix<C64>, out: Wire, input: Wire) -> Result<Self> {
        let (ol, il) = (out.label().to_string(), input.label().to_string());
        let v = vectorize(u, out, input)?;
        Self::new(v.projector(), &[&ol], &[&il])
    }

    pub fn op(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn into_op(self) -> LabeledOperator {
        self.op
    }

    pub fn out_labels(&self) -> Vec<&str> {
        self.out_labels.iter().map(String::as_str).collect()
    }

    pub fn in_labels(&self) -> Vec<&str> {
        self.in_labels.iter().map(String::as_str).collect()
    }

    fn in_wires(&self) -> Vec<Wire> {
        self.op.wires()[self.out_labels.len()..].to_vec()
    }

    /// `C(ρ) = Tr_in[(I_out ⊗ ρᵀ) C]`.
    pub fn apply(&self, rho: &LabeledOperator) -> Result<LabeledOperator> {
        let in_shape = LabeledOperator::zeros(self.in_wires())?;
        let rho = in_shape.align(rho).map_err(|e| match e {
            Error::DimMismatch { .. } => e,
            _ => Error::LabelMismatch("state must live on the map's input wires".into()),
        })?;
        let out_wires = self.op.wires()[..self.out_labels.len()].to_vec();
        let lifted = LabeledOperator::identity(out_wires)?.tensor(&rho.transpose())?;
        let prod = lifted.matmul(&self.op)?;
        let ins = self.in_labels();
        prod.partial_trace(&ins)
    }

    pub fn is_channel(&self, tol: f64) -> Result<ChannelCheck> {
        let outs = self.out_labels();
        let reduced = self.op.partial_trace(&outs)?;
        let id = LabeledOperator::identity(reduced.wires().to_vec())?;
        let trace_residual = reduced.distance(&id)?;
        let min_eigenvalue = self.op.min_eigenvalue()?;
        Ok(ChannelCheck {
            is_channel: trace_residual <= tol && min_eigenvalue >= -tol,
            trace_residual,
            min_eigenvalue,
        })
    }

    /// Kraus operators from the spectral decomposition, `K_j = √λ_j · unvec(v_j)`.
    ///
    /// Requires exactly one output and one input wire.
    pub fn to_kraus(&self) -> Result<KrausMap> {
        if self.out_labels.len() != 1 || self.in_labels.len() != 1 {
            return Err(Error::Unsupported(
                "Kraus extraction needs a single output and a single input wire".into(),
            ));
        }
        let eig = self.op.eig_hermitian()?;
        let scale = eig.max().abs().max(1.0);
        if eig.min() < -HERMITIAN_TOL * scale {
            return Err(Error::NotPsd {
                min_eigenvalue: eig.min(),
            });
        }
        let out = self.op.wires()[0].clone();
        let input = self.op.wires()[1].clone();
        let (dout, din) = (out.dim(), input.dim());
        let kraus: Vec<DMatrix<C64>> = eig
            .values
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &l)| l > RANK_TOL * scale)
            .map(|(j, &l)| {
                let s = C64::new(libm::sqrt(l), 0.0);
                let col = eig.vectors.column(j);
                DMatrix::from_fn(dout, din, |r, c| col[r * din + c] * s)
            })
            .collect();
        if kraus.is_empty() {
            return Ok(KrausMap {
                in_wire: input,
                out_wire: out,
                kraus: alloc::vec![DMatrix::zeros(dout, din)],
            });
        }
        // skip the trace non-increasing check: the roundtrip must hold for any PSD operator
        Ok(KrausMap {
            in_wire: input,
            out_wire: out,
            kraus,
        })
    }
}

/// `C = Σ_k |K_k⟩⟩⟨⟨K_k|` on `[out, in]`.
pub fn kraus_to_choi(map: &KrausMap) -> Result<ChoiOperator> {
    let d = map.out_wire.dim() * map.in_wire.dim();
    let mut acc = DMatrix::zeros(d, d);
    for k in &map.kraus {
        let v = vectorize(k, map.out_wire.clone(), map.in_wire.clone())?;
        acc += v.data() * v.data().adjoint();
    }
    let op = LabeledOperator::new(alloc::vec![map.out_wire.clone(), map.in_wire.clone()], acc)?;
    Ok(ChoiOperator {
        op,
        out_labels: alloc::vec![map.out_wire.label().to_string()],
        in_labels: alloc::vec![map.in_wire.label().to_string()],
    })
}
