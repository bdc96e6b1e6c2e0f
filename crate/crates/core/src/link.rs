//! Link product of Choi operators and assembly of networks of circuits.
//!
//! Wires carrying the same label in two operators are connected. The link
//! product `A * B = Tr_J[A^{θ_J} B]` contracts the connected wires `J` after a
//! partial transpose of `A` on them; the remaining wires are joined in the
//! tensor fashion.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::{total_dim, LabeledOperator, Wire, C64, MAX_DIM};

struct Split {
    own: Vec<Wire>,
    shared: Vec<Wire>,
}

fn split_shared(a: &LabeledOperator, b: &LabeledOperator) -> Result<(Split, Vec<Wire>)> {
    let mut own = Vec::new();
    let mut shared = Vec::new();
    for w in a.wires() {
        match b.wire(w.label()) {
            Some(o) if o.dim() != w.dim() => {
                return Err(Error::DimMismatch {
                    label: w.label().to_string(),
                    left: w.dim(),
                    right: o.dim(),
                })
            }
            Some(_) => shared.push(w.clone()),
            None => own.push(w.clone()),
        }
    }
    let b_own = b
        .wires()
        .iter()
        .filter(|w| !a.has_label(w.label()))
        .cloned()
        .collect();
    Ok((Split { own, shared }, b_own))
}

fn labels(ws: &[Wire]) -> Vec<&str> {
    ws.iter().map(Wire::label).collect()
}

fn check_result_dim(ws: &[Wire]) -> Result<()> {
    let d = ws
        .iter()
        .try_fold(1usize, |acc, w| acc.checked_mul(w.dim()))
        .unwrap_or(usize::MAX);
    if d > MAX_DIM {
        return Err(Error::DimOverflow { dim: d, cap: MAX_DIM });
    }
    Ok(())
}

/// `A * B = Tr_J[A^{θ_J} B]` on the symmetric difference of the label sets.
///
/// The result carries `A`'s unconnected wires followed by `B`'s. With no
/// shared wires this is the tensor product; with all wires shared it is a scalar.
pub fn link_product(a: &LabeledOperator, b: &LabeledOperator) -> Result<LabeledOperator> {
    let (sa, b_own) = split_shared(a, b)?;
    let mut out_wires = sa.own.clone();
    out_wires.extend(b_own.iter().cloned());
    check_result_dim(&out_wires)?;
    if sa.shared.is_empty() {
        return a.tensor(b);
    }

    let mut a_order = labels(&sa.own);
    a_order.extend(labels(&sa.shared));
    let mut b_order = labels(&sa.shared);
    b_order.extend(labels(&b_own));
    let ap = a.permute_wires(&a_order)?;
    let bp = b.permute_wires(&b_order)?;
    let (ap, bp) = (ap.matrix(), bp.matrix());

    let da = total_dim(&sa.own);
    let dj = total_dim(&sa.shared);
    let db = total_dim(&b_own);

    // With the transpose absorbed into the index pattern,
    // C[(a,b),(a',b')] = Σ_{j,j'} A[(a,j),(a',j')] B[(j,b),(j',b')],
    // computed as a matrix product X[(a,a'),(j,j')] · Y[(j,j'),(b,b')].
    let x = DMatrix::from_fn(da * da, dj * dj, |row, col| {
        let (r, rp) = (row / da, row % da);
        let (j, jp) = (col / dj, col % dj);
        ap[(r * dj + j, rp * dj + jp)]
    });
    let y = DMatrix::from_fn(dj * dj, db * db, |row, col| {
        let (j, jp) = (row / dj, row % dj);
        let (s, sp) = (col / db, col % db);
        bp[(j * db + s, jp * db + sp)]
    });
    let prod = x * y;
    let d = da * db;
    let mat = DMatrix::from_fn(d, d, |row, col| {
        let (r, s) = (row / db, row % db);
        let (rp, sp) = (col / db, col % db);
        prod[(r * da + rp, s * db + sp)]
    });
    Ok(LabeledOperator::from_parts_unchecked(out_wires, mat))
}

/// Link product computed literally: pad both operators with identities to the
/// union of their wires, partially transpose `A` on the shared wires, multiply
/// and trace the shared wires out. Slower than [`link_product`] and limited by
/// the dimension cap on the padded operators; kept as a reference path.
pub fn link_product_literal(a: &LabeledOperator, b: &LabeledOperator) -> Result<LabeledOperator> {
    let (sa, b_own) = split_shared(a, b)?;
    let mut union = sa.own.clone();
    union.extend(sa.shared.iter().cloned());
    union.extend(b_own.iter().cloned());
    let order = labels(&union);

    let a_pad = a
        .tensor(&LabeledOperator::identity(b_own.clone())?)?
        .permute_wires(&order)?;
    let b_pad = LabeledOperator::identity(sa.own.clone())?
        .tensor(b)?
        .permute_wires(&order)?;
    let shared = labels(&sa.shared);
    let a_t = a_pad.partial_transpose(&shared)?;
    let prod = a_t.matmul(&b_pad)?;
    prod.partial_trace(&shared)
}

/// A collection of circuits (Choi operators) wired together by shared labels.
#[derive(Debug, Clone)]
pub struct Network {
    parts: Vec<LabeledOperator>,
}

impl Network {
    pub fn new(parts: Vec<LabeledOperator>) -> Result<Self> {
        let mut seen: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for p in &parts {
            for w in p.wires() {
                let entry = seen.entry(w.label()).or_insert((0, w.dim()));
                entry.0 += 1;
                if entry.0 >= 3 {
                    return Err(Error::TripleLabel(w.label().to_string()));
                }
                if entry.1 != w.dim() {
                    return Err(Error::DimMismatch {
                        label: w.label().to_string(),
                        left: entry.1,
                        right: w.dim(),
                    });
                }
            }
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[LabeledOperator] {
        &self.parts
    }

    fn label_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for p in &self.parts {
            for l in p.labels() {
                *counts.entry(l).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Labels shared by two parts.
    pub fn connected_labels(&self) -> Vec<String> {
        self.label_counts()
            .into_iter()
            .filter(|&(_, n)| n == 2)
            .map(|(l, _)| l.to_string())
            .collect()
    }

    /// Labels appearing in exactly one part.
    pub fn open_labels(&self) -> Vec<String> {
        self.label_counts()
            .into_iter()
            .filter(|&(_, n)| n == 1)
            .map(|(l, _)| l.to_string())
            .collect()
    }

    /// Left fold of the link product over the parts in the given order.
    pub fn assemble(&self) -> Result<LabeledOperator> {
        let mut iter = self.parts.iter();
        let first = match iter.next() {
            Some(p) => p.clone(),
            None => return Ok(LabeledOperator::scalar(C64::new(1.0, 0.0))),
        };
        iter.try_fold(first, |acc, p| link_product(&acc, p))
    }

    /// Greedy contraction order: repeatedly links the pair whose result is smallest.
    pub fn assemble_greedy(&self) -> Result<LabeledOperator> {
        let mut pool: Vec<LabeledOperator> = self.parts.clone();
        if pool.is_empty() {
            return Ok(LabeledOperator::scalar(C64::new(1.0, 0.0)));
        }
        while pool.len() > 1 {
            let mut best: Option<(usize, usize, u128)> = None;
            for i in 0..pool.len() {
                for j in i + 1..pool.len() {
                    let cost = pair_result_dim(&pool[i], &pool[j]);
                    if best.is_none_or(|(_, _, c)| cost < c) {
                        best = Some((i, j, cost));
                    }
                }
            }
            let (i, j, _) = best.expect("pool has at least two parts");
            let right = pool.remove(j);
            let left = pool.remove(i);
            pool.push(link_product(&left, &right)?);
        }
        Ok(pool.pop().expect("one part left"))
    }
}

fn pair_result_dim(a: &LabeledOperator, b: &LabeledOperator) -> u128 {
    let own = |x: &LabeledOperator, y: &LabeledOperator| -> u128 {
        x.wires()
            .iter()
            .filter(|w| !y.has_label(w.label()))
            .map(|w| w.dim() as u128)
            .product()
    };
    own(a, b) * own(b, a)
}

/// Convenience wrapper: `Network::new(parts)?.assemble()`.
pub fn assemble(parts: Vec<LabeledOperator>) -> Result<LabeledOperator> {
    Network::new(parts)?.assemble()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choi::ChoiOperator;
    use crate::tensor::wire;
    use alloc::vec;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn op(ws: Vec<Wire>, seed: f64) -> LabeledOperator {
        let d: usize = ws.iter().map(|w| w.dim()).product();
        let entries: Vec<C64> = (0..d * d)
            .map(|k| c((k as f64 * 0.731 + seed).sin(), (k as f64 * 0.377 * seed).cos()))
            .collect();
        LabeledOperator::from_row_major(ws, &entries).unwrap()
    }

    #[test]
    fn disjoint_link_is_tensor() {
        let a = op(vec![wire("a", 2)], 0.3);
        let b = op(vec![wire("b", 3)], 1.1);
        assert_eq!(link_product(&a, &b).unwrap(), a.tensor(&b).unwrap());
    }

    #[test]
    fn fast_path_matches_literal_path() {
        let a = op(vec![wire("x", 2), wire("j", 2), wire("y", 3)], 0.5);
        let b = op(vec![wire("k", 2), wire("j", 2), wire("z", 2), wire("x", 2)], 0.9);
        let fast = link_product(&a, &b).unwrap();
        let lit = link_product_literal(&a, &b).unwrap();
        assert_eq!(fast.labels().collect::<Vec<_>>(), ["y", "k", "z"]);
        assert!(fast.distance(&lit).unwrap() <= 1e-12 * lit.frobenius_norm().max(1.0));
    }

    #[test]
    fn full_contraction_is_scalar() {
        let a = op(vec![wire("a", 2), wire("b", 3)], 0.2);
        let b = op(vec![wire("b", 3), wire("a", 2)], 0.7);
        let s = link_product(&a, &b).unwrap();
        assert!(s.is_scalar());
        // Tr[Aᵀ B] with B aligned to A's order
        let bb = a.align(&b).unwrap();
        let expect = a.transpose().trace_product(&bb).unwrap();
        assert!((s.scalar_value() - expect).norm() < 1e-12);
    }

    #[test]
    fn dim_mismatch_on_shared_label() {
        let a = op(vec![wire("a", 2)], 0.2);
        let b = op(vec![wire("a", 3)], 0.2);
        assert!(matches!(link_product(&a, &b), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn link_with_state_applies_channel() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let u = DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0)]);
        let choi = ChoiOperator::from_unitary(&u, wire("o", 2), wire("i", 2)).unwrap();
        let rho = LabeledOperator::from_row_major(
            vec![wire("i", 2)],
            &[c(0.8, 0.0), c(0.1, 0.3), c(0.1, -0.3), c(0.2, 0.0)],
        )
        .unwrap();
        let linked = link_product(choi.op(), &rho).unwrap();
        let applied = choi.apply(&rho).unwrap();
        assert!(linked.distance(&applied).unwrap() < 1e-14);
    }

    #[test]
    fn network_bookkeeping() {
        let a = op(vec![wire("a", 2), wire("b", 2)], 0.1);
        let b = op(vec![wire("b", 2), wire("c", 2)], 0.2);
        let net = Network::new(vec![a.clone(), b]).unwrap();
        assert_eq!(net.connected_labels(), ["b"]);
        assert_eq!(net.open_labels(), ["a", "c"]);
        assert_eq!(assemble(vec![a.clone()]).unwrap(), a);
        let triple = Network::new(vec![a.clone(), a.clone(), a]);
        assert!(matches!(triple, Err(Error::TripleLabel(_))));
    }

    #[test]
    fn greedy_order_agrees_with_fold() {
        let a = op(vec![wire("a", 2), wire("b", 2)], 0.1);
        let b = op(vec![wire("b", 2), wire("c", 2)], 0.2);
        let cc = op(vec![wire("c", 2), wire("d", 3)], 0.4);
        let net = Network::new(vec![a, b, cc]).unwrap();
        let x = net.assemble().unwrap();
        let y = net.assemble_greedy().unwrap();
        assert!(x.distance(&y).unwrap() <= 1e-12 * x.frobenius_norm());
    }
}
