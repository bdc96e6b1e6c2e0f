//! Seeded random sampling: Ginibre matrices, Haar unitaries and isometries,
//! random channels and states.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::C64;

pub type CombRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> CombRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix of i.i.d. standard complex Gaussians (`E|z|² = 1`).
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Haar-distributed isometry `C^cols → C^rows` (`rows ≥ cols`), from the QR
/// decomposition of a Ginibre matrix with the phases of `R`'s diagonal moved into `Q`.
pub fn haar_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    assert!(rows >= cols, "an isometry needs rows >= cols");
    let g = ginibre(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let rj = r[(j, j)];
        let n = rj.norm();
        let phase = if n > 0.0 { rj / n } else { C64::new(1.0, 0.0) };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<C64> {
    haar_isometry(d, d, rng)
}

/// Kraus operators of a random channel `C^din → C^dout` with Kraus rank `rank`,
/// cut out of a Haar isometry into `out ⊗ env`.
pub fn random_channel_kraus<R: Rng + ?Sized>(
    din: usize,
    dout: usize,
    rank: usize,
    rng: &mut R,
) -> Vec<DMatrix<C64>> {
    assert!(dout * rank >= din, "rank too small for an isometric dilation");
    let v = haar_isometry(dout * rank, din, rng);
    (0..rank)
        .map(|e| DMatrix::from_fn(dout, din, |o, i| v[(o * rank + e, i)]))
        .collect()
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<C64> {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

/// Random density matrix `G G† / Tr[G G†]`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<C64> {
    let g = ginibre(d, d, rng);
    let p = &g * g.adjoint();
    let t = p.trace();
    p / t
}
