//! Brute-force maximizer of `Tr[C Ω]` over qubit channels: multi-start
//! ascent on the Stiefel manifold of Kraus-rank-2 isometries. It shares no
//! code with the comb solver beyond basic matrix types.

use nalgebra::DMatrix;
use qcomb_core::random::{haar_isometry, rng_from_seed};
use qcomb_core::C64;

/// `omega` is indexed by `(out, in)` pairs in row-major order `o * din + i`.
pub fn max_over_channels(omega: &DMatrix<C64>, din: usize, dout: usize, rank: usize, starts: usize, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let scale = omega.norm().max(1e-300);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..starts {
        let mut v = haar_isometry(dout * rank, din, &mut rng);
        let mut step = 0.5 / scale;
        let mut value = objective(omega, &v, din, dout, rank);
        for _ in 0..2000 {
            let g = gradient(omega, &v, din, dout, rank);
            let cand = polar(&(&v + &g * C64::new(step, 0.0)));
            let cv = objective(omega, &cand, din, dout, rank);
            if cv > value {
                let gain = cv - value;
                v = cand;
                value = cv;
                step *= 1.2;
                if gain < 1e-14 * (1.0 + value.abs()) {
                    break;
                }
            } else {
                step *= 0.5;
                if step < 1e-12 / scale {
                    break;
                }
            }
        }
        best = best.max(value);
    }
    best
}

fn kraus_vec(v: &DMatrix<C64>, e: usize, din: usize, dout: usize, rank: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dout * din, 1, |idx, _| {
        let (o, i) = (idx / din, idx % din);
        v[(o * rank + e, i)]
    })
}

fn objective(omega: &DMatrix<C64>, v: &DMatrix<C64>, din: usize, dout: usize, rank: usize) -> f64 {
    (0..rank)
        .map(|e| {
            let k = kraus_vec(v, e, din, dout, rank);
            (k.adjoint() * omega * &k)[(0, 0)].re
        })
        .sum()
}

fn gradient(omega: &DMatrix<C64>, v: &DMatrix<C64>, din: usize, dout: usize, rank: usize) -> DMatrix<C64> {
    let mut g = DMatrix::zeros(v.nrows(), v.ncols());
    for e in 0..rank {
        let w = omega * kraus_vec(v, e, din, dout, rank);
        for o in 0..dout {
            for i in 0..din {
                g[(o * rank + e, i)] = w[(o * din + i, 0)];
            }
        }
    }
    g
}

fn polar(m: &DMatrix<C64>) -> DMatrix<C64> {
    let svd = m.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}
