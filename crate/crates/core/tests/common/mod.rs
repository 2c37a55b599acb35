#![allow(dead_code)]

use angval::linalg::{qr_thin, Matrix, DEFAULT_RANK_TOL};
use angval::Subspace;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn random_subspace(rng: &mut ChaCha8Rng, d: usize, s: usize) -> Subspace {
    loop {
        if let Ok(v) = Subspace::from_spanning(&gaussian(rng, d, s), DEFAULT_RANK_TOL) {
            return v;
        }
    }
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    loop {
        if let Ok((q, _)) = qr_thin(&gaussian(rng, d, d), DEFAULT_RANK_TOL) {
            return q;
        }
    }
}

/// Square matrix with singular values in `[lo, hi]`.
pub fn random_conditioned(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Matrix {
    let u = random_orthogonal(rng, d);
    let v = random_orthogonal(rng, d);
    let sv: Vec<f64> = (0..d).map(|_| rng.random_range(lo..=hi)).collect();
    u.matmul(&Matrix::diag(&sv)).matmul(&v.transpose())
}

/// Subspace spanned by a small random tilt of `v`.
pub fn perturbed(rng: &mut ChaCha8Rng, v: &Subspace, size: f64) -> Subspace {
    let (d, s) = v.basis().shape();
    let m = v.basis().add_scaled(&gaussian(rng, d, s), size);
    Subspace::from_spanning(&m, DEFAULT_RANK_TOL).expect("small perturbation keeps rank")
}
