//! Slow reference computations for cross-checking the fast paths.
//!
//! Nothing here calls into the decompositions of [`crate::linalg`]; only
//! the [`Matrix`] container is shared. Bases are orthonormalized by
//! repeated Gram–Schmidt and angles come from a cyclic Jacobi eigen solver
//! applied to `Qᵀ(I − PPᵀ)Q`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Columns of an orthonormal basis of `range(m)` (two Gram–Schmidt passes).
pub fn gram_schmidt(m: &Matrix) -> Result<Vec<Vec<f64>>> {
    let scale = (0..m.cols()).map(|j| norm(&m.column(j))).fold(0.0, f64::max);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(m.cols());
    for j in 0..m.cols() {
        let mut v = m.column(j);
        for _ in 0..2 {
            for q in &out {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = norm(&v);
        if !(n > 1e-10 * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::RankDeficient {
                column: j,
                value: n,
                threshold: 1e-10 * scale,
            });
        }
        v.iter_mut().for_each(|x| *x /= n);
        out.push(v);
    }
    Ok(out)
}

/// Eigenvalues of a symmetric matrix (row-major `n × n`) by cyclic Jacobi.
pub fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Largest principal angle between the ranges of two orthonormal column
/// sets, from `sin² φ_max = λ_max(Qᵀ(I − PPᵀ)Q)`.
pub fn reference_max_angle(p: &[Vec<f64>], q: &[Vec<f64>]) -> f64 {
    let s = q.len();
    // Residuals of q's columns after projecting out span(p).
    let res: Vec<Vec<f64>> = q
        .iter()
        .map(|qj| {
            let mut r = qj.clone();
            for pi in p {
                let c = dot(pi, qj);
                r.iter_mut().zip(pi).for_each(|(x, y)| *x -= c * y);
            }
            r
        })
        .collect();
    let gram: Vec<f64> = (0..s * s).map(|k| dot(&res[k / s], &res[k % s])).collect();
    let lmax = symmetric_eigenvalues(gram, s).into_iter().fold(0.0, f64::max);
    lmax.clamp(0.0, 1.0).sqrt().asin()
}

/// Angle between a unit vector and a subspace with orthonormal columns.
fn vector_subspace_angle(v: &[f64], w: &[Vec<f64>]) -> f64 {
    let c: f64 = w.iter().map(|wj| dot(v, wj).powi(2)).sum::<f64>().sqrt();
    c.clamp(0.0, 1.0).acos()
}

fn combine(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; basis[0].len()];
    for (b, &c) in basis.iter().zip(coeffs) {
        v.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
    }
    v
}

/// Max–min estimate of the largest principal angle: the maximum over
/// sampled unit `v ∈ range(V)` of the angle from `v` to `range(W)` (the
/// minimum over unit `w ∈ W`, attained at the normalized projection).
/// For `s = 1` both unit vectors are used; for `s = 2` a `samples`-point
/// half circle with a seeded offset; for larger `s` Gaussian directions.
/// The estimate never exceeds the true value.
pub fn maxmin_angle(v: &Matrix, w: &Matrix, samples: usize, seed: u64) -> Result<f64> {
    if v.shape() != w.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} and {}x{}",
            v.rows(),
            v.cols(),
            w.rows(),
            w.cols()
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let p = gram_schmidt(v)?;
    let q = gram_schmidt(w)?;
    let s = p.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let best = match s {
        1 => vector_subspace_angle(&p[0], &q),
        2 => {
            let offset: f64 = rng.random_range(0.0..PI / samples as f64);
            (0..samples)
                .into_par_iter()
                .map(|i| {
                    let t = offset + PI * i as f64 / samples as f64;
                    vector_subspace_angle(&combine(&p, &[t.cos(), t.sin()]), &q)
                })
                .reduce(|| 0.0, f64::max)
        }
        _ => {
            let seeds: Vec<u64> = (0..samples).map(|_| rng.random()).collect();
            seeds
                .par_chunks(4096)
                .map(|chunk| {
                    let mut local = ChaCha8Rng::seed_from_u64(chunk[0]);
                    let mut best = 0.0f64;
                    for _ in chunk {
                        let c: Vec<f64> = (0..s).map(|_| local.sample(StandardNormal)).collect();
                        let mut x = combine(&p, &c);
                        let n = norm(&x);
                        if n == 0.0 {
                            continue;
                        }
                        x.iter_mut().for_each(|e| *e /= n);
                        best = best.max(vector_subspace_angle(&x, &q));
                    }
                    best
                })
                .reduce(|| 0.0, f64::max)
        }
    };
    Ok(best)
}

/// Transition operator for [`birkhoff_average`].
pub enum OracleSystem<'a> {
    /// `u_{n+1} = A_n u_n`.
    Discrete(&'a (dyn Fn(usize) -> Matrix + Sync)),
    /// `u̇ = A(t) u`.
    Continuous(&'a (dyn Fn(f64) -> Matrix + Sync)),
}

fn columns_to_matrix(cols: &[Vec<f64>]) -> Matrix {
    Matrix::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i])
}

fn apply(a: &Matrix, cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    cols.iter().map(|c| a.mul_vec(c)).collect()
}

/// Long-run mean of successive maximal angles. Discrete: the mean of
/// `∠(V_n, V_{n+1})` over `n < horizon`. Continuous: classical RK4 with
/// step `h` and Gram–Schmidt after each step; the summed angles between
/// consecutive subspaces divided by the horizon.
pub fn birkhoff_average(sys: &OracleSystem, v: &Matrix, horizon: f64, h: Option<f64>) -> Result<f64> {
    let mut cur = gram_schmidt(v)?;
    match sys {
        OracleSystem::Discrete(a) => {
            let n = horizon.round();
            if !(n >= 1.0) {
                return Err(Error::InvalidInput("horizon must be at least 1".into()));
            }
            let mut sum = 0.0;
            for k in 0..n as usize {
                let next = gram_schmidt(&columns_to_matrix(&apply(&a(k), &cur)))?;
                sum += reference_max_angle(&cur, &next);
                cur = next;
            }
            Ok(sum / n)
        }
        OracleSystem::Continuous(a) => {
            let h = h.ok_or_else(|| Error::InvalidInput("continuous average needs a step".into()))?;
            if !(h > 0.0 && horizon >= h) {
                return Err(Error::InvalidInput("need 0 < h <= horizon".into()));
            }
            let steps = (horizon / h).round() as usize;
            let h = horizon / steps as f64;
            let mut sum = 0.0;
            for k in 0..steps {
                let t = k as f64 * h;
                let w = columns_to_matrix(&cur);
                let (a0, a1, a2) = (a(t), a(t + 0.5 * h), a(t + h));
                let k1 = a0.matmul(&w);
                let k2 = a1.matmul(&w.add_scaled(&k1, 0.5 * h));
                let k3 = a1.matmul(&w.add_scaled(&k2, 0.5 * h));
                let k4 = a2.matmul(&w.add_scaled(&k3, h));
                let inc = &(&k1 + &k2.scale(2.0)) + &(&k3.scale(2.0) + &k4);
                let next = gram_schmidt(&w.add_scaled(&inc, h / 6.0))?;
                sum += reference_max_angle(&cur, &next);
                cur = next;
            }
            Ok(sum / horizon)
        }
    }
}

/// Forward difference `∠(range W, range(W + hẆ)) / h`.
pub fn fd_angle_derivative(w: &Matrix, wdot: &Matrix, h: f64) -> Result<f64> {
    if w.shape() != wdot.shape() {
        return Err(Error::DimensionMismatch("W and Wdot differ in shape".into()));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("need h > 0, got {h}")));
    }
    let p = gram_schmidt(w)?;
    let q = gram_schmidt(&w.add_scaled(wdot, h))?;
    Ok(reference_max_angle(&p, &q) / h)
}

/// `min ‖P₁ − P₂Q‖_F` over `Q ∈ O(2)` by scanning `angle_grid` rotation
/// angles and the same number of reflection angles.
pub fn procrustes_bruteforce_s2(p1: &Matrix, p2: &Matrix, angle_grid: usize) -> Result<f64> {
    if p1.shape() != p2.shape() || p1.cols() != 2 {
        return Err(Error::DimensionMismatch("need two d x 2 matrices".into()));
    }
    if angle_grid == 0 {
        return Err(Error::InvalidInput("angle grid must be positive".into()));
    }
    let d = p1.rows();
    let eval = |q: [[f64; 2]; 2]| -> f64 {
        let mut sum = 0.0;
        for i in 0..d {
            for j in 0..2 {
                let x = p2[(i, 0)] * q[0][j] + p2[(i, 1)] * q[1][j];
                sum += (p1[(i, j)] - x).powi(2);
            }
        }
        sum
    };
    let best = (0..angle_grid)
        .into_par_iter()
        .map(|k| {
            let t = 2.0 * PI * k as f64 / angle_grid as f64;
            let (s, c) = t.sin_cos();
            eval([[c, -s], [s, c]]).min(eval([[c, s], [s, -c]]))
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best.max(0.0).sqrt())
}

/// Exact tensor midpoint mean of `max_j values[j][i_j]` by enumerating
/// every grid point.
pub fn tensor_max_mean_bruteforce(values: &[Vec<f64>]) -> f64 {
    fn rec(values: &[Vec<f64>], acc: f64) -> (f64, f64) {
        match values.split_first() {
            None => (acc, 1.0),
            Some((first, rest)) => first.iter().fold((0.0, 0.0), |(s, n), &x| {
                let (a, b) = rec(rest, acc.max(x));
                (s + a, n + b)
            }),
        }
    }
    let (sum, count) = rec(values, f64::NEG_INFINITY);
    if count == 0.0 {
        0.0
    } else {
        sum / count
    }
}
