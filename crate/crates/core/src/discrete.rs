//! Discrete nonautonomous systems `u_{n+1} = A_n u_n`.
//!
//! The angle sum `a_{m,n}(V) = Σ_{j=m}^{n} ∠(Φ(j−1,0)V, Φ(j,0)V)` is
//! accumulated by pushing an orthonormal basis forward one step at a time and
//! re-orthonormalizing after every step.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grassmann::{max_angle_between_bases, Subspace};
use crate::linalg::{ellipse_scaling, inverse, qr_thin, rotation2, svd, Matrix, DEFAULT_RANK_TOL};
use crate::search::{
    initial_pool, run_search, tail_indices, AngularValueReport, SearchOutcome,
    SubspaceSearchConfig, Variant,
};

/// Relative singular-value floor below which `A_n` counts as singular.
const SINGULAR_RTOL: f64 = 1e-14;

/// Default tail fraction: the window is `[N/2, N]`.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;

type Generator = dyn Fn(usize) -> Result<Matrix> + Send + Sync;

#[derive(Clone)]
pub struct DiscreteSystem {
    dim: usize,
    generator: Arc<Generator>,
}

impl fmt::Debug for DiscreteSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscreteSystem").field("dim", &self.dim).finish()
    }
}

impl DiscreteSystem {
    pub fn new(dim: usize, f: impl Fn(usize) -> Matrix + Send + Sync + 'static) -> Self {
        DiscreteSystem {
            dim,
            generator: Arc::new(move |n| Ok(f(n))),
        }
    }

    pub fn try_new(dim: usize, f: impl Fn(usize) -> Result<Matrix> + Send + Sync + 'static) -> Self {
        DiscreteSystem {
            dim,
            generator: Arc::new(f),
        }
    }

    /// `A_n ≡ a`.
    pub fn constant(a: Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch("generator must be square".into()));
        }
        a.check_finite()?;
        let d = a.rows();
        Ok(DiscreteSystem::new(d, move |_| a.clone()))
    }

    /// `A_n = mats[n mod len]`.
    pub fn periodic(mats: Vec<Matrix>) -> Result<Self> {
        let d = mats.first().map(Matrix::rows).ok_or_else(|| {
            Error::InvalidInput("periodic system needs at least one matrix".into())
        })?;
        if mats.iter().any(|m| m.shape() != (d, d)) {
            return Err(Error::DimensionMismatch("periodic matrices must all be d x d".into()));
        }
        Ok(DiscreteSystem::new(d, move |n| mats[n % mats.len()].clone()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `A_n`, checked for shape and finiteness.
    pub fn matrix(&self, n: usize) -> Result<Matrix> {
        let a = (self.generator)(n)?;
        if a.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch(format!(
                "A_{n} is {}x{}, expected {d}x{d}",
                a.rows(),
                a.cols(),
                d = self.dim
            )));
        }
        a.check_finite()?;
        Ok(a)
    }
}

/// `A(ρ, φ) = D_ρ T_φ D_ρ⁻¹`, the time-one map of the elliptic rotation.
pub fn planar_model(rho: f64, phi: f64) -> Result<Matrix> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidBlock(format!("rho must lie in (0, 1], got {rho}")));
    }
    Ok(ellipse_scaling(rho)
        .matmul(&rotation2(phi))
        .matmul(&ellipse_scaling(1.0 / rho)))
}

fn checked_inverse(a: &Matrix) -> Result<Matrix> {
    let f = svd(a)?;
    if !(f.smallest() > SINGULAR_RTOL * f.largest()) {
        let condition = if f.smallest() == 0.0 {
            f64::INFINITY
        } else {
            f.largest() / f.smallest()
        };
        return Err(Error::SingularMatrix { condition });
    }
    inverse(a)
}

/// Solution operator `Φ(n, m)`.
pub fn solution_operator(sys: &DiscreteSystem, n: usize, m: usize) -> Result<Matrix> {
    let mut phi = Matrix::identity(sys.dim());
    if n > m {
        for k in m..n {
            phi = sys.matrix(k)?.matmul(&phi);
        }
    } else {
        // A_n⁻¹ ⋯ A_{m−1}⁻¹
        for k in n..m {
            phi = phi.matmul(&checked_inverse(&sys.matrix(k)?)?);
        }
    }
    Ok(phi)
}

/// Per-step angles `∠(Φ(j−1,0)V, Φ(j,0)V)` for `j = 1..=n`.
pub fn step_angles(sys: &DiscreteSystem, v: &Subspace, n: usize) -> Result<Vec<f64>> {
    step_angles_from_basis(sys, v.basis(), n)
}

fn step_angles_from_basis(sys: &DiscreteSystem, b0: &Matrix, n: usize) -> Result<Vec<f64>> {
    if b0.rows() != sys.dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspace in R^{} for a system in R^{}",
            b0.rows(),
            sys.dim()
        )));
    }
    let mut b = b0.clone();
    let mut out = Vec::with_capacity(n);
    for j in 1..=n {
        let next = sys.matrix(j - 1)?.matmul(&b);
        let (q, _) = qr_thin(&next, DEFAULT_RANK_TOL)?;
        out.push(max_angle_between_bases(&b, &q)?);
        b = q;
    }
    Ok(out)
}

/// `a_{m,n}(V)` for `1 ≤ m ≤ n`.
pub fn angle_sum(sys: &DiscreteSystem, v: &Subspace, m: usize, n: usize) -> Result<f64> {
    if m < 1 || m > n {
        return Err(Error::InvalidInput(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    Ok(step_angles(sys, v, n)?[m - 1..].iter().sum())
}

/// `Ã_n = Q_{n+1} A_n Q_n⁻¹`.
pub fn kinematic_transform(
    sys: &DiscreteSystem,
    q: impl Fn(usize) -> Matrix + Send + Sync + 'static,
) -> DiscreteSystem {
    let base = sys.clone();
    DiscreteSystem::try_new(sys.dim(), move |n| {
        let qn_inv = checked_inverse(&q(n))?;
        Ok(q(n + 1).matmul(&base.matrix(n)?).matmul(&qn_inv))
    })
}

/// Runs the search once and returns the raw outcome.
fn search(
    sys: &DiscreteSystem,
    s: usize,
    n: usize,
    cfg: &SubspaceSearchConfig,
    structured: Vec<Matrix>,
) -> Result<SearchOutcome> {
    if n < 1 {
        return Err(Error::InvalidInput("horizon N must be at least 1".into()));
    }
    let fraction = cfg.tail_fraction_or(DEFAULT_TAIL_FRACTION)?;
    let n0 = (((1.0 - fraction) * n as f64).floor() as usize).clamp(1, n);
    let idx = tail_indices(n0, n, cfg.max_tail_samples);
    // Precompute the matrices once; every candidate reuses them.
    let mats: Vec<Matrix> = (0..n).map(|k| sys.matrix(k)).collect::<Result<_>>()?;
    let eval = |b0: &Matrix| -> Result<Vec<f64>> {
        let mut b = b0.clone();
        let mut sum = 0.0;
        let mut out = Vec::with_capacity(idx.len());
        let mut next_idx = 0;
        for j in 1..=n {
            let (q, _) = qr_thin(&mats[j - 1].matmul(&b), DEFAULT_RANK_TOL)?;
            sum += max_angle_between_bases(&b, &q)?;
            b = q;
            if next_idx < idx.len() && idx[next_idx] == j {
                out.push(sum / j as f64);
                next_idx += 1;
            }
        }
        Ok(out)
    };
    let pool = initial_pool(sys.dim(), s, cfg, structured)?;
    run_search(pool, n as u64, cfg, &eval, n as f64, (n0 as f64, n as f64))
}

/// Estimate of one angular-value variant at horizon `n`.
pub fn estimate_angular_value(
    sys: &DiscreteSystem,
    s: usize,
    variant: Variant,
    n: usize,
    cfg: &SubspaceSearchConfig,
) -> Result<AngularValueReport> {
    Ok(search(sys, s, n, cfg, Vec::new())?.report(variant))
}

/// All four variants from one shared search, in [`Variant::ALL`] order.
pub fn estimate_all_variants(
    sys: &DiscreteSystem,
    s: usize,
    n: usize,
    cfg: &SubspaceSearchConfig,
) -> Result<Vec<AngularValueReport>> {
    Ok(search(sys, s, n, cfg, Vec::new())?.reports())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_invertible(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
        let m = Matrix::from_fn(d, d, |_, _| rng.random_range(-0.5..0.5));
        &m + &Matrix::identity(d).scale(1.5)
    }

    #[test]
    fn solution_operator_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mats: Vec<Matrix> = (0..3).map(|_| random_invertible(&mut rng, 3)).collect();
        let sys = DiscreteSystem::periodic(mats.clone()).unwrap();
        assert_eq!(solution_operator(&sys, 2, 2).unwrap(), Matrix::identity(3));
        let direct = mats[2].matmul(&mats[1]).matmul(&mats[0]);
        assert!((&solution_operator(&sys, 3, 0).unwrap() - &direct).max_abs() < 1e-14);

        let a = random_invertible(&mut rng, 2);
        let c = DiscreteSystem::constant(a.clone()).unwrap();
        let a3 = a.matmul(&a).matmul(&a);
        assert!((&solution_operator(&c, 3, 0).unwrap() - &a3).max_abs() < 1e-13);
    }

    #[test]
    fn cocycle_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mats: Vec<Matrix> = (0..7).map(|_| random_invertible(&mut rng, 3)).collect();
        let sys = DiscreteSystem::periodic(mats).unwrap();
        for _ in 0..30 {
            let mut t = [rng.random_range(0..12), rng.random_range(0..12), rng.random_range(0..12)];
            t.sort_unstable();
            let [m, k, n] = t;
            let lhs = solution_operator(&sys, n, k).unwrap().matmul(&solution_operator(&sys, k, m).unwrap());
            let rhs = solution_operator(&sys, n, m).unwrap();
            assert!((&lhs - &rhs).max_abs() <= 1e-9 * rhs.max_abs().max(1.0));
            // backwards branch inverts the forward one
            let back = solution_operator(&sys, m, n).unwrap();
            assert!((&back.matmul(&rhs) - &Matrix::identity(3)).max_abs() < 1e-9);
        }
    }

    #[test]
    fn singular_generator_detected() {
        let sys = DiscreteSystem::constant(Matrix::diag(&[1.0, 0.0])).unwrap();
        assert!(matches!(solution_operator(&sys, 0, 2), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn angle_sum_examples() {
        let id = DiscreteSystem::constant(Matrix::identity(2)).unwrap();
        let v = Subspace::line(&[0.3, 0.7]).unwrap();
        assert_eq!(angle_sum(&id, &v, 1, 50).unwrap(), 0.0);

        let rot = DiscreteSystem::constant(rotation2(0.3)).unwrap();
        for n in [1, 10, 100] {
            let got = angle_sum(&rot, &v, 1, n).unwrap();
            assert!((got - 0.3 * n as f64).abs() < 1e-12 * n as f64);
        }
        assert!((angle_sum(&rot, &v, 5, 10).unwrap() - 1.8).abs() < 1e-12);
        assert!(angle_sum(&rot, &v, 0, 10).is_err());
    }

    #[test]
    fn scalar_transform_keeps_angle_sums() {
        let a = planar_model(0.4, 1.1).unwrap();
        let sys = DiscreteSystem::constant(a).unwrap();
        let qs: Vec<f64> = (0..60).map(|n| if n % 3 == 0 { -0.5 - n as f64 } else { 2.0 + n as f64 }).collect();
        let t = kinematic_transform(&sys, move |n| Matrix::identity(2).scale(qs[n]));
        let v = Subspace::line(&[1.0, 0.2]).unwrap();
        let lhs = angle_sum(&sys, &v, 1, 50).unwrap();
        let rhs = angle_sum(&t, &v, 1, 50).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn transformed_solution_operator_relation() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mats: Vec<Matrix> = (0..5).map(|_| random_invertible(&mut rng, 3)).collect();
        let qs: Vec<Matrix> = (0..12).map(|_| random_invertible(&mut rng, 3)).collect();
        let sys = DiscreteSystem::periodic(mats).unwrap();
        let qc = qs.clone();
        let t = kinematic_transform(&sys, move |n| qc[n].clone());
        for (n, m) in [(4, 1), (7, 0), (2, 6)] {
            let lhs = solution_operator(&t, n, m).unwrap().matmul(&qs[m]);
            let rhs = qs[n].matmul(&solution_operator(&sys, n, m).unwrap());
            assert!((&lhs - &rhs).max_abs() <= 1e-8 * rhs.max_abs().max(1.0));
        }
    }

    #[test]
    fn estimator_examples() {
        let cfg = SubspaceSearchConfig { starts: 6, refine_rounds: 1, ..SubspaceSearchConfig::with_seed(3) };
        let id = DiscreteSystem::constant(Matrix::identity(2)).unwrap();
        for r in estimate_all_variants(&id, 1, 50, &cfg).unwrap() {
            // Re-orthonormalizing the same basis leaves rounding-level angles.
            assert!(r.value < 1e-15, "{}", r.value);
        }
        let rot = DiscreteSystem::constant(planar_model(1.0, 0.3).unwrap()).unwrap();
        for r in estimate_all_variants(&rot, 1, 200, &cfg).unwrap() {
            assert!((r.value - 0.3).abs() < 1e-12, "{}: {}", r.variant, r.value);
        }
    }

    #[test]
    fn estimator_budget() {
        let cfg = SubspaceSearchConfig { cost_cap: 10, ..Default::default() };
        let id = DiscreteSystem::constant(Matrix::identity(2)).unwrap();
        assert!(matches!(
            estimate_angular_value(&id, 1, Variant::SupLimsup, 100, &cfg),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
