//! Continuous-time systems `u̇ = A(t)u`.
//!
//! Subspaces are propagated by classical RK4 on a basis matrix with a QR
//! re-orthonormalization after each step. The angular integral
//! `a_{t,T}(V) = ∫ ‖(I − P)A(τ)P‖ dτ` is the composite trapezoid rule over
//! the integrand samples at the grid nodes.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grassmann::Subspace;
use crate::linalg::{inverse, qr_thin, Matrix, DEFAULT_RANK_TOL};
use crate::search::{
    initial_pool, run_search, tail_indices, AngularValueReport, SearchOutcome,
    SubspaceSearchConfig, Variant,
};
use crate::smoothness::flow_integrand;

/// Default tail fraction for the continuous estimator: `[0.9T, T]`.
///
/// A running average of a periodic integrand with period `P` deviates from
/// its mean by up to `c·P/t`; a late window keeps that bias inside the
/// accuracy targets at moderate horizons.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.1;

type Generator = dyn Fn(f64) -> Result<Matrix> + Send + Sync;

#[derive(Clone)]
enum Kind {
    Constant(Matrix),
    Function(Arc<Generator>),
}

#[derive(Clone)]
pub struct ContinuousSystem {
    dim: usize,
    kind: Kind,
    /// Largest angular frequency, if known; sets the default step.
    pub frequency_scale: Option<f64>,
}

impl fmt::Debug for ContinuousSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousSystem")
            .field("dim", &self.dim)
            .field("constant", &matches!(self.kind, Kind::Constant(_)))
            .field("frequency_scale", &self.frequency_scale)
            .finish()
    }
}

impl ContinuousSystem {
    pub fn new(dim: usize, f: impl Fn(f64) -> Matrix + Send + Sync + 'static) -> Self {
        ContinuousSystem::try_new(dim, move |t| Ok(f(t)))
    }

    pub fn try_new(dim: usize, f: impl Fn(f64) -> Result<Matrix> + Send + Sync + 'static) -> Self {
        ContinuousSystem {
            dim,
            kind: Kind::Function(Arc::new(f)),
            frequency_scale: None,
        }
    }

    pub fn constant(a: Matrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch("generator must be square".into()));
        }
        a.check_finite()?;
        Ok(ContinuousSystem {
            dim: a.rows(),
            kind: Kind::Constant(a),
            frequency_scale: None,
        })
    }

    pub fn with_frequency_scale(mut self, omega_max: f64) -> Self {
        self.frequency_scale = Some(omega_max);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, Kind::Constant(_))
    }

    /// `A(t)`, checked for shape and finiteness.
    pub fn matrix(&self, t: f64) -> Result<Matrix> {
        let a = match &self.kind {
            Kind::Constant(a) => return Ok(a.clone()),
            Kind::Function(f) => f(t)?,
        };
        if a.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch(format!(
                "A({t}) is {}x{}, expected {d}x{d}",
                a.rows(),
                a.cols(),
                d = self.dim
            )));
        }
        a.check_finite()?;
        Ok(a)
    }

    /// `h = 1e−2 · 2π/ω_max` when a frequency scale is known, otherwise
    /// `1e−3 · t_char`.
    pub fn default_step(&self, t_char: f64) -> f64 {
        match self.frequency_scale {
            Some(w) if w > 0.0 => 1e-2 * std::f64::consts::TAU / w,
            _ => 1e-3 * t_char,
        }
    }
}

/// Uniform grid with `steps` intervals of width `h` ending at `t_end`.
fn grid(t_end: f64, h: f64) -> Result<(usize, f64)> {
    if !(h > 0.0) || !(t_end >= h) {
        return Err(Error::InvalidInput(format!(
            "need h > 0 and T >= h, got h = {h}, T = {t_end}"
        )));
    }
    // Snap to an integer number of steps; the effective step is T/K.
    let steps = ((t_end / h) - 1e-9).ceil().max(1.0) as usize;
    Ok((steps, t_end / steps as f64))
}

/// Streams the propagation: calls `visit(k, t_k, basis, integrand)` for
/// `k = 0..=steps`.
fn propagate_with(
    sys: &ContinuousSystem,
    b0: &Matrix,
    steps: usize,
    h: f64,
    mut visit: impl FnMut(usize, f64, &Matrix, f64) -> Result<()>,
) -> Result<()> {
    if b0.rows() != sys.dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspace in R^{} for a system in R^{}",
            b0.rows(),
            sys.dim()
        )));
    }
    // The scalar part of A(t) only rescales the basis, so the stages use
    // A − (tr A/d) I; the range and the integrand are unchanged.
    let d = sys.dim();
    let traceless = |a: &Matrix| a.add_scaled(&Matrix::identity(d), -a.trace() / d as f64);
    let (mut b, _) = qr_thin(b0, DEFAULT_RANK_TOL)?;
    let mut a_now = sys.matrix(0.0)?;
    visit(0, 0.0, &b, flow_integrand(&a_now, &b)?)?;
    let constant = sys.is_constant();
    for k in 0..steps {
        let t = k as f64 * h;
        let a_next = if constant { a_now.clone() } else { sys.matrix(t + h)? };
        let (f0, f_mid, f1) = if constant {
            let f = traceless(&a_now);
            (f.clone(), f.clone(), f)
        } else {
            (traceless(&a_now), traceless(&sys.matrix(t + 0.5 * h)?), traceless(&a_next))
        };
        let k1 = f0.matmul(&b);
        let k2 = f_mid.matmul(&b.add_scaled(&k1, 0.5 * h));
        let k3 = f_mid.matmul(&b.add_scaled(&k2, 0.5 * h));
        let k4 = f1.matmul(&b.add_scaled(&k3, h));
        let incr = &(&k1 + &k4) + &(&k2 + &k3).scale(2.0);
        let w = b.add_scaled(&incr, h / 6.0);
        b = match qr_thin(&w, DEFAULT_RANK_TOL) {
            Ok((q, _)) => q,
            Err(Error::RankDeficient { .. }) | Err(Error::NonFinite { .. }) => {
                return Err(Error::StepUnstable { t: t + h })
            }
            Err(e) => return Err(e),
        };
        a_now = a_next;
        let tk = (k + 1) as f64 * h;
        visit(k + 1, tk, &b, flow_integrand(&a_now, &b)?)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct SubspaceTrajectory {
    pub times: Vec<f64>,
    pub bases: Vec<Matrix>,
    /// `‖(I − P)A P‖` at each node.
    pub integrand: Vec<f64>,
}

impl SubspaceTrajectory {
    pub fn step(&self) -> f64 {
        self.times.get(1).map_or(0.0, |t| t - self.times[0])
    }

    pub fn final_subspace(&self) -> Result<Subspace> {
        Subspace::from_orthonormal(self.bases.last().unwrap().clone())
    }

    /// Trapezoid rule over nodes with `t ≥ from` (snapped to the grid).
    pub fn integral_from(&self, from: f64) -> f64 {
        let h = self.step();
        let k0 = if h > 0.0 {
            ((from / h).round().max(0.0) as usize).min(self.integrand.len() - 1)
        } else {
            0
        };
        trapezoid(&self.integrand[k0..], h)
    }
}

fn trapezoid(samples: &[f64], h: f64) -> f64 {
    match samples {
        [] | [_] => 0.0,
        [first, inner @ .., last] => h * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Propagates `V₀` to time `t_end` with step about `h`.
pub fn propagate_subspace(
    sys: &ContinuousSystem,
    v0: &Subspace,
    t_end: f64,
    h: f64,
) -> Result<SubspaceTrajectory> {
    let (steps, h) = grid(t_end, h)?;
    let mut traj = SubspaceTrajectory {
        times: Vec::with_capacity(steps + 1),
        bases: Vec::with_capacity(steps + 1),
        integrand: Vec::with_capacity(steps + 1),
    };
    propagate_with(sys, v0.basis(), steps, h, |_, t, b, g| {
        traj.times.push(t);
        traj.bases.push(b.clone());
        traj.integrand.push(g);
        Ok(())
    })?;
    Ok(traj)
}

/// `a_{t,T}(V₀)`.
pub fn angular_integral(
    sys: &ContinuousSystem,
    v0: &Subspace,
    t: f64,
    t_end: f64,
    h: f64,
) -> Result<f64> {
    if !(t >= 0.0 && t <= t_end) {
        return Err(Error::InvalidInput(format!("need 0 <= t <= T, got t = {t}, T = {t_end}")));
    }
    let (steps, h) = grid(t_end, h)?;
    let k0 = ((t / h).round() as usize).min(steps);
    let mut sum = 0.0;
    let mut prev = None;
    propagate_with(sys, v0.basis(), steps, h, |k, _, _, g| {
        if k > k0 {
            sum += 0.5 * h * (prev.unwrap_or(g) + g);
        }
        prev = Some(g);
        Ok(())
    })?;
    Ok(sum)
}

/// `Ã(t) = (Q̇(t) + Q(t)A(t)) Q(t)⁻¹`.
pub fn kinematic_transform_ct(
    sys: &ContinuousSystem,
    q: impl Fn(f64) -> Matrix + Send + Sync + 'static,
    qdot: impl Fn(f64) -> Matrix + Send + Sync + 'static,
) -> ContinuousSystem {
    let base = sys.clone();
    let mut out = ContinuousSystem::try_new(sys.dim(), move |t| {
        let qt = q(t);
        let q_inv = inverse(&qt)?;
        Ok((&qdot(t) + &qt.matmul(&base.matrix(t)?)).matmul(&q_inv))
    });
    out.frequency_scale = sys.frequency_scale;
    out
}

/// `Ã(t) = A(t) − (tr A(t)/d) I`.
pub fn trace_normalize(sys: &ContinuousSystem) -> ContinuousSystem {
    let d = sys.dim();
    let shift = move |a: &Matrix| a.add_scaled(&Matrix::identity(d), -a.trace() / d as f64);
    let mut out = match &sys.kind {
        Kind::Constant(a) => ContinuousSystem {
            dim: d,
            kind: Kind::Constant(shift(a)),
            frequency_scale: None,
        },
        Kind::Function(_) => {
            let base = sys.clone();
            ContinuousSystem::try_new(d, move |t| Ok(shift(&base.matrix(t)?)))
        }
    };
    out.frequency_scale = sys.frequency_scale;
    out
}

pub(crate) fn search_ct(
    sys: &ContinuousSystem,
    s: usize,
    t_end: f64,
    h: f64,
    cfg: &SubspaceSearchConfig,
    structured: Vec<Matrix>,
) -> Result<SearchOutcome> {
    let (steps, h) = grid(t_end, h)?;
    let fraction = cfg.tail_fraction_or(DEFAULT_TAIL_FRACTION)?;
    let k0 = (((1.0 - fraction) * steps as f64).floor() as usize).clamp(1, steps);
    let idx = tail_indices(k0, steps, cfg.max_tail_samples);
    let eval = |b0: &Matrix| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(idx.len());
        let mut sum = 0.0;
        let mut prev = 0.0;
        let mut next_idx = 0;
        propagate_with(sys, b0, steps, h, |k, t, _, g| {
            if k > 0 {
                sum += 0.5 * h * (prev + g);
            }
            prev = g;
            if next_idx < idx.len() && idx[next_idx] == k {
                out.push(sum / t);
                next_idx += 1;
            }
            Ok(())
        })?;
        Ok(out)
    };
    let pool = initial_pool(sys.dim(), s, cfg, structured)?;
    run_search(
        pool,
        steps as u64,
        cfg,
        &eval,
        t_end,
        (k0 as f64 * h, t_end),
    )
}

/// Estimate of one continuous angular-value variant.
pub fn estimate_angular_value_ct(
    sys: &ContinuousSystem,
    s: usize,
    variant: Variant,
    t_end: f64,
    h: f64,
    cfg: &SubspaceSearchConfig,
) -> Result<AngularValueReport> {
    Ok(search_ct(sys, s, t_end, h, cfg, Vec::new())?.report(variant))
}

/// All four variants from one shared search, in [`Variant::ALL`] order.
pub fn estimate_all_variants_ct(
    sys: &ContinuousSystem,
    s: usize,
    t_end: f64,
    h: f64,
    cfg: &SubspaceSearchConfig,
) -> Result<Vec<AngularValueReport>> {
    Ok(search_ct(sys, s, t_end, h, cfg, Vec::new())?.reports())
}

/// Like [`estimate_all_variants_ct`] with extra structured candidates
/// (spanning matrices) added to the pool.
pub fn estimate_all_variants_ct_with(
    sys: &ContinuousSystem,
    s: usize,
    t_end: f64,
    h: f64,
    cfg: &SubspaceSearchConfig,
    structured: Vec<Matrix>,
) -> Result<Vec<AngularValueReport>> {
    Ok(search_ct(sys, s, t_end, h, cfg, structured)?.reports())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::metric_d2;
    use crate::linalg::{block_flow, SchurBlock};
    use crate::smoothness::angle_derivative_flow;
    use std::f64::consts::{PI, TAU};

    fn model(omega: f64, rho: f64) -> ContinuousSystem {
        let b = SchurBlock::Complex { beta: 0.0, omega, rho };
        ContinuousSystem::constant(b.generator()).unwrap().with_frequency_scale(omega)
    }

    #[test]
    fn zero_generator_keeps_subspace() {
        let sys = ContinuousSystem::constant(Matrix::zeros(3, 3)).unwrap();
        let v = Subspace::line(&[0.2, 0.5, -1.0]).unwrap();
        let tr = propagate_subspace(&sys, &v, 1.0, 0.1).unwrap();
        assert_eq!(tr.bases.len(), 11);
        for b in &tr.bases {
            assert!(metric_d2(&v, &Subspace::from_orthonormal(b.clone()).unwrap()).unwrap() < 1e-15);
        }
        assert!(tr.integrand.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn model_returns_after_one_period() {
        let (omega, rho) = (1.0, 1.0 / 3.0);
        let v = Subspace::line(&[1.0, 0.0]).unwrap();
        let tr = propagate_subspace(&model(omega, rho), &v, TAU / omega, 1e-3).unwrap();
        assert!(metric_d2(&v, &tr.final_subspace().unwrap()).unwrap() <= 1e-6);
    }

    #[test]
    fn matches_closed_form_flow() {
        let block = SchurBlock::Complex { beta: 0.3, omega: 2.0, rho: 0.5 };
        let sys = ContinuousSystem::constant(block.generator()).unwrap();
        let v = Subspace::line(&[0.4, 1.0]).unwrap();
        let t_end = 3.0;
        let tr = propagate_subspace(&sys, &v, t_end, 1e-3).unwrap();
        let exact = v.image(&block_flow(&block, t_end).unwrap()).unwrap();
        assert!(metric_d2(&exact, &tr.final_subspace().unwrap()).unwrap() < 1e-9);
    }

    #[test]
    fn integrand_matches_flow_derivative() {
        let sys = ContinuousSystem::new(3, |t| {
            Matrix::from_fn(3, 3, |i, j| ((i + 2 * j) as f64 * 0.3 + t).sin())
        });
        let v = Subspace::from_spanning(
            &Matrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 1.0], vec![0.0, 0.3]]).unwrap(),
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        let tr = propagate_subspace(&sys, &v, 2.0, 0.01).unwrap();
        for (k, b) in tr.bases.iter().enumerate() {
            let a = sys.matrix(tr.times[k]).unwrap();
            let direct = angle_derivative_flow(&a, &Subspace::from_orthonormal(b.clone()).unwrap()).unwrap();
            assert!((direct - tr.integrand[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn angular_integral_examples() {
        let v = Subspace::line(&[1.0, 0.0]).unwrap();
        let scalar = ContinuousSystem::new(2, |t| Matrix::identity(2).scale(t.cos()));
        assert_eq!(angular_integral(&scalar, &v, 0.0, 5.0, 0.01).unwrap(), 0.0);

        let a = angular_integral(&model(1.0, 1.0 / 3.0), &v, 0.0, PI, 1e-3).unwrap();
        assert!((a - PI).abs() < 1e-9, "integral {a}");

        let diag = ContinuousSystem::constant(Matrix::diag(&[1.0, 2.0, 3.0])).unwrap();
        let inv = Subspace::coordinate(3, &[1]).unwrap();
        assert_eq!(angular_integral(&diag, &inv, 0.0, 4.0, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn trace_normalize_examples() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![-0.5, 3.0]]).unwrap();
        let t = trace_normalize(&ContinuousSystem::constant(a.clone()).unwrap());
        let at = t.matrix(0.0).unwrap();
        assert!(at.trace().abs() < 1e-15);
        let id = trace_normalize(&ContinuousSystem::constant(Matrix::identity(3)).unwrap());
        assert_eq!(id.matrix(1.0).unwrap(), Matrix::zeros(3, 3));
        let traceless = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, -1.0]]).unwrap();
        let same = trace_normalize(&ContinuousSystem::constant(traceless.clone()).unwrap());
        assert_eq!(same.matrix(0.0).unwrap(), traceless);
    }

    #[test]
    fn scalar_kinematic_transform() {
        let a = Matrix::from_rows(&[vec![0.0, -1.0], vec![2.0, 0.5]]).unwrap();
        let sys = ContinuousSystem::constant(a.clone()).unwrap();
        let t = kinematic_transform_ct(
            &sys,
            |t| Matrix::identity(2).scale(2.0 + t.sin()),
            |t| Matrix::identity(2).scale(t.cos()),
        );
        let s: f64 = 1.3;
        let expected = a.add_scaled(&Matrix::identity(2), s.cos() / (2.0 + s.sin()));
        assert!((&t.matrix(s).unwrap() - &expected).max_abs() < 1e-14);
    }

    #[test]
    fn estimator_on_diagonal_system() {
        let sys = ContinuousSystem::constant(Matrix::diag(&[1.0, 2.0, 3.0])).unwrap();
        // Lines travel a finite total angle (at most about π) before
        // settling on e³, so the averages decay like π/T.
        let cfg = SubspaceSearchConfig { starts: 8, refine_rounds: 1, ..SubspaceSearchConfig::with_seed(1) };
        for r in estimate_all_variants_ct(&sys, 1, 4000.0, 0.02, &cfg).unwrap() {
            assert!(r.value <= 1e-3, "{}: {}", r.variant, r.value);
        }
    }

    #[test]
    fn invalid_grid() {
        let sys = ContinuousSystem::constant(Matrix::zeros(2, 2)).unwrap();
        let v = Subspace::line(&[1.0, 0.0]).unwrap();
        assert!(propagate_subspace(&sys, &v, 1.0, 0.0).is_err());
        assert!(propagate_subspace(&sys, &v, 0.1, 1.0).is_err());
    }
}
