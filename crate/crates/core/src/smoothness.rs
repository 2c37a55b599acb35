//! Derivatives of the maximal principal angle and a priori angle bounds.
//!
//! For a curve `τ ↦ V(τ) = range W(τ)` the maximal angle `∠(V(τ), V(τ+h))`
//! is differentiable from the right at `h = 0` with derivative
//!
//! ```text
//! ‖(I − P_{V(τ)}) Ẇ(τ) (W(τ)ᵀW(τ))^{-1/2}‖.
//! ```
//!
//! The left derivative at `h = 0` is the negative of this value; only the
//! magnitude is exposed here.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grassmann::{max_angle, Subspace};
use crate::linalg::{
    condition_number, ellipse_scaling, inverse, qr_thin, rotation2, spectral_norm, svd, Matrix,
    DEFAULT_RANK_TOL,
};

/// `C = π/2 + (π²/4 + 1)^{1/2}` of the Lipschitz estimate.
pub const LIPSCHITZ_CONSTANT: f64 = 3.4328922159134834;

/// Slack used when deciding whether a bound holds.
pub const BOUND_SLACK: f64 = 1e-12;

/// A point on a `C¹` curve of full-rank `d × s` matrices.
#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub w: Matrix,
    pub wdot: Matrix,
}

impl CurvePoint {
    pub fn new(w: Matrix, wdot: Matrix) -> Result<Self> {
        if w.shape() != wdot.shape() {
            return Err(Error::DimensionMismatch(format!(
                "W is {}x{} but Wdot is {}x{}",
                w.rows(),
                w.cols(),
                wdot.rows(),
                wdot.cols()
            )));
        }
        qr_thin(&w, DEFAULT_RANK_TOL)?;
        Ok(CurvePoint { w, wdot })
    }
}

/// Right derivative of `h ↦ ∠(range W, range(W + hẆ))` at `h = 0`.
pub fn angle_derivative_right(p: &CurvePoint) -> Result<f64> {
    let (b, _) = qr_thin(&p.w, DEFAULT_RANK_TOL)?;
    // (WᵀW)^{-1/2} = Z Σ⁻¹ Zᵀ from W = YΣZᵀ.
    let f = svd(&p.w)?;
    let s = p.w.cols();
    let z_scaled = Matrix::from_fn(s, s, |i, j| f.right[(i, j)] / f.values[j]);
    let inv_sqrt = z_scaled.matmul(&f.right.transpose());
    let m = p.wdot.matmul(&inv_sqrt);
    let residual = &m - &b.matmul(&b.tr_matmul(&m));
    spectral_norm(&residual)
}

/// `‖(I − P)A P‖` for an orthonormal basis `b` of `V`, as `‖AB − B(BᵀAB)‖`.
pub fn flow_integrand(a: &Matrix, b: &Matrix) -> Result<f64> {
    let ab = a.matmul(b);
    let residual = &ab - &b.matmul(&b.tr_matmul(&ab));
    spectral_norm(&residual)
}

/// Angular speed `‖(I − P_V) A P_V‖` of `e^{tA}V` at `t = 0`.
pub fn angle_derivative_flow(a: &Matrix, v: &Subspace) -> Result<f64> {
    if !a.is_square() || a.rows() != v.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} generator for a subspace of R^{}",
            a.rows(),
            a.cols(),
            v.ambient_dim()
        )));
    }
    flow_integrand(a, v.basis())
}

/// `|v⊥ᵀ A v| / ‖v‖²` for a planar line `span(v)`.
pub fn planar_angular_speed(a: &Matrix, v: [f64; 2]) -> Result<f64> {
    if a.shape() != (2, 2) {
        return Err(Error::DimensionMismatch("planar speed needs a 2x2 matrix".into()));
    }
    let n2 = v[0] * v[0] + v[1] * v[1];
    if !(n2 > 0.0) {
        return Err(Error::InvalidInput("direction vector must be nonzero".into()));
    }
    let av = a.mul_vec(&v);
    Ok((-v[1] * av[0] + v[0] * av[1]).abs() / n2)
}

/// Angular speed `α(τ, v₀)` of lines under the elliptic rotation with
/// parameters `ρ, ω`.
pub fn model2d_alpha(tau: f64, v0: [f64; 2], rho: f64, omega: f64) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) || !(omega > 0.0) {
        return Err(Error::InvalidBlock(format!("rho = {rho}, omega = {omega}")));
    }
    let n2 = v0[0] * v0[0] + v0[1] * v0[1];
    if !(n2 > 0.0) {
        return Err(Error::InvalidInput("v0 must be nonzero".into()));
    }
    let u = [v0[0], v0[1] / rho];
    let w = ellipse_scaling(rho).matmul(&rotation2(tau * omega)).mul_vec(&u);
    Ok(rho * omega * (u[0] * u[0] + u[1] * u[1]) / (w[0] * w[0] + w[1] * w[1]))
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub bound: f64,
    pub satisfied: bool,
    /// Condition number `κ` (angle bound).
    pub kappa: Option<f64>,
    /// Near-identity constant `q`.
    pub q: Option<f64>,
    /// Lipschitz constant `C`.
    pub c: Option<f64>,
}

impl BoundReport {
    fn new(lhs: f64, bound: f64) -> Self {
        BoundReport {
            lhs,
            bound,
            satisfied: lhs <= bound + BOUND_SLACK,
            kappa: None,
            q: None,
            c: None,
        }
    }
}

/// `∠(SV, SW) ≤ πκ(1 + κ) ∠(V, W)` for invertible `S`.
pub fn check_angle_bound(s: &Matrix, v: &Subspace, w: &Subspace) -> Result<BoundReport> {
    let kappa = condition_number(s)?;
    if !kappa.is_finite() {
        return Err(Error::SingularMatrix { condition: kappa });
    }
    let lhs = max_angle(&v.image(s)?, &w.image(s)?)?;
    let bound = std::f64::consts::PI * kappa * (1.0 + kappa) * max_angle(v, w)?;
    Ok(BoundReport {
        kappa: Some(kappa),
        ..BoundReport::new(lhs, bound)
    })
}

/// `∠(V, SV) ≤ q / (1 − q²)^{1/2}` with `q` the smallest constant such that
/// `‖(I − S)v‖ ≤ q‖Sv‖` on `V`.
///
/// `q = ‖(I − S) B R⁻¹‖` where `SB = QR`. For `q ≥ 1`, or when `SV` loses
/// rank, the bound is `+∞`.
pub fn check_near_identity(s: &Matrix, v: &Subspace) -> Result<BoundReport> {
    let d = v.ambient_dim();
    if s.shape() != (d, d) {
        return Err(Error::DimensionMismatch("S must be d x d".into()));
    }
    let b = v.basis();
    let sb = s.matmul(b);
    let (image, r) = match qr_thin(&sb, DEFAULT_RANK_TOL) {
        Ok(f) => f,
        Err(Error::RankDeficient { .. }) => {
            let mut rep = BoundReport::new(std::f64::consts::FRAC_PI_2, f64::INFINITY);
            rep.q = Some(f64::INFINITY);
            return Ok(rep);
        }
        Err(e) => return Err(e),
    };
    let defect = &Matrix::identity(d) - s;
    let q = match inverse(&r) {
        Ok(r_inv) => spectral_norm(&defect.matmul(b).matmul(&r_inv))?,
        Err(Error::SingularMatrix { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let bound = if q < 1.0 {
        q / (1.0 - q * q).sqrt()
    } else {
        f64::INFINITY
    };
    let lhs = max_angle(v, &Subspace::from_orthonormal(image)?)?;
    Ok(BoundReport {
        q: Some(q),
        ..BoundReport::new(lhs, bound)
    })
}

/// `tan²∠(v + w, w) ≤ ‖v‖² / (‖w‖² − ‖v‖²)` for `‖v‖ < ‖w‖`.
///
/// The angle is the one between vectors, in `[0, π]`.
pub fn check_vector_tan_bound(v: &[f64], w: &[f64]) -> Result<BoundReport> {
    if v.len() != w.len() {
        return Err(Error::DimensionMismatch("vectors of different length".into()));
    }
    let nv2: f64 = v.iter().map(|x| x * x).sum();
    let nw2: f64 = w.iter().map(|x| x * x).sum();
    if !(nv2 < nw2) {
        return Err(Error::InvalidInput("need |v| < |w|".into()));
    }
    let u: Vec<f64> = v.iter().zip(w).map(|(a, b)| a + b).collect();
    let dot: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
    let nu2: f64 = u.iter().map(|x| x * x).sum();
    // tan² = |u × w|² / (u·w)², with |u × w|² = |u|²|w|² − (u·w)².
    let cross2 = (nu2 * nw2 - dot * dot).max(0.0);
    let lhs = cross2 / (dot * dot);
    Ok(BoundReport::new(lhs, nv2 / (nw2 - nv2)))
}

/// `|∠(SV, W) − ∠(V, W)| ≤ C‖S − I‖` whenever `SV` has full dimension.
pub fn check_lipschitz(s: &Matrix, v: &Subspace, w: &Subspace) -> Result<BoundReport> {
    let d = v.ambient_dim();
    if s.shape() != (d, d) {
        return Err(Error::DimensionMismatch("S must be d x d".into()));
    }
    let sv = v.image(s)?;
    let lhs = (max_angle(&sv, w)? - max_angle(v, w)?).abs();
    let bound = LIPSCHITZ_CONSTANT * spectral_norm(&(s - &Matrix::identity(d)))?;
    Ok(BoundReport {
        c: Some(LIPSCHITZ_CONSTANT),
        ..BoundReport::new(lhs, bound)
    })
}
