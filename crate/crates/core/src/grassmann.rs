//! Subspaces of `ℝᵈ`, principal angles and metrics on the Grassmannian.
//!
//! A [`Subspace`] is stored through an orthonormal basis. Angles come from
//! the SVD of `PᵀQ`; small angles are recomputed from the singular values of
//! `(I − PPᵀ)Q`, which carry the sines directly.
//!
//! Principal vectors are not unique when singular values repeat. Only the
//! angles, and the spans of groups of vectors with equal angle, are stable.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{qr_thin, spectral_norm, svd, Matrix, DEFAULT_RANK_TOL};

/// Cosines above this threshold switch to the sine path.
const SINE_PATH_THRESHOLD: f64 = 1.0 - 1e-4;

/// Two subspaces count as equal when `d₂` is below this.
pub const EQUALITY_TOL: f64 = 1e-8;

const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    /// Span of the columns of `m`.
    pub fn from_spanning(m: &Matrix, rank_tol: f64) -> Result<Self> {
        if m.cols() == 0 || m.rows() < m.cols() {
            return Err(Error::DimensionMismatch(format!(
                "spanning matrix must be d x s with d >= s >= 1, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let (q, _) = qr_thin(m, rank_tol)?;
        Ok(Subspace { basis: q })
    }

    /// Wraps a basis that is already orthonormal.
    pub fn from_orthonormal(basis: Matrix) -> Result<Self> {
        if basis.cols() == 0 || basis.rows() < basis.cols() {
            return Err(Error::DimensionMismatch(format!(
                "basis must be d x s with d >= s >= 1, got {}x{}",
                basis.rows(),
                basis.cols()
            )));
        }
        basis.check_finite()?;
        let defect = (&basis.tr_matmul(&basis) - &Matrix::identity(basis.cols())).max_abs();
        if defect > ORTHONORMAL_TOL {
            return Err(Error::InvalidInput(format!(
                "basis columns are not orthonormal (defect {defect:e})"
            )));
        }
        Ok(Subspace { basis })
    }

    /// `span(e_i : i ∈ indices)` in `ℝᵈ`.
    pub fn coordinate(d: usize, indices: &[usize]) -> Result<Self> {
        if indices.iter().any(|&i| i >= d) {
            return Err(Error::DimensionMismatch("coordinate index out of range".into()));
        }
        let m = Matrix::from_fn(d, indices.len(), |i, j| if indices[j] == i { 1.0 } else { 0.0 });
        Subspace::from_spanning(&m, DEFAULT_RANK_TOL)
    }

    /// Span of a single nonzero vector.
    pub fn line(v: &[f64]) -> Result<Self> {
        Subspace::from_spanning(&Matrix::column_vector(v), DEFAULT_RANK_TOL)
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn into_basis(self) -> Matrix {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    /// Image `S·V` as a new subspace.
    pub fn image(&self, s: &Matrix) -> Result<Subspace> {
        if s.cols() != self.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} map applied to a subspace of R^{}",
                s.rows(),
                s.cols(),
                self.ambient_dim()
            )));
        }
        Subspace::from_spanning(&s.matmul(&self.basis), DEFAULT_RANK_TOL)
    }

    pub fn projection(&self) -> Matrix {
        self.basis.matmul(&self.basis.transpose())
    }
}

/// Orthonormalizes the columns of `m`.
pub fn subspace_from_spanning(m: &Matrix, rank_tol: f64) -> Result<Subspace> {
    Subspace::from_spanning(m, rank_tol)
}

/// Orthogonal projection `BBᵀ` onto `V`.
pub fn projection_matrix(v: &Subspace) -> Matrix {
    v.projection()
}

#[derive(Clone, Debug, Serialize)]
pub struct PrincipalAngleResult {
    /// Ascending, in `[0, π/2]`.
    pub angles: Vec<f64>,
    /// Columns `v_j`.
    pub vectors_v: Matrix,
    /// Columns `w_j`, paired with `v_j`.
    pub vectors_w: Matrix,
}

impl PrincipalAngleResult {
    pub fn max_angle(&self) -> f64 {
        self.angles.last().copied().unwrap_or(0.0)
    }
}

fn check_pair(v: &Subspace, w: &Subspace) -> Result<()> {
    if v.ambient_dim() != w.ambient_dim() || v.dim() != w.dim() {
        return Err(Error::DimensionMismatch(format!(
            "subspaces of dimension {} in R^{} and {} in R^{}",
            v.dim(),
            v.ambient_dim(),
            w.dim(),
            w.ambient_dim()
        )));
    }
    Ok(())
}

/// Angles from the cosines (descending) of `PᵀQ`, with the sine correction.
fn angles_from_bases(p: &Matrix, q: &Matrix, cosines: &[f64]) -> Result<Vec<f64>> {
    let s = cosines.len();
    let mut angles: Vec<f64> = cosines.iter().map(|c| c.clamp(0.0, 1.0).acos()).collect();
    if cosines.iter().any(|&c| c > SINE_PATH_THRESHOLD) {
        // (I − PPᵀ)Q has singular values sin φ_j, largest first.
        let residual = q - &p.matmul(&p.tr_matmul(q));
        let sines = svd(&residual)?.values;
        for (j, c) in cosines.iter().enumerate() {
            if *c > SINE_PATH_THRESHOLD {
                angles[j] = sines[s - 1 - j].clamp(0.0, 1.0).asin();
            }
        }
    }
    Ok(angles)
}

/// All principal angles and principal vectors of `(V, W)`.
pub fn principal_angles(v: &Subspace, w: &Subspace) -> Result<PrincipalAngleResult> {
    check_pair(v, w)?;
    let (p, q) = (v.basis(), w.basis());
    let f = svd(&p.tr_matmul(q))?;
    let angles = angles_from_bases(p, q, &f.values)?;
    Ok(PrincipalAngleResult {
        angles,
        vectors_v: p.matmul(&f.left),
        vectors_w: q.matmul(&f.right),
    })
}

/// Largest principal angle between the column spaces of two orthonormal
/// `d × s` bases. No validation beyond shapes.
pub fn max_angle_between_bases(p: &Matrix, q: &Matrix) -> Result<f64> {
    if p.shape() != q.shape() {
        return Err(Error::DimensionMismatch("bases of different shape".into()));
    }
    let values = svd(&p.tr_matmul(q))?.values;
    let smallest = *values.last().unwrap_or(&1.0);
    if smallest > SINE_PATH_THRESHOLD {
        let residual = q - &p.matmul(&p.tr_matmul(q));
        return Ok(spectral_norm(&residual)?.clamp(0.0, 1.0).asin());
    }
    Ok(smallest.clamp(0.0, 1.0).acos())
}

/// `∠(V, W) = φ_s`.
pub fn max_angle(v: &Subspace, w: &Subspace) -> Result<f64> {
    check_pair(v, w)?;
    max_angle_between_bases(v.basis(), w.basis())
}

/// `d₁(V, W) = ∠(V, W)`.
pub fn metric_d1(v: &Subspace, w: &Subspace) -> Result<f64> {
    max_angle(v, w)
}

/// `d₂(V, W) = ‖P_V − P_W‖` in the spectral norm.
pub fn metric_d2(v: &Subspace, w: &Subspace) -> Result<f64> {
    check_pair(v, w)?;
    spectral_norm(&(&v.projection() - &w.projection()))
}

/// `d_F(V, W) = 2 (Σ_j sin²(φ_j/2))^{1/2}`.
pub fn metric_df(v: &Subspace, w: &Subspace) -> Result<f64> {
    let angles = principal_angles(v, w)?.angles;
    Ok(2.0 * angles.iter().map(|a| (0.5 * a).sin().powi(2)).sum::<f64>().sqrt())
}

/// `d_σ(V, W) = 2 sin(∠(V, W)/2)`, equal to `(2(1 − σ_s))^{1/2}`.
pub fn metric_dsigma(v: &Subspace, w: &Subspace) -> Result<f64> {
    Ok(2.0 * (0.5 * max_angle(v, w)?).sin())
}

/// `d₂(V, W) ≤ 1e−8`.
pub fn subspaces_equal(v: &Subspace, w: &Subspace) -> Result<bool> {
    Ok(metric_d2(v, w)? <= EQUALITY_TOL)
}

#[derive(Clone, Debug, Serialize)]
pub struct Procrustes {
    /// Orthogonal `s × s` minimizer of `‖P₁ − P₂Q‖_F`.
    pub q: Matrix,
    pub value: f64,
    /// False when `P₁ᵀP₂` has a vanishing singular value, so `q` is one of
    /// several minimizers.
    pub unique: bool,
}

/// Orthogonal Procrustes: minimizes `‖P₁ − P₂Q‖_F` over `Q ∈ O(s)`.
pub fn procrustes_min(p1: &Matrix, p2: &Matrix) -> Result<Procrustes> {
    if p1.shape() != p2.shape() {
        return Err(Error::DimensionMismatch(format!(
            "Procrustes needs equal shapes, got {}x{} and {}x{}",
            p1.rows(),
            p1.cols(),
            p2.rows(),
            p2.cols()
        )));
    }
    let f = svd(&p1.tr_matmul(p2))?;
    let q = f.right.matmul(&f.left.transpose());
    let trace: f64 = f.values.iter().sum();
    let squared = p1.frobenius_norm().powi(2) + p2.frobenius_norm().powi(2) - 2.0 * trace;
    // The residual is the same number without the cancellation for tiny values.
    let direct = (p1 - &p2.matmul(&q)).frobenius_norm();
    let value = if squared < 1e-6 { direct } else { squared.sqrt() };
    let scale = f.largest().max(1.0);
    Ok(Procrustes {
        q,
        value,
        unique: f.smallest() > 1e-12 * scale,
    })
}
