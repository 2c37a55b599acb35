//! Dense kernels for small matrices.
//!
//! Everything here targets the desk-scale sizes the rest of the crate works
//! with (`d` up to a few dozen). Matrices are stored row-major in a single
//! `Vec<f64>`. The SVD is a one-sided (Hestenes) Jacobi iteration, which keeps
//! small singular values accurate to high relative precision; that accuracy is
//! what the small-angle paths in [`crate::grassmann`] rely on.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative rank tolerance for [`qr_thin`].
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Sweep budget for the Jacobi SVD.
pub const MAX_JACOBI_SWEEPS: usize = 30;

/// Condition numbers above this are treated as singular by [`inverse`].
const SINGULAR_CONDITION: f64 = 1e14;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: k / cols.max(1),
                col: k % cols.max(1),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Matrix::from_vec(r, c, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Matrix::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn column_vector(values: &[f64]) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    /// Assembles a matrix from columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        let m = Matrix::from_fn(rows, cols, |i, j| columns[j][i]);
        m.check_finite()?;
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|x| !x.is_finite()) {
            None => Ok(()),
            Some(k) => Err(Error::NonFinite {
                row: k / self.cols.max(1),
                col: k % self.cols.max(1),
            }),
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.rows);
        for (i, v) in values.iter().enumerate() {
            self[(i, j)] = *v;
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Columns `range` as a new matrix.
    pub fn columns(&self, range: std::ops::Range<usize>) -> Matrix {
        let start = range.start;
        Matrix::from_fn(self.rows, range.len(), |i, j| self[(i, start + j)])
    }

    /// Rows `range` as a new matrix.
    pub fn row_block(&self, range: std::ops::Range<usize>) -> Matrix {
        let start = range.start;
        Matrix::from_fn(range.len(), self.cols, |i, j| self[(start + i, j)])
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · other` without forming the transpose.
    pub fn tr_matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "tr_matmul shape mismatch");
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, a) in a_row.iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Matrix, factor: f64) -> Matrix {
        assert_eq!(self.shape(), other.shape());
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + factor * b)
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Horizontal concatenation `[self other]`.
    pub fn hcat(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        Matrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        })
    }

    /// Block-diagonal matrix from square blocks.
    pub fn block_diag(blocks: &[Matrix]) -> Matrix {
        let n: usize = blocks.iter().map(Matrix::rows).sum();
        let m: usize = blocks.iter().map(Matrix::cols).sum();
        let mut out = Matrix::zeros(n, m);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(r0 + i, c0 + j)] = b[(i, j)];
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        self.add_scaled(rhs, 1.0)
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        self.add_scaled(rhs, -1.0)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:>12.6e} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = (0..self.rows).map(|i| self.row(i)).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Thin QR factorization `M = QR` by twice-iterated modified Gram–Schmidt.
///
/// `Q` has orthonormal columns and `R` is upper triangular with a nonnegative
/// diagonal. A column whose orthogonal remainder falls below
/// `rank_tol * ‖M‖_F` is reported as [`Error::RankDeficient`].
pub fn qr_thin(m: &Matrix, rank_tol: f64) -> Result<(Matrix, Matrix)> {
    let (d, s) = m.shape();
    if d < s {
        return Err(Error::DimensionMismatch(format!(
            "thin QR needs rows >= cols, got {d}x{s}"
        )));
    }
    let threshold = rank_tol * m.frobenius_norm();
    let mut q_cols: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut r = Matrix::zeros(s, s);
    for j in 0..s {
        let mut v = m.column(j);
        for _pass in 0..2 {
            for (k, qk) in q_cols.iter().enumerate() {
                let c = dot(qk, &v);
                r[(k, j)] += c;
                for (vi, qi) in v.iter_mut().zip(qk) {
                    *vi -= c * qi;
                }
            }
        }
        let nv = norm(&v);
        if !(nv > threshold) || nv == 0.0 {
            return Err(Error::RankDeficient {
                column: j,
                value: nv,
                threshold,
            });
        }
        r[(j, j)] = nv;
        v.iter_mut().for_each(|x| *x /= nv);
        q_cols.push(v);
    }
    let q = Matrix::from_fn(d, s, |i, j| q_cols[j][i]);
    Ok((q, r))
}

/// Orthonormal basis of the column space of `m` (the `Q` factor of [`qr_thin`]).
pub fn orthonormalize(m: &Matrix, rank_tol: f64) -> Result<Matrix> {
    qr_thin(m, rank_tol).map(|(q, _)| q)
}

/// Thin singular value decomposition `M = left · diag(values) · rightᵀ`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `m × k` with orthonormal columns, `k = min(m, n)`.
    pub left: Matrix,
    /// Descending, nonnegative.
    pub values: Vec<f64>,
    /// `n × k` with orthonormal columns.
    pub right: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        let k = self.values.len();
        let scaled = Matrix::from_fn(self.left.rows(), k, |i, j| self.left[(i, j)] * self.values[j]);
        scaled.matmul(&self.right.transpose())
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn smallest(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// One-sided Jacobi SVD with a budget of [`MAX_JACOBI_SWEEPS`] sweeps.
pub fn svd(m: &Matrix) -> Result<Svd> {
    m.check_finite()?;
    if m.rows() < m.cols() {
        let t = svd(&m.transpose())?;
        return Ok(Svd {
            left: t.right,
            values: t.values,
            right: t.left,
        });
    }
    let (rows, n) = m.shape();
    let mut a: Vec<Vec<f64>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let tol = f64::EPSILON * (rows.max(1) as f64);

    let mut converged = n < 2;
    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                let scale = (alpha * beta).sqrt();
                if gamma == 0.0 || scale == 0.0 || gamma.abs() <= tol * scale {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut a, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: MAX_JACOBI_SWEEPS,
        });
    }

    let norms: Vec<f64> = a.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u_cols: Vec<Option<Vec<f64>>> = order
        .iter()
        .map(|&j| {
            let s = norms[j];
            (s > 0.0).then(|| a[j].iter().map(|x| x / s).collect())
        })
        .collect();
    complete_orthonormal(&mut u_cols, rows);

    let left = Matrix::from_fn(rows, n, |i, j| u_cols[j].as_ref().unwrap()[i]);
    let right = Matrix::from_fn(n, n, |i, j| v[order[j]][i]);
    Ok(Svd {
        left,
        values,
        right,
    })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let (cp, cq) = (&mut head[p], &mut tail[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Fills the `None` slots with unit vectors orthogonal to all other columns.
fn complete_orthonormal(cols: &mut [Option<Vec<f64>>], dim: usize) {
    let mut candidate = 0;
    for slot in 0..cols.len() {
        if cols[slot].is_some() {
            continue;
        }
        while candidate < dim {
            let mut v = vec![0.0; dim];
            v[candidate] = 1.0;
            candidate += 1;
            for _pass in 0..2 {
                for other in cols.iter().flatten() {
                    let c = dot(other, &v);
                    for (vi, oi) in v.iter_mut().zip(other) {
                        *vi -= c * oi;
                    }
                }
            }
            let nv = norm(&v);
            if nv > 1e-8 {
                v.iter_mut().for_each(|x| *x /= nv);
                cols[slot] = Some(v);
                break;
            }
        }
    }
}

/// Extends the orthonormal columns of `q` (`n × k`) to an orthogonal `n × n`
/// matrix whose first `k` columns are those of `q`.
pub fn complete_basis(q: &Matrix) -> Matrix {
    let (n, k) = q.shape();
    let mut cols: Vec<Option<Vec<f64>>> = (0..k).map(|j| Some(q.column(j))).collect();
    cols.resize(n, None);
    complete_orthonormal(&mut cols, n);
    Matrix::from_fn(n, n, |i, j| cols[j].as_ref().unwrap()[i])
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Ok(0.0);
    }
    if m.cols() <= 2 {
        m.check_finite()?;
        return Ok(narrow_spectral_norm(m));
    }
    if m.rows() <= 2 {
        m.check_finite()?;
        return Ok(narrow_spectral_norm(&m.transpose()));
    }
    Ok(svd(m)?.largest())
}

// Gram-matrix route for one or two columns; used in the propagation hot loops.
fn narrow_spectral_norm(m: &Matrix) -> f64 {
    if m.cols() == 1 {
        return norm(&m.data);
    }
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for i in 0..m.rows() {
        let x = m.data[2 * i];
        let y = m.data[2 * i + 1];
        a += x * x;
        b += x * y;
        c += y * y;
    }
    let half = 0.5 * (a - c);
    (0.5 * (a + c) + half.hypot(b)).max(0.0).sqrt()
}

/// `‖M‖ · ‖M⁻¹‖` in the spectral norm; infinite for singular `M`.
pub fn condition_number(m: &Matrix) -> Result<f64> {
    let f = svd(m)?;
    let smin = f.smallest();
    Ok(if smin == 0.0 {
        f64::INFINITY
    } else {
        f.largest() / smin
    })
}

/// Inverse of a square matrix through its SVD.
pub fn inverse(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "inverse of non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let f = svd(m)?;
    let smin = f.smallest();
    let condition = if smin == 0.0 {
        f64::INFINITY
    } else {
        f.largest() / smin
    };
    if !(condition <= SINGULAR_CONDITION) {
        return Err(Error::SingularMatrix { condition });
    }
    let n = m.rows();
    let scaled = Matrix::from_fn(n, n, |i, j| f.right[(i, j)] / f.values[j]);
    Ok(scaled.matmul(&f.left.transpose()))
}

/// Planar rotation `T_θ`.
pub fn rotation2(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix {
        rows: 2,
        cols: 2,
        data: vec![c, -s, s, c],
    }
}

/// `D_ρ = diag(1, ρ)`.
pub fn ellipse_scaling(rho: f64) -> Matrix {
    Matrix::diag(&[1.0, rho])
}

/// Diagonal block of a block-diagonal real Schur form.
///
/// A complex block encodes the eigenvalue pair `β ± iω` through the generator
/// `[[β, −ω/ρ], [ρω, β]]`, whose flow moves points along ellipses with
/// semiaxes `1` and `ρ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SchurBlock {
    Real { beta: f64 },
    Complex { beta: f64, omega: f64, rho: f64 },
}

impl SchurBlock {
    pub fn dim(&self) -> usize {
        match self {
            SchurBlock::Real { .. } => 1,
            SchurBlock::Complex { .. } => 2,
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            SchurBlock::Real { beta } | SchurBlock::Complex { beta, .. } => beta,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, SchurBlock::Complex { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SchurBlock::Real { beta } if !beta.is_finite() => {
                Err(Error::InvalidBlock(format!("non-finite beta {beta}")))
            }
            SchurBlock::Real { .. } => Ok(()),
            SchurBlock::Complex { beta, omega, rho } => {
                if !beta.is_finite() {
                    Err(Error::InvalidBlock(format!("non-finite beta {beta}")))
                } else if !(omega > 0.0 && omega.is_finite()) {
                    Err(Error::InvalidBlock(format!("omega must be positive, got {omega}")))
                } else if !(rho > 0.0 && rho <= 1.0) {
                    Err(Error::InvalidBlock(format!("rho must lie in (0, 1], got {rho}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// The block itself, `Λ_jj`.
    pub fn generator(&self) -> Matrix {
        match *self {
            SchurBlock::Real { beta } => Matrix::diag(&[beta]),
            SchurBlock::Complex { beta, omega, rho } => Matrix {
                rows: 2,
                cols: 2,
                data: vec![beta, -omega / rho, rho * omega, beta],
            },
        }
    }
}

/// Closed-form flow `exp(t Λ)` of a single Schur block.
///
/// For a complex block this is `e^{βt} D_ρ T_{tω} D_ρ⁻¹`.
pub fn block_flow(block: &SchurBlock, t: f64) -> Result<Matrix> {
    block.validate()?;
    Ok(match *block {
        SchurBlock::Real { beta } => Matrix::diag(&[(beta * t).exp()]),
        SchurBlock::Complex { beta, omega, rho } => {
            let g = (beta * t).exp();
            let (s, c) = (omega * t).sin_cos();
            Matrix {
                rows: 2,
                cols: 2,
                data: vec![g * c, -g * s / rho, g * rho * s, g * c],
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn orthonormality_defect(q: &Matrix) -> f64 {
        (&q.tr_matmul(q) - &Matrix::identity(q.cols())).max_abs()
    }

    fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        orthonormalize(&random_matrix(rng, n, n), 1e-12).unwrap()
    }

    #[test]
    fn qr_identity_and_scaling() {
        let (q, r) = qr_thin(&Matrix::identity(3), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(q, Matrix::identity(3));
        assert_eq!(r, Matrix::identity(3));

        let (q, r) = qr_thin(&Matrix::identity(2).scale(2.0), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(q, Matrix::identity(2));
        assert_eq!(r, Matrix::identity(2).scale(2.0));
    }

    #[test]
    fn qr_random_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 5, 2);
            let (q, r) = qr_thin(&m, DEFAULT_RANK_TOL).unwrap();
            assert!(orthonormality_defect(&q) <= 1e-12);
            assert!((&q.matmul(&r) - &m).max_abs() <= 1e-10 * m.frobenius_norm());
            assert!(r[(1, 0)] == 0.0 && r[(0, 0)] >= 0.0 && r[(1, 1)] >= 0.0);
        }
    }

    #[test]
    fn qr_rank_deficient() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert!(matches!(
            qr_thin(&m, DEFAULT_RANK_TOL),
            Err(Error::RankDeficient { column: 1, .. })
        ));
        assert!(matches!(
            qr_thin(&Matrix::zeros(3, 1), DEFAULT_RANK_TOL),
            Err(Error::RankDeficient { column: 0, .. })
        ));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            Matrix::from_vec(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn svd_small_cases() {
        let f = svd(&Matrix::diag(&[3.0, 1.0])).unwrap();
        assert_eq!(f.values, vec![3.0, 1.0]);

        let f = svd(&Matrix::zeros(2, 2)).unwrap();
        assert_eq!(f.values, vec![0.0, 0.0]);
        assert!(orthonormality_defect(&f.left) <= 1e-12);

        // MᵀM = diag(1, 4) by hand.
        let m = Matrix::from_rows(&[vec![0.0, -2.0], vec![1.0, 0.0]]).unwrap();
        let f = svd(&m).unwrap();
        assert!((f.values[0] - 2.0).abs() < 1e-15 && (f.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn svd_invariants_on_random_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let r = rng.random_range(1..=8);
            let c = rng.random_range(1..=8);
            let m = random_matrix(&mut rng, r, c);
            let f = svd(&m).unwrap();
            let scale = 1.0f64.max(f.largest());
            assert!((&f.reconstruct() - &m).max_abs() <= 1e-10 * scale);
            assert!(f.values.windows(2).all(|w| w[0] >= w[1]));
            assert!(orthonormality_defect(&f.left) <= 1e-12);
            assert!(orthonormality_defect(&f.right) <= 1e-12);
        }
    }

    #[test]
    fn svd_rank_deficient_completes_left_factor() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let f = svd(&m).unwrap();
        assert!((f.values[0] - 2.0).abs() < 1e-14);
        assert!(f.values[1].abs() < 1e-14);
        assert!(orthonormality_defect(&f.left) <= 1e-12);
    }

    #[test]
    fn svd_orthogonal_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let r = rng.random_range(1..=6);
            let c = rng.random_range(1..=6);
            let m = random_matrix(&mut rng, r, c);
            let u = random_orthogonal(&mut rng, r);
            let v = random_orthogonal(&mut rng, c);
            let a = svd(&m).unwrap().values;
            let b = svd(&u.matmul(&m).matmul(&v)).unwrap().values;
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn spectral_norm_examples() {
        assert_eq!(spectral_norm(&Matrix::identity(4)).unwrap(), 1.0);
        assert!((spectral_norm(&Matrix::diag(&[2.0, -5.0])).unwrap() - 5.0).abs() < 1e-15);
        let u = [0.6, 0.8, 0.0];
        let v = [0.0, 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let uv = Matrix::from_fn(3, 3, |i, j| u[i] * v[j]);
        assert!((spectral_norm(&uv).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn norm_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let r = rng.random_range(1..=8);
            let c = rng.random_range(1..=8);
            let m = random_matrix(&mut rng, r, c);
            let spec = spectral_norm(&m).unwrap();
            let fro = m.frobenius_norm();
            assert!(spec <= fro * (1.0 + 1e-12));
            assert!(fro <= (r.min(c) as f64).sqrt() * spec * (1.0 + 1e-12));
        }
    }

    #[test]
    fn inverse_and_singular() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let inv = inverse(&m).unwrap();
        assert!((&m.matmul(&inv) - &Matrix::identity(2)).max_abs() < 1e-14);
        let s = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(inverse(&s), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn block_flow_examples() {
        let quarter = SchurBlock::Complex {
            beta: 0.0,
            omega: PI / 2.0,
            rho: 1.0,
        };
        let f = block_flow(&quarter, 1.0).unwrap();
        let expected = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        assert!((&f - &expected).max_abs() < 1e-15);

        let ellipse = SchurBlock::Complex {
            beta: 0.0,
            omega: 1.0,
            rho: 1.0 / 3.0,
        };
        assert_eq!(block_flow(&ellipse, 0.0).unwrap(), Matrix::identity(2));
        let half = block_flow(&ellipse, PI).unwrap();
        assert!((&half + &Matrix::identity(2)).max_abs() < 1e-15);

        let real = SchurBlock::Real { beta: -0.5 };
        assert!((block_flow(&real, 2.0).unwrap()[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn block_flow_matches_conjugated_rotation() {
        let (omega, rho, t) = (1.3, 0.4, 0.77);
        let block = SchurBlock::Complex {
            beta: 0.0,
            omega,
            rho,
        };
        let d = ellipse_scaling(rho);
        let d_inv = ellipse_scaling(1.0 / rho);
        let expected = d.matmul(&rotation2(t * omega)).matmul(&d_inv);
        assert!((&block_flow(&block, t).unwrap() - &expected).max_abs() < 1e-15);
    }

    #[test]
    fn block_flow_group_and_period() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let block = SchurBlock::Complex {
                beta: rng.random_range(-0.5..0.5),
                omega: rng.random_range(0.1..3.0),
                rho: rng.random_range(0.05..=1.0),
            };
            let t = rng.random_range(-2.0..2.0);
            let s = rng.random_range(-2.0..2.0);
            let lhs = block_flow(&block, t + s).unwrap();
            let rhs = block_flow(&block, t).unwrap().matmul(&block_flow(&block, s).unwrap());
            let scale = lhs.max_abs().max(1.0);
            assert!((&lhs - &rhs).max_abs() <= 1e-12 * scale);
        }
        for &(omega, rho) in &[(1.0, 1.0 / 3.0), (2.5, 0.1), (0.7, 1.0)] {
            let block = SchurBlock::Complex {
                beta: 0.0,
                omega,
                rho,
            };
            let p = block_flow(&block, 2.0 * PI / omega).unwrap();
            assert!((&p - &Matrix::identity(2)).max_abs() <= 1e-12 / rho);
        }
    }

    #[test]
    fn invalid_blocks() {
        for block in [
            SchurBlock::Complex { beta: 0.0, omega: 1.0, rho: 0.0 },
            SchurBlock::Complex { beta: 0.0, omega: 1.0, rho: 1.5 },
            SchurBlock::Complex { beta: 0.0, omega: 0.0, rho: 0.5 },
            SchurBlock::Complex { beta: 0.0, omega: -1.0, rho: 0.5 },
        ] {
            assert!(matches!(block_flow(&block, 1.0), Err(Error::InvalidBlock(_))));
        }
    }
}
