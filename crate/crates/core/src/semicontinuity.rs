//! Orbit averages over circle rotations, their suprema, the first angular
//! value of the planar elliptic rotation and the `(κ, ρ₂)` sweep of the 4D
//! model with its resonant and non-resonant cells.
//!
//! The circle is parametrized by an angle `x ∈ [0, 2π)` and `T_φ x = x + φ`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autonomous::gate::{gcd, rational_approximation};
use crate::autonomous::{
    angular_value_irrational, angular_value_resonant_4d, QuadConfig, ResonantConfig, SchurSpec,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TagKind {
    Rational { p: u64, q: u64 },
    Irrational,
}

/// Rationality of a rotation number `ratio = φ/(2π)` (or `κ`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalTag {
    pub kind: TagKind,
    pub ratio: f64,
}

impl RationalTag {
    /// `p/q` in lowest terms, `q ≥ 1`.
    pub fn rational(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidInput("q must be at least 1".into()));
        }
        if gcd(p, q) != 1 {
            return Err(Error::NotCoprime { p, q });
        }
        Ok(RationalTag {
            kind: TagKind::Rational { p, q },
            ratio: p as f64 / q as f64,
        })
    }

    pub fn irrational(ratio: f64) -> Self {
        RationalTag {
            kind: TagKind::Irrational,
            ratio,
        }
    }

    /// Rational if a convergent with denominator at most `qmax` is within
    /// `tol` of `ratio`. `0` maps to `0/1`.
    pub fn detect(ratio: f64, qmax: u64, tol: f64) -> Self {
        if ratio.abs() <= tol {
            return RationalTag {
                kind: TagKind::Rational { p: 0, q: 1 },
                ratio,
            };
        }
        match rational_approximation(ratio, qmax, tol) {
            Some((p, q)) => RationalTag {
                kind: TagKind::Rational { p, q },
                ratio,
            },
            None => RationalTag::irrational(ratio),
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self.kind, TagKind::Rational { .. })
    }

    pub fn pq(&self) -> Option<(u64, u64)> {
        match self.kind {
            TagKind::Rational { p, q } => Some((p, q)),
            TagKind::Irrational => None,
        }
    }
}

/// `f_∞(x, φ)`: the circle mean of `f(·, φ)` by the `grid`-point
/// trapezoid rule for an irrational tag, and the orbit mean
/// `(1/q) Σ_{j<q} f(x + jφ, φ)` for `p/q`. Parameters (`λ`) are captured
/// by the closure.
pub fn f_infinity(f: &(dyn Fn(f64, f64) -> f64 + Sync), x: f64, phi: f64, tag: &RationalTag, grid: usize) -> Result<f64> {
    match tag.kind {
        TagKind::Rational { q, .. } => {
            Ok((0..q).map(|j| f(x + j as f64 * phi, phi)).sum::<f64>() / q as f64)
        }
        TagKind::Irrational => {
            if grid == 0 {
                return Err(Error::InvalidInput("grid must be positive".into()));
            }
            let sum: f64 = (0..grid)
                .into_par_iter()
                .map(|i| f(TAU * i as f64 / grid as f64, phi))
                .sum();
            Ok(sum / grid as f64)
        }
    }
}

/// Supremum of `f_∞(·, φ)` with its maximizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaInfinity {
    pub value: f64,
    pub x_argmax: f64,
}

/// Grid sizes for [`theta_infinity`]: `grid` points on the circle, then
/// `refine × ` denser points across the two cells around the best one.
/// `mean_grid` is the trapezoid size for irrational tags.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorusGrid {
    pub grid: usize,
    pub refine: usize,
    pub mean_grid: usize,
}

impl Default for TorusGrid {
    fn default() -> Self {
        TorusGrid {
            grid: 4096,
            refine: 8,
            mean_grid: 4096,
        }
    }
}

/// `θ_∞(φ) = sup_x f_∞(x, φ)`. For an irrational tag `f_∞` does not depend
/// on `x` and is returned directly.
pub fn theta_infinity(
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    phi: f64,
    tag: &RationalTag,
    grid: &TorusGrid,
) -> Result<ThetaInfinity> {
    if !tag.is_rational() {
        return Ok(ThetaInfinity {
            value: f_infinity(f, 0.0, phi, tag, grid.mean_grid)?,
            x_argmax: 0.0,
        });
    }
    if grid.grid == 0 {
        return Err(Error::InvalidInput("grid must be positive".into()));
    }
    let dx = TAU / grid.grid as f64;
    let coarse = (0..grid.grid)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 * dx;
            f_infinity(f, x, phi, tag, 0).map(|v| (x, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = coarse[0];
    for &c in &coarse {
        if c.1 > best.1 {
            best = c;
        }
    }
    let r = grid.refine.max(1) as i64;
    for k in -r..=r {
        let x = (best.0 + k as f64 * dx / r as f64).rem_euclid(TAU);
        let v = f_infinity(f, x, phi, tag, 0)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(ThetaInfinity {
        value: best.1,
        x_argmax: best.0,
    })
}

/// Angle between the lines spanned by two nonzero planar vectors.
pub(crate) fn line_angle(a: [f64; 2], b: [f64; 2]) -> f64 {
    let cross = (a[0] * b[1] - a[1] * b[0]).abs();
    let dot = (a[0] * b[0] + a[1] * b[1]).abs();
    cross.atan2(dot)
}

/// `f(x, φ) = ∠(D_ρ u(x), D_ρ u(x + φ))` with `u(x) = (cos x, sin x)`,
/// `D_ρ = diag(1, ρ)`.
pub fn discrete2d_observable(rho: f64) -> impl Fn(f64, f64) -> f64 + Sync {
    move |x: f64, phi: f64| {
        let a = [x.cos(), rho * x.sin()];
        let b = [(x + phi).cos(), rho * (x + phi).sin()];
        line_angle(a, b)
    }
}

/// First angular value of `u_{n+1} = D_ρ T_φ D_ρ^{-1} u_n`, with `tag`
/// describing `φ/(2π)`.
pub fn discrete2d_theta1(phi: f64, rho: f64, tag: &RationalTag, grid: &TorusGrid) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidInput(format!("rho must lie in (0, 1], got {rho}")));
    }
    if !(0.0..=TAU).contains(&phi) {
        return Err(Error::InvalidInput(format!("phi must lie in [0, 2π], got {phi}")));
    }
    let f = discrete2d_observable(rho);
    Ok(theta_infinity(&f, phi, tag, grid)?.value)
}

/// One `(κ, ρ₂)` cell of the sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub kappa: f64,
    pub rho2: f64,
    pub tag: RationalTag,
    pub value: f64,
    pub t_argmax: Option<f64>,
    pub err_estimate: f64,
    /// `(t, L(t))` samples for resonant cells when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<Vec<(f64, f64)>>,
    /// Set when the cell computation failed; `value` is then NaN.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub omega1: f64,
    pub rho1: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    /// Spacing of the uniform part of the `κ` grid.
    pub kappa_step: f64,
    /// Every reduced `p/q` in range with `q ≤ qmax` is on the grid.
    pub qmax: u64,
    /// Extra `κ` values, e.g. `1/√2`.
    pub anchors: Vec<f64>,
    pub rho2: Vec<f64>,
    pub quad: QuadConfig,
    pub resonant: ResonantConfig,
    pub keep_lines: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            omega1: 1.0,
            rho1: 1.0 / 3.0,
            kappa_min: 0.05,
            kappa_max: 1.0,
            kappa_step: 0.005,
            qmax: 20,
            anchors: vec![std::f64::consts::FRAC_1_SQRT_2],
            rho2: (1..=10).map(|i| i as f64 / 10.0).collect(),
            quad: QuadConfig::default(),
            resonant: ResonantConfig::default(),
            keep_lines: false,
        }
    }
}

/// Merge radius between a grid point and a rational.
const MERGE_TOL: f64 = 1e-9;

/// Sorted `κ` grid with tags: exact rationals `p/q ≤ qmax` first, then
/// uniform points and anchors not within [`MERGE_TOL`] of one.
pub fn kappa_grid(cfg: &SweepConfig) -> Result<Vec<RationalTag>> {
    if !(cfg.kappa_min > 0.0 && cfg.kappa_min <= cfg.kappa_max && cfg.kappa_step > 0.0) {
        return Err(Error::InvalidInput("need 0 < kappa_min <= kappa_max and kappa_step > 0".into()));
    }
    let mut tags: Vec<RationalTag> = Vec::new();
    for q in 1..=cfg.qmax {
        for p in 1..=q {
            let k = p as f64 / q as f64;
            if gcd(p, q) == 1 && k >= cfg.kappa_min - MERGE_TOL && k <= cfg.kappa_max + MERGE_TOL {
                tags.push(RationalTag::rational(p, q)?);
            }
        }
    }
    let n = ((cfg.kappa_max - cfg.kappa_min) / cfg.kappa_step + 1e-9).floor() as usize;
    let uniform = (0..=n).map(|i| cfg.kappa_min + i as f64 * cfg.kappa_step);
    for k in uniform.chain(cfg.anchors.iter().copied()) {
        if k < cfg.kappa_min - MERGE_TOL || k > cfg.kappa_max + MERGE_TOL {
            continue;
        }
        if tags.iter().all(|t| (t.ratio - k).abs() > MERGE_TOL) {
            tags.push(RationalTag::irrational(k));
        }
    }
    tags.sort_by(|a, b| a.ratio.total_cmp(&b.ratio));
    Ok(tags)
}

fn sweep_cell(cfg: &SweepConfig, tag: RationalTag, rho2: f64) -> Result<SweepCell> {
    let kappa = tag.ratio;
    match tag.kind {
        TagKind::Rational { p, q } => {
            let r = angular_value_resonant_4d(cfg.omega1, p, q, cfg.rho1, rho2, &cfg.resonant)?;
            Ok(SweepCell {
                kappa,
                rho2,
                tag,
                value: r.value,
                t_argmax: Some(r.t_argmax),
                err_estimate: r.err_estimate,
                line: cfg.keep_lines.then_some(r.samples),
                diagnostic: None,
            })
        }
        TagKind::Irrational => {
            let spec = SchurSpec::a4_model([cfg.omega1, kappa * cfg.omega1], [cfg.rho1, rho2])?;
            let quad = cfg.quad.clone().overridden();
            let r = angular_value_irrational(2, &spec, &quad)?;
            Ok(SweepCell {
                kappa,
                rho2,
                tag,
                value: r.value,
                t_argmax: None,
                err_estimate: r.err_estimate,
                line: None,
                diagnostic: None,
            })
        }
    }
}

/// All cells, ordered by `(κ, ρ₂)`. Failures become per-cell diagnostics.
pub fn hairy_sweep(cfg: &SweepConfig) -> Result<Vec<SweepCell>> {
    let mut rho2 = cfg.rho2.clone();
    rho2.sort_by(f64::total_cmp);
    let kappas = kappa_grid(cfg)?;
    let jobs: Vec<(RationalTag, f64)> = kappas
        .iter()
        .flat_map(|&t| rho2.iter().map(move |&r| (t, r)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(tag, r)| {
            sweep_cell(cfg, tag, r).unwrap_or_else(|e| SweepCell {
                kappa: tag.ratio,
                rho2: r,
                tag,
                value: f64::NAN,
                t_argmax: None,
                err_estimate: f64::NAN,
                line: None,
                diagnostic: Some(e.to_string()),
            })
        })
        .collect())
}

/// Nearest irrational cells on each side of `idx` sharing its `ρ₂`,
/// `count` in total, closest first.
pub fn irrational_neighbors(cells: &[SweepCell], idx: usize, count: usize) -> Vec<&SweepCell> {
    let me = &cells[idx];
    let mut others: Vec<&SweepCell> = cells
        .iter()
        .filter(|c| c.rho2 == me.rho2 && !c.tag.is_rational())
        .collect();
    others.sort_by(|a, b| (a.kappa - me.kappa).abs().total_cmp(&(b.kappa - me.kappa).abs()));
    others.truncate(count);
    others
}

/// `θ_1(φ, ρ) ∈ [0, π/2]` for `ρ = 1` and `φ ∈ [0, π]` equals `min(φ, π − φ)`.
pub fn rotation_line_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(PI);
    r.min(PI - r)
}
