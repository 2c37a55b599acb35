//! Torus quadrature of `max_{j∈J} E_j(τ_j)` over `[0, π]^{|J|}`.
//!
//! The tensor midpoint rule is evaluated exactly without enumerating the
//! grid: the empirical distribution of the maximum over the grid is the
//! product of the per-axis empirical CDFs, so one merged sweep over sorted
//! node values gives the grid mean in `O(|J| n log n)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gate::{rational_independence_gate, Verdict, DEFAULT_GATE_TOL, DEFAULT_QMAX};
use super::{admissible_sets_with, AdmissibleFilter, SchurSpec};
use crate::error::{Error, Result};
use crate::linalg::SchurBlock;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    /// Midpoint nodes per axis; the error estimate also uses half of it.
    pub points_per_axis: usize,
    pub gate_qmax: u64,
    pub gate_tol: f64,
    /// Evaluate even when the gate reports a rational relation.
    pub override_gate: bool,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            points_per_axis: 2048,
            gate_qmax: DEFAULT_QMAX,
            gate_tol: DEFAULT_GATE_TOL,
            override_gate: false,
        }
    }
}

impl QuadConfig {
    pub fn overridden(mut self) -> Self {
        self.override_gate = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrrationalValue {
    pub value: f64,
    /// `|Q_n − Q_{n/2}| / 3` for the maximizing set.
    pub err_estimate: f64,
    /// Maximizing admissible set (empty when the value is 0).
    pub best_set: Vec<usize>,
    /// Every maximal admissible set with its integral.
    pub sets: Vec<(Vec<usize>, f64)>,
    pub verdict: Verdict,
}

/// `E(τ) = ρω / (cos²τ + ρ² sin²τ)`, the angular speed of the elliptic
/// rotation block in the phase variable `τ`.
pub fn ellipse_speed(tau: f64, block: &SchurBlock) -> Result<f64> {
    match *block {
        SchurBlock::Complex { omega, rho, .. } => Ok(speed(tau, omega, rho)),
        SchurBlock::Real { .. } => Err(Error::InvalidBlock(
            "ellipse speed needs a complex block".into(),
        )),
    }
}

#[inline]
pub(crate) fn speed(tau: f64, omega: f64, rho: f64) -> f64 {
    let (s, c) = tau.sin_cos();
    rho * omega / (c * c + rho * rho * s * s)
}

/// Mean of `max_j a_j[i_j]` over all index tuples, one slice per axis.
pub fn tensor_max_mean(axes: &[Vec<f64>]) -> f64 {
    if axes.is_empty() || axes.iter().any(Vec::is_empty) {
        return 0.0;
    }
    let mut merged: Vec<(f64, usize)> = axes
        .iter()
        .enumerate()
        .flat_map(|(a, v)| v.iter().map(move |&x| (x, a)))
        .collect();
    merged.sort_by(|x, y| x.0.total_cmp(&y.0));
    let lens: Vec<f64> = axes.iter().map(|v| v.len() as f64).collect();
    let mut counts = vec![0usize; axes.len()];
    let mut prev = 0.0;
    let mut acc = 0.0;
    for &(x, a) in &merged {
        counts[a] += 1;
        let cdf: f64 = counts.iter().zip(&lens).map(|(&c, &n)| c as f64 / n).product();
        acc += x * (cdf - prev);
        prev = cdf;
    }
    acc
}

fn axis_values(spec: &SchurSpec, j: usize, n: usize) -> Result<Vec<f64>> {
    let blk = &spec.blocks()[j];
    (0..n)
        .map(|i| ellipse_speed(PI * (i as f64 + 0.5) / n as f64, blk))
        .collect()
}

/// `π^{−|J|} ∫ max_{j∈J} E_j` with `n` midpoint nodes per axis.
pub fn set_integral(spec: &SchurSpec, set: &[usize], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one quadrature node".into()));
    }
    let axes = set
        .iter()
        .map(|&j| {
            if j >= spec.num_blocks() {
                return Err(Error::InvalidInput(format!("block index {j} out of range")));
            }
            axis_values(spec, j, n)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(tensor_max_mean(&axes))
}

/// Value and Richardson-style error estimate for one set.
fn set_integral_with_error(spec: &SchurSpec, set: &[usize], n: usize) -> Result<(f64, f64)> {
    let fine = set_integral(spec, set, n)?;
    let coarse = set_integral(spec, set, (n / 2).max(1))?;
    Ok((fine, (fine - coarse).abs() / 3.0))
}

/// Closed-form outer angular value for rationally independent frequencies:
/// the maximum over maximal admissible sets of the torus integral.
pub fn angular_value_irrational(s: usize, spec: &SchurSpec, quad: &QuadConfig) -> Result<IrrationalValue> {
    spec.require_isolated_real_parts()?;
    let sets = admissible_sets_with(s, spec, AdmissibleFilter::Maximal)?;
    let mut verdict = Verdict::Independent;
    let mut pairs = Vec::new();
    for set in &sets {
        let omegas: Vec<f64> = set.iter().map(|&j| spec.omega(j).unwrap()).collect();
        if let Verdict::Rational(found) = rational_independence_gate(&omegas, quad.gate_qmax, quad.gate_tol)? {
            for mut pr in found {
                pr.i = set[pr.i];
                pr.j = set[pr.j];
                if !pairs.contains(&pr) {
                    pairs.push(pr);
                }
            }
        }
    }
    if !pairs.is_empty() {
        if !quad.override_gate {
            let pr = pairs[0];
            return Err(Error::RationalityDetected {
                i: pr.i,
                j: pr.j,
                p: pr.p,
                q: pr.q,
            });
        }
        verdict = Verdict::Rational(pairs);
    }
    let values = sets
        .par_iter()
        .map(|set| set_integral_with_error(spec, set, quad.points_per_axis))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if best.is_none_or(|b| v.0 > values[b].0) {
            best = Some(i);
        }
    }
    let (value, err_estimate, best_set) = match best {
        Some(b) => (values[b].0, values[b].1, sets[b].clone()),
        None => (0.0, 0.0, Vec::new()),
    };
    Ok(IrrationalValue {
        value,
        err_estimate,
        best_set,
        sets: sets.into_iter().zip(values.into_iter().map(|v| v.0)).collect(),
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn cplx(beta: f64, omega: f64, rho: f64) -> SchurBlock {
        SchurBlock::Complex { beta, omega, rho }
    }

    #[test]
    fn ellipse_speed_values() {
        let b = cplx(0.0, 2.0, 0.25);
        assert_eq!(ellipse_speed(0.0, &b).unwrap(), 0.5);
        assert!((ellipse_speed(PI / 2.0, &b).unwrap() - 8.0).abs() < 1e-12);
        assert!((ellipse_speed(0.7, &cplx(0.0, 3.0, 1.0)).unwrap() - 3.0).abs() < 1e-15);
        assert!((ellipse_speed(0.3, &b).unwrap() - ellipse_speed(0.3 + PI, &b).unwrap()).abs() < 1e-12);
        assert!(ellipse_speed(0.0, &SchurBlock::Real { beta: 0.0 }).is_err());
    }

    #[test]
    fn single_axis_mean_is_omega() {
        for &(omega, rho) in &[(1.0, 0.1), (0.7, 0.5), (2.0, 1.0), (1.3, 0.05)] {
            let spec = SchurSpec::model2d(omega, rho).unwrap();
            let v = set_integral(&spec, &[0], 2048).unwrap();
            assert!((v - omega).abs() < 1e-8, "{omega} {rho}: {v}");
        }
    }

    #[test]
    fn tensor_mean_matches_bruteforce() {
        let axes: Vec<Vec<f64>> = vec![vec![0.3, 1.0, 0.2], vec![0.5, 0.1], vec![0.9, 0.4]];
        let mut sum = 0.0;
        for a in &axes[0] {
            for b in &axes[1] {
                for c in &axes[2] {
                    sum += a.max(*b).max(*c);
                }
            }
        }
        assert!((tensor_max_mean(&axes) - sum / 12.0).abs() < 1e-15);
    }

    #[test]
    fn headline_value() {
        let spec = SchurSpec::a4_model([1.0, FRAC_1_SQRT_2], [1.0 / 3.0, 0.25]).unwrap();
        let r = angular_value_irrational(2, &spec, &QuadConfig::default()).unwrap();
        assert!((r.value - 1.2693394).abs() < 1e-5, "{}", r.value);
        assert!(r.err_estimate < 1e-5);
        assert_eq!(r.best_set, vec![0, 1]);
    }

    #[test]
    fn all_real_is_zero() {
        let spec = SchurSpec::new(vec![SchurBlock::Real { beta: 1.0 }, SchurBlock::Real { beta: 0.0 }]).unwrap();
        assert_eq!(angular_value_irrational(1, &spec, &QuadConfig::default()).unwrap().value, 0.0);
    }

    #[test]
    fn single_set_gives_max_omega() {
        let spec = SchurSpec::a4_model([1.0, FRAC_1_SQRT_2], [1.0 / 3.0, 0.25]).unwrap();
        let r = angular_value_irrational(1, &spec, &QuadConfig::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gate_blocks_rational_frequencies() {
        let spec = SchurSpec::a4_model([1.0, 0.5], [1.0 / 3.0, 0.25]).unwrap();
        let err = angular_value_irrational(2, &spec, &QuadConfig::default()).unwrap_err();
        // Sorted coordinates: block 0 carries ω = 0.5, block 1 carries ω = 1.
        assert!(matches!(err, Error::RationalityDetected { i: 0, j: 1, p: 2, q: 1 }), "{err:?}");
        let r = angular_value_irrational(2, &spec, &QuadConfig::default().overridden()).unwrap();
        assert!(!r.verdict.is_independent());
        assert!(r.value > 1.0);
    }

    #[test]
    fn repeated_complex_real_part_rejected() {
        let spec = SchurSpec::new(vec![cplx(1.0, 1.0, 0.5), cplx(1.0, 2.0, 0.5)]).unwrap();
        assert!(matches!(
            angular_value_irrational(2, &spec, &QuadConfig::default()),
            Err(Error::InvalidSpec(_))
        ));
    }
}
