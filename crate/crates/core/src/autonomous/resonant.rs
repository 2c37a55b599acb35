//! Resonant 4D case `ω₂ = (p/q) ω₁`:
//! `ϑ₂ = sup_t L(t)` with
//! `L(t) = (2πq)^{−1} ∫₀^{2π} Σ_{j=1}^{q} max(E₁(t+τ), E₂(κ(τ + 2π(j−1)))) dτ`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gate::gcd;
use super::quad::speed;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonantConfig {
    /// Uniform `t` samples on `[0, 2π)`.
    pub t_points: usize,
    /// Density factor of the local pass around the coarse argmax.
    pub refine: usize,
    /// Midpoint nodes in `τ`.
    pub tau_nodes: usize,
}

impl Default for ResonantConfig {
    fn default() -> Self {
        ResonantConfig {
            t_points: 720,
            refine: 4,
            tau_nodes: 2048,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonantValue {
    pub value: f64,
    pub t_argmax: f64,
    /// `|L_M(t*) − L_{M/2}(t*)| / 3`.
    pub err_estimate: f64,
    /// `(t, L(t))` sorted by `t`, coarse and refined points together.
    pub samples: Vec<(f64, f64)>,
}

/// Precomputed `τ`-nodes: for each node the sorted second-block speeds
/// and their prefix sums, so `Σ_j max(a, b_j)` is a binary search.
struct Nodes {
    taus: Vec<f64>,
    sorted: Vec<Vec<f64>>,
    prefix: Vec<Vec<f64>>,
    omega1: f64,
    rho1: f64,
    q: f64,
}

impl Nodes {
    fn new(omega1: f64, p: u64, q: u64, rho1: f64, rho2: f64, m: usize) -> Self {
        let kappa = p as f64 / q as f64;
        let omega2 = kappa * omega1;
        let taus: Vec<f64> = (0..m).map(|i| TAU * (i as f64 + 0.5) / m as f64).collect();
        let mut sorted = Vec::with_capacity(m);
        let mut prefix = Vec::with_capacity(m);
        for &tau in &taus {
            let mut b: Vec<f64> = (0..q)
                .map(|j| speed(kappa * (tau + TAU * j as f64), omega2, rho2))
                .collect();
            b.sort_by(f64::total_cmp);
            let mut pre = Vec::with_capacity(b.len() + 1);
            pre.push(0.0);
            for &x in &b {
                pre.push(pre.last().unwrap() + x);
            }
            sorted.push(b);
            prefix.push(pre);
        }
        Nodes {
            taus,
            sorted,
            prefix,
            omega1,
            rho1,
            q: q as f64,
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &tau) in self.taus.iter().enumerate() {
            let a = speed(t + tau, self.omega1, self.rho1);
            let b = &self.sorted[i];
            let pre = &self.prefix[i];
            let below = b.partition_point(|&x| x < a);
            acc += a * below as f64 + (pre[b.len()] - pre[below]);
        }
        acc / (self.taus.len() as f64 * self.q)
    }
}

fn validate(omega1: f64, p: u64, q: u64, rho1: f64, rho2: f64, cfg: &ResonantConfig) -> Result<()> {
    if p == 0 || q == 0 {
        return Err(Error::InvalidInput(format!("need p, q >= 1, got {p}/{q}")));
    }
    if gcd(p, q) != 1 {
        return Err(Error::NotCoprime { p, q });
    }
    if !(omega1.is_finite() && omega1 > 0.0) {
        return Err(Error::InvalidInput(format!("omega1 must be positive, got {omega1}")));
    }
    for rho in [rho1, rho2] {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidInput(format!("rho must lie in (0, 1], got {rho}")));
        }
    }
    if cfg.t_points == 0 || cfg.tau_nodes < 2 {
        return Err(Error::InvalidInput("need t_points >= 1 and tau_nodes >= 2".into()));
    }
    Ok(())
}

/// `L` at the given times.
pub fn resonant_line(
    omega1: f64,
    p: u64,
    q: u64,
    rho1: f64,
    rho2: f64,
    times: &[f64],
    tau_nodes: usize,
) -> Result<Vec<f64>> {
    let cfg = ResonantConfig {
        tau_nodes,
        ..ResonantConfig::default()
    };
    validate(omega1, p, q, rho1, rho2, &cfg)?;
    let nodes = Nodes::new(omega1, p, q, rho1, rho2, tau_nodes);
    Ok(times.par_iter().map(|&t| nodes.eval(t)).collect())
}

fn argmax(values: &[(f64, f64)]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.1 > values[best].1 {
            best = i;
        }
    }
    best
}

/// `sup_t L(t)` for `κ = p/q` in lowest terms.
pub fn angular_value_resonant_4d(
    omega1: f64,
    p: u64,
    q: u64,
    rho1: f64,
    rho2: f64,
    cfg: &ResonantConfig,
) -> Result<ResonantValue> {
    validate(omega1, p, q, rho1, rho2, cfg)?;
    let nodes = Nodes::new(omega1, p, q, rho1, rho2, cfg.tau_nodes);
    let n = cfg.t_points;
    let dt = TAU / n as f64;
    let mut samples: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = i as f64 * dt;
            (t, nodes.eval(t))
        })
        .collect();
    let coarse = samples[argmax(&samples)].0;
    let r = cfg.refine.max(1);
    if r > 1 {
        let extra: Vec<(f64, f64)> = (-(r as i64)..=r as i64)
            .filter(|k| k % r as i64 != 0)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|k| {
                let t = (coarse + k as f64 * dt / r as f64).rem_euclid(TAU);
                (t, nodes.eval(t))
            })
            .collect();
        samples.extend(extra);
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let best = argmax(&samples);
    let (t_argmax, value) = samples[best];
    let half = Nodes::new(omega1, p, q, rho1, rho2, cfg.tau_nodes / 2).eval(t_argmax);
    Ok(ResonantValue {
        value,
        t_argmax,
        err_estimate: (value - half).abs() / 3.0,
        samples,
    })
}

/// `L` is π-periodic in `t` since `E₁` is.
pub const L_PERIOD: f64 = PI;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circular_blocks_give_constant_line() {
        let r = angular_value_resonant_4d(1.0, 2, 3, 1.0, 1.0, &ResonantConfig::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(r.samples.iter().all(|s| (s.1 - 1.0).abs() < 1e-12));
    }

    #[test]
    fn equal_frequencies_bound() {
        for rho in [0.2, 0.5, 0.9] {
            let r = angular_value_resonant_4d(1.3, 1, 1, rho, rho, &ResonantConfig::default()).unwrap();
            assert!(r.value >= 1.3 - 1e-10);
        }
    }

    #[test]
    fn line_is_pi_periodic_and_bounded_below() {
        let ts = [0.1, 0.1 + L_PERIOD, 1.7, 1.7 + L_PERIOD];
        let l = resonant_line(1.0, 2, 5, 1.0 / 3.0, 0.25, &ts, 1024).unwrap();
        assert!((l[0] - l[1]).abs() < 1e-10 && (l[2] - l[3]).abs() < 1e-10);
        assert!(l.iter().all(|&v| v >= 1.0 - 1e-8));
    }

    #[test]
    fn errors() {
        let cfg = ResonantConfig::default();
        assert!(matches!(
            angular_value_resonant_4d(1.0, 2, 4, 0.5, 0.5, &cfg),
            Err(Error::NotCoprime { p: 2, q: 4 })
        ));
        assert!(matches!(
            angular_value_resonant_4d(1.0, 0, 1, 0.5, 0.5, &cfg),
            Err(Error::InvalidInput(_))
        ));
    }
}
