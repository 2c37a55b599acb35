//! Pairwise rational-dependence detection by continued fractions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_QMAX: u64 = 10_000;
pub const DEFAULT_GATE_TOL: f64 = 1e-12;

/// `ω_j / ω_i ≈ p/q` in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalPair {
    pub i: usize,
    pub j: usize,
    pub p: u64,
    pub q: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "pairs", rename_all = "lowercase")]
pub enum Verdict {
    Independent,
    Rational(Vec<RationalPair>),
}

impl Verdict {
    pub fn is_independent(&self) -> bool {
        matches!(self, Verdict::Independent)
    }

    pub fn first(&self) -> Option<RationalPair> {
        match self {
            Verdict::Independent => None,
            Verdict::Rational(v) => v.first().copied(),
        }
    }
}

/// Best convergent `p/q` of `x > 0` with `q ≤ qmax` that lies within
/// `tol · max(1, x)` of `x`, if any.
pub fn rational_approximation(x: f64, qmax: u64, tol: f64) -> Option<(u64, u64)> {
    if !(x.is_finite() && x > 0.0) {
        return None;
    }
    let target = tol * x.max(1.0);
    // Convergent recurrences h_n = a_n h_{n−1} + h_{n−2}, same for k_n.
    let (mut h0, mut h1) = (0u128, 1u128);
    let (mut k0, mut k1) = (1u128, 0u128);
    let mut rem = x;
    for _ in 0..64 {
        let a = rem.floor();
        if a > 1e18 {
            break;
        }
        let a = a as u128;
        let h = a * h1 + h0;
        let k = a * k1 + k0;
        if k > qmax as u128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h, k1, k);
        if (x - h as f64 / k as f64).abs() <= target {
            return u64::try_from(h).ok().map(|h| (h, k as u64));
        }
        let frac = rem - rem.floor();
        if frac <= 0.0 {
            break;
        }
        rem = 1.0 / frac;
    }
    None
}

/// Checks every pair `i < j` of `omegas` for `ω_j/ω_i ≈ p/q` with
/// `p, q ≤ qmax`. The ratio is approximated in its orientation `≥ 1`, so
/// the verdict does not depend on the order of the frequencies.
pub fn rational_independence_gate(omegas: &[f64], qmax: u64, tol: f64) -> Result<Verdict> {
    if let Some(w) = omegas.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::InvalidInput(format!("frequencies must be positive, got {w}")));
    }
    if qmax == 0 || !(tol >= 0.0) {
        return Err(Error::InvalidInput("need qmax >= 1 and tol >= 0".into()));
    }
    let mut pairs = Vec::new();
    for i in 0..omegas.len() {
        for j in i + 1..omegas.len() {
            let (lo, hi) = if omegas[j] >= omegas[i] { (omegas[i], omegas[j]) } else { (omegas[j], omegas[i]) };
            let Some((h, k)) = rational_approximation(hi / lo, qmax, tol) else { continue };
            if h > qmax {
                continue;
            }
            let (p, q) = if omegas[j] >= omegas[i] { (h, k) } else { (k, h) };
            pairs.push(RationalPair { i, j, p, q });
        }
    }
    Ok(if pairs.is_empty() {
        Verdict::Independent
    } else {
        Verdict::Rational(pairs)
    })
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
