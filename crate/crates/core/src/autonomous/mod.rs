//! Closed-form angular values for autonomous systems `u̇ = Au` given in
//! block-diagonal real Schur form.
//!
//! A [`SchurSpec`] lists the diagonal blocks, real parts descending. From it
//! we derive the admissible index sets (which complex blocks can carry a
//! single pivot column of an `s`-dimensional subspace), evaluate the torus
//! integral of `max_j E_j`, and handle the resonant two-frequency case.

pub mod echelon;
pub mod gate;
pub mod quad;
pub mod resonant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::continuous::{estimate_all_variants_ct_with, ContinuousSystem};
use crate::error::{Error, Result};
use crate::linalg::{block_flow, Matrix, SchurBlock};
use crate::search::{AngularValueReport, SubspaceSearchConfig};

pub use echelon::{
    admissible_sets, admissible_sets_with, column_echelon, echelon_candidates, echelon_choices,
    realizable_sets, w_infinity, AdmissibleFilter, EchelonStructure,
};
pub use gate::{rational_independence_gate, RationalPair, Verdict};
pub use quad::{angular_value_irrational, ellipse_speed, IrrationalValue, QuadConfig};
pub use resonant::{angular_value_resonant_4d, ResonantConfig, ResonantValue};

/// Block-diagonal real Schur form `diag(Λ₁₁, …, Λ_kk)` with `β₁ ≥ … ≥ β_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct SchurSpec {
    blocks: Vec<SchurBlock>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    blocks: Vec<SchurBlock>,
    /// Sort blocks by descending real part instead of rejecting the order.
    #[serde(default, skip_serializing)]
    sort: bool,
}

impl TryFrom<RawSpec> for SchurSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        if raw.sort {
            SchurSpec::sorted(raw.blocks).map(|(spec, _)| spec)
        } else {
            SchurSpec::new(raw.blocks)
        }
    }
}

impl From<SchurSpec> for RawSpec {
    fn from(spec: SchurSpec) -> Self {
        RawSpec {
            blocks: spec.blocks,
            sort: false,
        }
    }
}

impl SchurSpec {
    /// Validates each block and the descending order of real parts.
    pub fn new(blocks: Vec<SchurBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidSpec("no blocks".into()));
        }
        for b in &blocks {
            b.validate()?;
        }
        if let Some(i) = (1..blocks.len()).find(|&i| blocks[i].beta() > blocks[i - 1].beta()) {
            return Err(Error::InvalidSpec(format!(
                "real parts must be descending: beta[{}] = {} > beta[{}] = {}",
                i,
                blocks[i].beta(),
                i - 1,
                blocks[i - 1].beta()
            )));
        }
        Ok(SchurSpec { blocks })
    }

    /// Stable sort by descending real part. This is a permutation similarity,
    /// so angular values are unchanged. The second component maps new block
    /// positions to the original ones.
    pub fn sorted(blocks: Vec<SchurBlock>) -> Result<(Self, Vec<usize>)> {
        let mut order: Vec<usize> = (0..blocks.len()).collect();
        order.sort_by(|&a, &b| blocks[b].beta().total_cmp(&blocks[a].beta()));
        let sorted = order.iter().map(|&i| blocks[i]).collect();
        Ok((SchurSpec::new(sorted)?, order))
    }

    /// The 4×4 model `diag(Λ₁, Λ₂)` with `Λ_j` of real part `j − 1`,
    /// frequency `ω_j` and ellipse parameter `ρ_j`, stored with the `β = 1`
    /// block first.
    pub fn a4_model(omega: [f64; 2], rho: [f64; 2]) -> Result<Self> {
        let blocks = vec![
            SchurBlock::Complex {
                beta: 0.0,
                omega: omega[0],
                rho: rho[0],
            },
            SchurBlock::Complex {
                beta: 1.0,
                omega: omega[1],
                rho: rho[1],
            },
        ];
        SchurSpec::sorted(blocks).map(|(spec, _)| spec)
    }

    /// A single elliptic rotation block in `ℝ²`.
    pub fn model2d(omega: f64, rho: f64) -> Result<Self> {
        SchurSpec::new(vec![SchurBlock::Complex {
            beta: 0.0,
            omega,
            rho,
        }])
    }

    pub fn blocks(&self) -> &[SchurBlock] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(SchurBlock::dim).sum()
    }

    /// First row of each block.
    pub fn offsets(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, b| {
                let o = *acc;
                *acc += b.dim();
                Some(o)
            })
            .collect()
    }

    /// Indices of the 2×2 blocks, `J_ℂ`.
    pub fn complex_indices(&self) -> Vec<usize> {
        (0..self.blocks.len())
            .filter(|&i| self.blocks[i].is_complex())
            .collect()
    }

    pub fn omega(&self, block: usize) -> Option<f64> {
        match self.blocks.get(block) {
            Some(SchurBlock::Complex { omega, .. }) => Some(*omega),
            _ => None,
        }
    }

    pub fn max_omega(&self) -> Option<f64> {
        self.complex_indices()
            .into_iter()
            .filter_map(|j| self.omega(j))
            .reduce(f64::max)
    }

    /// Real parts of complex blocks differ from all other real parts.
    pub fn has_isolated_real_parts(&self) -> bool {
        self.complex_indices().into_iter().all(|j| {
            let b = self.blocks[j].beta();
            self.blocks
                .iter()
                .enumerate()
                .all(|(nu, other)| nu == j || other.beta() != b)
        })
    }

    pub(crate) fn require_isolated_real_parts(&self) -> Result<()> {
        if self.has_isolated_real_parts() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(
                "complex blocks must have real parts distinct from all other blocks".into(),
            ))
        }
    }

    /// The block-diagonal matrix `A`.
    pub fn generator(&self) -> Matrix {
        Matrix::block_diag(&self.blocks.iter().map(SchurBlock::generator).collect::<Vec<_>>())
    }

    /// `e^{tA}` from the block flows.
    pub fn flow(&self, t: f64) -> Result<Matrix> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| block_flow(b, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Matrix::block_diag(&blocks))
    }

    pub fn system(&self) -> ContinuousSystem {
        let sys = ContinuousSystem::constant(self.generator()).expect("finite generator");
        match self.max_omega() {
            Some(w) => sys.with_frequency_scale(w),
            None => sys,
        }
    }
}

/// `ϑ_s = ϑ_{d−s}`: same admissible sets and the same closed-form value.
pub fn symmetry_check(s: usize, spec: &SchurSpec, quad: &QuadConfig) -> Result<bool> {
    let d = spec.dim();
    if s == 0 || s >= d {
        return Err(Error::InvalidInput(format!("need 1 <= s < d = {d}, got {s}")));
    }
    let sets_match = admissible_sets(s, spec)? == admissible_sets(d - s, spec)?;
    let a = angular_value_irrational(s, spec, quad)?;
    let b = angular_value_irrational(d - s, spec, quad)?;
    let tol = 1e-12 + a.err_estimate + b.err_estimate;
    Ok(sets_match && (a.value - b.value).abs() <= tol)
}

/// Time-average estimate of `ϑ_s` for the spec via the continuous
/// estimator, with `per_set` echelon-structured candidates for each
/// admissible index set added to the search pool.
pub fn time_average_estimate(
    spec: &SchurSpec,
    s: usize,
    t_end: f64,
    h: Option<f64>,
    cfg: &SubspaceSearchConfig,
    per_set: usize,
) -> Result<Vec<AngularValueReport>> {
    let sys = spec.system();
    let h = h.unwrap_or_else(|| sys.default_step(1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_ec4e);
    let structured = echelon_candidates(spec, s, per_set, &mut rng)?;
    estimate_all_variants_ct_with(&sys, s, t_end, h, cfg, structured)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_enforced() {
        let blocks = vec![SchurBlock::Real { beta: 0.0 }, SchurBlock::Real { beta: 1.0 }];
        assert!(matches!(SchurSpec::new(blocks.clone()), Err(Error::InvalidSpec(_))));
        let (spec, order) = SchurSpec::sorted(blocks).unwrap();
        assert_eq!(order, vec![1, 0]);
        assert_eq!(spec.blocks()[0].beta(), 1.0);
    }

    #[test]
    fn a4_layout() {
        let spec = SchurSpec::a4_model([1.0, 0.5], [0.3, 0.2]).unwrap();
        assert_eq!(spec.dim(), 4);
        assert_eq!(spec.complex_indices(), vec![0, 1]);
        assert_eq!(spec.offsets(), vec![0, 2]);
        assert_eq!(spec.omega(0), Some(0.5));
        assert!(spec.has_isolated_real_parts());
        assert_eq!(spec.generator()[(3, 2)], 0.3);
    }

    #[test]
    fn isolated_real_parts() {
        let spec = SchurSpec::new(vec![
            SchurBlock::Complex { beta: 1.0, omega: 1.0, rho: 1.0 },
            SchurBlock::Real { beta: 1.0 },
        ])
        .unwrap();
        assert!(!spec.has_isolated_real_parts());
        let reals = SchurSpec::new(vec![SchurBlock::Real { beta: 1.0 }, SchurBlock::Real { beta: 1.0 }]).unwrap();
        assert!(reals.has_isolated_real_parts());
    }

    #[test]
    fn serde_round_trip() {
        let spec = SchurSpec::a4_model([1.0, 0.7], [0.3, 0.25]).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back: SchurSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
        let unsorted = r#"{"blocks":[{"type":"real","beta":0},{"type":"real","beta":2}]}"#;
        assert!(serde_json::from_str::<SchurSpec>(unsorted).is_err());
        let sorted = r#"{"blocks":[{"type":"real","beta":0},{"type":"real","beta":2}],"sort":true}"#;
        assert!(serde_json::from_str::<SchurSpec>(sorted).is_ok());
    }

    #[test]
    fn flow_matches_generator_exponential_for_small_t() {
        let spec = SchurSpec::a4_model([1.0, 0.7], [0.3, 0.25]).unwrap();
        let t = 1e-4;
        let approx = Matrix::identity(4).add_scaled(&spec.generator(), t);
        assert!((&spec.flow(t).unwrap() - &approx).max_abs() < 1e-7);
    }
}
