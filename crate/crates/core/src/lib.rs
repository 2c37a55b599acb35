//! Principal angles, Grassmannian metrics and angular values of linear
//! dynamical systems.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: small dense kernels (QR, Jacobi SVD, Schur block flows)
//! - [`grassmann`]: subspaces, principal angles and the four metrics
//! - [`smoothness`]: derivatives of the maximal principal angle and bound checks
//! - [`discrete`], [`continuous`]: angle sums and angular-value estimators
//! - [`autonomous`]: closed forms for block-diagonal Schur specifications
//! - [`semicontinuity`]: orbit averages and the `(κ, ρ₂)` parameter sweep
//! - [`oracles`]: slow brute-force baselines used for cross-checks
//! - [`cli`]: the `angval` command-line driver

pub mod autonomous;
pub mod cli;
pub mod continuous;
pub mod discrete;
pub mod error;
pub mod grassmann;
pub mod linalg;
pub mod oracles;
pub mod search;
pub mod semicontinuity;
pub mod smoothness;

pub use error::{Error, Result};
pub use grassmann::{PrincipalAngleResult, Subspace};
pub use linalg::{Matrix, SchurBlock, Svd};
pub use search::{AngularValueReport, SubspaceSearchConfig, Variant};
