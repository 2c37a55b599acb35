//! Angular values of a planar map `D_ρ T_φ D_ρ⁻¹`, estimated by subspace
//! search and compared with the orbit-average formula.
//!
//! cargo run --release --example discrete_angular_value

use std::f64::consts::{PI, TAU};

use angval::discrete::{estimate_all_variants, planar_model, DiscreteSystem};
use angval::semicontinuity::{discrete2d_theta1, RationalTag, TorusGrid};
use angval::SubspaceSearchConfig;

fn main() -> angval::Result<()> {
    let cfg = SubspaceSearchConfig::with_seed(3);
    for (rho, phi) in [(1.0, 0.3), (1.0 / 3.0, PI / 2.0), (0.5, 1.3)] {
        let sys = DiscreteSystem::constant(planar_model(rho, phi)?)?;
        let tag = RationalTag::detect(phi / TAU, 20, 1e-12);
        let formula = discrete2d_theta1(phi, rho, &tag, &TorusGrid::default())?;
        println!("ρ = {rho:.4}, φ = {phi:.4}: formula {formula:.6}");
        for r in estimate_all_variants(&sys, 1, 5000, &cfg)? {
            println!("  {:<12} {:.6}", r.variant.to_string(), r.value);
        }
    }
    Ok(())
}
