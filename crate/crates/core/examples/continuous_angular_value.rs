//! Time-average estimate for the 2D rotation model `u̇ = ω D R D⁻¹ u`,
//! whose angular value is `ω`.
//!
//! cargo run --release --example continuous_angular_value

use std::f64::consts::PI;

use angval::autonomous::SchurSpec;
use angval::continuous::{angular_integral, estimate_all_variants_ct};
use angval::{Matrix, Subspace, SubspaceSearchConfig};

fn main() -> angval::Result<()> {
    let (omega, rho) = (1.0, 1.0 / 3.0);
    let sys = SchurSpec::model2d(omega, rho)?.system();
    let e1 = Subspace::from_spanning(&Matrix::column_vector(&[1.0, 0.0]), 1e-12)?;
    println!("integral over one half-period: {:.8} (π = {PI:.8})", angular_integral(&sys, &e1, 0.0, PI, 1e-3)?);

    let cfg = SubspaceSearchConfig { starts: 4, refine_top: 1, refine_rounds: 1, ..SubspaceSearchConfig::with_seed(7) };
    for r in estimate_all_variants_ct(&sys, 1, 200.0 * PI, 1e-3, &cfg)? {
        println!("{:<12} {:.6}  (tail [{:.1}, {:.1}])", r.variant.to_string(), r.value, r.tail_window.0, r.tail_window.1);
    }
    Ok(())
}
