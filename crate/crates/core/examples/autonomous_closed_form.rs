//! Closed-form angular values of a block-diagonal 4×4 system: admissible
//! index sets, the rationality gate and the torus integral.
//!
//! cargo run --release --example autonomous_closed_form

use std::f64::consts::FRAC_1_SQRT_2;

use angval::autonomous::{admissible_sets, angular_value_irrational, angular_value_resonant_4d, QuadConfig, ResonantConfig, SchurSpec};

fn main() -> angval::Result<()> {
    let spec = SchurSpec::a4_model([1.0, FRAC_1_SQRT_2], [1.0 / 3.0, 0.25])?;
    for s in 1..spec.dim() {
        println!("s = {s}: admissible sets {:?}", admissible_sets(s, &spec)?);
    }
    let r = angular_value_irrational(2, &spec, &QuadConfig::default())?;
    println!("value {:.8} ± {:.1e}, best set {:?}", r.value, r.err_estimate, r.best_set);

    let rational = SchurSpec::a4_model([1.0, 0.5], [1.0 / 3.0, 0.25])?;
    match angular_value_irrational(2, &rational, &QuadConfig::default()) {
        Err(e) => println!("ω₂ = 1/2: {e}"),
        Ok(v) => println!("ω₂ = 1/2 unexpectedly passed the gate: {}", v.value),
    }
    let res = angular_value_resonant_4d(1.0, 1, 2, 1.0 / 3.0, 0.25, &ResonantConfig::default())?;
    println!("resonant 1/2: sup L = {:.6} at t = {:.4}", res.value, res.t_argmax);
    Ok(())
}
