//! A coarse `(κ, ρ₂)` sweep written as CSV to stdout. Rational cells use
//! the resonant formula and sit above their irrational neighbours.
//!
//! cargo run --release --example hairy_sweep > sweep.csv

use angval::autonomous::{QuadConfig, ResonantConfig};
use angval::semicontinuity::{hairy_sweep, SweepConfig};

fn main() -> angval::Result<()> {
    let cfg = SweepConfig {
        kappa_min: 0.4,
        kappa_max: 0.6,
        kappa_step: 0.02,
        qmax: 5,
        rho2: vec![0.25, 0.5],
        quad: QuadConfig { points_per_axis: 512, ..QuadConfig::default() },
        resonant: ResonantConfig { t_points: 180, refine: 2, tau_nodes: 512 },
        ..SweepConfig::default()
    };
    println!("kappa,rho2,tag,value");
    for c in hairy_sweep(&cfg)? {
        let tag = c.tag.pq().map_or("irrational".to_string(), |(p, q)| format!("{p}/{q}"));
        println!("{},{},{tag},{}", c.kappa, c.rho2, c.value);
    }
    Ok(())
}
