//! Brute-force baselines next to the fast routines they check.
//!
//! cargo run --release --example oracles_check

use angval::discrete::{estimate_angular_value, planar_model, DiscreteSystem};
use angval::grassmann::{max_angle, procrustes_min};
use angval::oracles::{birkhoff_average, maxmin_angle, procrustes_bruteforce_s2, OracleSystem};
use angval::{Matrix, Subspace, SubspaceSearchConfig, Variant};

fn main() -> angval::Result<()> {
    let v = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0]])?;
    let w = Matrix::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.7], vec![0.3, 0.0], vec![0.0, 0.6]])?;
    let (sv, sw) = (Subspace::from_spanning(&v, 1e-12)?, Subspace::from_spanning(&w, 1e-12)?);
    println!("max angle {:.6}, sampled max-min {:.6}", max_angle(&sv, &sw)?, maxmin_angle(&v, &w, 200_000, 1)?);
    println!(
        "Procrustes {:.6}, grid search {:.6}",
        procrustes_min(sv.basis(), sw.basis())?.value,
        procrustes_bruteforce_s2(sv.basis(), sw.basis(), 20_000)?
    );

    let a = planar_model(0.5, 1.1)?;
    let step = {
        let a = a.clone();
        move |_n: usize| a.clone()
    };
    let avg = birkhoff_average(&OracleSystem::Discrete(&step), &Matrix::column_vector(&[1.0, 0.0]), 10_000.0, None)?;
    let sys = DiscreteSystem::constant(a)?;
    let est = estimate_angular_value(&sys, 1, Variant::SupLimsup, 10_000, &SubspaceSearchConfig::with_seed(2))?;
    println!("Birkhoff average from e1 {avg:.6}, searched sup {:.6}", est.value);
    Ok(())
}
