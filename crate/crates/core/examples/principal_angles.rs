//! Principal angles and vectors between two planes in R^4.
//!
//! cargo run --example principal_angles

use angval::grassmann::principal_angles;
use angval::{Matrix, Subspace};

fn main() -> angval::Result<()> {
    let v = Subspace::from_spanning(
        &Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0]])?,
        1e-12,
    )?;
    let (a, b) = (0.2f64, 0.5f64);
    let w = Subspace::from_spanning(
        &Matrix::from_rows(&[
            vec![a.cos(), 0.0],
            vec![0.0, b.cos()],
            vec![a.sin(), 0.0],
            vec![0.0, b.sin()],
        ])?,
        1e-12,
    )?;
    let r = principal_angles(&v, &w)?;
    println!("angles: {:?}", r.angles);
    println!("max angle: {}", r.max_angle());
    for j in 0..r.angles.len() {
        println!("pair {j}: v = {:?}, w = {:?}", r.vectors_v.column(j), r.vectors_w.column(j));
    }
    Ok(())
}
