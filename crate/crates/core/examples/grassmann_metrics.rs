//! The four Grassmannian distances on random pairs, with the identities
//! that tie them to the largest principal angle.
//!
//! cargo run --example grassmann_metrics

use angval::grassmann::{metric_d1, metric_d2, metric_df, metric_dsigma, procrustes_min};
use angval::{Matrix, Subspace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_subspace(rng: &mut ChaCha8Rng, d: usize, s: usize) -> angval::Result<Subspace> {
    Subspace::from_spanning(&Matrix::from_fn(d, s, |_, _| StandardNormal.sample(rng)), 1e-10)
}

fn main() -> angval::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("d s     d1        d2        dF        dsigma    sin(d1)   2sin(d1/2)");
    for (d, s) in [(3, 1), (4, 2), (6, 3)] {
        let v = random_subspace(&mut rng, d, s)?;
        let w = random_subspace(&mut rng, d, s)?;
        let d1 = metric_d1(&v, &w)?;
        println!(
            "{d} {s}  {d1:.6}  {:.6}  {:.6}  {:.6}  {:.6}  {:.6}",
            metric_d2(&v, &w)?,
            metric_df(&v, &w)?,
            metric_dsigma(&v, &w)?,
            d1.sin(),
            2.0 * (d1 / 2.0).sin()
        );
        let p = procrustes_min(v.basis(), w.basis())?;
        println!("      Procrustes residual {:.6} (unique: {})", p.value, p.unique);
    }
    Ok(())
}
