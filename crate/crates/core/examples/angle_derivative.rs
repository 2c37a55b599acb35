//! Right derivative of the maximal angle along a curve of subspaces,
//! against forward differences, and the flow integrand `‖(I−P)AP‖`.
//!
//! cargo run --example angle_derivative

use angval::oracles::fd_angle_derivative;
use angval::smoothness::{angle_derivative_flow, angle_derivative_right, check_lipschitz, CurvePoint};
use angval::{Matrix, Subspace};

fn main() -> angval::Result<()> {
    let w = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0]])?;
    let wdot = Matrix::from_rows(&[vec![0.0, 0.3], vec![0.1, 0.0], vec![2.0, 0.0], vec![0.5, -1.0]])?;
    let exact = angle_derivative_right(&CurvePoint::new(w.clone(), wdot.clone())?)?;
    println!("formula: {exact:.10}");
    for h in [1e-3, 1e-4, 1e-5] {
        let fd = fd_angle_derivative(&w, &wdot, h)?;
        println!("h = {h:e}: forward difference {fd:.10}, error {:.2e}", (fd - exact).abs());
    }

    let a = Matrix::from_rows(&[
        vec![0.0, -1.0, 0.5, 0.0],
        vec![1.0, 0.0, 0.0, 0.2],
        vec![0.3, 0.0, -0.5, 0.0],
        vec![0.0, 0.0, 1.0, 0.1],
    ])?;
    let v = Subspace::from_spanning(&w, 1e-12)?;
    println!("flow integrand at V = span(e1, e2): {:.6}", angle_derivative_flow(&a, &v)?);

    let s = Matrix::identity(4).add_scaled(&a, 0.05);
    let u = Subspace::from_spanning(&w.add_scaled(&wdot, 0.1), 1e-12)?;
    let r = check_lipschitz(&s, &v, &u)?;
    println!("Lipschitz check: {:.3e} <= {:.3e} ({})", r.lhs, r.bound, r.satisfied);
    Ok(())
}
