//! Randomized invariants. Each case draws its inputs from a seeded RNG so
//! failures shrink to a reproducible seed.

mod common;

use std::f64::consts::{PI, TAU};

use angval::autonomous::{
    admissible_sets, admissible_sets_with, angular_value_irrational, quad::set_integral, AdmissibleFilter, QuadConfig,
    SchurSpec,
};
use angval::continuous::{angular_integral, ContinuousSystem};
use angval::discrete::{angle_sum, estimate_all_variants, kinematic_transform, DiscreteSystem};
use angval::grassmann::{max_angle, metric_d1, metric_d2, metric_df, metric_dsigma, principal_angles};
use angval::linalg::{block_flow, spectral_norm, svd, Matrix, SchurBlock};
use angval::oracles::{maxmin_angle, procrustes_bruteforce_s2};
use angval::grassmann::procrustes_min;
use angval::semicontinuity::{discrete2d_observable, f_infinity, RationalTag};
use angval::smoothness::{angle_derivative_flow, angle_derivative_right, CurvePoint};
use angval::{Subspace, SubspaceSearchConfig, Variant};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=6).prop_flat_map(|d| (Just(d), 1..d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn norm_equivalence(seed: u64, rows in 1usize..=8, cols in 1usize..=8) {
        let m = gaussian(&mut rng(seed), rows, cols);
        let two = spectral_norm(&m).unwrap();
        let fro = m.frobenius_norm();
        prop_assert!(two <= fro * (1.0 + 1e-12));
        prop_assert!(fro <= (rows.min(cols) as f64).sqrt() * two * (1.0 + 1e-12));
    }

    #[test]
    fn singular_values_orthogonally_invariant(seed: u64, rows in 1usize..=8, cols in 1usize..=8) {
        let mut r = rng(seed);
        let m = gaussian(&mut r, rows, cols);
        let moved = random_orthogonal(&mut r, rows).matmul(&m).matmul(&random_orthogonal(&mut r, cols));
        let (a, b) = (svd(&m).unwrap().values, svd(&moved).unwrap().values);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10 * a[0].max(1.0));
        }
    }

    #[test]
    fn rotation_block_is_periodic(omega in 0.05f64..20.0, rho in 0.05f64..=1.0) {
        let block = SchurBlock::Complex { beta: 0.0, omega, rho };
        let m = block_flow(&block, TAU / omega).unwrap();
        prop_assert!((&m - &Matrix::identity(2)).max_abs() <= 1e-12 / rho);
    }

    #[test]
    fn metric_axioms((d, s) in dims(), seed: u64) {
        let mut r = rng(seed);
        let (u, v, w) = (random_subspace(&mut r, d, s), random_subspace(&mut r, d, s), random_subspace(&mut r, d, s));
        for m in [metric_d1, metric_d2, metric_df, metric_dsigma] {
            prop_assert!((m(&u, &v).unwrap() - m(&v, &u).unwrap()).abs() <= 1e-12);
            prop_assert!(m(&u, &w).unwrap() <= m(&u, &v).unwrap() + m(&v, &w).unwrap() + 1e-9);
            prop_assert!(m(&v, &v).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn metric_relations((d, s) in dims(), seed: u64, close: bool) {
        let mut r = rng(seed);
        let v = random_subspace(&mut r, d, s);
        let w = if close { perturbed(&mut r, &v, 1e-4) } else { random_subspace(&mut r, d, s) };
        let d1 = metric_d1(&v, &w).unwrap();
        let d2 = metric_d2(&v, &w).unwrap();
        prop_assert!((d2 - d1.sin()).abs() <= 1e-9);
        prop_assert!((metric_dsigma(&v, &w).unwrap() - 2.0 * (d1 / 2.0).sin()).abs() <= 1e-9);
        prop_assert!(2.0 / PI * d1 <= d2 + 1e-9 && d2 <= d1 + 1e-9);
    }

    #[test]
    fn principal_angles_orthogonally_invariant((d, s) in dims(), seed: u64, c in 0.01f64..100.0) {
        let mut r = rng(seed);
        let (v, w) = (random_subspace(&mut r, d, s), random_subspace(&mut r, d, s));
        let q = random_orthogonal(&mut r, d);
        let base = principal_angles(&v, &w).unwrap().angles;
        let moved = principal_angles(&v.image(&q).unwrap(), &w.image(&q).unwrap()).unwrap().angles;
        let scaled = Subspace::from_spanning(&v.basis().scale(-c), 1e-10).unwrap();
        let rescaled = principal_angles(&scaled, &w).unwrap().angles;
        for k in 0..s {
            prop_assert!((base[k] - moved[k]).abs() <= 1e-9);
            prop_assert!((base[k] - rescaled[k]).abs() <= 1e-9);
        }
    }

    #[test]
    fn procrustes_grid_matches_closed_form(d in 2usize..=5, seed: u64) {
        let mut r = rng(seed);
        let (v, w) = (random_subspace(&mut r, d, 2), random_subspace(&mut r, d, 2));
        let closed = procrustes_min(v.basis(), w.basis()).unwrap().value;
        let grid = 20_000;
        let brute = procrustes_bruteforce_s2(v.basis(), w.basis(), grid).unwrap();
        // The grid minimum sits above the true one by at most the grid step.
        prop_assert!(brute >= closed - 1e-12);
        prop_assert!(brute - closed <= 4.0 * TAU / grid as f64);
    }

    #[test]
    fn derivative_basis_independent((d, s) in dims(), seed: u64) {
        let mut r = rng(seed);
        let w = gaussian(&mut r, d, s);
        let wdot = gaussian(&mut r, d, s);
        let g = random_conditioned(&mut r, s, 0.2, 5.0);
        let a = angle_derivative_right(&CurvePoint::new(w.clone(), wdot.clone()).unwrap()).unwrap();
        let b = angle_derivative_right(&CurvePoint::new(w.matmul(&g), wdot.matmul(&g)).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn flow_derivative_trace_shift((d, s) in dims(), seed: u64, lambda in -50.0f64..50.0) {
        let mut r = rng(seed);
        let a = gaussian(&mut r, d, d);
        let v = random_subspace(&mut r, d, s);
        let shifted = a.add_scaled(&Matrix::identity(d), lambda);
        let x = angle_derivative_flow(&a, &v).unwrap();
        let y = angle_derivative_flow(&shifted, &v).unwrap();
        prop_assert!((x - y).abs() <= 1e-12 * (1.0 + lambda.abs()));
    }

    #[test]
    fn orbit_average_invariant_under_rotation(p in 1u64..20, q in 2u64..21, x in 0.0f64..TAU, rho in 0.1f64..=1.0) {
        prop_assume!(p < q && angval::autonomous::gate::gcd(p, q) == 1);
        let tag = RationalTag::rational(p, q).unwrap();
        let phi = TAU * p as f64 / q as f64;
        let f = discrete2d_observable(rho);
        let a = f_infinity(&f, x, phi, &tag, 0).unwrap();
        let b = f_infinity(&f, x + phi, phi, &tag, 0).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn admissible_sets_symmetric(kinds in proptest::collection::vec(any::<bool>(), 1..=6)) {
        let n = kinds.len();
        let blocks: Vec<SchurBlock> = kinds
            .iter()
            .enumerate()
            .map(|(i, &complex)| {
                let beta = (n - i) as f64;
                if complex { SchurBlock::Complex { beta, omega: 1.0 + i as f64, rho: 0.5 } } else { SchurBlock::Real { beta } }
            })
            .collect();
        let spec = SchurSpec::new(blocks).unwrap();
        let d = spec.dim();
        for s in 1..d {
            prop_assert_eq!(
                admissible_sets_with(s, &spec, AdmissibleFilter::All).unwrap(),
                admissible_sets_with(d - s, &spec, AdmissibleFilter::All).unwrap()
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_lower_bound_and_monotonicity(seed: u64, n_complex in 1usize..=3, n_real in 0usize..=2) {
        let mut r = rng(seed);
        let mut blocks = Vec::new();
        let total = n_complex + n_real;
        let mut complex_left = n_complex;
        for i in 0..total {
            let beta = (total - i) as f64;
            let complex = complex_left > 0 && (total - i == complex_left || r.random_bool(0.5));
            if complex {
                complex_left -= 1;
                blocks.push(SchurBlock::Complex { beta, omega: r.random_range(0.3..2.0), rho: r.random_range(0.1..=1.0) });
            } else {
                blocks.push(SchurBlock::Real { beta });
            }
        }
        let spec = SchurSpec::new(blocks).unwrap();
        let d = spec.dim();
        let quad = QuadConfig { points_per_axis: 512, ..QuadConfig::default() }.overridden();
        for s in 1..d {
            let value = angular_value_irrational(s, &spec, &quad).unwrap().value;
            let sets = admissible_sets(s, &spec).unwrap();
            let lower = sets
                .iter()
                .flatten()
                .map(|&j| spec.omega(j).unwrap())
                .fold(0.0, f64::max);
            prop_assert!(value >= lower - 1e-8, "s={} value={} lower={}", s, value, lower);
            for set in &sets {
                let full = set_integral(&spec, set, 512).unwrap();
                for drop in 0..set.len() {
                    let mut sub = set.clone();
                    sub.remove(drop);
                    prop_assert!(set_integral(&spec, &sub, 512).unwrap() <= full + 1e-12);
                }
            }
        }
    }

    #[test]
    fn oracle_agrees_with_fast_angle(d in 2usize..=4, s in 1usize..=2, seed: u64) {
        prop_assume!(s < d);
        let mut r = rng(seed);
        let (v, w) = (random_subspace(&mut r, d, s), random_subspace(&mut r, d, s));
        let fast = max_angle(&v, &w).unwrap();
        let slow = maxmin_angle(v.basis(), w.basis(), 20_000, seed).unwrap();
        prop_assert!(slow <= fast + 1e-12);
        prop_assert!(fast - slow <= 2e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scalar_kinematic_invariance((d, s) in dims(), seed: u64) {
        let mut r = rng(seed);
        let mats: Vec<Matrix> = (0..2).map(|_| random_conditioned(&mut r, d, 0.3, 2.0)).collect();
        let sys = DiscreteSystem::periodic(mats).unwrap();
        let scales: Vec<f64> = (0..=101).map(|_| r.random_range(0.2..3.0) * if r.random_bool(0.3) { -1.0 } else { 1.0 }).collect();
        let moved = kinematic_transform(&sys, move |n| Matrix::identity(d).scale(scales[n]));
        let v = random_subspace(&mut r, d, s);
        let a = angle_sum(&sys, &v, 1, 100).unwrap();
        let b = angle_sum(&moved, &v, 1, 100).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn estimates_respect_variant_order((d, s) in dims(), seed: u64) {
        let mut r = rng(seed);
        let sys = DiscreteSystem::constant(random_conditioned(&mut r, d, 0.5, 2.0)).unwrap();
        let cfg = SubspaceSearchConfig { starts: 4, refine_rounds: 1, ..SubspaceSearchConfig::with_seed(seed) };
        let reps = estimate_all_variants(&sys, s, 200, &cfg).unwrap();
        let v = |k: Variant| reps.iter().find(|x| x.variant == k).unwrap().value;
        prop_assert!(v(Variant::SupLiminf) <= v(Variant::SupLimsup) + 1e-9);
        prop_assert!(v(Variant::SupLiminf) <= v(Variant::LiminfSup) + 1e-9);
        prop_assert!(v(Variant::SupLimsup) <= v(Variant::LimsupSup) + 1e-9);
        prop_assert!(v(Variant::LiminfSup) <= v(Variant::LimsupSup) + 1e-9);
    }

    #[test]
    fn angular_integral_shift_invariant((d, s) in dims(), seed: u64, lambda in -3.0f64..3.0) {
        let mut r = rng(seed);
        let (a0, a1) = (gaussian(&mut r, d, d), gaussian(&mut r, d, d));
        let base = {
            let (a0, a1) = (a0.clone(), a1.clone());
            ContinuousSystem::new(d, move |t: f64| a0.add_scaled(&a1, t.cos()))
        };
        let shifted = ContinuousSystem::new(d, move |t: f64| {
            a0.add_scaled(&a1, t.cos()).add_scaled(&Matrix::identity(d), lambda * (1.0 + t.sin()))
        });
        let v = random_subspace(&mut r, d, s);
        let x = angular_integral(&base, &v, 0.0, 2.0, 1e-2).unwrap();
        let y = angular_integral(&shifted, &v, 0.0, 2.0, 1e-2).unwrap();
        prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0), "{} vs {}", x, y);
    }
}
