//! Costate-system checks: terminal condition, the zero structure of the
//! off-diagonal rows, and exact linearity of the backward sweep in the
//! signal sensitivity.

mod common;

use common::*;
use dissim_core::adjoint::{gateaux_nash, solve_adjoint_nash, solve_adjoint_pareto};
use dissim_core::dynamics::integrate_forward;
use dissim_core::model::{AdjointField, LambdaSpec, ParetoWeights, TimeGrid};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn exo_spec(zeta: &[f64]) -> dissim_core::model::GameSpec {
    spec_1d(
        &[-0.2, 0.1, 0.5],
        &[0.3, -0.4, 0.6],
        zeta,
        0.8,
        (-1.0, 1.0),
        kernel_default(),
        LambdaSpec::AffineDecreasing {
            lambda0: 0.5,
            lambda1: 2.0,
        },
    )
}

#[test]
fn terminal_values_are_zero() {
    let spec = exo_spec(&[1.0, 0.0, 3.0]);
    let grid = TimeGrid::new(40, 0.8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let omega = smooth_random_profile(&mut rng, 3, 1, &grid, -0.9, 0.9);
    let x = integrate_forward(&spec, &omega, &grid).unwrap();
    let last = grid.n_nodes() - 1;

    for i in 0..3 {
        let adj = solve_adjoint_nash(&spec, i, &omega, &x, &grid).unwrap();
        for j in 0..3 {
            assert_eq!(adj.rows()[[j, last, 0]], 0.0);
        }
    }
    let w = ParetoWeights::uniform(3).unwrap();
    let adj = solve_adjoint_pareto(&spec, &w, &omega, &x, &grid).unwrap();
    for j in 0..3 {
        assert_eq!(adj.rows()[[j, last, 0]], 0.0);
    }
}

#[test]
fn insensitive_agents_have_zero_cross_rows() {
    // ζ_1 = 0: rows φ_{j 1}, j ≠ 1, vanish identically. The signal enters
    // the costates of other agents only through their own ζ.
    let spec = exo_spec(&[1.0, 0.0, 3.0]);
    let grid = TimeGrid::new(40, 0.8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let omega = smooth_random_profile(&mut rng, 3, 1, &grid, -0.9, 0.9);
    let x = integrate_forward(&spec, &omega, &grid).unwrap();

    let adj = solve_adjoint_nash(&spec, 1, &omega, &x, &grid).unwrap();
    for j in [0usize, 2] {
        assert!(adj.rows().slice(ndarray::s![j, .., ..]).iter().all(|&v| v == 0.0));
    }
    // ...while the sensitive agents do pick up nonzero cross rows.
    let adj0 = solve_adjoint_nash(&spec, 0, &omega, &x, &grid).unwrap();
    let cross_mag: f64 = adj0
        .rows()
        .slice(ndarray::s![1, .., ..])
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(cross_mag > 0.0);
}

#[test]
fn constant_signal_also_zeroes_cross_rows() {
    let spec = spec_1d(
        &[-0.2, 0.1, 0.5],
        &[0.3, -0.4, 0.6],
        &[5.0, 5.0, 5.0],
        0.8,
        (-1.0, 1.0),
        kernel_default(),
        LambdaSpec::Constant { lambda0: 9.0 },
    );
    let grid = TimeGrid::new(40, 0.8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let omega = smooth_random_profile(&mut rng, 3, 1, &grid, -0.9, 0.9);
    let x = integrate_forward(&spec, &omega, &grid).unwrap();
    let adj = solve_adjoint_nash(&spec, 2, &omega, &x, &grid).unwrap();
    for j in [0usize, 1] {
        assert!(adj.rows().slice(ndarray::s![j, .., ..]).iter().all(|&v| v == 0.0));
    }
}

#[test]
fn backward_sweep_is_linear_in_the_signal_weight() {
    // Doubling ζ_i doubles the off-diagonal rows bit for bit: their driver
    // is (ζ_i/N) ∇λ and scaling by two is exact in IEEE arithmetic.
    let spec1 = exo_spec(&[1.25, 0.0, 3.0]);
    let spec2 = exo_spec(&[2.5, 0.0, 3.0]);
    let grid = TimeGrid::new(40, 0.8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let omega = smooth_random_profile(&mut rng, 3, 1, &grid, -0.9, 0.9);
    let x = integrate_forward(&spec1, &omega, &grid).unwrap();

    let a1 = solve_adjoint_nash(&spec1, 0, &omega, &x, &grid).unwrap();
    let a2 = solve_adjoint_nash(&spec2, 0, &omega, &x, &grid).unwrap();
    for j in [1usize, 2] {
        for k in 0..grid.n_nodes() {
            assert_eq!(2.0 * a1.rows()[[j, k, 0]], a2.rows()[[j, k, 0]]);
        }
    }
    // Scaling ζ by zero is the homogeneous system: rows vanish.
    let spec0 = exo_spec(&[0.0, 0.0, 3.0]);
    let a0 = solve_adjoint_nash(&spec0, 0, &omega, &x, &grid).unwrap();
    for j in [1usize, 2] {
        assert!(a0.rows().slice(ndarray::s![j, .., ..]).iter().all(|&v| v == 0.0));
    }
}

#[test]
fn pareto_rows_vanish_at_consensus_without_signal() {
    let spec = spec_1d(
        &[0.2, 0.2, 0.2],
        &[0.5, 0.0, -0.5],
        &[0.0; 3],
        1.0,
        (-1.0, 1.0),
        kernel_default(),
        LambdaSpec::Constant { lambda0: 0.0 },
    );
    let grid = TimeGrid::new(50, 1.0).unwrap();
    let omega = constant_profile(&[vec![0.2], vec![0.2], vec![0.2]], &grid);
    let x = integrate_forward(&spec, &omega, &grid).unwrap();
    let w = ParetoWeights::new(vec![0.5, 0.25, 0.25]).unwrap();
    let adj = solve_adjoint_pareto(&spec, &w, &omega, &x, &grid).unwrap();
    assert!(adj.rows().iter().all(|&v| v == 0.0));
}

#[test]
fn zero_direction_gives_zero_derivative() {
    let spec = exo_spec(&[1.0, 0.0, 3.0]);
    let grid = TimeGrid::new(40, 0.8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let omega = smooth_random_profile(&mut rng, 3, 1, &grid, -0.9, 0.9);
    let x = integrate_forward(&spec, &omega, &grid).unwrap();
    let adj = solve_adjoint_nash(&spec, 2, &omega, &x, &grid).unwrap();
    let v = Array2::zeros((grid.n_nodes(), 1));
    assert_eq!(gateaux_nash(&spec, 2, &omega, &x, &adj, &v, &grid).unwrap(), 0.0);
}

#[test]
fn mode_mismatches_are_rejected() {
    let spec = exo_spec(&[1.0, 0.0, 3.0]);
    let grid = TimeGrid::new(40, 0.8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let omega = smooth_random_profile(&mut rng, 3, 1, &grid, -0.9, 0.9);
    let x = integrate_forward(&spec, &omega, &grid).unwrap();
    let v = Array2::zeros((grid.n_nodes(), 1));

    let adj0 = solve_adjoint_nash(&spec, 0, &omega, &x, &grid).unwrap();
    assert!(gateaux_nash(&spec, 1, &omega, &x, &adj0, &v, &grid).is_err());

    let w = ParetoWeights::uniform(3).unwrap();
    let pareto = solve_adjoint_pareto(&spec, &w, &omega, &x, &grid).unwrap();
    assert!(gateaux_nash(&spec, 0, &omega, &x, &pareto, &v, &grid).is_err());
    assert!(matches!(pareto, AdjointField::Pareto { .. }));

    assert!(solve_adjoint_nash(&spec, 7, &omega, &x, &grid).is_err());
}
