//! Forward-integration and cost-functional checks. Expected values come
//! from closed forms where available and from refined-grid re-computation
//! otherwise; the refinement oracle lives in this file, not in the library.

mod common;

use approx::assert_relative_eq;
use common::*;
use dissim_core::dynamics::{
    eval_cost, eval_intensity_integral, integrate_forward, population_averages,
};
use dissim_core::model::{LambdaSpec, Profile, TimeGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn consensus_is_stationary() {
    let spec = spec_1d(
        &[0.3, 0.3, 0.3],
        &[0.2, 0.0, -0.4],
        &[0.0; 3],
        2.0,
        (-1.0, 1.0),
        kernel_default(),
        LambdaSpec::Constant { lambda0: 0.0 },
    );
    let grid = TimeGrid::new(100, 2.0).unwrap();
    let omega = constant_profile(&[vec![0.3], vec![0.3], vec![0.3]], &grid);
    let x = integrate_forward(&spec, &omega, &grid).unwrap();
    for k in 0..grid.n_nodes() {
        for i in 0..3 {
            assert_eq!(x.values[[i, k, 0]], 0.3);
        }
    }
}

#[test]
fn far_controls_freeze_the_state() {
    // Every control stays farther than the kernel radius from every state,
    // so the drift is identically zero.
    let spec = spec_1d(
        &[0.0, 6.0],
        &[0.0, 0.0],
        &[0.0; 2],
        1.0,
        (-8.0, 8.0),
        kernel_default(),
        LambdaSpec::Constant { lambda0: 0.0 },
    );
    let grid = TimeGrid::new(50, 1.0).unwrap();
    let omega = constant_profile(&[vec![3.0], vec![3.0]], &grid);
    let x = integrate_forward(&spec, &omega, &grid).unwrap();
    for k in 0..grid.n_nodes() {
        assert_eq!(x.values[[0, k, 0]], 0.0);
        assert_eq!(x.values[[1, k, 0]], 6.0);
    }
}

#[test]
fn coarse_grid_matches_fine_grid_oracle() {
    let spec = spec_1d(
        &[-0.2, 0.4],
        &[0.1, -0.3],
        &[0.0; 2],
        1.0,
        (-1.0, 1.0),
        kernel_default(),
        LambdaSpec::Constant { lambda0: 0.0 },
    );
    let coarse = TimeGrid::new(10, 1.0).unwrap(); // h = 0.1
    let fine = TimeGrid::new(1000, 1.0).unwrap(); // h = 0.001
    let omega_c = constant_profile(&[vec![0.35], vec![-0.15]], &coarse);
    let omega_f = constant_profile(&[vec![0.35], vec![-0.15]], &fine);
    let x_c = integrate_forward(&spec, &omega_c, &coarse).unwrap();
    let x_f = integrate_forward(&spec, &omega_f, &fine).unwrap();
    let mut worst = 0.0f64;
    for k in 0..coarse.n_nodes() {
        for i in 0..2 {
            worst = worst.max((x_c.values[[i, k, 0]] - x_f.values[[i, k * 100, 0]]).abs());
        }
    }
    assert!(worst <= 1e-5, "coarse/fine discrepancy {worst:.3e}");
}

#[test]
fn averages_examples() {
    let grid = TimeGrid::new(4, 1.0).unwrap();
    let same = constant_profile(&[vec![0.7], vec![0.7]], &grid);
    let avg = population_averages(&same);
    assert!(avg.iter().all(|&v| v == 0.7));

    let opposite = constant_profile(&[vec![0.9, -0.2], vec![-0.9, 0.2]], &grid);
    let avg = population_averages(&opposite);
    assert!(avg.iter().all(|&v| v == 0.0));

    let three = constant_profile(&[vec![0.0], vec![0.5], vec![1.0]], &grid);
    let avg = population_averages(&three);
    assert!(avg.iter().all(|&v| v == 0.5));
}

#[test]
fn cost_vanishes_at_truthful_consensus() {
    let spec = spec_1d(
        &[0.25, 0.25],
        &[0.0, 0.0],
        &[0.0; 2],
        3.0,
        (-1.0, 1.0),
        kernel_default(),
        LambdaSpec::Constant { lambda0: 7.0 },
    );
    let grid = TimeGrid::new(60, 3.0).unwrap();
    let omega = constant_profile(&[vec![0.25], vec![0.25]], &grid);
    let x = integrate_forward(&spec, &omega, &grid).unwrap();
    assert_eq!(eval_cost(&spec, 0, &omega, &x, &grid).unwrap(), 0.0);
}

#[test]
fn constant_signal_integrates_to_lambda0_t() {
    let mut spec = spec_1d(
        &[0.25, 0.25],
        &[0.0, 0.0],
        &[1.0, 0.0],
        3.0,
        (-1.0, 1.0),
        kernel_default(),
        LambdaSpec::Constant { lambda0: 4.5 },
    );
    spec.validate().unwrap();
    let grid = TimeGrid::new(60, 3.0).unwrap();
    let omega = constant_profile(&[vec![0.25], vec![0.25]], &grid);
    let x = integrate_forward(&spec, &omega, &grid).unwrap();
    // Quadratic terms vanish at the truthful consensus; ζ_0 = 1.
    assert_relative_eq!(
        eval_cost(&spec, 0, &omega, &x, &grid).unwrap(),
        4.5 * 3.0,
        max_relative = 1e-15
    );
}

#[test]
fn cost_matches_refined_quadrature() {
    let spec = spec_1d(
        &[-0.3, 0.1, 0.45],
        &[0.4, -0.2, 0.6],
        &[0.5, 0.0, 1.5],
        1.5,
        (-1.0, 1.0),
        kernel_default(),
        LambdaSpec::AffineDecreasing {
            lambda0: 0.2,
            lambda1: 1.0,
        },
    );
    let grid = TimeGrid::new(200, 1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let omega = smooth_random_profile(&mut rng, 3, 1, &grid, -0.9, 0.9);

    let fine_grid = TimeGrid::new(200 * 100, 1.5).unwrap();
    let omega_fine = refine_profile(&omega, 100);
    let x = integrate_forward(&spec, &omega, &grid).unwrap();
    let x_fine = integrate_forward(&spec, &omega_fine, &fine_grid).unwrap();

    for i in 0..3 {
        let j = eval_cost(&spec, i, &omega, &x, &grid).unwrap();
        let j_fine = eval_cost(&spec, i, &omega_fine, &x_fine, &fine_grid).unwrap();
        assert_relative_eq!(j, j_fine, max_relative = 1e-4);
    }
}

#[test]
fn intensity_closed_forms() {
    let spec = spec_1d(
        &[0.5, 0.5],
        &[0.0; 2],
        &[1.0; 2],
        2.0,
        (-2.0, 2.0),
        kernel_default(),
        LambdaSpec::AffineDecreasing {
            lambda0: 0.7,
            lambda1: 1.3,
        },
    );
    let grid = TimeGrid::new(40, 2.0).unwrap();

    let mut flat = Profile::zeros(2, grid.n_nodes(), 1);
    flat.values.fill(1.0);
    assert_relative_eq!(
        eval_intensity_integral(&spec, &flat, &grid).unwrap(),
        0.7 * 2.0,
        max_relative = 1e-13
    );

    flat.values.fill(0.0);
    assert_relative_eq!(
        eval_intensity_integral(&spec, &flat, &grid).unwrap(),
        (0.7 + 1.3) * 2.0,
        max_relative = 1e-13
    );

    // x̄ climbing linearly 0 → 1: the trapezoidal rule is exact for affine
    // integrands, so the value is (λ₀ + λ₁/2) T to roundoff.
    let mut ramp = Profile::zeros(2, grid.n_nodes(), 1);
    for i in 0..2 {
        for k in 0..grid.n_nodes() {
            ramp.values[[i, k, 0]] = grid.node(k) / 2.0;
        }
    }
    assert_relative_eq!(
        eval_intensity_integral(&spec, &ramp, &grid).unwrap(),
        (0.7 + 1.3 / 2.0) * 2.0,
        max_relative = 1e-13
    );
}

#[test]
fn lambda0_shift_moves_cost_by_zeta_c_t() {
    let base = spec_1d(
        &[0.0, 0.6],
        &[0.3, -0.1],
        &[1.0, 2.0],
        2.0,
        (-1.0, 1.0),
        kernel_default(),
        LambdaSpec::AffineDecreasing {
            lambda0: 0.0,
            lambda1: 1.0,
        },
    );
    let shifted = spec_1d(
        &[0.0, 0.6],
        &[0.3, -0.1],
        &[1.0, 2.0],
        2.0,
        (-1.0, 1.0),
        kernel_default(),
        LambdaSpec::AffineDecreasing {
            lambda0: 0.5,
            lambda1: 1.0,
        },
    );
    let grid = TimeGrid::new(100, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let omega = random_profile(&mut rng, 2, 1, &grid, -0.8, 0.8);
    let x = integrate_forward(&base, &omega, &grid).unwrap();
    for i in 0..2 {
        let j0 = eval_cost(&base, i, &omega, &x, &grid).unwrap();
        let j1 = eval_cost(&shifted, i, &omega, &x, &grid).unwrap();
        let expected = base.zeta[i] * 0.5 * 2.0;
        assert!(
            (j1 - j0 - expected).abs() <= 1e-12 * (1.0 + expected),
            "shift mismatch: {} vs {}",
            j1 - j0,
            expected
        );
    }
}

#[test]
fn confinement_and_monotonicity_basic() {
    let spec = spec_1d(
        &[-1.0, -0.4, 0.2, 0.9],
        &[0.0; 4],
        &[0.0; 4],
        3.0,
        (-1.0, 1.0),
        kernel_default(),
        LambdaSpec::Constant { lambda0: 0.0 },
    );
    let grid = TimeGrid::new(300, 3.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let omega = random_profile(&mut rng, 4, 1, &grid, -1.0, 1.0);
    let x = integrate_forward(&spec, &omega, &grid).unwrap();
    for k in 0..grid.n_nodes() {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..4 {
            let v = x.values[[i, k, 0]];
            assert!(v.abs() <= 1.0 + 1e-9, "confinement broken: {v}");
            assert!(v >= prev - 1e-9, "order flipped at node {k}");
            prev = v;
        }
    }
}

#[test]
fn state_is_stable_in_the_controls() {
    let spec = spec_1d(
        &[-0.5, 0.0, 0.5],
        &[0.2, 0.0, -0.2],
        &[0.0; 3],
        1.0,
        (-1.0, 1.0),
        kernel_default(),
        LambdaSpec::Constant { lambda0: 0.0 },
    );
    let grid = TimeGrid::new(100, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = random_profile(&mut rng, 3, 1, &grid, -0.9, 0.9);
    let x_base = integrate_forward(&spec, &base, &grid).unwrap();

    let mut worst = 0.0f64;
    for _ in 0..50 {
        let mut other = base.clone();
        for v in other.values.iter_mut() {
            *v = (*v + rng.gen_range(-1e-2..1e-2)).clamp(-1.0, 1.0);
        }
        let x_other = integrate_forward(&spec, &other, &grid).unwrap();
        let num = x_base.sup_distance(&x_other);
        let den = base.sup_distance(&other);
        if den > 0.0 {
            worst = worst.max(num / den);
        }
    }
    // The constant is scenario-dependent but must stay modest for T = 1.
    assert!(worst <= 20.0, "instability ratio {worst}");
}

#[test]
fn shape_mismatches_are_rejected() {
    let spec = spec_1d(
        &[0.0, 0.5],
        &[0.0; 2],
        &[0.0; 2],
        1.0,
        (-1.0, 1.0),
        kernel_default(),
        LambdaSpec::Constant { lambda0: 0.0 },
    );
    let grid = TimeGrid::new(10, 1.0).unwrap();
    let wrong_nodes = constant_profile(&[vec![0.1], vec![0.2]], &TimeGrid::new(11, 1.0).unwrap());
    assert!(integrate_forward(&spec, &wrong_nodes, &grid).is_err());

    let omega = constant_profile(&[vec![0.1], vec![0.2]], &grid);
    let x = integrate_forward(&spec, &omega, &grid).unwrap();
    assert!(eval_cost(&spec, 5, &omega, &x, &grid).is_err());
}

use rand::Rng;
