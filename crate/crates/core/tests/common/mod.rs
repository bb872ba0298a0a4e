//! Shared scenario builders for the integration tests.

use dissim_core::model::{
    ActionBox, ControlProfile, GameSpec, KernelSpec, LambdaSpec, Profile, TimeGrid,
};
use ndarray::Array2;

pub fn kernel_default() -> KernelSpec {
    KernelSpec::new(0.1, 0.5).unwrap()
}

/// One-dimensional game with a common `[lo, hi]` box for everyone.
pub fn spec_1d(
    x0: &[f64],
    delta: &[f64],
    zeta: &[f64],
    horizon: f64,
    (lo, hi): (f64, f64),
    kernel: KernelSpec,
    lambda: LambdaSpec,
) -> GameSpec {
    let n = x0.len();
    let spec = GameSpec {
        n_agents: n,
        dim: 1,
        horizon,
        delta: delta.to_vec(),
        zeta: zeta.to_vec(),
        action_boxes: vec![ActionBox::cube(lo, hi, 1); n],
        kernel,
        lambda,
        initial_judgments: Array2::from_shape_vec((n, 1), x0.to_vec()).unwrap(),
    };
    spec.validate().unwrap();
    spec
}

/// Control profile constant in time, one value row per agent.
pub fn constant_profile(values: &[Vec<f64>], grid: &TimeGrid) -> ControlProfile {
    let n = values.len();
    let d = values[0].len();
    let mut p = Profile::zeros(n, grid.n_nodes(), d);
    for i in 0..n {
        for k in 0..grid.n_nodes() {
            for c in 0..d {
                p.values[[i, k, c]] = values[i][c];
            }
        }
    }
    p
}

/// Piecewise-linear refinement of a node-sampled profile by an integer
/// factor; reproduces the same underlying control on the finer grid.
pub fn refine_profile(p: &Profile, factor: usize) -> Profile {
    let n = p.n_agents();
    let d = p.dim();
    let coarse_steps = p.n_nodes() - 1;
    let mut out = Profile::zeros(n, coarse_steps * factor + 1, d);
    for i in 0..n {
        for kf in 0..=coarse_steps * factor {
            let k = (kf / factor).min(coarse_steps - 1);
            let frac = (kf - k * factor) as f64 / factor as f64;
            for c in 0..d {
                out.values[[i, kf, c]] =
                    (1.0 - frac) * p.values[[i, k, c]] + frac * p.values[[i, k + 1, c]];
            }
        }
    }
    out
}

/// Uniform random node values inside `[lo, hi]` scaled boxes.
pub fn random_profile(
    rng: &mut impl rand::Rng,
    n: usize,
    d: usize,
    grid: &TimeGrid,
    lo: f64,
    hi: f64,
) -> Profile {
    let mut p = Profile::zeros(n, grid.n_nodes(), d);
    for v in p.values.iter_mut() {
        *v = rng.gen_range(lo..hi);
    }
    p
}

/// Random profile that is smooth in time (offset plus one sine mode per
/// agent/coordinate), valued inside `[lo, hi]`. Needed wherever a refinement
/// oracle is used: grid refinement only converges for resolvable controls.
pub fn smooth_random_profile(
    rng: &mut impl rand::Rng,
    n: usize,
    d: usize,
    grid: &TimeGrid,
    lo: f64,
    hi: f64,
) -> Profile {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut p = Profile::zeros(n, grid.n_nodes(), d);
    for i in 0..n {
        for c in 0..d {
            let center = mid + 0.6 * half * rng.gen_range(-1.0..1.0);
            let amp = 0.35 * half * rng.gen_range(0.0..1.0);
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            for k in 0..grid.n_nodes() {
                let u = grid.node(k) / grid.horizon();
                p.values[[i, k, c]] =
                    center + amp * (std::f64::consts::TAU * u + phase).sin();
            }
        }
    }
    p
}
