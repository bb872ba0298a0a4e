//! Seeded random perturbations and control profiles, shared by the
//! deviation diagnostics and the test harnesses.

use ndarray::Array2;
use rand::Rng;

use crate::model::{ControlProfile, GameSpec, Profile, TimeGrid};

/// Smooth random direction on the grid with sup-norm exactly `magnitude`
/// (zero when `magnitude = 0`): a random combination of a constant, a linear
/// ramp and one sine mode per coordinate, rescaled.
pub fn smooth_direction(
    rng: &mut impl Rng,
    grid: &TimeGrid,
    dim: usize,
    magnitude: f64,
) -> Array2<f64> {
    let n_nodes = grid.n_nodes();
    let mut out = Array2::zeros((n_nodes, dim));
    let t_end = grid.horizon();
    for c in 0..dim {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        let s: f64 = rng.gen_range(-1.0..1.0);
        for k in 0..n_nodes {
            let u = grid.node(k) / t_end;
            out[[k, c]] = a + b * (2.0 * u - 1.0) + s * (2.0 * std::f64::consts::PI * u).sin();
        }
    }
    let sup = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup > 0.0 {
        out.mapv_inplace(|v| v * magnitude / sup);
    }
    out
}

/// Unilateral deviation: agent `i`'s control shifted by a smooth direction
/// and clamped back into her box. The clamp is non-expansive, so the result
/// stays within `magnitude` of the base profile in sup norm.
pub fn perturb_agent(
    rng: &mut impl Rng,
    spec: &GameSpec,
    base: &ControlProfile,
    i: usize,
    magnitude: f64,
    grid: &TimeGrid,
) -> ControlProfile {
    let eta = smooth_direction(rng, grid, spec.dim, magnitude);
    let mut out = base.clone();
    let mut v = vec![0.0; spec.dim];
    for k in 0..grid.n_nodes() {
        for c in 0..spec.dim {
            v[c] = base.values[[i, k, c]] + eta[[k, c]];
        }
        spec.action_boxes[i].project(&mut v);
        for c in 0..spec.dim {
            out.values[[i, k, c]] = v[c];
        }
    }
    out
}

/// Every agent perturbed independently, as in the dominance check.
pub fn perturb_all(
    rng: &mut impl Rng,
    spec: &GameSpec,
    base: &ControlProfile,
    magnitude: f64,
    grid: &TimeGrid,
) -> ControlProfile {
    let mut out = base.clone();
    for i in 0..spec.n_agents {
        let step = perturb_agent(rng, spec, &out, i, magnitude, grid);
        out = step;
    }
    out
}

/// Admissible profile with independent uniform node values in each agent's
/// box, shrunk toward the box center by `1 − interior_margin`.
pub fn random_admissible_controls(
    rng: &mut impl Rng,
    spec: &GameSpec,
    grid: &TimeGrid,
    interior_margin: f64,
) -> ControlProfile {
    let mut out = Profile::zeros(spec.n_agents, grid.n_nodes(), spec.dim);
    for i in 0..spec.n_agents {
        let b = &spec.action_boxes[i];
        for k in 0..grid.n_nodes() {
            for c in 0..spec.dim {
                let mid = 0.5 * (b.lo[c] + b.hi[c]);
                let half = 0.5 * (b.hi[c] - b.lo[c]) * (1.0 - interior_margin);
                out.values[[i, k, c]] = if half > 0.0 {
                    rng.gen_range(mid - half..mid + half)
                } else {
                    mid
                };
            }
        }
    }
    out
}
