//! Central-difference directional derivatives of the cost functionals,
//! computed with fresh forward integrations.

use dissim_core::dynamics::{eval_cost, integrate_forward};
use dissim_core::model::{ControlProfile, GameSpec, ParetoWeights, TimeGrid};
use ndarray::Array2;

use crate::Result;

/// Finite-difference derivative along one direction.
#[derive(Debug, Clone, Copy)]
pub struct FdGateaux {
    /// `(J(ω + h v) − J(ω − h v)) / (2h)` with the clipped direction.
    pub value: f64,
    /// Nodes at which the direction was zeroed because either perturbation
    /// endpoint would have left the agent's box.
    pub clipped_nodes: usize,
}

/// Zero the direction wherever `ω ± h v` leaves the box, so both
/// perturbation endpoints stay admissible; reports how much was clipped.
fn clip_direction(
    spec: &GameSpec,
    i: usize,
    controls: &ControlProfile,
    direction: &Array2<f64>,
    step: f64,
) -> (Array2<f64>, usize) {
    let b = &spec.action_boxes[i];
    let mut v = direction.clone();
    let mut clipped = 0;
    for k in 0..v.nrows() {
        let mut bad = false;
        for c in 0..v.ncols() {
            let w = controls.values[[i, k, c]];
            let reach = step * v[[k, c]].abs();
            if w + reach > b.hi[c] || w - reach < b.lo[c] {
                bad = true;
            }
        }
        if bad {
            for c in 0..v.ncols() {
                v[[k, c]] = 0.0;
            }
            clipped += 1;
        }
    }
    (v, clipped)
}

fn shifted(controls: &ControlProfile, i: usize, v: &Array2<f64>, h: f64) -> ControlProfile {
    let mut out = controls.clone();
    for k in 0..v.nrows() {
        for c in 0..v.ncols() {
            out.values[[i, k, c]] += h * v[[k, c]];
        }
    }
    out
}

/// Central difference of `J_i` along a perturbation of agent `i`'s control.
pub fn fd_gateaux(
    spec: &GameSpec,
    i: usize,
    controls: &ControlProfile,
    direction: &Array2<f64>,
    step: f64,
    grid: &TimeGrid,
) -> Result<FdGateaux> {
    let (v, clipped_nodes) = clip_direction(spec, i, controls, direction, step);
    let plus = shifted(controls, i, &v, step);
    let minus = shifted(controls, i, &v, -step);
    let x_plus = integrate_forward(spec, &plus, grid)?;
    let x_minus = integrate_forward(spec, &minus, grid)?;
    let j_plus = eval_cost(spec, i, &plus, &x_plus, grid)?;
    let j_minus = eval_cost(spec, i, &minus, &x_minus, grid)?;
    Ok(FdGateaux {
        value: (j_plus - j_minus) / (2.0 * step),
        clipped_nodes,
    })
}

/// Central difference of the scalarized cost `Σ θ_k J_k` along a
/// perturbation of agent `i`'s control.
pub fn fd_gateaux_weighted(
    spec: &GameSpec,
    weights: &ParetoWeights,
    i: usize,
    controls: &ControlProfile,
    direction: &Array2<f64>,
    step: f64,
    grid: &TimeGrid,
) -> Result<FdGateaux> {
    let (v, clipped_nodes) = clip_direction(spec, i, controls, direction, step);
    let plus = shifted(controls, i, &v, step);
    let minus = shifted(controls, i, &v, -step);
    let x_plus = integrate_forward(spec, &plus, grid)?;
    let x_minus = integrate_forward(spec, &minus, grid)?;
    let mut j_plus = 0.0;
    let mut j_minus = 0.0;
    for (k, &theta) in weights.theta().iter().enumerate() {
        j_plus += theta * eval_cost(spec, k, &plus, &x_plus, grid)?;
        j_minus += theta * eval_cost(spec, k, &minus, &x_minus, grid)?;
    }
    Ok(FdGateaux {
        value: (j_plus - j_minus) / (2.0 * step),
        clipped_nodes,
    })
}
