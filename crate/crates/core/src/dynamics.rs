//! Forward integration of the judgment dynamics and the cost functionals.
//!
//! The state system is `ẋ_i = Σ_j K(ω_j − x_i)` with `x(0)` given. It is
//! integrated by classical 4-stage Runge–Kutta on the grid, with the
//! controls evaluated at stage times by piecewise-linear interpolation
//! between nodes. All integrals use the trapezoidal rule on the same grid,
//! so costs and dynamics share node values.

use ndarray::Array2;

use crate::model::{ControlProfile, GameSpec, LambdaSpec, Profile, StateTrajectory, TimeGrid};
use crate::{Error, Result};

pub(crate) fn check_profile_shape(
    spec: &GameSpec,
    profile: &Profile,
    grid: &TimeGrid,
    what: &str,
) -> Result<()> {
    if profile.n_agents() != spec.n_agents || profile.dim() != spec.dim {
        return Err(Error::GridMismatch(format!(
            "{what} is {}×{} agents×coords, spec wants {}×{}",
            profile.n_agents(),
            profile.dim(),
            spec.n_agents,
            spec.dim
        )));
    }
    if profile.n_nodes() != grid.n_nodes() {
        return Err(Error::GridMismatch(format!(
            "{what} has {} nodes, grid has {}",
            profile.n_nodes(),
            grid.n_nodes()
        )));
    }
    Ok(())
}

/// `out[i·d..][c] = Σ_j K(ω_j − x_i)[c]` for flat `(agent·dim)` buffers.
fn drift(spec: &GameSpec, x: &[f64], omega: &[f64], out: &mut [f64], z: &mut [f64]) {
    let n = spec.n_agents;
    let d = spec.dim;
    out.fill(0.0);
    for i in 0..n {
        let xi = &x[i * d..(i + 1) * d];
        for j in 0..n {
            let wj = &omega[j * d..(j + 1) * d];
            for c in 0..d {
                z[c] = wj[c] - xi[c];
            }
            let a = spec.kernel.eval_a(z);
            if a != 0.0 {
                let oi = &mut out[i * d..(i + 1) * d];
                for c in 0..d {
                    oi[c] += a * z[c];
                }
            }
        }
    }
}

/// Gather one grid node of a profile into a flat `(agent·dim)` buffer.
pub(crate) fn gather_node(profile: &Profile, node: usize, out: &mut [f64]) {
    let d = profile.dim();
    for i in 0..profile.n_agents() {
        out[i * d..(i + 1) * d].copy_from_slice(profile.node_slice(i, node));
    }
}

/// Integrate the state system under the given controls.
pub fn integrate_forward(
    spec: &GameSpec,
    controls: &ControlProfile,
    grid: &TimeGrid,
) -> Result<StateTrajectory> {
    check_profile_shape(spec, controls, grid, "control profile")?;
    let n = spec.n_agents;
    let d = spec.dim;
    let nd = n * d;
    let m = grid.n_steps();
    let h = grid.step();

    let mut traj = Profile::zeros(n, m + 1, d);
    let mut x: Vec<f64> = spec.initial_judgments.iter().copied().collect();
    let mut k1 = vec![0.0; nd];
    let mut k2 = vec![0.0; nd];
    let mut k3 = vec![0.0; nd];
    let mut k4 = vec![0.0; nd];
    let mut xs = vec![0.0; nd];
    let mut w_a = vec![0.0; nd];
    let mut w_mid = vec![0.0; nd];
    let mut w_b = vec![0.0; nd];
    let mut z = vec![0.0; d];

    let write_node = |traj: &mut Profile, k: usize, x: &[f64]| {
        for i in 0..n {
            for c in 0..d {
                traj.values[[i, k, c]] = x[i * d + c];
            }
        }
    };
    write_node(&mut traj, 0, &x);

    for k in 0..m {
        gather_node(controls, k, &mut w_a);
        gather_node(controls, k + 1, &mut w_b);
        for p in 0..nd {
            w_mid[p] = 0.5 * (w_a[p] + w_b[p]);
        }

        drift(spec, &x, &w_a, &mut k1, &mut z);
        for p in 0..nd {
            xs[p] = x[p] + 0.5 * h * k1[p];
        }
        drift(spec, &xs, &w_mid, &mut k2, &mut z);
        for p in 0..nd {
            xs[p] = x[p] + 0.5 * h * k2[p];
        }
        drift(spec, &xs, &w_mid, &mut k3, &mut z);
        for p in 0..nd {
            xs[p] = x[p] + h * k3[p];
        }
        drift(spec, &xs, &w_b, &mut k4, &mut z);
        for p in 0..nd {
            x[p] += h / 6.0 * (k1[p] + 2.0 * k2[p] + 2.0 * k3[p] + k4[p]);
        }
        write_node(&mut traj, k + 1, &x);
    }
    Ok(traj)
}

/// Arithmetic mean over agents at each grid node, as an `(n_nodes × d)` array.
pub fn population_averages(profile: &Profile) -> Array2<f64> {
    let n = profile.n_agents() as f64;
    let mut out = Array2::zeros((profile.n_nodes(), profile.dim()));
    for i in 0..profile.n_agents() {
        for k in 0..profile.n_nodes() {
            for c in 0..profile.dim() {
                out[[k, c]] += profile.values[[i, k, c]];
            }
        }
    }
    out.mapv_inplace(|v| v / n);
    out
}

/// Expected event count `I(ω) = ∫₀ᵀ λ(x̄(t)) dt`, trapezoidal rule.
///
/// For the affine-decreasing signal the baseline part is integrated in
/// closed form (`λ₀·T`), so λ₀ enters the value as an exact additive shift.
pub fn eval_intensity_integral(spec: &GameSpec, traj: &StateTrajectory, grid: &TimeGrid) -> Result<f64> {
    match spec.lambda {
        LambdaSpec::AffineDecreasing { .. } | LambdaSpec::Tabulated { .. } if spec.dim != 1 => {
            return Err(Error::validation("lambda", "one-dimensional intensity with d ≠ 1"));
        }
        _ => {}
    }
    let xbar = population_averages(traj);
    let t = grid.horizon();
    Ok(match spec.lambda {
        LambdaSpec::Constant { lambda0 } => lambda0 * t,
        LambdaSpec::AffineDecreasing { lambda0, lambda1 } => {
            let core = trapezoid(grid, |k| 1.0 - xbar[[k, 0]]);
            lambda0 * t + lambda1 * core
        }
        LambdaSpec::Tabulated { .. } => {
            trapezoid(grid, |k| spec.lambda.eval(xbar.row(k).as_slice().unwrap()))
        }
    })
}

/// Trapezoidal rule for a node-sampled integrand.
pub(crate) fn trapezoid(grid: &TimeGrid, mut f: impl FnMut(usize) -> f64) -> f64 {
    let m = grid.n_steps();
    let mut acc = 0.5 * (f(0) + f(m));
    for k in 1..m {
        acc += f(k);
    }
    acc * grid.step()
}

/// Running cost of agent `i`:
/// `J_i = ∫ [ (1−δ_i)/2 |ω_i−x_i|² + δ_i/2 |ω̄−x_i|² ] dt + ζ_i I(ω)`.
pub fn eval_cost(
    spec: &GameSpec,
    i: usize,
    controls: &ControlProfile,
    traj: &StateTrajectory,
    grid: &TimeGrid,
) -> Result<f64> {
    spec.check_agent(i)?;
    check_profile_shape(spec, controls, grid, "control profile")?;
    check_profile_shape(spec, traj, grid, "state trajectory")?;
    let d = spec.dim;
    let delta = spec.delta[i];
    let omega_bar = population_averages(controls);

    let quad = trapezoid(grid, |k| {
        let xi = traj.node_slice(i, k);
        let wi = controls.node_slice(i, k);
        let mut own = 0.0;
        let mut avg = 0.0;
        for c in 0..d {
            let e = wi[c] - xi[c];
            own += e * e;
            let f = omega_bar[[k, c]] - xi[c];
            avg += f * f;
        }
        0.5 * (1.0 - delta) * own + 0.5 * delta * avg
    });

    let zeta = spec.zeta[i];
    if zeta == 0.0 {
        Ok(quad)
    } else {
        Ok(quad + zeta * eval_intensity_integral(spec, traj, grid)?)
    }
}

/// All agents' costs in one pass.
pub fn eval_costs(
    spec: &GameSpec,
    controls: &ControlProfile,
    traj: &StateTrajectory,
    grid: &TimeGrid,
) -> Result<Vec<f64>> {
    (0..spec.n_agents)
        .map(|i| eval_cost(spec, i, controls, traj, grid))
        .collect()
}
