//! Backward integration of the costate systems.
//!
//! Every row solves a linear backward ODE of the form
//! `−φ̇ = −A_j(t)ᵀ φ + b(t)`, `φ(T) = 0`, with the shared matrix
//! `A_j(t) = Σ_l DK(ω_l(t) − x_j(t))`; only the driver `b` differs between
//! the Nash rows `φ_{j i}` and the Pareto rows `φ_j`. Integration reuses
//! 4-stage Runge–Kutta on the reversed grid, with states and controls
//! interpolated piecewise-linearly at stage midpoints.

use ndarray::{Array2, Array3};

use crate::dynamics::{check_profile_shape, gather_node, trapezoid};
use crate::model::{AdjointField, ControlProfile, GameSpec, ParetoWeights, StateTrajectory, TimeGrid};
use crate::{Error, Result};

/// Flat node data shared by every row at one stage time.
struct PointData {
    /// States, `(agent·dim)` flat.
    x: Vec<f64>,
    /// Controls, `(agent·dim)` flat.
    omega: Vec<f64>,
    /// Population average of the controls.
    omega_bar: Vec<f64>,
    /// `∇λ(x̄)` at this time.
    lambda_grad: Vec<f64>,
}

impl PointData {
    fn empty(n: usize, d: usize) -> Self {
        PointData {
            x: vec![0.0; n * d],
            omega: vec![0.0; n * d],
            omega_bar: vec![0.0; d],
            lambda_grad: vec![0.0; d],
        }
    }

    fn fill_from_node(
        &mut self,
        spec: &GameSpec,
        controls: &ControlProfile,
        traj: &StateTrajectory,
        node: usize,
    ) {
        gather_node(traj, node, &mut self.x);
        gather_node(controls, node, &mut self.omega);
        self.finish(spec);
    }

    fn fill_mid(&mut self, spec: &GameSpec, a: &PointData, b: &PointData) {
        for p in 0..self.x.len() {
            self.x[p] = 0.5 * (a.x[p] + b.x[p]);
            self.omega[p] = 0.5 * (a.omega[p] + b.omega[p]);
        }
        self.finish(spec);
    }

    fn finish(&mut self, spec: &GameSpec) {
        let n = spec.n_agents;
        let d = spec.dim;
        let mut xbar = vec![0.0; d];
        for c in 0..d {
            let mut wb = 0.0;
            let mut xb = 0.0;
            for i in 0..n {
                wb += self.omega[i * d + c];
                xb += self.x[i * d + c];
            }
            self.omega_bar[c] = wb / n as f64;
            xbar[c] = xb / n as f64;
        }
        self.lambda_grad.fill(0.0);
        spec.lambda.grad_acc(&xbar, 1.0, &mut self.lambda_grad);
    }
}

/// Writes the driver `b(t)` of one row at one stage point.
trait Driver {
    fn driver(&self, spec: &GameSpec, row: usize, point: &PointData, out: &mut [f64]);
}

struct NashDriver {
    target: usize,
}

impl Driver for NashDriver {
    fn driver(&self, spec: &GameSpec, row: usize, point: &PointData, out: &mut [f64]) {
        let i = self.target;
        let d = spec.dim;
        if row == i {
            let delta = spec.delta[i];
            let xi = &point.x[i * d..(i + 1) * d];
            let wi = &point.omega[i * d..(i + 1) * d];
            for c in 0..d {
                out[c] = xi[c] - (delta * point.omega_bar[c] + (1.0 - delta) * wi[c]);
            }
        } else {
            out.fill(0.0);
        }
        let scale = spec.zeta[i] / spec.n_agents as f64;
        if scale != 0.0 {
            for c in 0..d {
                out[c] += scale * point.lambda_grad[c];
            }
        }
    }
}

struct ParetoDriver<'a> {
    theta: &'a [f64],
    /// `(1/N) Σ_k θ_k ζ_k`, the common weight on `∇λ`.
    signal_weight: f64,
}

impl Driver for ParetoDriver<'_> {
    fn driver(&self, spec: &GameSpec, row: usize, point: &PointData, out: &mut [f64]) {
        let d = spec.dim;
        let delta = spec.delta[row];
        let xj = &point.x[row * d..(row + 1) * d];
        let wj = &point.omega[row * d..(row + 1) * d];
        for c in 0..d {
            out[c] = self.theta[row]
                * (xj[c] - ((1.0 - delta) * wj[c] + delta * point.omega_bar[c]))
                + self.signal_weight * point.lambda_grad[c];
        }
    }
}

/// Backward RK4 sweep for the rows listed in `rows`; untouched rows stay zero.
fn backward_rows(
    spec: &GameSpec,
    controls: &ControlProfile,
    traj: &StateTrajectory,
    grid: &TimeGrid,
    rows: &[usize],
    driver: &dyn Driver,
) -> Array3<f64> {
    let n = spec.n_agents;
    let d = spec.dim;
    let m = grid.n_steps();
    let h = grid.step();

    let mut out = Array3::zeros((n, m + 1, d));
    let mut point_a = PointData::empty(n, d); // node k+1
    let mut point_mid = PointData::empty(n, d);
    let mut point_b = PointData::empty(n, d); // node k

    let mut phi = vec![0.0; d];
    let mut stage = vec![0.0; d];
    let mut s1 = vec![0.0; d];
    let mut s2 = vec![0.0; d];
    let mut s3 = vec![0.0; d];
    let mut s4 = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut z = vec![0.0; d];

    // rhs(t, φ) = A_j(t) φ − b_j(t); the backward step is RK4 with step −h.
    let rhs = |spec: &GameSpec,
               row: usize,
               point: &PointData,
               phi: &[f64],
               out: &mut [f64],
               b: &mut [f64],
               z: &mut [f64]| {
        out.fill(0.0);
        let xj = &point.x[row * d..(row + 1) * d];
        for l in 0..n {
            let wl = &point.omega[l * d..(l + 1) * d];
            for c in 0..d {
                z[c] = wl[c] - xj[c];
            }
            spec.kernel.jac_mul_acc(z, phi, out);
        }
        driver.driver(spec, row, point, b);
        for c in 0..d {
            out[c] -= b[c];
        }
    };

    for k in (0..m).rev() {
        point_a.fill_from_node(spec, controls, traj, k + 1);
        point_b.fill_from_node(spec, controls, traj, k);
        point_mid.fill_mid(spec, &point_a, &point_b);

        for &row in rows {
            for c in 0..d {
                phi[c] = out[[row, k + 1, c]];
            }
            rhs(spec, row, &point_a, &phi, &mut s1, &mut b, &mut z);
            for c in 0..d {
                stage[c] = phi[c] - 0.5 * h * s1[c];
            }
            rhs(spec, row, &point_mid, &stage, &mut s2, &mut b, &mut z);
            for c in 0..d {
                stage[c] = phi[c] - 0.5 * h * s2[c];
            }
            rhs(spec, row, &point_mid, &stage, &mut s3, &mut b, &mut z);
            for c in 0..d {
                stage[c] = phi[c] - h * s3[c];
            }
            rhs(spec, row, &point_b, &stage, &mut s4, &mut b, &mut z);
            for c in 0..d {
                out[[row, k, c]] = phi[c] - h / 6.0 * (s1[c] + 2.0 * s2[c] + 2.0 * s3[c] + s4[c]);
            }
        }
    }
    out
}

/// Costate family `φ_{j i}`, `j = 1..N`, of one target agent `i`:
/// `−φ̇_{j i} = −Σ_l DK(ω_l−x_j)ᵀ φ_{j i} + 1_{i=j}{x_i − [δ_i ω̄ + (1−δ_i) ω_i]}
///  + (ζ_i/N) ∇λ(x̄)`, `φ_{j i}(T) = 0`.
///
/// When agent `i` is insensitive to the signal (ζ_i = 0, or ∇λ ≡ 0) the
/// off-diagonal rows are identically zero and are skipped, not integrated;
/// only `φ_{i i}` is swept.
pub fn solve_adjoint_nash(
    spec: &GameSpec,
    target: usize,
    controls: &ControlProfile,
    traj: &StateTrajectory,
    grid: &TimeGrid,
) -> Result<AdjointField> {
    spec.check_agent(target)?;
    check_profile_shape(spec, controls, grid, "control profile")?;
    check_profile_shape(spec, traj, grid, "state trajectory")?;

    let all: Vec<usize>;
    let rows: &[usize] = if spec.zeta[target] == 0.0 || spec.lambda.gradient_vanishes() {
        std::slice::from_ref(&target)
    } else {
        all = (0..spec.n_agents).collect();
        &all
    };
    let rows = backward_rows(spec, controls, traj, grid, rows, &NashDriver { target });
    Ok(AdjointField::Nash { target, rows })
}

/// Shared Pareto costates `φ_j`:
/// `−φ̇_j = −Σ_l DK(ω_l−x_j)ᵀ φ_j + θ_j{x_j − [(1−δ_j) ω_j + δ_j ω̄]}
///  + (1/N) Σ_k θ_k ζ_k ∇λ(x̄)`, `φ_j(T) = 0`.
pub fn solve_adjoint_pareto(
    spec: &GameSpec,
    weights: &ParetoWeights,
    controls: &ControlProfile,
    traj: &StateTrajectory,
    grid: &TimeGrid,
) -> Result<AdjointField> {
    check_weights(spec, weights)?;
    check_profile_shape(spec, controls, grid, "control profile")?;
    check_profile_shape(spec, traj, grid, "state trajectory")?;

    let signal_weight = weights
        .theta()
        .iter()
        .zip(&spec.zeta)
        .map(|(t, z)| t * z)
        .sum::<f64>()
        / spec.n_agents as f64;
    let rows: Vec<usize> = (0..spec.n_agents).collect();
    let rows = backward_rows(
        spec,
        controls,
        traj,
        grid,
        &rows,
        &ParetoDriver {
            theta: weights.theta(),
            signal_weight,
        },
    );
    Ok(AdjointField::Pareto { rows })
}

pub(crate) fn check_weights(spec: &GameSpec, weights: &ParetoWeights) -> Result<()> {
    if weights.len() != spec.n_agents {
        return Err(Error::validation(
            "weights",
            format!("{} weights for {} agents", weights.len(), spec.n_agents),
        ));
    }
    Ok(())
}

fn check_direction(spec: &GameSpec, direction: &Array2<f64>, grid: &TimeGrid) -> Result<()> {
    if direction.nrows() != grid.n_nodes() || direction.ncols() != spec.dim {
        return Err(Error::GridMismatch(format!(
            "direction is {}×{}, grid wants {}×{}",
            direction.nrows(),
            direction.ncols(),
            grid.n_nodes(),
            spec.dim
        )));
    }
    Ok(())
}

/// Integrand of the Gâteaux derivative at one node, shared by both modes:
/// `first(ω_i−x_i, ω̄−·)` plus the costate coupling `Σ_j DK(ω_i−x_j)ᵀ φ_{j·}`.
fn gateaux_integral(
    spec: &GameSpec,
    i: usize,
    controls: &ControlProfile,
    traj: &StateTrajectory,
    rows: &Array3<f64>,
    direction: &Array2<f64>,
    grid: &TimeGrid,
    first: impl Fn(usize, &[f64], &[f64], &Array2<f64>, &mut [f64]),
) -> f64 {
    let n = spec.n_agents;
    let d = spec.dim;
    let omega_bar = crate::dynamics::population_averages(controls);
    let mut g = vec![0.0; d];
    let mut z = vec![0.0; d];
    let mut phi = vec![0.0; d];

    trapezoid(grid, |k| {
        let xi = traj.node_slice(i, k);
        let wi = controls.node_slice(i, k);
        first(k, xi, wi, &omega_bar, &mut g);
        for j in 0..n {
            let xj = traj.node_slice(j, k);
            for c in 0..d {
                z[c] = wi[c] - xj[c];
                phi[c] = rows[[j, k, c]];
            }
            spec.kernel.jac_mul_acc(&z, &phi, &mut g);
        }
        (0..d).map(|c| direction[[k, c]] * g[c]).sum()
    })
}

/// Directional derivative of `J_i` along a perturbation `v` of agent `i`'s
/// control, evaluated from the Nash costates:
/// `⟨D_i J_i, v⟩ = ∫ v·[(1−δ_i)(ω_i−x_i) + (δ_i/N)(ω̄−x_i) + Σ_j DK(ω_i−x_j)ᵀ φ_{j i}] dt`.
pub fn gateaux_nash(
    spec: &GameSpec,
    i: usize,
    controls: &ControlProfile,
    traj: &StateTrajectory,
    adjoint: &AdjointField,
    direction: &Array2<f64>,
    grid: &TimeGrid,
) -> Result<f64> {
    spec.check_agent(i)?;
    check_profile_shape(spec, controls, grid, "control profile")?;
    check_profile_shape(spec, traj, grid, "state trajectory")?;
    check_direction(spec, direction, grid)?;
    let rows = match adjoint {
        AdjointField::Nash { target, rows } if *target == i => rows,
        AdjointField::Nash { target, .. } => {
            return Err(Error::validation(
                "adjoint",
                format!("costates target agent {target}, derivative wants {i}"),
            ))
        }
        AdjointField::Pareto { .. } => {
            return Err(Error::validation("adjoint", "Nash derivative fed Pareto costates"))
        }
    };
    let delta = spec.delta[i];
    let inv_n = 1.0 / spec.n_agents as f64;
    Ok(gateaux_integral(
        spec,
        i,
        controls,
        traj,
        rows,
        direction,
        grid,
        |k, xi, wi, omega_bar, g| {
            for c in 0..g.len() {
                g[c] = (1.0 - delta) * (wi[c] - xi[c])
                    + delta * inv_n * (omega_bar[[k, c]] - xi[c]);
            }
        },
    ))
}

/// Directional derivative of the scalarized cost `J = Σ θ_k J_k` along a
/// perturbation of agent `i`'s control, from the shared Pareto costates:
/// `⟨D_i J, v⟩ = ∫ v·[θ_i(1−δ_i)(ω_i−x_i) + (1/N) Σ_j θ_j δ_j (ω̄−x_j)
///  + Σ_j DK(ω_i−x_j)ᵀ φ_j] dt`.
pub fn gateaux_pareto(
    spec: &GameSpec,
    weights: &ParetoWeights,
    i: usize,
    controls: &ControlProfile,
    traj: &StateTrajectory,
    adjoint: &AdjointField,
    direction: &Array2<f64>,
    grid: &TimeGrid,
) -> Result<f64> {
    spec.check_agent(i)?;
    check_weights(spec, weights)?;
    check_profile_shape(spec, controls, grid, "control profile")?;
    check_profile_shape(spec, traj, grid, "state trajectory")?;
    check_direction(spec, direction, grid)?;
    let rows = match adjoint {
        AdjointField::Pareto { rows } => rows,
        AdjointField::Nash { .. } => {
            return Err(Error::validation("adjoint", "Pareto derivative fed Nash costates"))
        }
    };
    let theta = weights.theta().to_vec();
    let delta = spec.delta.clone();
    let inv_n = 1.0 / spec.n_agents as f64;
    let ti = theta[i];
    let di = spec.delta[i];
    let n = spec.n_agents;
    let traj_ref = traj;
    Ok(gateaux_integral(
        spec,
        i,
        controls,
        traj,
        rows,
        direction,
        grid,
        move |k, xi, wi, omega_bar, g| {
            for c in 0..g.len() {
                g[c] = ti * (1.0 - di) * (wi[c] - xi[c]);
                let mut mix = 0.0;
                for j in 0..n {
                    mix += theta[j] * delta[j] * (omega_bar[[k, c]] - traj_ref.node_slice(j, k)[c]);
                }
                g[c] += inv_n * mix;
            }
        },
    ))
}
