//! Shared fixed-point machinery: the damped Picard loop and the
//! time-continuation wrapper with polygonal control assembly. The Nash and
//! Pareto solvers differ only in how the costates are swept and how the
//! projected update is formed, which is what [`FixedPointMap`] abstracts.

use std::time::Instant;

use ndarray::Array2;
use serde::Serialize;

use crate::dynamics::integrate_forward;
use crate::model::{ControlProfile, GameSpec, Profile, StateTrajectory, TimeGrid};
use crate::{Error, Result};

/// Stopping and discretization parameters of the fixed-point solvers.
#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    /// Residual tolerance ε₀ on `‖x⁺−x‖∞ + ‖ω⁺−ω‖∞`.
    pub tolerance: f64,
    /// Iteration budget per segment.
    pub max_iterations: usize,
    /// Damping ρ ∈ (0, 1]: `ω⁺ = (1−ρ) ω + ρ Φ[ω]`. The plain iteration is
    /// ρ = 1; damping is an escape hatch for horizons near the contraction
    /// limit.
    pub damping: f64,
    /// Continuation segment count M ≥ 1; must divide `grid_steps`.
    pub segments: usize,
    /// Total grid steps over `[0, T]`.
    pub grid_steps: usize,
    /// When true, the costate sweep of each iteration uses the freshly
    /// integrated state. The default (false) feeds it the previous
    /// iteration's state, i.e. the update order
    /// `φ^{k+1} ← (x^k, ω^k)`, `x^{k+1} ← ω^k`, `ω^{k+1} ← (x^{k+1}, φ^{k+1})`.
    pub adjoint_from_updated_state: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-9,
            max_iterations: 500,
            damping: 1.0,
            segments: 1,
            grid_steps: 200,
            adjoint_from_updated_state: false,
        }
    }
}

impl SolverConfig {
    /// Defaults sized to a horizon: segments short enough to contract
    /// (τ ≤ 0.25) and at least 200 grid steps, rounded so the segment count
    /// divides the grid evenly.
    pub fn for_horizon(horizon: f64) -> Self {
        let segments = (horizon / 0.25).ceil().max(1.0) as usize;
        let per_segment = 200usize.div_ceil(segments).max(2);
        SolverConfig {
            segments,
            grid_steps: segments * per_segment,
            ..SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::validation("solver.tolerance", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::validation("solver.max_iterations", "must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::validation("solver.damping", "must lie in (0, 1]"));
        }
        if self.segments == 0 {
            return Err(Error::validation("solver.segments", "must be ≥ 1"));
        }
        if self.grid_steps == 0 {
            return Err(Error::validation("solver.grid_steps", "must be ≥ 1"));
        }
        if self.grid_steps % self.segments != 0 {
            return Err(Error::validation(
                "solver.segments",
                format!(
                    "{} segments must divide the {} grid steps evenly",
                    self.segments, self.grid_steps
                ),
            ));
        }
        Ok(())
    }

    /// Grid over `[0, horizon]` with this configuration's resolution.
    pub fn grid(&self, horizon: f64) -> Result<TimeGrid> {
        TimeGrid::new(self.grid_steps, horizon)
    }
}

/// Outcome bookkeeping of one solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    /// Picard iterations, summed over continuation segments.
    pub iterations: usize,
    /// Per-iteration residuals `‖x⁺−x‖∞ + ‖ω⁺−ω‖∞`, concatenated over
    /// segments.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Continuation segments used (1 = plain fixed-point solve).
    pub segment_count: usize,
    /// Seconds spent in the solve.
    pub wall_time: f64,
    pub warnings: Vec<String>,
}

/// One projected fixed-point map: how to sweep costates and how to form the
/// projected control update from them.
pub(crate) trait FixedPointMap {
    type Costate;

    /// Backward sweep given a control/state pair (the pair may be staggered,
    /// see [`SolverConfig::adjoint_from_updated_state`]).
    fn costate(
        &self,
        spec: &GameSpec,
        controls: &ControlProfile,
        traj: &StateTrajectory,
        grid: &TimeGrid,
    ) -> Result<Self::Costate>;

    /// Projected update `Φ[ω]` (resp. `Ψ[ω]`) from the fresh state, the
    /// current controls and the swept costates. Output is admissible by
    /// construction.
    fn apply(
        &self,
        spec: &GameSpec,
        traj: &StateTrajectory,
        controls: &ControlProfile,
        costate: &Self::Costate,
        grid: &TimeGrid,
    ) -> ControlProfile;

    /// Map-specific warnings to surface in the report.
    fn warnings(&self, spec: &GameSpec) -> Vec<String>;
}

/// Picard seed: truthful expression, `ω⁰_i ≡ P_{A_i}(x0_i)`.
pub(crate) fn initial_guess(spec: &GameSpec, grid: &TimeGrid) -> ControlProfile {
    let mut omega = Profile::zeros(spec.n_agents, grid.n_nodes(), spec.dim);
    let mut v = vec![0.0; spec.dim];
    for i in 0..spec.n_agents {
        for c in 0..spec.dim {
            v[c] = spec.initial_judgments[[i, c]];
        }
        spec.action_boxes[i].project(&mut v);
        for k in 0..grid.n_nodes() {
            for c in 0..spec.dim {
                omega.values[[i, k, c]] = v[c];
            }
        }
    }
    omega
}

/// The fixed-point iteration. Always returns the last iterate; `converged`
/// in the report tells whether the stopping rule fired.
pub(crate) fn picard<M: FixedPointMap>(
    spec: &GameSpec,
    map: &M,
    config: &SolverConfig,
    grid: &TimeGrid,
) -> Result<(ControlProfile, StateTrajectory, SolveReport)> {
    let start = Instant::now();
    let mut omega = initial_guess(spec, grid);
    // The state guess mirrors the control guess; this makes degenerate fixed
    // points (consensus, truthful play) exact from the first sweep.
    let mut x_prev = omega.clone();
    let mut history = Vec::new();
    let mut converged = false;

    while history.len() < config.max_iterations {
        let (x_next, costate) = if config.adjoint_from_updated_state {
            let x_next = integrate_forward(spec, &omega, grid)?;
            let costate = map.costate(spec, &omega, &x_next, grid)?;
            (x_next, costate)
        } else {
            let costate = map.costate(spec, &omega, &x_prev, grid)?;
            let x_next = integrate_forward(spec, &omega, grid)?;
            (x_next, costate)
        };
        let mut omega_next = map.apply(spec, &x_next, &omega, &costate, grid);
        if config.damping < 1.0 {
            // Convex combination of admissible profiles stays admissible.
            let rho = config.damping;
            ndarray::Zip::from(&mut omega_next.values)
                .and(&omega.values)
                .for_each(|new, &old| *new = rho * *new + (1.0 - rho) * old);
        }
        let residual = x_next.sup_distance(&x_prev) + omega_next.sup_distance(&omega);
        history.push(residual);
        omega = omega_next;
        x_prev = x_next;
        if residual < config.tolerance {
            converged = true;
            break;
        }
    }

    // Re-integrate so the returned trajectory is exactly the state under the
    // returned control (the loop's state lags the control by one update).
    let traj = integrate_forward(spec, &omega, grid)?;
    let report = SolveReport {
        iterations: history.len(),
        residual_history: history,
        converged,
        segment_count: 1,
        wall_time: start.elapsed().as_secs_f64(),
        warnings: map.warnings(spec),
    };
    Ok((omega, traj, report))
}

/// `picard` with the non-convergence contract: hitting the iteration budget
/// is an error.
pub(crate) fn picard_converged<M: FixedPointMap>(
    spec: &GameSpec,
    map: &M,
    config: &SolverConfig,
    grid: &TimeGrid,
) -> Result<(ControlProfile, StateTrajectory, SolveReport)> {
    let (omega, traj, report) = picard(spec, map, config, grid)?;
    if !report.converged {
        return Err(Error::NonConvergence {
            segment: None,
            iterations: report.iterations,
            residual: report.residual_history.last().copied().unwrap_or(f64::NAN),
        });
    }
    Ok((omega, traj, report))
}

/// Continuation over `M` segments of length `τ = T/M`: solve the fixed point
/// on each segment with the initial state chained from the previous
/// segment's terminal state, connect the segment-boundary control values by
/// a polygonal path, and re-integrate the state under that path.
///
/// With `M = 1` this degenerates to the plain fixed-point solve.
pub(crate) fn continuation<M: FixedPointMap>(
    spec: &GameSpec,
    map: &M,
    config: &SolverConfig,
    grid: &TimeGrid,
) -> Result<(ControlProfile, StateTrajectory, SolveReport)> {
    spec.validate()?;
    config.validate()?;
    let n_seg = config.segments;
    if grid.n_steps() % n_seg != 0 {
        return Err(Error::validation(
            "solver.segments",
            format!(
                "{} segments must divide the {} grid steps evenly",
                n_seg,
                grid.n_steps()
            ),
        ));
    }
    if n_seg == 1 {
        return picard_converged(spec, map, config, grid);
    }

    let start = Instant::now();
    let n = spec.n_agents;
    let d = spec.dim;
    let steps_seg = grid.n_steps() / n_seg;
    let tau = grid.horizon() / n_seg as f64;
    let seg_grid = TimeGrid::new(steps_seg, tau)?;

    let mut initial = spec.initial_judgments.clone();
    let mut vertices: Vec<Array2<f64>> = Vec::with_capacity(n_seg + 1);
    let mut iterations = 0;
    let mut history = Vec::new();
    let mut warnings = Vec::new();

    for s in 0..n_seg {
        let seg_spec = spec.with_initial(initial.clone());
        let (w, x, rep) = picard(&seg_spec, map, config, &seg_grid)?;
        if !rep.converged {
            return Err(Error::NonConvergence {
                segment: Some(s),
                iterations: rep.iterations,
                residual: rep.residual_history.last().copied().unwrap_or(f64::NAN),
            });
        }
        iterations += rep.iterations;
        history.extend(rep.residual_history);
        for w_msg in rep.warnings {
            if !warnings.contains(&w_msg) {
                warnings.push(w_msg);
            }
        }
        vertices.push(node_values(&w, 0));
        if s == n_seg - 1 {
            vertices.push(node_values(&w, steps_seg));
        }
        initial = node_values(&x, steps_seg);
    }

    // Polygonal path through the segment-boundary control values; vertices
    // are admissible, hence so is every point on the path (boxes are convex).
    let mut omega = Profile::zeros(n, grid.n_nodes(), d);
    for k in 0..grid.n_nodes() {
        let s = (k / steps_seg).min(n_seg - 1);
        let frac = (k - s * steps_seg) as f64 / steps_seg as f64;
        for i in 0..n {
            for c in 0..d {
                omega.values[[i, k, c]] =
                    (1.0 - frac) * vertices[s][[i, c]] + frac * vertices[s + 1][[i, c]];
            }
        }
    }
    let traj = integrate_forward(spec, &omega, grid)?;

    Ok((
        omega,
        traj,
        SolveReport {
            iterations,
            residual_history: history,
            converged: true,
            segment_count: n_seg,
            wall_time: start.elapsed().as_secs_f64(),
            warnings,
        },
    ))
}

fn node_values(profile: &Profile, node: usize) -> Array2<f64> {
    let mut out = Array2::zeros((profile.n_agents(), profile.dim()));
    for i in 0..profile.n_agents() {
        for c in 0..profile.dim() {
            out[[i, c]] = profile.values[[i, node, c]];
        }
    }
    out
}
