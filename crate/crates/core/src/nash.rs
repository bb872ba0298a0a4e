//! Open-loop Nash equilibria: the projected fixed-point map Φ, the Picard
//! solver on short horizons, the continuation method for long ones, and the
//! deviation/terminal diagnostics.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adjoint::solve_adjoint_nash;
use crate::dynamics::{eval_cost, integrate_forward, population_averages};
use crate::model::{AdjointField, ControlProfile, GameSpec, Profile, StateTrajectory, TimeGrid};
use crate::sampling::perturb_agent;
use crate::solver::{continuation, picard_converged, FixedPointMap};
use crate::Result;

pub use crate::solver::{SolveReport, SolverConfig};

pub(crate) struct NashMap;

impl NashMap {
    fn contraction_warnings(spec: &GameSpec) -> Vec<String> {
        let n = spec.n_agents as f64;
        spec.delta
            .iter()
            .enumerate()
            .filter(|(_, &d)| d.abs() >= n * (1.0 - d).abs())
            .map(|(i, &d)| {
                format!("contraction condition |δ|<N|1−δ| fails for agent {i} (δ = {d})")
            })
            .collect()
    }
}

impl FixedPointMap for NashMap {
    type Costate = Vec<AdjointField>;

    fn costate(
        &self,
        spec: &GameSpec,
        controls: &ControlProfile,
        traj: &StateTrajectory,
        grid: &TimeGrid,
    ) -> Result<Self::Costate> {
        (0..spec.n_agents)
            .map(|i| solve_adjoint_nash(spec, i, controls, traj, grid))
            .collect()
    }

    fn apply(
        &self,
        spec: &GameSpec,
        traj: &StateTrajectory,
        controls: &ControlProfile,
        costate: &Self::Costate,
        grid: &TimeGrid,
    ) -> ControlProfile {
        let n = spec.n_agents;
        let d = spec.dim;
        let omega_bar = population_averages(controls);
        let mut out = Profile::zeros(n, grid.n_nodes(), d);
        let mut val = vec![0.0; d];
        let mut coupling = vec![0.0; d];
        let mut z = vec![0.0; d];
        let mut phi = vec![0.0; d];

        for i in 0..n {
            let rows = costate[i].rows();
            let delta = spec.delta[i];
            let mean_coef = delta / ((1.0 - delta) * n as f64);
            let inv = 1.0 / (1.0 - delta);
            for k in 0..grid.n_nodes() {
                let xi = traj.node_slice(i, k);
                let wi = controls.node_slice(i, k);
                coupling.fill(0.0);
                for j in 0..n {
                    let xj = traj.node_slice(j, k);
                    for c in 0..d {
                        z[c] = wi[c] - xj[c];
                        phi[c] = rows[[j, k, c]];
                    }
                    spec.kernel.jac_mul_acc(&z, &phi, &mut coupling);
                }
                for c in 0..d {
                    val[c] = xi[c] - mean_coef * (omega_bar[[k, c]] - xi[c]) - inv * coupling[c];
                }
                spec.action_boxes[i].project(&mut val);
                for c in 0..d {
                    out.values[[i, k, c]] = val[c];
                }
            }
        }
        out
    }

    fn warnings(&self, spec: &GameSpec) -> Vec<String> {
        NashMap::contraction_warnings(spec)
    }
}

/// One application of the fixed-point map:
/// `Φ[ω]_i = P_{A_i}( x_i − δ_i/((1−δ_i)N) (ω̄ − x_i) − 1/(1−δ_i) Σ_j DK(ω_i−x_j)ᵀ φ_{j i} )`,
/// where `x` is the trajectory of `ω` and the costates are swept from that
/// same pair.
pub fn phi_map(spec: &GameSpec, controls: &ControlProfile, grid: &TimeGrid) -> Result<ControlProfile> {
    spec.validate()?;
    let traj = integrate_forward(spec, controls, grid)?;
    let map = NashMap;
    let costate = map.costate(spec, controls, &traj, grid)?;
    Ok(map.apply(spec, &traj, controls, &costate, grid))
}

/// Damped Picard iteration `ω⁺ = (1−ρ) ω + ρ Φ[ω]` from the truthful seed
/// until `‖x⁺−x‖∞ + ‖ω⁺−ω‖∞ < ε₀`. Intended for horizons in the contraction
/// regime; longer horizons go through [`solve_continuation`].
pub fn solve_fixed_point(
    spec: &GameSpec,
    config: &SolverConfig,
    grid: &TimeGrid,
) -> Result<(ControlProfile, StateTrajectory, SolveReport)> {
    spec.validate()?;
    config.validate()?;
    picard_converged(spec, &NashMap, config, grid)
}

/// Continuation solve: fixed-point solves on `M` chained segments, polygonal
/// control through the segment boundaries, state re-integrated under it.
pub fn solve_continuation(
    spec: &GameSpec,
    config: &SolverConfig,
    grid: &TimeGrid,
) -> Result<(ControlProfile, StateTrajectory, SolveReport)> {
    continuation(spec, &NashMap, config, grid)
}

/// Outcome of the unilateral-deviation probe for one agent.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationReport {
    pub agent: usize,
    pub trials: usize,
    pub magnitude: f64,
    /// Equilibrium cost of the probed agent.
    pub base_cost: f64,
    /// Smallest `J_i(perturbed) − J_i(equilibrium)` over the trials.
    pub min_delta: f64,
    /// Tolerance `1e−4 (1 + |J_i|)` under which the minimum may dip.
    pub slack: f64,
    pub pass: bool,
}

/// Probes the Nash property of agent `i`: random admissible unilateral
/// deviations of sup-norm ≤ `magnitude` must not improve her cost beyond
/// the slack `1e−4 (1 + |J_i|)`.
pub fn best_response_check(
    spec: &GameSpec,
    i: usize,
    equilibrium: &ControlProfile,
    grid: &TimeGrid,
    n_trials: usize,
    magnitude: f64,
    seed: u64,
) -> Result<DeviationReport> {
    spec.check_agent(i)?;
    let traj = integrate_forward(spec, equilibrium, grid)?;
    let base_cost = eval_cost(spec, i, equilibrium, &traj, grid)?;
    let slack = 1e-4 * (1.0 + base_cost.abs());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_delta = f64::INFINITY;
    for _ in 0..n_trials {
        let trial = perturb_agent(&mut rng, spec, equilibrium, i, magnitude, grid);
        let trial_traj = integrate_forward(spec, &trial, grid)?;
        let cost = eval_cost(spec, i, &trial, &trial_traj, grid)?;
        min_delta = min_delta.min(cost - base_cost);
    }
    if n_trials == 0 {
        min_delta = 0.0;
    }
    Ok(DeviationReport {
        agent: i,
        trials: n_trials,
        magnitude,
        base_cost,
        min_delta,
        slack,
        pass: min_delta >= -slack,
    })
}

/// Terminal classification of one agent.
#[derive(Debug, Clone, Serialize)]
pub struct AgentTerminal {
    pub agent: usize,
    /// True when the terminal expressed judgment sits farther than the
    /// tolerance from every box face.
    pub interior: bool,
    pub x_terminal: Vec<f64>,
    pub omega_terminal: Vec<f64>,
    /// `|x_i(T) − ω_i(T)|∞`.
    pub judgment_gap: f64,
    /// `|a_i − mean(a)|∞` with `a_i = ω_i(T)`.
    pub dist_to_mean: f64,
}

/// Terminal-consensus diagnostic across the population.
#[derive(Debug, Clone, Serialize)]
pub struct ConsensusReport {
    pub tolerance: f64,
    /// Mean of the terminal expressed judgments over all agents.
    pub mean_terminal: Vec<f64>,
    pub agents: Vec<AgentTerminal>,
    /// True when every interior agent sits within tolerance of the mean and
    /// of her own true judgment.
    pub interior_consistent: bool,
}

/// Classifies each agent's terminal pair `(x_i(T), ω_i(T))` as
/// boundary-pinned or interior. Interior agents of a long-horizon
/// equilibrium should agree with the population mean and with their own
/// true judgment; boundary agents may legitimately keep `x ≠ ω`.
pub fn check_terminal_consensus(
    spec: &GameSpec,
    controls: &ControlProfile,
    traj: &StateTrajectory,
    tolerance: f64,
) -> ConsensusReport {
    let n = spec.n_agents;
    let d = spec.dim;
    let last = controls.n_nodes() - 1;

    let mut mean = vec![0.0; d];
    for i in 0..n {
        for c in 0..d {
            mean[c] += controls.values[[i, last, c]];
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let mut agents = Vec::with_capacity(n);
    let mut interior_consistent = true;
    for i in 0..n {
        let omega_t: Vec<f64> = (0..d).map(|c| controls.values[[i, last, c]]).collect();
        let x_t: Vec<f64> = (0..d).map(|c| traj.values[[i, last, c]]).collect();
        let interior = spec.action_boxes[i].boundary_margin(&omega_t) > tolerance;
        let judgment_gap = omega_t
            .iter()
            .zip(&x_t)
            .fold(0.0f64, |m, (w, x)| m.max((w - x).abs()));
        let dist_to_mean = omega_t
            .iter()
            .zip(&mean)
            .fold(0.0f64, |m, (w, a)| m.max((w - a).abs()));
        if interior && (judgment_gap > tolerance || dist_to_mean > tolerance) {
            interior_consistent = false;
        }
        agents.push(AgentTerminal {
            agent: i,
            interior,
            x_terminal: x_t,
            omega_terminal: omega_t,
            judgment_gap,
            dist_to_mean,
        });
    }
    ConsensusReport {
        tolerance,
        mean_terminal: mean,
        agents,
        interior_consistent,
    }
}

/// Largest polygon slope `|v_{s+1} − v_s|∞ / τ` of a continuation control;
/// bounded uniformly across τ refinements (equicontinuity of the polygonal
/// family).
pub fn polygon_max_slope(controls: &ControlProfile, grid: &TimeGrid, segments: usize) -> f64 {
    let steps_seg = grid.n_steps() / segments;
    let tau = grid.horizon() / segments as f64;
    let mut worst = 0.0f64;
    for s in 0..segments {
        let (a, b) = (s * steps_seg, (s + 1) * steps_seg);
        for i in 0..controls.n_agents() {
            for c in 0..controls.dim() {
                let jump = (controls.values[[i, b, c]] - controls.values[[i, a, c]]).abs();
                worst = worst.max(jump / tau);
            }
        }
    }
    worst
}

/// Convenience: `Φ`-residual `‖ω − Φ[ω]‖∞` of a candidate profile.
pub fn fixed_point_residual(spec: &GameSpec, controls: &ControlProfile, grid: &TimeGrid) -> Result<f64> {
    let image = phi_map(spec, controls, grid)?;
    Ok(image.sup_distance(controls))
}

/// Direction type used by the Gâteaux-derivative routines: node-sampled
/// perturbation of a single agent's control.
pub type Direction = Array2<f64>;
