//! Domain types: population description, interaction kernel, action boxes,
//! time grid and the grid-sampled control/state/costate containers.

use ndarray::{Array2, Array3, ArrayView1};

use crate::{Error, Result};

/// Slack used when checking confinement-type bounds. Chained continuation
/// segments restart from integrated states that can sit a few ulps outside
/// the exact hypercube.
pub const CONFINEMENT_SLACK: f64 = 1e-9;

/// Compactly supported bump kernel `K(z) = a(z) z` with
/// `a(z) = exp(α/R²) · exp(α/(|z|²−R²))` inside `|z| < R` and `0` outside.
///
/// The normalization makes `a(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    /// Bump sharpness α > 0.
    pub alpha: f64,
    /// Interaction radius R > 0 (judgment units).
    pub radius: f64,
}

impl KernelSpec {
    pub fn new(alpha: f64, radius: f64) -> Result<Self> {
        let k = KernelSpec { alpha, radius };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::validation("kernel.alpha", "must be a positive real"));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::validation("kernel.radius", "must be a positive real"));
        }
        Ok(())
    }

    /// Bump weight `a(z) ∈ [0, 1]`; total function, zero on `|z| ≥ R`.
    pub fn eval_a(&self, z: &[f64]) -> f64 {
        let u: f64 = z.iter().map(|v| v * v).sum();
        let r_sq = self.radius * self.radius;
        if u < r_sq {
            (self.alpha / r_sq + self.alpha / (u - r_sq)).exp()
        } else {
            0.0
        }
    }

    /// Kernel value `K(z) = a(z) z`, written into `out`.
    pub fn eval_k(&self, z: &[f64], out: &mut [f64]) {
        let a = self.eval_a(z);
        for (o, &zi) in out.iter_mut().zip(z) {
            *o = a * zi;
        }
    }

    /// Radial factor `g` of the bump gradient, `∇a(z) = g · z`, with
    /// `g = −2 α a(z) / (|z|² − R²)²` inside the support and `0` outside.
    fn grad_a_factor(&self, z: &[f64]) -> (f64, f64) {
        let u: f64 = z.iter().map(|v| v * v).sum();
        let r_sq = self.radius * self.radius;
        if u < r_sq {
            let a = (self.alpha / r_sq + self.alpha / (u - r_sq)).exp();
            let den = u - r_sq;
            (a, -2.0 * self.alpha * a / (den * den))
        } else {
            (0.0, 0.0)
        }
    }

    /// Jacobian `DK(z) = a(z) I + z ∇a(z)ᵀ` as a dense `d×d` matrix.
    ///
    /// `DK` is symmetric since `∇a` is radial. On and outside the support
    /// boundary the matrix is zero; the bump vanishes there to all orders,
    /// so this is the continuous extension.
    pub fn jacobian_k(&self, z: &[f64]) -> Array2<f64> {
        let d = z.len();
        let (a, g) = self.grad_a_factor(z);
        let mut m = Array2::zeros((d, d));
        for r in 0..d {
            for c in 0..d {
                m[[r, c]] = g * z[r] * z[c] + if r == c { a } else { 0.0 };
            }
        }
        m
    }

    /// Accumulate `DK(z)ᵀ v` into `out` (`out += DK(z)ᵀ v`).
    ///
    /// Uses the rank-one structure `DK(z)ᵀ v = a v + g (z·v) z`; no matrix
    /// is materialized. This is the hot path of the costate sweeps.
    pub fn jac_mul_acc(&self, z: &[f64], v: &[f64], out: &mut [f64]) {
        let (a, g) = self.grad_a_factor(z);
        if a == 0.0 {
            return;
        }
        let zv: f64 = z.iter().zip(v).map(|(zi, vi)| zi * vi).sum();
        for ((o, &zi), &vi) in out.iter_mut().zip(z).zip(v) {
            *o += a * vi + g * zv * zi;
        }
    }
}

/// Exogenous information signal `λ(x̄)` and its gradient.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaSpec {
    /// `λ(x̄) = λ₀ + λ₁ (1 − x̄)`; one-dimensional judgments only.
    /// The gradient is the constant `−λ₁`, independent of `λ₀`.
    AffineDecreasing { lambda0: f64, lambda1: f64 },
    /// `λ ≡ λ₀`; any dimension, zero gradient.
    Constant { lambda0: f64 },
    /// Piecewise-linear table over one-dimensional `x̄`; clamped outside the
    /// knot range (zero slope there).
    Tabulated { knots: Vec<(f64, f64)> },
}

impl LambdaSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            LambdaSpec::AffineDecreasing { lambda0, lambda1 } => {
                if *lambda0 < 0.0 || *lambda1 < 0.0 {
                    return Err(Error::validation("lambda", "lambda0 and lambda1 must be ≥ 0"));
                }
                if dim != 1 {
                    return Err(Error::validation(
                        "lambda",
                        "affine-decreasing intensity requires d = 1",
                    ));
                }
            }
            LambdaSpec::Constant { lambda0 } => {
                if *lambda0 < 0.0 {
                    return Err(Error::validation("lambda", "lambda0 must be ≥ 0"));
                }
            }
            LambdaSpec::Tabulated { knots } => {
                if dim != 1 {
                    return Err(Error::validation("lambda", "tabulated intensity requires d = 1"));
                }
                if knots.len() < 2 {
                    return Err(Error::validation("lambda", "table needs at least two knots"));
                }
                if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::validation("lambda", "knot abscissae must be strictly increasing"));
                }
                if knots.iter().any(|&(_, v)| v < 0.0) {
                    return Err(Error::validation("lambda", "intensity values must be ≥ 0"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, xbar: &[f64]) -> f64 {
        match self {
            LambdaSpec::AffineDecreasing { lambda0, lambda1 } => lambda0 + lambda1 * (1.0 - xbar[0]),
            LambdaSpec::Constant { lambda0 } => *lambda0,
            LambdaSpec::Tabulated { knots } => {
                let x = xbar[0];
                if x <= knots[0].0 {
                    return knots[0].1;
                }
                if x >= knots[knots.len() - 1].0 {
                    return knots[knots.len() - 1].1;
                }
                let j = knots.partition_point(|&(k, _)| k <= x);
                let (x0, v0) = knots[j - 1];
                let (x1, v1) = knots[j];
                v0 + (v1 - v0) * (x - x0) / (x1 - x0)
            }
        }
    }

    /// Accumulate `c · ∇λ(x̄)` into `out`.
    pub fn grad_acc(&self, xbar: &[f64], c: f64, out: &mut [f64]) {
        match self {
            LambdaSpec::AffineDecreasing { lambda1, .. } => out[0] += c * (-lambda1),
            LambdaSpec::Constant { .. } => {}
            LambdaSpec::Tabulated { knots } => {
                let x = xbar[0];
                if x <= knots[0].0 || x >= knots[knots.len() - 1].0 {
                    return;
                }
                let j = knots.partition_point(|&(k, _)| k <= x);
                let (x0, v0) = knots[j - 1];
                let (x1, v1) = knots[j];
                out[0] += c * (v1 - v0) / (x1 - x0);
            }
        }
    }

    /// True when `∇λ ≡ 0`, i.e. the signal exerts no force on anyone.
    pub fn gradient_vanishes(&self) -> bool {
        match self {
            LambdaSpec::AffineDecreasing { lambda1, .. } => *lambda1 == 0.0,
            LambdaSpec::Constant { .. } => true,
            LambdaSpec::Tabulated { knots } => knots.windows(2).all(|w| w[0].1 == w[1].1),
        }
    }
}

/// Closed axis-aligned box `[lo, hi]^d`, the admissible set for one agent's
/// expressed judgment.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ActionBox {
    /// Box with the same interval on every axis.
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Self {
        ActionBox {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.lo.len() != dim || self.hi.len() != dim {
            return Err(Error::validation("action_box", "bounds must have length d"));
        }
        for c in 0..dim {
            if !self.lo[c].is_finite() || !self.hi[c].is_finite() || self.lo[c] > self.hi[c] {
                return Err(Error::validation(
                    "action_box",
                    format!("empty or unbounded interval on axis {c}"),
                ));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Componentwise clamp into the box; idempotent and non-expansive.
    pub fn project(&self, v: &mut [f64]) {
        for c in 0..v.len() {
            v[c] = v[c].clamp(self.lo[c], self.hi[c]);
        }
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.iter()
            .enumerate()
            .all(|(c, &x)| x >= self.lo[c] - tol && x <= self.hi[c] + tol)
    }

    /// Distance of `v` to the box boundary along the nearest axis; a point
    /// with every coordinate at least `margin` away from the faces is
    /// "interior at margin".
    pub fn boundary_margin(&self, v: &[f64]) -> f64 {
        v.iter()
            .enumerate()
            .map(|(c, &x)| (x - self.lo[c]).min(self.hi[c] - x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Sup-norm bound of the box: the smallest `R` with `box ⊆ [−R, R]^d`.
    pub fn sup_bound(&self) -> f64 {
        self.lo
            .iter()
            .chain(self.hi.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

/// Full description of one game instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    /// Population size N > 1.
    pub n_agents: usize,
    /// Judgment dimension d ≥ 1.
    pub dim: usize,
    /// Time horizon T > 0.
    pub horizon: f64,
    /// Persuasion (δ > 0) / conformity (δ < 0) parameter per agent; δ < 1.
    pub delta: Vec<f64>,
    /// Sensitivity to the exogenous signal, ζ ≥ 0 per agent.
    pub zeta: Vec<f64>,
    /// Admissible box per agent.
    pub action_boxes: Vec<ActionBox>,
    pub kernel: KernelSpec,
    pub lambda: LambdaSpec,
    /// Initial true judgments, row per agent.
    pub initial_judgments: Array2<f64>,
}

impl GameSpec {
    /// Smallest `R` with every action box inside `[−R, R]^d`; trajectories
    /// started inside this hypercube stay in it (coordinatewise).
    pub fn confinement_radius(&self) -> f64 {
        self.action_boxes
            .iter()
            .fold(0.0f64, |m, b| m.max(b.sup_bound()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(Error::validation("n_agents", "the model requires N > 1"));
        }
        if self.dim == 0 {
            return Err(Error::validation("dim", "judgments need d ≥ 1"));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::validation("horizon", "must be a positive real"));
        }
        if self.delta.len() != self.n_agents {
            return Err(Error::validation("delta", "needs one value per agent"));
        }
        if self.delta.iter().any(|&d| !(d < 1.0)) {
            return Err(Error::validation("delta", "every δ_i must satisfy δ_i < 1"));
        }
        if self.zeta.len() != self.n_agents {
            return Err(Error::validation("zeta", "needs one value per agent"));
        }
        if self.zeta.iter().any(|&z| z < 0.0 || !z.is_finite()) {
            return Err(Error::validation("zeta", "every ζ_i must be ≥ 0"));
        }
        if self.action_boxes.len() != self.n_agents {
            return Err(Error::validation("action_boxes", "needs one box per agent"));
        }
        for b in &self.action_boxes {
            b.validate(self.dim)?;
        }
        self.kernel.validate()?;
        self.lambda.validate(self.dim)?;
        if self.initial_judgments.nrows() != self.n_agents
            || self.initial_judgments.ncols() != self.dim
        {
            return Err(Error::validation("initial_judgments", "needs an N×d array"));
        }
        let r = self.confinement_radius();
        for (i, row) in self.initial_judgments.rows().into_iter().enumerate() {
            if row.iter().any(|&v| v.abs() > r + CONFINEMENT_SLACK) {
                return Err(Error::validation(
                    "initial_judgments",
                    format!("|x0_{i}|∞ exceeds the box bound R = {r}"),
                ));
            }
        }
        Ok(())
    }

    pub fn check_agent(&self, index: usize) -> Result<()> {
        if index >= self.n_agents {
            return Err(Error::AgentIndex {
                index,
                n_agents: self.n_agents,
            });
        }
        Ok(())
    }

    /// Copy of the spec restarted from a different initial state; used by the
    /// continuation method to chain segments.
    pub fn with_initial(&self, initial: Array2<f64>) -> Self {
        GameSpec {
            initial_judgments: initial,
            ..self.clone()
        }
    }
}

/// Uniform discretization of `[0, T]` into `n_steps` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    n_steps: usize,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(n_steps: usize, horizon: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::validation("grid", "needs at least one step"));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::validation("grid", "horizon must be a positive real"));
        }
        Ok(TimeGrid { n_steps, horizon })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Node time `t_k`; exactly `0` at `k = 0` and exactly `T` at `k = n_steps`.
    pub fn node(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.n_steps as f64
    }
}

/// Grid-sampled per-agent vector field: `values[[agent, node, coord]]`.
///
/// Shared layout of [`ControlProfile`] and [`StateTrajectory`].
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub values: Array3<f64>,
}

impl Profile {
    pub fn zeros(n_agents: usize, n_nodes: usize, dim: usize) -> Self {
        Profile {
            values: Array3::zeros((n_agents, n_nodes, dim)),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn n_nodes(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn dim(&self) -> usize {
        self.values.shape()[2]
    }

    /// View of one agent's vector at one grid node.
    pub fn at(&self, agent: usize, node: usize) -> ArrayView1<'_, f64> {
        self.values.slice(ndarray::s![agent, node, ..])
    }

    /// Contiguous slice of one agent's vector at one grid node.
    pub fn node_slice(&self, agent: usize, node: usize) -> &[f64] {
        let d = self.dim();
        let base = (agent * self.n_nodes() + node) * d;
        &self.values.as_slice().expect("standard layout")[base..base + d]
    }

    /// Sup-norm distance over agents, nodes and coordinates.
    pub fn sup_distance(&self, other: &Profile) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest absolute entry.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Expressed-judgment trajectories `ω_i(t_k)`; admissible when every node
/// value lies in the owning agent's action box.
pub type ControlProfile = Profile;

/// True-judgment trajectories `x_i(t_k)`.
pub type StateTrajectory = Profile;

/// Costate trajectories. Nash mode stores the `N` rows `φ_{j i}` for one
/// target agent `i`; Pareto mode stores the shared family `φ_j`.
/// Terminal node values are exactly zero in both modes.
#[derive(Debug, Clone, PartialEq)]
pub enum AdjointField {
    Nash {
        /// Target agent `i` whose cost the rows differentiate.
        target: usize,
        /// `rows[[j, node, coord]] = φ_{j i}(t_node)`.
        rows: Array3<f64>,
    },
    Pareto {
        /// `rows[[j, node, coord]] = φ_j(t_node)`.
        rows: Array3<f64>,
    },
}

impl AdjointField {
    pub fn rows(&self) -> &Array3<f64> {
        match self {
            AdjointField::Nash { rows, .. } => rows,
            AdjointField::Pareto { rows } => rows,
        }
    }
}

/// Strictly positive influence weights θ with Σθ = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoWeights {
    theta: Vec<f64>,
}

impl ParetoWeights {
    /// Build weights from any strictly positive vector. Inputs that already
    /// sum to one (within 1e−12) are taken verbatim, so normalizing is
    /// idempotent; anything else is divided by its sum.
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::validation("weights", "needs one weight per agent"));
        }
        if theta.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::validation("weights", "every θ_i must be strictly positive"));
        }
        let sum: f64 = theta.iter().sum();
        let theta = if (sum - 1.0).abs() <= 1e-12 {
            theta
        } else {
            theta.into_iter().map(|t| t / sum).collect()
        };
        let check: f64 = theta.iter().sum();
        if (check - 1.0).abs() > 1e-12 {
            return Err(Error::validation("weights", "normalization failed to reach Σθ = 1"));
        }
        Ok(ParetoWeights { theta })
    }

    /// Uniform weights `1/N`.
    pub fn uniform(n: usize) -> Result<Self> {
        ParetoWeights::new(vec![1.0 / n as f64; n])
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}
