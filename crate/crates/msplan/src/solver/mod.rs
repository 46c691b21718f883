//! Trajectory planners.
//!
//! Three planners share the same factor graph and stopping contract:
//!
//! * [`ms2mp_plan`] — min-sum message passing on the compound chain with a
//!   Gauss-Newton solve per node (forward sweep, backward sweep, belief
//!   update per outer iteration, re-linearized at the current states);
//! * [`ms2mp_no_comp_plan`] — the same schedule without factor merging:
//!   every raw factor is its own message-passing node and is re-linearized
//!   at every message step;
//! * [`batch_plan`] — the whole-graph baseline: one damped Gauss-Newton
//!   iteration on the block-tridiagonal normal equations of all factors at
//!   once ([`batch_no_intp_plan`] drops the interpolated obstacle factors).
//!
//! All planners initialize from the constant-velocity straight line, stop
//! on a maximum-state-change tolerance, and report a dense collision check
//! on the result.

mod batch;
mod diagnostics;
mod local;
mod message;
mod ms2mp;
mod no_comp;

pub use batch::{batch_no_intp_plan, batch_plan};
pub use diagnostics::local_optimality_check;
pub use local::{GnSettings, LocalProblem, LocalTerm};
pub use message::{linearize_edge_group, linearize_unary_group, EdgeQuadratic, QuadraticMessage};
pub use ms2mp::{ms2mp_plan, sweep, MessageState};
pub use no_comp::ms2mp_no_comp_plan;

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;

use crate::env::{SignedDistanceField, Workspace};
use crate::error::{Error, Result};
use crate::factors::{assemble_graph, compound_transform, CompoundGraph, FactorGraph};
use crate::gp::{interpolate_state, prior_mean_trajectory, GpPriorModel, StateVector, Trajectory};
use crate::kinematics::{forward_kinematics, RobotModel};

/// Planner parameters. Defaults follow the benchmark setting: 11 support
/// states, 4 interpolated states per interval, safety distance 0.2 m and
/// obstacle weight sigma 0.001.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Number of support states (the chain has `num_states - 1` intervals).
    pub num_states: usize,
    /// Interpolated obstacle factors per interval.
    pub n_ip: usize,
    pub total_time: f64,
    /// Hinge safety distance (meters).
    pub eps: f64,
    /// Obstacle residual weight sigma; the information is `1/sigma^2`.
    pub sigma_obs: f64,
    /// Isotropic acceleration-noise spectral density.
    pub qc_scale: f64,
    /// Standard deviation of the start/goal anchors.
    pub anchor_sigma: f64,
    /// Standard deviation multiplier of the interior deviation priors.
    pub mid_sigma: f64,
    pub max_iterations: usize,
    /// Maximum state change (infinity norm) below which a plan converged.
    pub tolerance: f64,
    pub gn_max_inner: usize,
    pub damping_init: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            num_states: 11,
            n_ip: 4,
            total_time: 5.0,
            eps: 0.2,
            sigma_obs: 1e-3,
            qc_scale: 1.0,
            anchor_sigma: 1e-5,
            mid_sigma: 1.0,
            max_iterations: 100,
            tolerance: 1e-6,
            gn_max_inner: 50,
            damping_init: 1e-4,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_states < 2 {
            return Err(Error::invalid("num_states must be at least 2"));
        }
        for (name, v) in [
            ("total_time", self.total_time),
            ("sigma_obs", self.sigma_obs),
            ("qc_scale", self.qc_scale),
            ("anchor_sigma", self.anchor_sigma),
            ("mid_sigma", self.mid_sigma),
            ("tolerance", self.tolerance),
            ("damping_init", self.damping_init),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.eps < 0.0 {
            return Err(Error::invalid("eps must be nonnegative"));
        }
        if self.max_iterations == 0 || self.gn_max_inner == 0 {
            return Err(Error::invalid("iteration limits must be positive"));
        }
        Ok(())
    }

    pub(crate) fn gn_settings(&self) -> GnSettings {
        GnSettings { max_inner: self.gn_max_inner, damping_init: self.damping_init, grad_tol: 1e-9 }
    }
}

/// A planning instance: workspace, robot, endpoints, and the precomputed
/// distance field. Immutable during a solve; planners can share it.
#[derive(Clone, Debug)]
pub struct PlanningProblem {
    pub workspace: Workspace,
    pub model: Arc<RobotModel>,
    pub sdf: Arc<SignedDistanceField>,
    pub start: StateVector,
    pub goal: StateVector,
}

impl PlanningProblem {
    /// Builds the distance field at `cell_size` and validates dimensions.
    pub fn new(
        workspace: Workspace,
        model: Arc<RobotModel>,
        start: StateVector,
        goal: StateVector,
        cell_size: f64,
    ) -> Result<Self> {
        let sdf = Arc::new(SignedDistanceField::build(&workspace, cell_size)?);
        Self::with_sdf(workspace, model, start, goal, sdf)
    }

    pub fn with_sdf(
        workspace: Workspace,
        model: Arc<RobotModel>,
        start: StateVector,
        goal: StateVector,
        sdf: Arc<SignedDistanceField>,
    ) -> Result<Self> {
        workspace.validate()?;
        model.validate()?;
        if start.d_cfg() != model.dof() || goal.d_cfg() != model.dof() {
            return Err(Error::invalid("start/goal dimension does not match the robot"));
        }
        let problem = Self { workspace, model, sdf, start, goal };
        for (name, q) in [("start", &problem.start), ("goal", &problem.goal)] {
            for place in forward_kinematics(&problem.model, &q.position)? {
                if !problem.workspace.contains(&place.center) {
                    return Err(Error::invalid(format!("{name} configuration leaves the workspace")));
                }
            }
        }
        Ok(problem)
    }
}

/// Per-node outcome of the local-optimality diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeDiagnostics {
    /// True where the re-minimized edge objective reproduces the belief.
    pub min_consistent: Vec<bool>,
    /// Indices of nodes still failing the check (empty certifies the
    /// converged chain).
    pub open_nodes: Vec<usize>,
}

/// Planner output.
#[derive(Clone, Debug)]
pub struct PlanResult {
    pub trajectory: Trajectory,
    pub converged: bool,
    pub iterations: usize,
    /// Seconds spent in the solve (excluding distance-field construction).
    pub wall_time: f64,
    pub collision_free: bool,
    /// Objective before the first iteration and after each one.
    pub objective_history: Vec<f64>,
    /// Local-optimality flags from a message sweep at the final states.
    pub diagnostics: Option<NodeDiagnostics>,
}

/// Fixed direction of the deterministic symmetry-breaking nudge.
fn perturbation_direction(d_cfg: usize) -> DVector<f64> {
    let phi_inv = 0.618_033_988_749_894_9_f64;
    let mut v = DVector::from_fn(d_cfg, |k, _| phi_inv.powi(k as i32 + 1));
    v /= v.norm();
    v
}

pub(crate) struct Prepared {
    pub graph: FactorGraph,
    pub compound: CompoundGraph,
    pub states: Vec<DVector<f64>>,
    pub times: Vec<f64>,
    pub clock: Instant,
}

/// Shared planner setup: straight-line initialization, graph assembly, and
/// the symmetry tie-break. When the initial line touches a point where the
/// interpolated distance field has a vanishing gradient inside the hinge
/// zone (an equidistant ridge or an obstacle center), the hinge argmin is
/// not unique; a 1e-9 nudge of the interior states in a fixed direction
/// restores a unique, deterministic optimum.
pub(crate) fn prepare(problem: &PlanningProblem, config: &SolverConfig) -> Result<Prepared> {
    config.validate()?;
    let clock = Instant::now();
    let prior = GpPriorModel::new(
        problem.start.clone(),
        problem.goal.clone(),
        config.qc_scale,
        config.anchor_sigma,
        config.mid_sigma,
    )?;
    let init = prior_mean_trajectory(&problem.start, &problem.goal, config.num_states - 1, config.total_time)?;
    let graph = assemble_graph(
        &prior,
        &init,
        Arc::clone(&problem.model),
        Arc::clone(&problem.sdf),
        config.n_ip,
        config.eps,
        config.sigma_obs,
    )?;
    let compound = compound_transform(&graph)?;

    let mut states: Vec<DVector<f64>> = init.states().iter().map(StateVector::stacked).collect();
    let mut degenerate = false;
    for s in init.states() {
        for place in forward_kinematics(&problem.model, &s.position)? {
            if let Ok((d, grad)) = problem.sdf.query(&place.center) {
                if d - place.radius <= config.eps && grad.norm() <= 1e-12 {
                    degenerate = true;
                }
            }
        }
    }
    if degenerate {
        let dir = perturbation_direction(graph.d_cfg);
        for state in states.iter_mut().take(config.num_states - 1).skip(1) {
            for k in 0..graph.d_cfg {
                state[k] += 1e-9 * dir[k];
            }
        }
    }
    Ok(Prepared { graph, compound, states, times: init.times().to_vec(), clock })
}

pub(crate) fn states_to_trajectory(states: &[DVector<f64>], times: &[f64]) -> Result<Trajectory> {
    let states = states.iter().map(StateVector::from_stacked).collect();
    Trajectory::new(states, times.to_vec())
}

/// Dense clearance check against the exact workspace distance: every body
/// sphere at every interpolated sample must keep clearance strictly
/// positive. The sampling runs ten times finer than the planning
/// interpolation.
pub fn dense_collision_check(
    problem: &PlanningProblem,
    trajectory: &Trajectory,
    n_ip: usize,
) -> Result<bool> {
    let samples = 10 * (n_ip + 1);
    for i in 0..trajectory.len() - 1 {
        let dt = trajectory.time(i + 1) - trajectory.time(i);
        for k in 0..samples {
            let tau = k as f64 * dt / samples as f64;
            let x = if k == 0 {
                trajectory.state(i).clone()
            } else {
                interpolate_state(trajectory.state(i), trajectory.state(i + 1), dt, tau)?.state
            };
            if min_clearance(problem, &x)? <= 0.0 {
                return Ok(false);
            }
        }
    }
    let last = trajectory.state(trajectory.len() - 1);
    Ok(min_clearance(problem, last)? > 0.0)
}

fn min_clearance(problem: &PlanningProblem, x: &StateVector) -> Result<f64> {
    let mut min = f64::INFINITY;
    for place in forward_kinematics(&problem.model, &x.position)? {
        min = min.min(problem.workspace.signed_distance(&place.center) - place.radius);
    }
    Ok(min)
}

pub(crate) fn finish(
    problem: &PlanningProblem,
    config: &SolverConfig,
    prep: &Prepared,
    converged: bool,
    iterations: usize,
    objective_history: Vec<f64>,
    diagnostics: Option<NodeDiagnostics>,
) -> Result<PlanResult> {
    let wall_time = prep.clock.elapsed().as_secs_f64();
    let trajectory = states_to_trajectory(&prep.states, &prep.times)?;
    let collision_free = dense_collision_check(problem, &trajectory, config.n_ip)?;
    Ok(PlanResult {
        trajectory,
        converged,
        iterations,
        wall_time,
        collision_free,
        objective_history,
        diagnostics,
    })
}
