//! Planning factor graph and its compound-node chain form.
//!
//! The graph holds four factor kinds over the support states: unary
//! deviation factors (anchors and per-state priors), smoothness factors
//! between consecutive states, unary obstacle factors, and interpolated
//! obstacle factors that charge collision cost between support states.
//!
//! [`CompoundGraph`] regroups the same factors into per-node
//! self-potentials and per-edge edge-potentials. It references the source
//! factors, so the total objective is preserved identically.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Vector2};

use crate::env::{hinge_cost, SignedDistanceField, FREE_SPACE_DISTANCE};
use crate::error::{Error, Result};
use crate::gp::{
    interpolation_matrices, process_noise_info, transition_matrix, GpPriorModel, StateVector, Trajectory,
};
use crate::kinematics::{forward_kinematics, RobotModel};

/// One cost term of the planning objective. Binary factors may only join
/// consecutive states.
#[derive(Clone, Debug)]
pub enum Factor {
    /// `r = x - mean`, weighted by an information matrix. Used both for the
    /// near-hard start/goal anchors and the soft interior deviation priors.
    Anchor { state: usize, mean: DVector<f64>, info: DMatrix<f64> },
    /// Smoothness between consecutive states: `r = Phi(dt) x_i - x_j`.
    Gp { i: usize, j: usize, dt: f64, phi: DMatrix<f64>, info: DMatrix<f64> },
    /// Per-sphere hinge cost at a support state, weight `1 / sigma_obs^2`.
    ObstacleUnary { state: usize, weight: f64 },
    /// Per-sphere hinge cost at an interpolated state inside an interval.
    ObstacleInterp {
        i: usize,
        j: usize,
        tau: f64,
        dt: f64,
        weight: f64,
        lambda: DMatrix<f64>,
        psi: DMatrix<f64>,
    },
}

impl Factor {
    /// Indices of the states this factor touches.
    pub fn variables(&self) -> (usize, Option<usize>) {
        match self {
            Factor::Anchor { state, .. } | Factor::ObstacleUnary { state, .. } => (*state, None),
            Factor::Gp { i, j, .. } | Factor::ObstacleInterp { i, j, .. } => (*i, Some(*j)),
        }
    }

    pub fn is_unary(&self) -> bool {
        self.variables().1.is_none()
    }
}

/// Residual, per-variable Jacobians, and information weight of a factor
/// linearized at given states.
#[derive(Clone, Debug)]
pub struct FactorEval {
    pub residual: DVector<f64>,
    /// `(state index, d residual / d state)` pairs, one per touched state.
    pub jacobians: Vec<(usize, DMatrix<f64>)>,
    pub info: DMatrix<f64>,
}

impl FactorEval {
    pub fn cost(&self) -> f64 {
        0.5 * (self.residual.transpose() * &self.info * &self.residual)[(0, 0)]
    }
}

/// The assembled planning graph. States are indexed `0..num_states`;
/// evaluation is pure and reentrant.
#[derive(Clone, Debug)]
pub struct FactorGraph {
    pub num_states: usize,
    pub d_cfg: usize,
    pub factors: Vec<Factor>,
    pub model: Arc<RobotModel>,
    pub sdf: Arc<SignedDistanceField>,
    pub eps: f64,
}

/// Distance-field lookup that treats out-of-range points as free space, so
/// local solves stay total during line searches.
fn sdf_lookup(sdf: &SignedDistanceField, p: &Vector2<f64>) -> (f64, Vector2<f64>) {
    match sdf.query(p) {
        Ok(v) => v,
        Err(_) => (FREE_SPACE_DISTANCE, Vector2::zeros()),
    }
}

/// Stacked hinge residuals, one entry per body sphere, and the Jacobian
/// with respect to the configuration.
///
/// Entry `s` is `hinge(d(center_s) - radius_s, eps)`; its Jacobian row is
/// `slope * grad_d^T * J_fk`.
pub fn obstacle_cost_vector(
    model: &RobotModel,
    sdf: &SignedDistanceField,
    q: &DVector<f64>,
    eps: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let placements = forward_kinematics(model, q)?;
    let mut residual = DVector::zeros(placements.len());
    let mut jac = DMatrix::zeros(placements.len(), model.dof());
    for (s, place) in placements.iter().enumerate() {
        let (dist, grad) = sdf_lookup(sdf, &place.center);
        let (cost, slope) = hinge_cost(dist - place.radius, eps)?;
        residual[s] = cost;
        if slope != 0.0 {
            let row = grad.transpose() * &place.jacobian * slope;
            jac.row_mut(s).copy_from(&row);
        }
    }
    Ok((residual, jac))
}

/// Hinge residuals at the state interpolated `tau` into an interval of
/// length `dt`, with Jacobians chained through the interpolation weights
/// back to both support states.
pub fn interp_obstacle_cost(
    model: &RobotModel,
    sdf: &SignedDistanceField,
    x_i: &StateVector,
    x_j: &StateVector,
    dt: f64,
    tau: f64,
    eps: f64,
) -> Result<(DVector<f64>, DMatrix<f64>, DMatrix<f64>)> {
    if tau <= 0.0 || tau >= dt {
        return Err(Error::invalid(format!("interpolated factor time {tau} must lie strictly inside (0, {dt})")));
    }
    let (lambda, psi) = interpolation_matrices(dt, tau, x_i.d_cfg())?;
    let stacked = &lambda * x_i.stacked() + &psi * x_j.stacked();
    let interp = StateVector::from_stacked(&stacked);
    let (residual, jac_q) = obstacle_cost_vector(model, sdf, &interp.position, eps)?;
    let d = x_i.d_cfg();
    // position block of the interpolation weights; velocities carry no cost
    let jac_i = &jac_q * lambda.rows(0, d);
    let jac_j = &jac_q * psi.rows(0, d);
    Ok((residual, jac_i, jac_j))
}

impl FactorGraph {
    pub fn dim(&self) -> usize {
        2 * self.d_cfg
    }

    /// Linearizes one factor at the given stacked states.
    pub fn eval(&self, factor: &Factor, states: &[DVector<f64>]) -> Result<FactorEval> {
        match factor.variables() {
            (i, None) => self.eval_single(factor, &states[i]),
            (i, Some(j)) => self.eval_pair(factor, &states[i], &states[j]),
        }
    }

    /// Linearizes a unary factor at an explicit state value.
    pub fn eval_single(&self, factor: &Factor, x: &DVector<f64>) -> Result<FactorEval> {
        let d = self.d_cfg;
        match factor {
            Factor::Anchor { state, mean, info } => Ok(FactorEval {
                residual: x - mean,
                jacobians: vec![(*state, DMatrix::identity(2 * d, 2 * d))],
                info: info.clone(),
            }),
            Factor::ObstacleUnary { state, weight } => {
                let sv = StateVector::from_stacked(x);
                let (residual, jac_q) = obstacle_cost_vector(&self.model, &self.sdf, &sv.position, self.eps)?;
                let rows = residual.len();
                let mut jac = DMatrix::zeros(rows, 2 * d);
                jac.view_mut((0, 0), (rows, d)).copy_from(&jac_q);
                Ok(FactorEval {
                    residual,
                    jacobians: vec![(*state, jac)],
                    info: DMatrix::identity(rows, rows) * *weight,
                })
            }
            _ => Err(Error::Structure("binary factor evaluated with one state".into())),
        }
    }

    /// Linearizes a binary factor at explicit values of its two states
    /// (ordered as stored, `i` then `j`).
    pub fn eval_pair(&self, factor: &Factor, x_i: &DVector<f64>, x_j: &DVector<f64>) -> Result<FactorEval> {
        let d = self.d_cfg;
        match factor {
            Factor::Gp { i, j, phi, info, .. } => Ok(FactorEval {
                residual: phi * x_i - x_j,
                jacobians: vec![(*i, phi.clone()), (*j, -DMatrix::identity(2 * d, 2 * d))],
                info: info.clone(),
            }),
            Factor::ObstacleInterp { i, j, weight, lambda, psi, .. } => {
                let stacked = lambda * x_i + psi * x_j;
                let interp = StateVector::from_stacked(&stacked);
                let (residual, jac_q) =
                    obstacle_cost_vector(&self.model, &self.sdf, &interp.position, self.eps)?;
                let jac_i = &jac_q * lambda.rows(0, d);
                let jac_j = &jac_q * psi.rows(0, d);
                let rows = residual.len();
                Ok(FactorEval {
                    residual,
                    jacobians: vec![(*i, jac_i), (*j, jac_j)],
                    info: DMatrix::identity(rows, rows) * *weight,
                })
            }
            _ => Err(Error::Structure("unary factor evaluated with two states".into())),
        }
    }

    /// Nonlinear cost of one factor at the given states.
    pub fn factor_cost(&self, factor: &Factor, states: &[DVector<f64>]) -> Result<f64> {
        Ok(self.eval(factor, states)?.cost())
    }

    /// Total objective: the sum over all factors.
    pub fn total_cost(&self, states: &[DVector<f64>]) -> Result<f64> {
        let mut sum = 0.0;
        for f in &self.factors {
            sum += self.factor_cost(f, states)?;
        }
        Ok(sum)
    }
}

/// Builds the planning graph for a support trajectory: near-hard anchors at
/// both ends, a soft deviation prior on each interior state, a smoothness
/// factor per interval, a unary obstacle factor per state, and `n_ip`
/// interpolated obstacle factors per interval at uniform times
/// `tau_j = j * dt / (n_ip + 1)`.
pub fn assemble_graph(
    prior: &GpPriorModel,
    traj: &Trajectory,
    model: Arc<RobotModel>,
    sdf: Arc<SignedDistanceField>,
    n_ip: usize,
    eps: f64,
    sigma_obs: f64,
) -> Result<FactorGraph> {
    prior.validate()?;
    if sigma_obs <= 0.0 {
        return Err(Error::invalid("obstacle weight sigma must be positive"));
    }
    if eps < 0.0 {
        return Err(Error::invalid("safety distance must be nonnegative"));
    }
    let d = traj.d_cfg();
    if d != prior.d_cfg() || d != model.dof() {
        return Err(Error::invalid("trajectory, prior, and robot dimensions disagree"));
    }
    let n = traj.len() - 1;
    let anchor_info = cholesky_inverse(&prior.anchor_cov, "anchor_cov")?;
    let mid_info = cholesky_inverse(&prior.mid_cov, "mid_cov")?;
    let weight = 1.0 / (sigma_obs * sigma_obs);

    let mut factors = Vec::new();
    factors.push(Factor::Anchor {
        state: 0,
        mean: prior.start_mean.stacked(),
        info: anchor_info.clone(),
    });
    factors.push(Factor::Anchor { state: n, mean: prior.goal_mean.stacked(), info: anchor_info });
    for i in 1..n {
        factors.push(Factor::Anchor { state: i, mean: traj.state(i).stacked(), info: mid_info.clone() });
    }
    for i in 0..n {
        let dt = traj.time(i + 1) - traj.time(i);
        factors.push(Factor::Gp {
            i,
            j: i + 1,
            dt,
            phi: transition_matrix(dt, d)?,
            info: process_noise_info(dt, &prior.qc)?,
        });
    }
    for i in 0..=n {
        factors.push(Factor::ObstacleUnary { state: i, weight });
    }
    for i in 0..n {
        let dt = traj.time(i + 1) - traj.time(i);
        for j in 1..=n_ip {
            let tau = j as f64 * dt / (n_ip as f64 + 1.0);
            let (lambda, psi) = interpolation_matrices(dt, tau, d)?;
            factors.push(Factor::ObstacleInterp { i, j: i + 1, tau, dt, weight, lambda, psi });
        }
    }
    Ok(FactorGraph { num_states: n + 1, d_cfg: d, factors, model, sdf, eps })
}

fn cholesky_inverse(m: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::invalid(format!("{name} must be symmetric positive definite")))
}

/// The chain form of a factor graph: per-node self-potentials and per-edge
/// edge-potentials, each a group of indices into the source factor list.
#[derive(Clone, Debug)]
pub struct CompoundGraph {
    /// `phi[i]`: unary factors attached to state `i`.
    pub self_potentials: Vec<Vec<usize>>,
    /// `psi[e]`: binary factors on edge `(e, e+1)`.
    pub edge_potentials: Vec<Vec<usize>>,
}

/// Regroups factors into the compound chain. Fails if any binary factor
/// joins non-consecutive states.
pub fn compound_transform(graph: &FactorGraph) -> Result<CompoundGraph> {
    let n = graph.num_states;
    let mut self_potentials = vec![Vec::new(); n];
    let mut edge_potentials = vec![Vec::new(); n.saturating_sub(1)];
    for (idx, f) in graph.factors.iter().enumerate() {
        match f.variables() {
            (i, None) => {
                if i >= n {
                    return Err(Error::Structure(format!("factor {idx} references state {i} of {n}")));
                }
                self_potentials[i].push(idx);
            }
            (i, Some(j)) => {
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                if hi >= n {
                    return Err(Error::Structure(format!("factor {idx} references state {hi} of {n}")));
                }
                if hi - lo != 1 {
                    return Err(Error::Structure(format!(
                        "binary factor {idx} joins non-consecutive states {i} and {j}"
                    )));
                }
                edge_potentials[lo].push(idx);
            }
        }
    }
    Ok(CompoundGraph { self_potentials, edge_potentials })
}

impl CompoundGraph {
    /// Self-potential value at one node.
    pub fn self_potential_cost(&self, graph: &FactorGraph, i: usize, states: &[DVector<f64>]) -> Result<f64> {
        let mut sum = 0.0;
        for &idx in &self.self_potentials[i] {
            sum += graph.factor_cost(&graph.factors[idx], states)?;
        }
        Ok(sum)
    }

    /// Edge-potential value on edge `(e, e+1)`.
    pub fn edge_potential_cost(&self, graph: &FactorGraph, e: usize, states: &[DVector<f64>]) -> Result<f64> {
        let mut sum = 0.0;
        for &idx in &self.edge_potentials[e] {
            sum += graph.factor_cost(&graph.factors[idx], states)?;
        }
        Ok(sum)
    }

    /// Total objective in compound form, `sum phi + sum psi`.
    pub fn total_cost(&self, graph: &FactorGraph, states: &[DVector<f64>]) -> Result<f64> {
        let mut sum = 0.0;
        for i in 0..self.self_potentials.len() {
            sum += self.self_potential_cost(graph, i, states)?;
        }
        for e in 0..self.edge_potentials.len() {
            sum += self.edge_potential_cost(graph, e, states)?;
        }
        Ok(sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector2;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    use crate::env::{Obstacle, Workspace};
    use crate::gp::prior_mean_trajectory;

    fn point_model() -> Arc<RobotModel> {
        Arc::new(RobotModel::point(Vector2::zeros(), 0.05).unwrap())
    }

    fn disk_sdf() -> Arc<SignedDistanceField> {
        let ws = Workspace::new(
            Vector2::new(-0.5, -0.5),
            Vector2::new(1.5, 1.0),
            vec![Obstacle::Circle { center: Vector2::new(0.5, 0.0), radius: 0.1 }],
        )
        .unwrap();
        Arc::new(SignedDistanceField::build(&ws, 0.01).unwrap())
    }

    fn state(px: f64, py: f64) -> StateVector {
        StateVector::new(DVector::from_vec(vec![px, py]), DVector::zeros(2)).unwrap()
    }

    fn test_prior(start: &StateVector, goal: &StateVector) -> GpPriorModel {
        GpPriorModel::new(start.clone(), goal.clone(), 1.0, 1e-4, 1.0).unwrap()
    }

    fn test_graph(n: usize, n_ip: usize) -> (FactorGraph, Trajectory) {
        let start = state(-0.3, 0.0);
        let goal = state(1.2, 0.3);
        let traj = prior_mean_trajectory(&start, &goal, n, 2.0).unwrap();
        let prior = test_prior(&start, &goal);
        let g = assemble_graph(&prior, &traj, point_model(), disk_sdf(), n_ip, 0.2, 0.01).unwrap();
        (g, traj)
    }

    #[test]
    fn free_space_obstacle_vector_is_zero() {
        let model = point_model();
        let sdf = disk_sdf();
        let q = DVector::from_vec(vec![-0.3, -0.3]);
        let (r, j) = obstacle_cost_vector(&model, &sdf, &q, 0.2).unwrap();
        assert_relative_eq!(r.norm(), 0.0);
        assert_relative_eq!(j.amax(), 0.0);
    }

    // clearance 0.2 with sphere radius 0.05: hinge charges eps - (d - r)
    #[test]
    fn obstacle_vector_composes_distance_radius_and_hinge() {
        let model = point_model();
        let sdf = disk_sdf();
        // center 0.3 from the circle surface: q at (0.5, 0.4) is 0.3 above
        // the boundary of the r=0.1 circle at (0.5, 0.0) -> sdf 0.3
        let q = DVector::from_vec(vec![0.5, 0.5]);
        let (r, _) = obstacle_cost_vector(&model, &sdf, &q, 0.2).unwrap();
        // sdf(0.5, 0.5) = 0.4; sphere clearance 0.4 - 0.05 = 0.35 > eps -> 0
        assert_relative_eq!(r[0], 0.0);
        // move to distance 0.2 from the surface
        let q = DVector::from_vec(vec![0.5, 0.3]);
        let (r, _) = obstacle_cost_vector(&model, &sdf, &q, 0.2).unwrap();
        // clearance = 0.2 - 0.05 = 0.15; hinge = 0.2 - 0.15 = 0.05
        assert_relative_eq!(r[0], 0.05, epsilon = 1e-3);
    }

    #[test]
    fn obstacle_jacobian_matches_finite_differences() {
        let model = point_model();
        let sdf = disk_sdf();
        let mut rng = StdRng::seed_from_u64(31);
        let mut checked = 0;
        while checked < 100 {
            // sample inside the hinge zone, away from the obstacle interior
            let ang = rng.random_range(0.0..std::f64::consts::TAU);
            let rad = rng.random_range(0.16..0.33);
            let q = DVector::from_vec(vec![0.5 + rad * ang.cos(), rad * ang.sin()]);
            let (r0, jac) = obstacle_cost_vector(&model, &sdf, &q, 0.2).unwrap();
            if r0[0] <= 1e-4 {
                continue;
            }
            let h = 1e-6;
            for k in 0..2 {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[k] += h;
                qm[k] -= h;
                let rp = obstacle_cost_vector(&model, &sdf, &qp, 0.2).unwrap().0;
                let rm = obstacle_cost_vector(&model, &sdf, &qm, 0.2).unwrap().0;
                let fd = (rp[0] - rm[0]) / (2.0 * h);
                let scale = 1.0 + jac[(0, k)].abs();
                assert!(
                    (fd - jac[(0, k)]).abs() / scale <= 1e-3,
                    "fd {fd} vs jac {}",
                    jac[(0, k)]
                );
            }
            checked += 1;
        }
    }

    #[test]
    fn interp_cost_zero_when_segment_clear() {
        let model = point_model();
        let sdf = disk_sdf();
        let x_i = state(-0.3, -0.4);
        let x_j = state(1.2, -0.4);
        let (r, ji, jj) = interp_obstacle_cost(&model, &sdf, &x_i, &x_j, 1.0, 0.5, 0.2).unwrap();
        assert_relative_eq!(r.norm(), 0.0);
        assert_relative_eq!(ji.amax(), 0.0);
        assert_relative_eq!(jj.amax(), 0.0);
    }

    // endpoints clear of a thin wall while the midpoint crosses it
    #[test]
    fn interp_cost_catches_thin_wall_between_clear_endpoints() {
        let ws = Workspace::new(
            Vector2::new(-0.5, -0.5),
            Vector2::new(1.5, 0.5),
            vec![Obstacle::Aabb { min: Vector2::new(0.48, -0.5), max: Vector2::new(0.52, 0.5) }],
        )
        .unwrap();
        let sdf = Arc::new(SignedDistanceField::build(&ws, 0.01).unwrap());
        let model = point_model();
        let x_i = state(0.1, 0.0);
        let x_j = state(0.9, 0.0);
        let eps = 0.1;
        let (unary_i, _) = obstacle_cost_vector(&model, &sdf, &x_i.position, eps).unwrap();
        let (unary_j, _) = obstacle_cost_vector(&model, &sdf, &x_j.position, eps).unwrap();
        assert_relative_eq!(unary_i.norm(), 0.0);
        assert_relative_eq!(unary_j.norm(), 0.0);
        let (r, _, _) = interp_obstacle_cost(&model, &sdf, &x_i, &x_j, 1.0, 0.5, eps).unwrap();
        assert!(r[0] > 0.0, "interpolated factor missed the wall");
    }

    #[test]
    fn interp_jacobians_match_finite_differences() {
        let model = point_model();
        let sdf = disk_sdf();
        let mut rng = StdRng::seed_from_u64(32);
        let dt = 0.8;
        let tau = 0.3;
        let mut checked = 0;
        while checked < 100 {
            let x_i = state(rng.random_range(0.2..0.8), rng.random_range(-0.3..0.3));
            let x_j = state(rng.random_range(0.2..0.8), rng.random_range(-0.3..0.3));
            let (r0, jac_i, jac_j) = interp_obstacle_cost(&model, &sdf, &x_i, &x_j, dt, tau, 0.2).unwrap();
            if r0[0] <= 1e-4 {
                continue;
            }
            let h = 1e-6;
            for (which, jac) in [(0, &jac_i), (1, &jac_j)] {
                for k in 0..4 {
                    let mut p = if which == 0 { x_i.stacked() } else { x_j.stacked() };
                    let mut m = p.clone();
                    p[k] += h;
                    m[k] -= h;
                    let (sp, sm) = if which == 0 {
                        (
                            interp_obstacle_cost(&model, &sdf, &StateVector::from_stacked(&p), &x_j, dt, tau, 0.2)
                                .unwrap()
                                .0,
                            interp_obstacle_cost(&model, &sdf, &StateVector::from_stacked(&m), &x_j, dt, tau, 0.2)
                                .unwrap()
                                .0,
                        )
                    } else {
                        (
                            interp_obstacle_cost(&model, &sdf, &x_i, &StateVector::from_stacked(&p), dt, tau, 0.2)
                                .unwrap()
                                .0,
                            interp_obstacle_cost(&model, &sdf, &x_i, &StateVector::from_stacked(&m), dt, tau, 0.2)
                                .unwrap()
                                .0,
                        )
                    };
                    let fd = (sp[0] - sm[0]) / (2.0 * h);
                    let scale = 1.0 + jac[(0, k)].abs();
                    assert!((fd - jac[(0, k)]).abs() / scale <= 1e-3);
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn factor_census_without_interpolation() {
        let (g, _) = test_graph(4, 0);
        // 2 anchors + 3 interior priors + 4 smoothness + 5 unary obstacle
        assert_eq!(g.factors.len(), 14);
        let compound = compound_transform(&g).unwrap();
        assert_eq!(compound.self_potentials.len(), 5);
        assert_eq!(compound.edge_potentials.len(), 4);
    }

    #[test]
    fn factor_census_with_interpolation() {
        let (g, _) = test_graph(10, 4);
        let interp = g
            .factors
            .iter()
            .filter(|f| matches!(f, Factor::ObstacleInterp { .. }))
            .count();
        assert_eq!(interp, 40);
    }

    #[test]
    fn graph_without_binary_factors_degenerates() {
        let (g, _) = test_graph(3, 0);
        let unary_only = FactorGraph {
            factors: g.factors.iter().filter(|f| f.is_unary()).cloned().collect(),
            ..g.clone()
        };
        let compound = compound_transform(&unary_only).unwrap();
        assert!(compound.edge_potentials.iter().all(Vec::is_empty));
    }

    #[test]
    fn non_adjacent_binary_factor_is_a_structure_error() {
        let (mut g, _) = test_graph(4, 0);
        let dt = 0.5;
        g.factors.push(Factor::Gp {
            i: 0,
            j: 2,
            dt,
            phi: transition_matrix(dt, 2).unwrap(),
            info: DMatrix::identity(4, 4),
        });
        assert!(matches!(compound_transform(&g), Err(Error::Structure(_))));
    }

    #[test]
    fn compound_objective_matches_raw_sum() {
        let mut rng = StdRng::seed_from_u64(33);
        for _ in 0..100 {
            let n = rng.random_range(2..8);
            let n_ip = rng.random_range(0..4);
            let (g, traj) = test_graph(n, n_ip);
            let compound = compound_transform(&g).unwrap();
            let states: Vec<DVector<f64>> = traj
                .states()
                .iter()
                .map(|s| s.stacked() + DVector::from_fn(4, |_, _| rng.random_range(-0.2..0.2)))
                .collect();
            let raw = g.total_cost(&states).unwrap();
            let grouped = compound.total_cost(&g, &states).unwrap();
            assert!(
                (raw - grouped).abs() <= 1e-12 * (1.0 + raw.abs()),
                "raw {raw} vs compound {grouped}"
            );
        }
    }
}
