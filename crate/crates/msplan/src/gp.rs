//! Constant-velocity Gaussian-process trajectory prior.
//!
//! Trajectories are sampled from a linear time-varying SDE in which the
//! configuration evolves with the velocity and the velocity is driven by
//! white noise (white-noise-on-acceleration). For that model the state
//! transition and process-noise covariance over an interval have closed
//! forms, and any state between two support states is a linear combination
//! of the two (Gaussian-process regression on a Markov prior).
//!
//! Everything here is a pure function of its inputs; the types are plain
//! data and safe to share across planner instances.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One trajectory support state: configuration position and velocity.
///
/// The full state dimension is `2 * d_cfg`, stacked position-first.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub position: DVector<f64>,
    pub velocity: DVector<f64>,
}

impl StateVector {
    pub fn new(position: DVector<f64>, velocity: DVector<f64>) -> Result<Self> {
        if position.len() != velocity.len() {
            return Err(Error::invalid(format!(
                "state position length {} != velocity length {}",
                position.len(),
                velocity.len()
            )));
        }
        if position.iter().chain(velocity.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("state entries must be finite"));
        }
        Ok(Self { position, velocity })
    }

    pub fn zeros(d_cfg: usize) -> Self {
        Self { position: DVector::zeros(d_cfg), velocity: DVector::zeros(d_cfg) }
    }

    /// Configuration-space dimension.
    pub fn d_cfg(&self) -> usize {
        self.position.len()
    }

    /// Full state dimension `2 * d_cfg`.
    pub fn dim(&self) -> usize {
        2 * self.position.len()
    }

    /// Stacks `[position; velocity]` into one vector.
    pub fn stacked(&self) -> DVector<f64> {
        let d = self.d_cfg();
        let mut v = DVector::zeros(2 * d);
        v.rows_mut(0, d).copy_from(&self.position);
        v.rows_mut(d, d).copy_from(&self.velocity);
        v
    }

    /// Splits a stacked `[position; velocity]` vector. The length must be even.
    pub fn from_stacked(v: &DVector<f64>) -> Self {
        assert!(v.len() % 2 == 0, "stacked state length must be even");
        let d = v.len() / 2;
        Self { position: v.rows(0, d).into_owned(), velocity: v.rows(d, d).into_owned() }
    }
}

/// An ordered set of support states on a strictly increasing time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    states: Vec<StateVector>,
    times: Vec<f64>,
}

impl Trajectory {
    pub fn new(states: Vec<StateVector>, times: Vec<f64>) -> Result<Self> {
        if states.len() != times.len() {
            return Err(Error::invalid("trajectory states and times lengths differ"));
        }
        if states.len() < 2 {
            return Err(Error::invalid("trajectory needs at least two support states"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("trajectory times must be strictly increasing"));
        }
        let d = states[0].d_cfg();
        if states.iter().any(|s| s.d_cfg() != d) {
            return Err(Error::invalid("trajectory states have mixed dimensions"));
        }
        Ok(Self { states, times })
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &StateVector {
        &self.states[i]
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    /// Number of support states.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn d_cfg(&self) -> usize {
        self.states[0].d_cfg()
    }
}

/// Parameters of the constant-velocity prior.
///
/// `qc` is the power-spectral density of the acceleration noise. The anchor
/// covariance pins the first and last states to their means; `mid_cov`
/// weights the per-state deviation factors on interior states.
#[derive(Clone, Debug)]
pub struct GpPriorModel {
    pub qc: DMatrix<f64>,
    pub start_mean: StateVector,
    pub goal_mean: StateVector,
    pub anchor_cov: DMatrix<f64>,
    pub mid_cov: DMatrix<f64>,
}

/// Default standard deviation of the start/goal anchors (near-hard pin).
pub const DEFAULT_ANCHOR_SIGMA: f64 = 1e-4;

impl GpPriorModel {
    /// Builds a prior with isotropic `qc = qc_scale * I`, anchors of
    /// standard deviation `anchor_sigma`, and a mid covariance scaled by
    /// the `qc` magnitude.
    pub fn new(
        start_mean: StateVector,
        goal_mean: StateVector,
        qc_scale: f64,
        anchor_sigma: f64,
        mid_sigma: f64,
    ) -> Result<Self> {
        if qc_scale <= 0.0 || anchor_sigma <= 0.0 || mid_sigma <= 0.0 {
            return Err(Error::invalid("prior scales must be positive"));
        }
        if start_mean.d_cfg() != goal_mean.d_cfg() {
            return Err(Error::invalid("start and goal dimensions differ"));
        }
        let d = start_mean.d_cfg();
        let qc = DMatrix::identity(d, d) * qc_scale;
        let anchor_cov = DMatrix::identity(2 * d, 2 * d) * anchor_sigma * anchor_sigma;
        let mid_cov = DMatrix::identity(2 * d, 2 * d) * mid_sigma * mid_sigma * qc_scale;
        Ok(Self { qc, start_mean, goal_mean, anchor_cov, mid_cov })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("qc", &self.qc), ("anchor_cov", &self.anchor_cov), ("mid_cov", &self.mid_cov)] {
            if m.nrows() != m.ncols() {
                return Err(Error::invalid(format!("{name} must be square")));
            }
            if (m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
                return Err(Error::invalid(format!("{name} must be symmetric")));
            }
            if m.clone().cholesky().is_none() {
                return Err(Error::invalid(format!("{name} must be positive definite")));
            }
        }
        Ok(())
    }

    pub fn d_cfg(&self) -> usize {
        self.start_mean.d_cfg()
    }
}

/// State transition matrix `[[I, dt*I], [0, I]]` over `d_cfg`-sized blocks.
pub fn transition_matrix(dt: f64, d_cfg: usize) -> Result<DMatrix<f64>> {
    if dt < 0.0 {
        return Err(Error::invalid(format!("transition interval must be nonnegative, got {dt}")));
    }
    let d = d_cfg;
    let mut m = DMatrix::identity(2 * d, 2 * d);
    for k in 0..d {
        m[(k, d + k)] = dt;
    }
    Ok(m)
}

/// Process noise covariance of the white-noise-on-acceleration model:
/// `[[dt^3/3 qc, dt^2/2 qc], [dt^2/2 qc, dt qc]]`.
pub fn process_noise_cov(dt: f64, qc: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if dt <= 0.0 {
        return Err(Error::invalid(format!("process noise interval must be positive, got {dt}")));
    }
    Ok(process_noise_cov_unchecked(dt, qc))
}

// Also valid at dt = 0 (zero matrix); used by the interpolation weights.
fn process_noise_cov_unchecked(dt: f64, qc: &DMatrix<f64>) -> DMatrix<f64> {
    let d = qc.nrows();
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    let a = dt * dt * dt / 3.0;
    let b = dt * dt / 2.0;
    for r in 0..d {
        for c in 0..d {
            let q = qc[(r, c)];
            m[(r, c)] = a * q;
            m[(r, d + c)] = b * q;
            m[(d + r, c)] = b * q;
            m[(d + r, d + c)] = dt * q;
        }
    }
    m
}

/// Closed-form inverse of [`process_noise_cov`]:
/// `[[12/dt^3 qc^-1, -6/dt^2 qc^-1], [-6/dt^2 qc^-1, 4/dt qc^-1]]`.
pub fn process_noise_info(dt: f64, qc: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if dt <= 0.0 {
        return Err(Error::invalid(format!("process noise interval must be positive, got {dt}")));
    }
    let qc_inv = qc
        .clone()
        .cholesky()
        .ok_or_else(|| Error::invalid("qc must be symmetric positive definite"))?
        .inverse();
    let d = qc.nrows();
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    let a = 12.0 / (dt * dt * dt);
    let b = -6.0 / (dt * dt);
    let c2 = 4.0 / dt;
    for r in 0..d {
        for c in 0..d {
            let q = qc_inv[(r, c)];
            m[(r, c)] = a * q;
            m[(r, d + c)] = b * q;
            m[(d + r, c)] = b * q;
            m[(d + r, d + c)] = c2 * q;
        }
    }
    Ok(m)
}

/// Constant-velocity straight line from `start.position` to `goal.position`
/// with `n` uniform intervals over `total_time`. Every state's velocity is
/// the segment velocity `(goal - start) / total_time`.
pub fn prior_mean_trajectory(
    start: &StateVector,
    goal: &StateVector,
    n: usize,
    total_time: f64,
) -> Result<Trajectory> {
    if n < 1 {
        return Err(Error::invalid("need at least one trajectory interval"));
    }
    if total_time <= 0.0 {
        return Err(Error::invalid("total time must be positive"));
    }
    if start.d_cfg() != goal.d_cfg() {
        return Err(Error::invalid("start and goal dimensions differ"));
    }
    let vel = (&goal.position - &start.position) / total_time;
    let mut states = Vec::with_capacity(n + 1);
    let mut times = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let alpha = i as f64 / n as f64;
        let position = &start.position + (&goal.position - &start.position) * alpha;
        states.push(StateVector { position, velocity: vel.clone() });
        times.push(total_time * alpha);
    }
    Trajectory::new(states, times)
}

/// Residual and Jacobians of the smoothness factor between consecutive
/// support states: `r = Phi(dt) x_i - x_j` with zero-mean increments.
#[derive(Clone, Debug)]
pub struct GpFactorError {
    pub residual: DVector<f64>,
    pub jac_i: DMatrix<f64>,
    pub jac_j: DMatrix<f64>,
}

pub fn gp_factor_error(x_i: &StateVector, x_j: &StateVector, dt: f64) -> Result<GpFactorError> {
    if dt <= 0.0 {
        return Err(Error::invalid("gp factor interval must be positive"));
    }
    if x_i.d_cfg() != x_j.d_cfg() {
        return Err(Error::invalid("gp factor state dimensions differ"));
    }
    let phi = transition_matrix(dt, x_i.d_cfg())?;
    let residual = &phi * x_i.stacked() - x_j.stacked();
    let dim = x_i.dim();
    Ok(GpFactorError { residual, jac_i: phi, jac_j: -DMatrix::identity(dim, dim) })
}

/// Residual of a unary deviation factor, `x - mean`. The Jacobian is the
/// identity; the factor's covariance decides whether it acts as a hard
/// anchor or a soft deviation penalty.
pub fn anchor_factor_error(x: &StateVector, mean: &StateVector) -> Result<DVector<f64>> {
    if x.d_cfg() != mean.d_cfg() {
        return Err(Error::invalid("anchor state and mean dimensions differ"));
    }
    Ok(x.stacked() - mean.stacked())
}

/// Interpolation weights at `tau` inside an interval of length `dt`:
/// `x(tau) = Lambda * x_i + Psi * x_j` with
/// `Psi = Q(tau) Phi(dt-tau)^T Q(dt)^-1` and `Lambda = Phi(tau) - Psi Phi(dt)`.
///
/// The weights are independent of `qc` (it cancels), so they are computed
/// with a unit spectral density.
pub fn interpolation_matrices(dt: f64, tau: f64, d_cfg: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if dt <= 0.0 {
        return Err(Error::invalid("interpolation interval must be positive"));
    }
    if !(0.0..=dt).contains(&tau) {
        return Err(Error::invalid(format!("interpolation time {tau} outside [0, {dt}]")));
    }
    let qc = DMatrix::identity(d_cfg, d_cfg);
    let q_tau = process_noise_cov_unchecked(tau, &qc);
    let q_dt_inv = process_noise_info(dt, &qc)?;
    let psi = q_tau * transition_matrix(dt - tau, d_cfg)?.transpose() * q_dt_inv;
    let lambda = transition_matrix(tau, d_cfg)? - &psi * transition_matrix(dt, d_cfg)?;
    Ok((lambda, psi))
}

/// A state interpolated between two support states, together with its
/// Jacobians with respect to both endpoints.
#[derive(Clone, Debug)]
pub struct InterpolatedState {
    pub state: StateVector,
    pub jac_i: DMatrix<f64>,
    pub jac_j: DMatrix<f64>,
}

pub fn interpolate_state(
    x_i: &StateVector,
    x_j: &StateVector,
    dt: f64,
    tau: f64,
) -> Result<InterpolatedState> {
    if x_i.d_cfg() != x_j.d_cfg() {
        return Err(Error::invalid("interpolation endpoint dimensions differ"));
    }
    let (lambda, psi) = interpolation_matrices(dt, tau, x_i.d_cfg())?;
    let stacked = &lambda * x_i.stacked() + &psi * x_j.stacked();
    Ok(InterpolatedState { state: StateVector::from_stacked(&stacked), jac_i: lambda, jac_j: psi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_state(rng: &mut StdRng, d: usize) -> StateVector {
        StateVector {
            position: DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0)),
            velocity: DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0)),
        }
    }

    fn random_spd(rng: &mut StdRng, d: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(d, d) * 0.1
    }

    #[test]
    fn transition_zero_interval_is_identity() {
        let m = transition_matrix(0.0, 2).unwrap();
        assert_eq!(m, DMatrix::identity(4, 4));
    }

    #[test]
    fn transition_scalar_case() {
        let m = transition_matrix(0.1, 1).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert_eq!(m, expected);
    }

    #[test]
    fn transition_rejects_negative_interval() {
        assert!(transition_matrix(-0.1, 1).is_err());
    }

    #[test]
    fn transition_semigroup_product() {
        let a = transition_matrix(0.3, 3).unwrap();
        let b = transition_matrix(0.2, 3).unwrap();
        let ab = transition_matrix(0.5, 3).unwrap();
        assert_relative_eq!(a * b, ab, epsilon = 1e-15);
    }

    #[test]
    fn process_noise_unit_interval() {
        let qc = DMatrix::from_element(1, 1, 1.0);
        let q = process_noise_cov(1.0, &qc).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0 / 3.0, 0.5, 0.5, 1.0]);
        assert_relative_eq!(q, expected, epsilon = 1e-15);
    }

    #[test]
    fn process_noise_two_second_interval() {
        let qc = DMatrix::from_element(1, 1, 1.0);
        let q = process_noise_cov(2.0, &qc).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[8.0 / 3.0, 2.0, 2.0, 2.0]);
        assert_relative_eq!(q, expected, epsilon = 1e-14);
    }

    #[test]
    fn process_noise_rejects_zero_interval() {
        let qc = DMatrix::from_element(1, 1, 1.0);
        assert!(process_noise_cov(0.0, &qc).is_err());
    }

    // Eigen-decomposition oracle: smallest eigenvalue stays positive.
    #[test]
    fn process_noise_positive_definite() {
        let mut rng = StdRng::seed_from_u64(11);
        for &dt in &[0.1, 0.5, 1.0] {
            for _ in 0..10 {
                let qc = random_spd(&mut rng, 3);
                let q = process_noise_cov(dt, &qc).unwrap();
                let eig = q.symmetric_eigenvalues();
                assert!(eig.min() > 0.0, "dt={dt} produced non-PD noise");
            }
        }
    }

    #[test]
    fn process_noise_info_is_inverse() {
        let mut rng = StdRng::seed_from_u64(12);
        let qc = random_spd(&mut rng, 2);
        let q = process_noise_cov(0.7, &qc).unwrap();
        let qi = process_noise_info(0.7, &qc).unwrap();
        assert_relative_eq!(q * qi, DMatrix::identity(4, 4), epsilon = 1e-10);
    }

    #[test]
    fn prior_mean_three_point_line() {
        let start = StateVector::new(DVector::from_vec(vec![0.0, 0.0]), DVector::zeros(2)).unwrap();
        let goal = StateVector::new(DVector::from_vec(vec![1.0, 0.0]), DVector::zeros(2)).unwrap();
        let traj = prior_mean_trajectory(&start, &goal, 2, 1.0).unwrap();
        assert_eq!(traj.len(), 3);
        assert_relative_eq!(traj.state(1).position[0], 0.5);
        assert_relative_eq!(traj.state(1).position[1], 0.0);
        for s in traj.states() {
            assert_relative_eq!(s.velocity[0], 1.0);
            assert_relative_eq!(s.velocity[1], 0.0);
        }
    }

    #[test]
    fn prior_mean_degenerate_segment() {
        let start = StateVector::new(DVector::from_vec(vec![0.3, -0.2]), DVector::zeros(2)).unwrap();
        let traj = prior_mean_trajectory(&start, &start, 4, 2.0).unwrap();
        for s in traj.states() {
            assert_eq!(s.position, start.position);
            assert_relative_eq!(s.velocity.norm(), 0.0);
        }
    }

    #[test]
    fn prior_mean_midpoint() {
        let start = StateVector::new(DVector::from_vec(vec![0.0, 0.0]), DVector::zeros(2)).unwrap();
        let goal = StateVector::new(DVector::from_vec(vec![2.0, 2.0]), DVector::zeros(2)).unwrap();
        let traj = prior_mean_trajectory(&start, &goal, 10, 2.0).unwrap();
        assert_relative_eq!(traj.state(5).position[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(traj.state(5).position[1], 1.0, epsilon = 1e-15);
        assert_relative_eq!(traj.state(5).velocity[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(traj.state(5).velocity[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn gp_factor_zero_on_model() {
        let mut rng = StdRng::seed_from_u64(3);
        let x_i = random_state(&mut rng, 2);
        let dt = 0.4;
        let phi = transition_matrix(dt, 2).unwrap();
        let x_j = StateVector::from_stacked(&(phi * x_i.stacked()));
        let e = gp_factor_error(&x_i, &x_j, dt).unwrap();
        assert!(e.residual.amax() < 1e-14);
    }

    #[test]
    fn gp_factor_one_dof_example() {
        let x_i = StateVector::new(DVector::from_vec(vec![0.0]), DVector::from_vec(vec![1.0])).unwrap();
        let x_j = StateVector::zeros(1);
        let e = gp_factor_error(&x_i, &x_j, 1.0).unwrap();
        assert_relative_eq!(e.residual[0], 1.0);
        assert_relative_eq!(e.residual[1], 1.0);
    }

    #[test]
    fn gp_factor_jacobians_match_finite_differences() {
        let mut rng = StdRng::seed_from_u64(4);
        let dt = 0.3;
        for _ in 0..100 {
            let x_i = random_state(&mut rng, 2);
            let x_j = random_state(&mut rng, 2);
            let e = gp_factor_error(&x_i, &x_j, dt).unwrap();
            let h = 1e-6;
            for k in 0..x_i.dim() {
                let mut plus = x_i.stacked();
                let mut minus = x_i.stacked();
                plus[k] += h;
                minus[k] -= h;
                let rp = gp_factor_error(&StateVector::from_stacked(&plus), &x_j, dt).unwrap().residual;
                let rm = gp_factor_error(&StateVector::from_stacked(&minus), &x_j, dt).unwrap().residual;
                let fd = (rp - rm) / (2.0 * h);
                let col = e.jac_i.column(k);
                assert!((fd - col).amax() <= 1e-5 * (1.0 + col.amax()));
            }
        }
    }

    #[test]
    fn anchor_residual_examples() {
        let x = StateVector::new(DVector::from_vec(vec![1.0]), DVector::from_vec(vec![2.0])).unwrap();
        let mean = StateVector::new(DVector::from_vec(vec![0.0]), DVector::from_vec(vec![2.0])).unwrap();
        let r = anchor_factor_error(&x, &mean).unwrap();
        assert_eq!(r, DVector::from_vec(vec![1.0, 0.0]));
        let zero = anchor_factor_error(&mean, &mean).unwrap();
        assert_relative_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn anchor_dimension_mismatch_errors() {
        let x = StateVector::zeros(2);
        let mean = StateVector::zeros(3);
        assert!(anchor_factor_error(&x, &mean).is_err());
    }

    // Half the squared Mahalanobis norm with K = (0.1)^2 I and residual (0.1, 0).
    #[test]
    fn anchor_cost_with_isotropic_covariance() {
        let r = DVector::from_vec(vec![0.1, 0.0]);
        let info = DMatrix::identity(2, 2) / (0.1 * 0.1);
        let cost = 0.5 * (r.transpose() * &info * &r)[(0, 0)];
        assert_relative_eq!(cost, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn interpolation_reproduces_left_endpoint() {
        let mut rng = StdRng::seed_from_u64(5);
        let x_i = random_state(&mut rng, 2);
        let x_j = random_state(&mut rng, 2);
        let out = interpolate_state(&x_i, &x_j, 0.5, 0.0).unwrap();
        assert!((out.state.stacked() - x_i.stacked()).amax() <= 1e-12);
    }

    #[test]
    fn interpolation_reproduces_right_endpoint() {
        let (lambda, psi) = interpolation_matrices(0.7, 0.7, 3).unwrap();
        assert!(lambda.amax() <= 1e-12);
        assert!((psi - DMatrix::identity(6, 6)).amax() <= 1e-12);
    }

    #[test]
    fn interpolation_midpoint_on_constant_velocity_line() {
        let start = StateVector::new(DVector::from_vec(vec![0.0, 0.0]), DVector::zeros(2)).unwrap();
        let goal = StateVector::new(DVector::from_vec(vec![1.0, 2.0]), DVector::zeros(2)).unwrap();
        let dense = prior_mean_trajectory(&start, &goal, 2, 1.0).unwrap();
        let coarse = prior_mean_trajectory(&start, &goal, 1, 1.0).unwrap();
        let mid = interpolate_state(coarse.state(0), coarse.state(1), 1.0, 0.5).unwrap();
        assert!((mid.state.stacked() - dense.state(1).stacked()).amax() <= 1e-12);
    }

    #[test]
    fn interpolation_rejects_tau_outside_interval() {
        let x = StateVector::zeros(1);
        assert!(interpolate_state(&x, &x, 0.5, 0.6).is_err());
        assert!(interpolate_state(&x, &x, 0.5, -0.1).is_err());
    }

    // The interpolation weights do not depend on the spectral density.
    #[test]
    fn interpolation_weights_independent_of_qc() {
        let mut rng = StdRng::seed_from_u64(6);
        let qc = random_spd(&mut rng, 2);
        let dt = 0.8;
        let tau = 0.3;
        let q_tau = process_noise_cov(tau, &qc).unwrap();
        let q_dt = process_noise_cov(dt, &qc).unwrap();
        let psi_explicit =
            q_tau * transition_matrix(dt - tau, 2).unwrap().transpose() * q_dt.try_inverse().unwrap();
        let (_, psi) = interpolation_matrices(dt, tau, 2).unwrap();
        assert_relative_eq!(psi_explicit, psi, epsilon = 1e-9);
    }

    #[test]
    fn interpolation_jacobians_match_finite_differences() {
        let mut rng = StdRng::seed_from_u64(7);
        let dt = 0.6;
        let tau = 0.22;
        for _ in 0..100 {
            let x_i = random_state(&mut rng, 2);
            let x_j = random_state(&mut rng, 2);
            let out = interpolate_state(&x_i, &x_j, dt, tau).unwrap();
            let h = 1e-6;
            for k in 0..x_j.dim() {
                let mut plus = x_j.stacked();
                let mut minus = x_j.stacked();
                plus[k] += h;
                minus[k] -= h;
                let sp = interpolate_state(&x_i, &StateVector::from_stacked(&plus), dt, tau).unwrap();
                let sm = interpolate_state(&x_i, &StateVector::from_stacked(&minus), dt, tau).unwrap();
                let fd = (sp.state.stacked() - sm.state.stacked()) / (2.0 * h);
                assert!((fd - out.jac_j.column(k)).amax() <= 1e-5);
            }
        }
    }

    proptest! {
        // Semigroup property of the transition family, exact in floating point.
        #[test]
        fn prop_transition_semigroup(a in 0.0..3.0f64, b in 0.0..3.0f64) {
            let d = 2;
            let lhs = transition_matrix(a, d).unwrap() * transition_matrix(b, d).unwrap();
            let rhs = transition_matrix(a + b, d).unwrap();
            prop_assert!((lhs - rhs).amax() <= 1e-15);
        }

        #[test]
        fn prop_process_noise_spd(dt in 1e-3..4.0f64, seed in 0u64..1000) {
            let mut rng = StdRng::seed_from_u64(seed);
            let qc = random_spd(&mut rng, 2);
            let q = process_noise_cov(dt, &qc).unwrap();
            prop_assert!(q.symmetric_eigenvalues().min() > 0.0);
        }

        #[test]
        fn prop_interpolation_endpoints(dt in 1e-2..2.0f64, seed in 0u64..1000) {
            let mut rng = StdRng::seed_from_u64(seed);
            let x_i = random_state(&mut rng, 2);
            let x_j = random_state(&mut rng, 2);
            let left = interpolate_state(&x_i, &x_j, dt, 0.0).unwrap();
            let right = interpolate_state(&x_i, &x_j, dt, dt).unwrap();
            prop_assert!((left.state.stacked() - x_i.stacked()).amax() <= 1e-12);
            prop_assert!((right.state.stacked() - x_j.stacked()).amax() <= 1e-12);
        }
    }
}
