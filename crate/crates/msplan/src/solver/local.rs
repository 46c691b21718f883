//! Damped Gauss-Newton minimization of a single-state local objective.
//!
//! A local objective is a sum of residual factors in one state (unary
//! factors, or binary factors with the neighbor state held fixed) plus
//! incoming quadratic messages. The solver tries the undamped step first
//! and escalates additive damping until the step stops increasing the
//! objective, so accepted iterates are monotone.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factors::FactorGraph;
use crate::solver::message::QuadraticMessage;

/// Upper bound for damping escalation before declaring the solve singular.
const DAMPING_MAX: f64 = 1e12;

/// Inner-loop settings for the local and batch Gauss-Newton solves.
#[derive(Clone, Copy, Debug)]
pub struct GnSettings {
    pub max_inner: usize,
    pub damping_init: f64,
    pub grad_tol: f64,
}

impl Default for GnSettings {
    fn default() -> Self {
        Self { max_inner: 50, damping_init: 1e-4, grad_tol: 1e-9 }
    }
}

/// One term of a local objective.
#[derive(Clone, Debug)]
pub enum LocalTerm {
    /// Unary factor of the optimized state.
    Unary(usize),
    /// Binary factor with its left state frozen; optimize the right state.
    BinaryFixedLeft { factor: usize, left: DVector<f64> },
    /// Binary factor with its right state frozen; optimize the left state.
    BinaryFixedRight { factor: usize, right: DVector<f64> },
}

/// Local nonlinear least squares: residual terms plus quadratic messages,
/// all in one state.
pub struct LocalProblem<'a> {
    pub graph: &'a FactorGraph,
    pub node: usize,
    pub terms: Vec<LocalTerm>,
    pub messages: Vec<&'a QuadraticMessage>,
}

impl<'a> LocalProblem<'a> {
    /// Nonlinear objective value at `x`.
    pub fn objective(&self, x: &DVector<f64>) -> Result<f64> {
        let mut sum = 0.0;
        for term in &self.terms {
            sum += self.term_eval(term, x)?.cost();
        }
        for m in &self.messages {
            sum += m.value(x);
        }
        Ok(sum)
    }

    fn term_eval(&self, term: &LocalTerm, x: &DVector<f64>) -> Result<crate::factors::FactorEval> {
        match term {
            LocalTerm::Unary(id) => self.graph.eval_single(&self.graph.factors[*id], x),
            LocalTerm::BinaryFixedLeft { factor, left } => {
                self.graph.eval_pair(&self.graph.factors[*factor], left, x)
            }
            LocalTerm::BinaryFixedRight { factor, right } => {
                self.graph.eval_pair(&self.graph.factors[*factor], x, right)
            }
        }
    }

    /// Gauss-Newton normal matrix and gradient at `x`.
    fn quadratic_model(&self, x: &DVector<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let dim = x.len();
        let mut h = DMatrix::zeros(dim, dim);
        let mut g = DVector::zeros(dim);
        for term in &self.terms {
            let eval = self.term_eval(term, x)?;
            // pick the jacobian block of the free state
            let free = match term {
                LocalTerm::Unary(_) => 0,
                LocalTerm::BinaryFixedLeft { .. } => 1,
                LocalTerm::BinaryFixedRight { .. } => 0,
            };
            let jac = &eval.jacobians[free].1;
            let jtw = jac.transpose() * &eval.info;
            h += &jtw * jac;
            g += &jtw * &eval.residual;
        }
        for m in &self.messages {
            h += &m.info;
            g += m.gradient(x);
        }
        Ok((h, g))
    }

    /// Minimizes the local objective starting from `x0`. Returns the
    /// minimizer and its objective value.
    pub fn minimize(&self, x0: &DVector<f64>, gn: &GnSettings) -> Result<(DVector<f64>, f64)> {
        let mut x = x0.clone();
        let mut obj = self.objective(&x)?;
        let mut lambda = 0.0f64;
        let dim = x.len();
        'outer: for _ in 0..gn.max_inner {
            let (h, g) = self.quadratic_model(&x)?;
            if g.norm() <= gn.grad_tol {
                break;
            }
            loop {
                let mut m = h.clone();
                for k in 0..dim {
                    m[(k, k)] += lambda;
                }
                let step = m.cholesky().map(|c| c.solve(&(-&g)));
                match step {
                    Some(delta) => {
                        if delta.amax() <= 1e-14 * (1.0 + x.amax()) {
                            break 'outer; // stalled at the minimum
                        }
                        let cand = &x + &delta;
                        let cand_obj = self.objective(&cand)?;
                        if cand_obj <= obj {
                            x = cand;
                            obj = cand_obj;
                            lambda = if lambda <= 1e-12 { 0.0 } else { lambda / 10.0 };
                            break;
                        }
                        lambda = escalate(lambda, gn, self.node)?;
                    }
                    None => {
                        lambda = escalate(lambda, gn, self.node)?;
                    }
                }
            }
        }
        Ok((x, obj))
    }
}

fn escalate(lambda: f64, gn: &GnSettings, node: usize) -> Result<f64> {
    let next = if lambda == 0.0 { gn.damping_init } else { lambda * 10.0 };
    if next > DAMPING_MAX {
        return Err(Error::Numerical {
            node,
            reason: "normal equations remained singular or non-decreasing after damping escalation".into(),
        });
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    // local problems made of messages only need no graph; build a minimal
    // graph-free harness by abusing an empty term list
    fn message_only_problem<'a>(
        graph: &'a FactorGraph,
        messages: Vec<&'a QuadraticMessage>,
    ) -> LocalProblem<'a> {
        LocalProblem { graph, node: 0, terms: Vec::new(), messages }
    }

    fn tiny_graph() -> FactorGraph {
        use crate::env::{SignedDistanceField, Workspace};
        use crate::gp::{prior_mean_trajectory, GpPriorModel, StateVector};
        use crate::kinematics::RobotModel;
        use nalgebra::Vector2;
        use std::sync::Arc;

        let ws = Workspace::new(Vector2::new(-1.0, -1.0), Vector2::new(1.0, 1.0), vec![]).unwrap();
        let sdf = Arc::new(SignedDistanceField::build(&ws, 0.05).unwrap());
        let model = Arc::new(RobotModel::point(Vector2::zeros(), 0.05).unwrap());
        let start = StateVector::zeros(2);
        let goal = StateVector::new(DVector::from_vec(vec![0.5, 0.0]), DVector::zeros(2)).unwrap();
        let traj = prior_mean_trajectory(&start, &goal, 2, 1.0).unwrap();
        let prior = GpPriorModel::new(start, goal, 1.0, 1e-4, 1.0).unwrap();
        crate::factors::assemble_graph(&prior, &traj, model, sdf, 0, 0.2, 0.01).unwrap()
    }

    // 1/2 (x - 1)^2 + 1/2 (2x - 3)^2 has its minimum at x = 7/5
    #[test]
    fn one_dimensional_normal_equations() {
        let graph = tiny_graph();
        let m1 = QuadraticMessage {
            info: DMatrix::from_element(1, 1, 1.0),
            eta: DVector::from_vec(vec![1.0]),
            constant: 0.5,
        };
        let m2 = QuadraticMessage {
            info: DMatrix::from_element(1, 1, 4.0),
            eta: DVector::from_vec(vec![6.0]),
            constant: 4.5,
        };
        let p = message_only_problem(&graph, vec![&m1, &m2]);
        let (x, obj) = p.minimize(&DVector::zeros(1), &GnSettings::default()).unwrap();
        assert_relative_eq!(x[0], 7.0 / 5.0, epsilon = 1e-9);
        let expected = 0.5 * (7.0 / 5.0 - 1.0f64).powi(2) + 0.5 * (2.0 * 7.0 / 5.0 - 3.0f64).powi(2);
        assert_relative_eq!(obj, expected, epsilon = 1e-9);
    }

    // quadratic objectives are solved exactly by the first undamped step
    #[test]
    fn quadratic_objective_exact_in_one_step() {
        let graph = tiny_graph();
        let info = DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 2.0]);
        let eta = DVector::from_vec(vec![1.0, -2.0]);
        let m = QuadraticMessage { info: info.clone(), eta: eta.clone(), constant: 0.0 };
        let p = message_only_problem(&graph, vec![&m]);
        let mut gn = GnSettings::default();
        gn.max_inner = 1;
        let (x, _) = p.minimize(&DVector::from_vec(vec![5.0, -7.0]), &gn).unwrap();
        let expected = info.cholesky().unwrap().solve(&eta);
        assert!((x - expected).amax() <= 1e-10);
    }
}
