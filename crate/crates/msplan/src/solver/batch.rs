//! Whole-graph baseline: damped Gauss-Newton over all support states at
//! once. The normal equations are block tridiagonal because every binary
//! factor joins consecutive states; they are solved by block forward
//! elimination without ever forming the dense system.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factors::FactorGraph;
use crate::solver::ms2mp::sweep;
use crate::solver::{diagnostics, finish, prepare, PlanResult, PlanningProblem, SolverConfig};

const DAMPING_MAX: f64 = 1e12;

struct NormalEquations {
    diag: Vec<DMatrix<f64>>,
    off: Vec<DMatrix<f64>>, // block (i, i+1)
    grad: Vec<DVector<f64>>,
}

fn assemble(graph: &FactorGraph, states: &[DVector<f64>]) -> Result<NormalEquations> {
    let n = graph.num_states;
    let dim = graph.dim();
    let mut eq = NormalEquations {
        diag: vec![DMatrix::zeros(dim, dim); n],
        off: vec![DMatrix::zeros(dim, dim); n.saturating_sub(1)],
        grad: vec![DVector::zeros(dim); n],
    };
    for factor in &graph.factors {
        let eval = graph.eval(factor, states)?;
        let weighted: Vec<(usize, DMatrix<f64>)> = eval
            .jacobians
            .iter()
            .map(|(var, jac)| (*var, jac.transpose() * &eval.info))
            .collect();
        for ((var_a, jtw), (_, jac_a)) in weighted.iter().zip(&eval.jacobians) {
            eq.diag[*var_a] += jtw * jac_a;
            eq.grad[*var_a] += jtw * &eval.residual;
        }
        if eval.jacobians.len() == 2 {
            let (i, ref jac_i) = eval.jacobians[0];
            let (j, ref jac_j) = eval.jacobians[1];
            let (lo, hi_jac, lo_jac) = if i < j { (i, jac_j, jac_i) } else { (j, jac_i, jac_j) };
            eq.off[lo] += lo_jac.transpose() * &eval.info * hi_jac;
        }
    }
    Ok(eq)
}

/// Solves `(H + lambda I) delta = -grad` by block Thomas elimination.
/// Returns `None` when a pivot block fails to factor.
fn solve_damped(eq: &NormalEquations, lambda: f64) -> Option<Vec<DVector<f64>>> {
    let n = eq.diag.len();
    let dim = eq.diag[0].nrows();
    let damp = DMatrix::identity(dim, dim) * lambda;
    let mut pivots: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    let mut rhs: Vec<DVector<f64>> = eq.grad.iter().map(|g| -g).collect();

    let mut current = &eq.diag[0] + &damp;
    for i in 0..n {
        let chol = current.clone().cholesky()?;
        if i + 1 < n {
            let gain = chol.solve(&eq.off[i]); // pivot^-1 * off
            let rhs_i = chol.solve(&rhs[i]);
            current = &eq.diag[i + 1] + &damp - eq.off[i].transpose() * &gain;
            let correction = eq.off[i].transpose() * &rhs_i;
            rhs[i + 1] -= correction;
        }
        pivots.push(chol.l());
    }

    // back substitution; pivots hold the Cholesky factors of the
    // eliminated diagonal blocks
    let mut delta = vec![DVector::zeros(dim); n];
    for i in (0..n).rev() {
        let mut b = rhs[i].clone();
        if i + 1 < n {
            b -= &eq.off[i] * &delta[i + 1];
        }
        let l = &pivots[i];
        let y = l.solve_lower_triangular(&b)?;
        delta[i] = l.transpose().solve_upper_triangular(&y)?;
    }
    Some(delta)
}

fn run_batch(problem: &PlanningProblem, config: &SolverConfig) -> Result<PlanResult> {
    let mut prep = prepare(problem, config)?;
    let mut history = vec![prep.graph.total_cost(&prep.states)?];
    let mut obj = history[0];
    let mut lambda = 0.0f64;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..config.max_iterations {
        let eq = assemble(&prep.graph, &prep.states)?;
        let grad_norm: f64 = eq.grad.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
        if grad_norm <= 1e-9 {
            converged = true;
            break;
        }
        let delta;
        loop {
            match solve_damped(&eq, lambda) {
                Some(d) => {
                    let cand: Vec<DVector<f64>> =
                        prep.states.iter().zip(&d).map(|(x, dx)| x + dx).collect();
                    let cand_obj = prep.graph.total_cost(&cand)?;
                    if cand_obj <= obj {
                        delta = d;
                        prep.states = cand;
                        obj = cand_obj;
                        lambda = if lambda <= 1e-12 { 0.0 } else { lambda / 10.0 };
                        break;
                    }
                    let max_step = d.iter().map(|dx| dx.amax()).fold(0.0, f64::max);
                    if max_step <= 1e-14 {
                        // damping has flattened the step; treat as converged
                        delta = d;
                        break;
                    }
                    lambda = escalate(lambda, config)?;
                }
                None => lambda = escalate(lambda, config)?,
            }
        }
        iterations += 1;
        history.push(obj);
        let max_delta = delta.iter().map(|d| d.amax()).fold(0.0, f64::max);
        if max_delta <= config.tolerance {
            converged = true;
            break;
        }
    }

    let msgs = sweep(&prep.graph, &prep.compound, &prep.states)?;
    let diag = diagnostics::local_optimality_check(
        &prep.graph,
        &prep.compound,
        &msgs,
        &prep.states,
        &config.gn_settings(),
    )?;
    finish(problem, config, &prep, converged, iterations, history, Some(diag))
}

fn escalate(lambda: f64, config: &SolverConfig) -> Result<f64> {
    let next = if lambda == 0.0 { config.damping_init } else { lambda * 10.0 };
    if next > DAMPING_MAX {
        return Err(Error::Numerical {
            node: 0,
            reason: "batch normal equations remained singular or non-decreasing under damping".into(),
        });
    }
    Ok(next)
}

/// Batch whole-graph planner (the interpolation-aware baseline).
pub fn batch_plan(problem: &PlanningProblem, config: &SolverConfig) -> Result<PlanResult> {
    run_batch(problem, config)
}

/// Batch planner without interpolated obstacle factors: same support
/// states, unary obstacle costs only.
pub fn batch_no_intp_plan(problem: &PlanningProblem, config: &SolverConfig) -> Result<PlanResult> {
    let reduced = SolverConfig { n_ip: 0, ..config.clone() };
    run_batch(problem, &reduced)
}
