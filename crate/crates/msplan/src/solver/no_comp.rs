//! Message passing without compound-node merging.
//!
//! Every raw factor acts as its own factor node: each binary factor keeps
//! its own directed messages and is linearized separately at every message
//! step, and sibling factors on the same edge exchange their (previous
//! sweep) messages through the variable-to-factor sums. On obstacle-free
//! problems the interpolated factors carry no information and the schedule
//! reduces to the compound chain; with obstacles it is the costlier, more
//! redundant variant.

use nalgebra::DVector;

use crate::error::Result;
use crate::solver::local::{LocalProblem, LocalTerm};
use crate::solver::message::{linearize_edge_group, linearize_unary_group, QuadraticMessage};
use crate::solver::ms2mp::sweep;
use crate::solver::{diagnostics, finish, prepare, PlanResult, PlanningProblem, SolverConfig};

pub fn ms2mp_no_comp_plan(problem: &PlanningProblem, config: &SolverConfig) -> Result<PlanResult> {
    let mut prep = prepare(problem, config)?;
    let n = prep.graph.num_states;
    let dim = prep.graph.dim();
    let gn = config.gn_settings();
    let num_factors = prep.graph.factors.len();

    // per-factor directed messages, indexed by factor id
    let mut to_right: Vec<QuadraticMessage> = vec![QuadraticMessage::zero(dim); num_factors];
    let mut to_left: Vec<QuadraticMessage> = vec![QuadraticMessage::zero(dim); num_factors];

    let mut history = vec![prep.graph.total_cost(&prep.states)?];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..config.max_iterations {
        iterations += 1;
        let states = prep.states.clone(); // frozen linearization points

        // forward sweep: one message per binary factor toward its right state
        for e in 0..n - 1 {
            let edge_ids = prep.compound.edge_potentials[e].clone();
            for &f in &edge_ids {
                let mut v2f = linearize_unary_group(&prep.graph, &prep.compound.self_potentials[e], &states[e])?;
                if e > 0 {
                    for &b in &prep.compound.edge_potentials[e - 1] {
                        v2f.add_assign(&to_right[b]);
                    }
                }
                for &sibling in &edge_ids {
                    if sibling != f {
                        v2f.add_assign(&to_left[sibling]);
                    }
                }
                let mut joint = linearize_edge_group(&prep.graph, &[f], e, &states[e], &states[e + 1])?;
                joint.add_left(&v2f);
                to_right[f] = joint.marginalize_left(e)?;
            }
        }

        // backward sweep: one message per binary factor toward its left state
        for e in (0..n - 1).rev() {
            let edge_ids = prep.compound.edge_potentials[e].clone();
            for &f in &edge_ids {
                let mut v2f =
                    linearize_unary_group(&prep.graph, &prep.compound.self_potentials[e + 1], &states[e + 1])?;
                if e + 1 < n - 1 {
                    for &b in &prep.compound.edge_potentials[e + 1] {
                        v2f.add_assign(&to_left[b]);
                    }
                }
                for &sibling in &edge_ids {
                    if sibling != f {
                        v2f.add_assign(&to_right[sibling]);
                    }
                }
                let mut joint = linearize_edge_group(&prep.graph, &[f], e, &states[e], &states[e + 1])?;
                joint.add_right(&v2f);
                to_left[f] = joint.marginalize_right(e + 1)?;
            }
        }

        // belief update per node from all incident factor messages
        let mut new_states: Vec<DVector<f64>> = Vec::with_capacity(n);
        let mut max_delta = 0.0f64;
        for i in 0..n {
            let mut messages: Vec<&QuadraticMessage> = Vec::new();
            if i > 0 {
                for &b in &prep.compound.edge_potentials[i - 1] {
                    messages.push(&to_right[b]);
                }
            }
            if i < n - 1 {
                for &b in &prep.compound.edge_potentials[i] {
                    messages.push(&to_left[b]);
                }
            }
            let local = LocalProblem {
                graph: &prep.graph,
                node: i,
                terms: prep.compound.self_potentials[i].iter().map(|&id| LocalTerm::Unary(id)).collect(),
                messages,
            };
            let (x_new, _) = local.minimize(&states[i], &gn)?;
            max_delta = max_delta.max((&x_new - &states[i]).amax());
            new_states.push(x_new);
        }
        prep.states = new_states;
        history.push(prep.graph.total_cost(&prep.states)?);
        if max_delta <= config.tolerance {
            converged = true;
            break;
        }
    }

    // diagnostics run on a compound sweep at the final states
    let msgs = sweep(&prep.graph, &prep.compound, &prep.states)?;
    let diag = diagnostics::local_optimality_check(&prep.graph, &prep.compound, &msgs, &prep.states, &gn)?;
    finish(problem, config, &prep, converged, iterations, history, Some(diag))
}

