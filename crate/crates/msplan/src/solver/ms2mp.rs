//! Min-sum message passing on the compound chain.

use nalgebra::DVector;

use crate::error::Result;
use crate::factors::{CompoundGraph, FactorGraph};
use crate::solver::local::{LocalProblem, LocalTerm};
use crate::solver::message::{linearize_edge_group, linearize_unary_group, QuadraticMessage};
use crate::solver::{diagnostics, finish, prepare, PlanResult, PlanningProblem, SolverConfig};

/// Directed messages along the chain after one synchronous sweep.
///
/// `fwd[i]` is the message into state `i` from edge `(i-1, i)`; `bwd[i]`
/// the message into state `i` from edge `(i, i+1)`. The ends hold zero
/// messages.
pub struct MessageState {
    pub fwd: Vec<QuadraticMessage>,
    pub bwd: Vec<QuadraticMessage>,
}

/// One forward-then-backward message sweep, linearized at `states`.
///
/// The variable-to-factor message toward an edge is the linearized
/// self-potential plus the message arriving from the node's other edge;
/// the factor-to-variable message minimizes the edge potential plus that
/// incoming quadratic over the eliminated state (a Schur complement of the
/// linearized joint form). Unary obstacle information of the eliminated
/// state therefore always joins the edge minimization through its
/// self-potential.
pub fn sweep(graph: &FactorGraph, compound: &CompoundGraph, states: &[DVector<f64>]) -> Result<MessageState> {
    let n = graph.num_states;
    let dim = graph.dim();
    let mut fwd = vec![QuadraticMessage::zero(dim); n];
    let mut bwd = vec![QuadraticMessage::zero(dim); n];
    for i in 0..n - 1 {
        let mut edge =
            linearize_edge_group(graph, &compound.edge_potentials[i], i, &states[i], &states[i + 1])?;
        let mut v2f = linearize_unary_group(graph, &compound.self_potentials[i], &states[i])?;
        v2f.add_assign(&fwd[i]);
        edge.add_left(&v2f);
        fwd[i + 1] = edge.marginalize_left(i)?;
    }
    for i in (1..n).rev() {
        let mut edge =
            linearize_edge_group(graph, &compound.edge_potentials[i - 1], i - 1, &states[i - 1], &states[i])?;
        let mut v2f = linearize_unary_group(graph, &compound.self_potentials[i], &states[i])?;
        v2f.add_assign(&bwd[i]);
        edge.add_right(&v2f);
        bwd[i - 1] = edge.marginalize_right(i)?;
    }
    Ok(MessageState { fwd, bwd })
}

/// Plans with min-sum message passing over compound factor nodes.
///
/// Per outer iteration: one synchronous forward/backward sweep linearized
/// at the iteration's states, then a Gauss-Newton belief update at every
/// node (self-potential plus both incoming messages). Terminates when the
/// largest state change drops to the configured tolerance.
pub fn ms2mp_plan(problem: &PlanningProblem, config: &SolverConfig) -> Result<PlanResult> {
    let mut prep = prepare(problem, config)?;
    let n = prep.graph.num_states;
    let gn = config.gn_settings();
    let mut history = vec![prep.graph.total_cost(&prep.states)?];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..config.max_iterations {
        iterations += 1;
        let msgs = sweep(&prep.graph, &prep.compound, &prep.states)?;
        let mut new_states = Vec::with_capacity(n);
        let mut max_delta = 0.0f64;
        for i in 0..n {
            let local = LocalProblem {
                graph: &prep.graph,
                node: i,
                terms: prep.compound.self_potentials[i].iter().map(|&id| LocalTerm::Unary(id)).collect(),
                messages: vec![&msgs.fwd[i], &msgs.bwd[i]],
            };
            let (x_new, _) = local.minimize(&prep.states[i], &gn)?;
            max_delta = max_delta.max((&x_new - &prep.states[i]).amax());
            new_states.push(x_new);
        }
        prep.states = new_states;
        history.push(prep.graph.total_cost(&prep.states)?);
        if max_delta <= config.tolerance {
            converged = true;
            break;
        }
    }

    // fresh sweep at the final states backs the local-optimality flags
    let msgs = sweep(&prep.graph, &prep.compound, &prep.states)?;
    let diag = diagnostics::local_optimality_check(&prep.graph, &prep.compound, &msgs, &prep.states, &gn)?;
    finish(problem, config, &prep, converged, iterations, history, Some(diag))
}
