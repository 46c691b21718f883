//! Benchmark runner and result emission.
//!
//! The runner executes every requested planner on every scenario and
//! aggregates success rates and timings per planner. A run counts as a
//! success only when the planner converged and the dense clearance check
//! passed. Individual failures (including solver errors) are recorded and
//! never abort the suite.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{interpolate_state, StateVector, Trajectory};
use crate::scenario::Scenario;
use crate::solver::{
    batch_no_intp_plan, batch_plan, ms2mp_no_comp_plan, ms2mp_plan, PlanResult, PlanningProblem,
    SolverConfig,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Ms2mp,
    Ms2mpNoComp,
    Batch,
    BatchNoIntp,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 4] =
        [PlannerKind::Ms2mp, PlannerKind::Ms2mpNoComp, PlannerKind::Batch, PlannerKind::BatchNoIntp];

    pub fn name(&self) -> &'static str {
        match self {
            PlannerKind::Ms2mp => "ms2mp",
            PlannerKind::Ms2mpNoComp => "ms2mp_no_comp",
            PlannerKind::Batch => "batch",
            PlannerKind::BatchNoIntp => "batch_no_intp",
        }
    }

    pub fn run(&self, problem: &PlanningProblem, config: &SolverConfig) -> Result<PlanResult> {
        match self {
            PlannerKind::Ms2mp => ms2mp_plan(problem, config),
            PlannerKind::Ms2mpNoComp => ms2mp_no_comp_plan(problem, config),
            PlannerKind::Batch => batch_plan(problem, config),
            PlannerKind::BatchNoIntp => batch_no_intp_plan(problem, config),
        }
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ms2mp" => Ok(PlannerKind::Ms2mp),
            "ms2mp_no_comp" => Ok(PlannerKind::Ms2mpNoComp),
            "batch" => Ok(PlannerKind::Batch),
            "batch_no_intp" => Ok(PlannerKind::BatchNoIntp),
            other => Err(Error::invalid(format!(
                "unknown planner \"{other}\" (expected ms2mp, ms2mp_no_comp, batch, batch_no_intp)"
            ))),
        }
    }
}

/// Outcome of one planner on one scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunOutcome {
    pub scenario: String,
    pub planner: String,
    pub success: bool,
    pub converged: bool,
    pub collision_free: bool,
    pub iterations: usize,
    pub wall_time: f64,
    pub final_objective: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Aggregate row per planner.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlannerRow {
    pub planner: String,
    pub successes: usize,
    pub total: usize,
    pub success_rate: f64,
    pub avg_time: f64,
    pub max_time: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<PlannerRow>,
    pub outcomes: Vec<RunOutcome>,
}

impl BenchmarkReport {
    /// Human-readable table, one row per planner.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<16} {:>12} {:>16} {:>14}\n",
            "planner", "success (%)", "avg time (s)", "max time (s)"
        ));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<16} {:>12.1} {:>16.4} {:>14.4}\n",
                row.planner, row.success_rate, row.avg_time, row.max_time
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::invalid(format!("report serialization: {e}")))
    }

    /// Canonical bytes of the deterministic report content. Wall-clock
    /// times depend on the machine and are excluded; everything else
    /// (per-run outcomes, counts, rates, objectives) must reproduce
    /// bit-identically for a fixed suite seed.
    pub fn deterministic_bytes(&self) -> Result<Vec<u8>> {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                serde_json::json!({
                    "planner": r.planner,
                    "successes": r.successes,
                    "total": r.total,
                    "success_rate": r.success_rate,
                })
            })
            .collect();
        let outcomes: Vec<serde_json::Value> = self
            .outcomes
            .iter()
            .map(|o| {
                serde_json::json!({
                    "scenario": o.scenario,
                    "planner": o.planner,
                    "success": o.success,
                    "converged": o.converged,
                    "collision_free": o.collision_free,
                    "iterations": o.iterations,
                    "final_objective": o.final_objective,
                    "error": o.error,
                })
            })
            .collect();
        serde_json::to_vec(&serde_json::json!({ "rows": rows, "outcomes": outcomes }))
            .map_err(|e| Error::invalid(format!("report serialization: {e}")))
    }
}

/// Runs every planner on every scenario. Scenario cells run in parallel;
/// each cell owns its planner state and the aggregation order is fixed by
/// scenario then planner index, so reports are deterministic.
pub fn run_benchmark(scenarios: &[Scenario], planners: &[PlannerKind]) -> Result<BenchmarkReport> {
    if scenarios.is_empty() || planners.is_empty() {
        return Err(Error::invalid("benchmark needs at least one scenario and one planner"));
    }
    let outcomes: Vec<Vec<RunOutcome>> = scenarios
        .par_iter()
        .map(|scenario| {
            let problem = scenario.problem();
            planners
                .iter()
                .map(|planner| match &problem {
                    Ok(problem) => run_cell(scenario, problem, *planner),
                    Err(e) => failed_outcome(scenario, *planner, e),
                })
                .collect()
        })
        .collect();
    let outcomes: Vec<RunOutcome> = outcomes.into_iter().flatten().collect();

    let mut rows = Vec::with_capacity(planners.len());
    for planner in planners {
        let name = planner.name();
        let runs: Vec<&RunOutcome> = outcomes.iter().filter(|o| o.planner == name).collect();
        let successes = runs.iter().filter(|o| o.success).count();
        let total = runs.len();
        let avg_time = runs.iter().map(|o| o.wall_time).sum::<f64>() / total.max(1) as f64;
        let max_time = runs.iter().map(|o| o.wall_time).fold(0.0, f64::max);
        rows.push(PlannerRow {
            planner: name.to_string(),
            successes,
            total,
            success_rate: 100.0 * successes as f64 / total.max(1) as f64,
            avg_time,
            max_time,
        });
    }
    Ok(BenchmarkReport { rows, outcomes })
}

fn run_cell(scenario: &Scenario, problem: &PlanningProblem, planner: PlannerKind) -> RunOutcome {
    match planner.run(problem, &scenario.config) {
        Ok(result) => RunOutcome {
            scenario: scenario.name.clone(),
            planner: planner.name().to_string(),
            success: result.converged && result.collision_free,
            converged: result.converged,
            collision_free: result.collision_free,
            iterations: result.iterations,
            wall_time: result.wall_time,
            final_objective: result.objective_history.last().copied().unwrap_or(f64::NAN),
            error: None,
        },
        Err(e) => failed_outcome(scenario, planner, &e),
    }
}

fn failed_outcome(scenario: &Scenario, planner: PlannerKind, error: &Error) -> RunOutcome {
    RunOutcome {
        scenario: scenario.name.clone(),
        planner: planner.name().to_string(),
        success: false,
        converged: false,
        collision_free: false,
        iterations: 0,
        wall_time: 0.0,
        final_objective: f64::NAN,
        error: Some(error.to_string()),
    }
}

// ---------------------------------------------------------------------------
// result files

/// Summary record stored next to each exported trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanSummary {
    pub converged: bool,
    pub iterations: usize,
    pub wall_time: f64,
    pub collision_free: bool,
    pub objective_history: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_consistent: Option<Vec<bool>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub open_nodes: Option<Vec<usize>>,
}

/// Writes `<name>.traj.csv` (support states) and `<name>.summary.json`
/// into `dir`; with an upsample factor `f`, also `<name>.interp.csv`
/// holding `intervals * f + 1` interpolated rows.
pub fn export_result(
    result: &PlanResult,
    dir: &Path,
    name: &str,
    upsample: Option<usize>,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let traj_path = dir.join(format!("{name}.traj.csv"));
    write_trajectory(&result.trajectory, &traj_path)?;

    let summary = PlanSummary {
        converged: result.converged,
        iterations: result.iterations,
        wall_time: result.wall_time,
        collision_free: result.collision_free,
        objective_history: result.objective_history.clone(),
        min_consistent: result.diagnostics.as_ref().map(|d| d.min_consistent.clone()),
        open_nodes: result.diagnostics.as_ref().map(|d| d.open_nodes.clone()),
    };
    let summary_path = dir.join(format!("{name}.summary.json"));
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::invalid(format!("summary serialization: {e}")))?;
    fs::write(&summary_path, json).map_err(|e| Error::io(&summary_path, e))?;

    if let Some(factor) = upsample {
        if factor == 0 {
            return Err(Error::invalid("upsample factor must be positive"));
        }
        let path = dir.join(format!("{name}.interp.csv"));
        let upsampled = upsample_trajectory(&result.trajectory, factor)?;
        write_trajectory(&upsampled, &path)?;
    }
    Ok(())
}

/// Interpolates `factor` sub-states per interval, producing
/// `intervals * factor + 1` states.
pub fn upsample_trajectory(traj: &Trajectory, factor: usize) -> Result<Trajectory> {
    if factor == 0 {
        return Err(Error::invalid("upsample factor must be positive"));
    }
    let mut states = Vec::new();
    let mut times = Vec::new();
    for i in 0..traj.len() - 1 {
        let dt = traj.time(i + 1) - traj.time(i);
        for k in 0..factor {
            let tau = k as f64 * dt / factor as f64;
            let state = if k == 0 {
                traj.state(i).clone()
            } else {
                interpolate_state(traj.state(i), traj.state(i + 1), dt, tau)?.state
            };
            states.push(state);
            times.push(traj.time(i) + tau);
        }
    }
    states.push(traj.state(traj.len() - 1).clone());
    times.push(traj.time(traj.len() - 1));
    Trajectory::new(states, times)
}

/// Writes a trajectory as delimited text: a header then one row per state
/// with `index,time,pos...,vel...`. Floats use the shortest representation
/// that round-trips exactly.
pub fn write_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let d = traj.d_cfg();
    let mut header = String::from("index,time");
    for k in 0..d {
        header.push_str(&format!(",pos{k}"));
    }
    for k in 0..d {
        header.push_str(&format!(",vel{k}"));
    }
    writeln!(file, "{header}").map_err(|e| Error::io(path, e))?;
    for (i, state) in traj.states().iter().enumerate() {
        let mut row = format!("{},{}", i, traj.time(i));
        for v in state.position.iter().chain(state.velocity.iter()) {
            row.push_str(&format!(",{v}"));
        }
        writeln!(file, "{row}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Reads a trajectory written by [`write_trajectory`]; exact round-trip.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("empty trajectory file"))?
        .map_err(|e| Error::io(path, e))?;
    let columns = header.split(',').count();
    if columns < 4 || (columns - 2) % 2 != 0 {
        return Err(Error::invalid(format!("unexpected trajectory header: {header}")));
    }
    let d = (columns - 2) / 2;
    let mut states = Vec::new();
    let mut times = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(Error::invalid(format!("ragged trajectory row: {line}")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::invalid(format!("bad number {s}: {e}")))
        };
        times.push(parse(fields[1])?);
        let position = nalgebra::DVector::from_iterator(
            d,
            fields[2..2 + d].iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?,
        );
        let velocity = nalgebra::DVector::from_iterator(
            d,
            fields[2 + d..].iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?,
        );
        states.push(StateVector::new(position, velocity)?);
    }
    Trajectory::new(states, times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::prior_mean_trajectory;
    use nalgebra::DVector;

    fn line_trajectory() -> Trajectory {
        let start = StateVector::new(DVector::from_vec(vec![0.0]), DVector::from_vec(vec![0.5])).unwrap();
        let goal = StateVector::new(DVector::from_vec(vec![1.0]), DVector::from_vec(vec![0.5])).unwrap();
        prior_mean_trajectory(&start, &goal, 2, 2.0).unwrap()
    }

    #[test]
    fn trajectory_file_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let traj = line_trajectory();
        write_trajectory(&traj, &path).unwrap();
        let back = read_trajectory(&path).unwrap();
        assert_eq!(traj, back);
    }

    #[test]
    fn three_state_file_has_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trajectory(&line_trajectory(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4); // header + 3 states
    }

    #[test]
    fn upsample_row_count_formula() {
        let start = StateVector::new(DVector::from_vec(vec![0.0]), DVector::zeros(1)).unwrap();
        let goal = StateVector::new(DVector::from_vec(vec![1.0]), DVector::zeros(1)).unwrap();
        let traj = prior_mean_trajectory(&start, &goal, 10, 1.0).unwrap();
        let up = upsample_trajectory(&traj, 5).unwrap();
        assert_eq!(up.len(), 51);
    }

    #[test]
    fn planner_names_parse() {
        for kind in PlannerKind::ALL {
            let parsed: PlannerKind = kind.name().parse().unwrap();
            assert_eq!(parsed, kind);
        }
        assert!("nonsense".parse::<PlannerKind>().is_err());
    }
}
