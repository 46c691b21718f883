//! Scenario files and generated benchmark suites.
//!
//! A scenario is a TOML document with top-level tables `workspace`,
//! `robot`, `start`, `goal`, and optional `planner` and `suite` tables.
//! The exact schema is documented in `docs/scenario_schema.md`. Omitted
//! planner keys fall back to the defaults of [`SolverConfig`].

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DVector, Vector2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Obstacle, Workspace};
use crate::error::{Error, Result};
use crate::gp::StateVector;
use crate::kinematics::{forward_kinematics, BodySphere, RobotModel};
use crate::solver::{PlanningProblem, SolverConfig};

/// Default distance-field resolution for desk-scale scenarios (meters).
pub const DEFAULT_CELL_SIZE: f64 = 0.01;

/// A fully validated planning scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub workspace: Workspace,
    pub robot: Arc<RobotModel>,
    pub start: StateVector,
    pub goal: StateVector,
    pub config: SolverConfig,
    pub cell_size: f64,
    pub suite: Option<SuiteSpec>,
}

/// Descriptor for a randomly generated scenario suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub count: usize,
    pub seed: u64,
    pub min_obstacles: usize,
    pub max_obstacles: usize,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self { count: 24, seed: 7, min_obstacles: 4, max_obstacles: 6 }
    }
}

// ---------------------------------------------------------------------------
// file schema

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    workspace: WorkspaceFile,
    robot: RobotFile,
    start: EndpointFile,
    goal: EndpointFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    planner: Option<PlannerFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    suite: Option<SuiteSpec>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkspaceFile {
    min: [f64; 2],
    max: [f64; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    circles: Vec<CircleFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    boxes: Vec<BoxFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircleFile {
    center: [f64; 2],
    radius: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxFile {
    min: [f64; 2],
    max: [f64; 2],
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotFile {
    kind: String,
    #[serde(default)]
    base: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    heading: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    link_lengths: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    spheres: Vec<SphereFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SphereFile {
    link: usize,
    offset: f64,
    radius: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EndpointFile {
    position: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    velocity: Option<Vec<f64>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlannerFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_obs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    num_states: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_ip: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    qc_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    anchor_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mid_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gn_max_inner: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    damping_init: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cell_size: Option<f64>,
}

// ---------------------------------------------------------------------------

impl Scenario {
    /// Loads and validates a scenario file.
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let fallback = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".to_string());
        Self::from_toml_str(&text, &fallback)
            .map_err(|e| Error::scenario(format!("{}: {e}", path.display())))
    }

    /// Parses a scenario from TOML text. `fallback_name` applies when the
    /// file carries no `name` key.
    pub fn from_toml_str(text: &str, fallback_name: &str) -> Result<Scenario> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| Error::scenario(format!("parse error: {e}")))?;
        Self::from_file(file, fallback_name)
    }

    fn from_file(file: ScenarioFile, fallback_name: &str) -> Result<Scenario> {
        let mut obstacles = Vec::new();
        for c in &file.workspace.circles {
            obstacles.push(Obstacle::Circle {
                center: Vector2::new(c.center[0], c.center[1]),
                radius: c.radius,
            });
        }
        for b in &file.workspace.boxes {
            obstacles.push(Obstacle::Aabb {
                min: Vector2::new(b.min[0], b.min[1]),
                max: Vector2::new(b.max[0], b.max[1]),
            });
        }
        let workspace = Workspace::new(
            Vector2::new(file.workspace.min[0], file.workspace.min[1]),
            Vector2::new(file.workspace.max[0], file.workspace.max[1]),
            obstacles,
        )
        .map_err(|e| Error::scenario(format!("workspace: {e}")))?;

        let base = Vector2::new(file.robot.base[0], file.robot.base[1]);
        let robot = match file.robot.kind.as_str() {
            "point" => {
                let radius = file.robot.radius.ok_or_else(|| Error::scenario("robot.radius is required for kind = \"point\""))?;
                RobotModel::point(base, radius)
            }
            "planar_arm" => RobotModel::planar_arm(
                base,
                file.robot.heading.unwrap_or(0.0),
                file.robot.link_lengths.clone(),
                file.robot
                    .spheres
                    .iter()
                    .map(|s| BodySphere { link: s.link, offset: s.offset, radius: s.radius })
                    .collect(),
            ),
            other => Err(Error::scenario(format!(
                "robot.kind must be \"point\" or \"planar_arm\", got \"{other}\""
            ))),
        }
        .map_err(|e| Error::scenario(format!("robot: {e}")))?;

        let start = endpoint_state(&file.start, robot.dof(), "start")?;
        let goal = endpoint_state(&file.goal, robot.dof(), "goal")?;

        let planner = file.planner.unwrap_or_default();
        let defaults = SolverConfig::default();
        let config = SolverConfig {
            eps: planner.eps.unwrap_or(defaults.eps),
            sigma_obs: planner.sigma_obs.unwrap_or(defaults.sigma_obs),
            num_states: planner.num_states.unwrap_or(defaults.num_states),
            n_ip: planner.n_ip.unwrap_or(defaults.n_ip),
            total_time: planner.total_time.unwrap_or(defaults.total_time),
            qc_scale: planner.qc_scale.unwrap_or(defaults.qc_scale),
            anchor_sigma: planner.anchor_sigma.unwrap_or(defaults.anchor_sigma),
            mid_sigma: planner.mid_sigma.unwrap_or(defaults.mid_sigma),
            max_iterations: planner.max_iterations.unwrap_or(defaults.max_iterations),
            tolerance: planner.tolerance.unwrap_or(defaults.tolerance),
            gn_max_inner: planner.gn_max_inner.unwrap_or(defaults.gn_max_inner),
            damping_init: planner.damping_init.unwrap_or(defaults.damping_init),
        };
        let cell_size = planner.cell_size.unwrap_or(DEFAULT_CELL_SIZE);

        let scenario = Scenario {
            name: file.name.unwrap_or_else(|| fallback_name.to_string()),
            workspace,
            robot: Arc::new(robot),
            start,
            goal,
            config,
            cell_size,
            suite: file.suite,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Checks every scenario invariant, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        self.workspace.validate().map_err(|e| Error::scenario(format!("workspace: {e}")))?;
        self.robot.validate().map_err(|e| Error::scenario(format!("robot: {e}")))?;
        if self.config.eps < 0.0 {
            return Err(Error::scenario(format!("planner.eps must be nonnegative, got {}", self.config.eps)));
        }
        self.config.validate().map_err(|e| Error::scenario(format!("planner: {e}")))?;
        if self.cell_size <= 0.0 {
            return Err(Error::scenario(format!("planner.cell_size must be positive, got {}", self.cell_size)));
        }
        for (what, state) in [("start", &self.start), ("goal", &self.goal)] {
            if state.d_cfg() != self.robot.dof() {
                return Err(Error::scenario(format!(
                    "{what}.position has {} entries, robot expects {}",
                    state.d_cfg(),
                    self.robot.dof()
                )));
            }
            let clearance = self.endpoint_clearance(state)?;
            if clearance <= 0.0 {
                return Err(Error::scenario(format!(
                    "{what} configuration is in collision (clearance {clearance:.4} m)"
                )));
            }
            for place in forward_kinematics(&self.robot, &state.position)? {
                if !self.workspace.contains(&place.center) {
                    return Err(Error::scenario(format!("{what} configuration leaves the workspace bounds")));
                }
            }
        }
        if let Some(suite) = &self.suite {
            if suite.count == 0 {
                return Err(Error::scenario("suite.count must be positive"));
            }
            if suite.min_obstacles > suite.max_obstacles {
                return Err(Error::scenario("suite.min_obstacles exceeds suite.max_obstacles"));
            }
        }
        Ok(())
    }

    fn endpoint_clearance(&self, state: &StateVector) -> Result<f64> {
        let mut min = f64::INFINITY;
        for place in forward_kinematics(&self.robot, &state.position)? {
            min = min.min(self.workspace.signed_distance(&place.center) - place.radius);
        }
        Ok(min)
    }

    /// Builds the planning problem, precomputing the distance field.
    pub fn problem(&self) -> Result<PlanningProblem> {
        PlanningProblem::new(
            self.workspace.clone(),
            Arc::clone(&self.robot),
            self.start.clone(),
            self.goal.clone(),
            self.cell_size,
        )
    }

    /// Serializes back to the TOML schema.
    pub fn to_toml_string(&self) -> Result<String> {
        let mut circles = Vec::new();
        let mut boxes = Vec::new();
        for o in &self.workspace.obstacles {
            match o {
                Obstacle::Circle { center, radius } => {
                    circles.push(CircleFile { center: [center.x, center.y], radius: *radius })
                }
                Obstacle::Aabb { min, max } => {
                    boxes.push(BoxFile { min: [min.x, min.y], max: [max.x, max.y] })
                }
            }
        }
        let robot = match self.robot.as_ref() {
            RobotModel::Point { base, radius } => RobotFile {
                kind: "point".into(),
                base: [base.x, base.y],
                radius: Some(*radius),
                ..Default::default()
            },
            RobotModel::PlanarArm { base, heading, link_lengths, spheres } => RobotFile {
                kind: "planar_arm".into(),
                base: [base.x, base.y],
                heading: Some(*heading),
                link_lengths: link_lengths.clone(),
                spheres: spheres
                    .iter()
                    .map(|s| SphereFile { link: s.link, offset: s.offset, radius: s.radius })
                    .collect(),
                ..Default::default()
            },
        };
        let file = ScenarioFile {
            name: Some(self.name.clone()),
            workspace: WorkspaceFile {
                min: [self.workspace.bounds_min.x, self.workspace.bounds_min.y],
                max: [self.workspace.bounds_max.x, self.workspace.bounds_max.y],
                circles,
                boxes,
            },
            robot,
            start: EndpointFile {
                position: self.start.position.iter().copied().collect(),
                velocity: Some(self.start.velocity.iter().copied().collect()),
            },
            goal: EndpointFile {
                position: self.goal.position.iter().copied().collect(),
                velocity: Some(self.goal.velocity.iter().copied().collect()),
            },
            planner: Some(PlannerFile {
                eps: Some(self.config.eps),
                sigma_obs: Some(self.config.sigma_obs),
                num_states: Some(self.config.num_states),
                n_ip: Some(self.config.n_ip),
                total_time: Some(self.config.total_time),
                qc_scale: Some(self.config.qc_scale),
                anchor_sigma: Some(self.config.anchor_sigma),
                mid_sigma: Some(self.config.mid_sigma),
                max_iterations: Some(self.config.max_iterations),
                tolerance: Some(self.config.tolerance),
                gn_max_inner: Some(self.config.gn_max_inner),
                damping_init: Some(self.config.damping_init),
                cell_size: Some(self.cell_size),
            }),
            suite: self.suite.clone(),
        };
        toml::to_string_pretty(&file).map_err(|e| Error::scenario(format!("serialize: {e}")))
    }
}

fn endpoint_state(file: &EndpointFile, dof: usize, what: &str) -> Result<StateVector> {
    if file.position.len() != dof {
        return Err(Error::scenario(format!(
            "{what}.position has {} entries, robot expects {dof}",
            file.position.len()
        )));
    }
    let velocity = match &file.velocity {
        Some(v) => {
            if v.len() != dof {
                return Err(Error::scenario(format!(
                    "{what}.velocity has {} entries, robot expects {dof}",
                    v.len()
                )));
            }
            DVector::from_vec(v.clone())
        }
        None => DVector::zeros(dof),
    };
    StateVector::new(DVector::from_vec(file.position.clone()), velocity)
        .map_err(|e| Error::scenario(format!("{what}: {e}")))
}

// ---------------------------------------------------------------------------
// generated benchmark suite

const SUITE_BOUNDS_MIN: [f64; 2] = [0.0, 0.0];
const SUITE_BOUNDS_MAX: [f64; 2] = [1.2, 0.9];
const FRAME_THICKNESS: f64 = 0.04;
const ROBOT_RADIUS: f64 = 0.03;
const SUITE_EPS: f64 = 0.05;
const SUITE_CELL_SIZE: f64 = 0.005;

/// Generates the cluttered desk-scale suite: a ring pocket with a narrow
/// opening encloses the start (clearance drawn from [0.01, 0.05] m), a
/// framed workspace prevents detours outside the bounds, and a thin walled
/// barrier with a gap separates the pocket from the goal region.
pub fn generate_suite(spec: &SuiteSpec) -> Result<Vec<Scenario>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut scenarios = Vec::with_capacity(spec.count);
    for index in 0..spec.count {
        let scenario = generate_scenario(&mut rng, spec, index)?;
        scenarios.push(scenario);
    }
    Ok(scenarios)
}

fn frame_boxes() -> Vec<Obstacle> {
    let (x0, y0) = (SUITE_BOUNDS_MIN[0], SUITE_BOUNDS_MIN[1]);
    let (x1, y1) = (SUITE_BOUNDS_MAX[0], SUITE_BOUNDS_MAX[1]);
    let t = FRAME_THICKNESS;
    vec![
        Obstacle::Aabb { min: Vector2::new(x0, y0), max: Vector2::new(x1, y0 + t) },
        Obstacle::Aabb { min: Vector2::new(x0, y1 - t), max: Vector2::new(x1, y1) },
        Obstacle::Aabb { min: Vector2::new(x0, y0), max: Vector2::new(x0 + t, y1) },
        Obstacle::Aabb { min: Vector2::new(x1 - t, y0), max: Vector2::new(x1, y1) },
    ]
}

fn generate_scenario(rng: &mut ChaCha8Rng, spec: &SuiteSpec, index: usize) -> Result<Scenario> {
    for _attempt in 0..200 {
        let mut obstacles = frame_boxes();

        // pocket ring with an opening facing the goal half
        let pocket = Vector2::new(rng.random_range(0.26..0.38), rng.random_range(0.32..0.58));
        let ring_radius = rng.random_range(0.14..0.18);
        let opening_dir = rng.random_range(-0.5..0.5);
        let opening_half = rng.random_range(0.55..0.8);
        let ring_count = rng.random_range(spec.min_obstacles..=spec.max_obstacles);
        for k in 0..ring_count {
            let span = 2.0 * std::f64::consts::PI - 2.0 * opening_half;
            let angle = opening_dir
                + opening_half
                + span * (k as f64 + 0.5) / ring_count as f64
                + rng.random_range(-0.06..0.06);
            let center = pocket + Vector2::new(angle.cos(), angle.sin()) * ring_radius;
            let radius = rng.random_range(0.05..0.08);
            obstacles.push(Obstacle::Circle { center, radius });
        }

        // thin walled barrier with a gap between pocket and goal region
        let wall_x = rng.random_range(0.58..0.8);
        let thickness = rng.random_range(0.012..0.02);
        let gap_center = rng.random_range(0.22..0.68);
        let gap_half = rng.random_range(0.07..0.1);
        obstacles.push(Obstacle::Aabb {
            min: Vector2::new(wall_x, SUITE_BOUNDS_MIN[1]),
            max: Vector2::new(wall_x + thickness, gap_center - gap_half),
        });
        obstacles.push(Obstacle::Aabb {
            min: Vector2::new(wall_x, gap_center + gap_half),
            max: Vector2::new(wall_x + thickness, SUITE_BOUNDS_MAX[1]),
        });

        // light scatter between the pocket and the wall
        for _ in 0..rng.random_range(1..=2) {
            let center = Vector2::new(rng.random_range(0.5..0.95), rng.random_range(0.15..0.75));
            let radius = rng.random_range(0.04..0.06);
            if (center.x - wall_x).abs() < radius + 0.05 {
                continue;
            }
            obstacles.push(Obstacle::Circle { center, radius });
        }

        let workspace = Workspace::new(
            Vector2::new(SUITE_BOUNDS_MIN[0], SUITE_BOUNDS_MIN[1]),
            Vector2::new(SUITE_BOUNDS_MAX[0], SUITE_BOUNDS_MAX[1]),
            obstacles,
        )?;

        // start deep in the pocket with a small clearance
        let back = pocket
            - Vector2::new(opening_dir.cos(), opening_dir.sin()) * (ring_radius * rng.random_range(0.2..0.45));
        let mut start_pos = None;
        for _ in 0..400 {
            let jitter = Vector2::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
            let p = back + jitter;
            let clearance = workspace.signed_distance(&p) - ROBOT_RADIUS;
            if (0.01..=0.05).contains(&clearance) {
                start_pos = Some(p);
                break;
            }
        }
        let Some(start_pos) = start_pos else { continue };

        // open goal on the far side of the wall
        let mut goal_pos = None;
        for _ in 0..400 {
            let p = Vector2::new(rng.random_range(0.92..1.08), rng.random_range(0.14..0.76));
            if workspace.signed_distance(&p) - ROBOT_RADIUS >= 0.1 {
                goal_pos = Some(p);
                break;
            }
        }
        let Some(goal_pos) = goal_pos else { continue };

        let start = StateVector::new(DVector::from_vec(vec![start_pos.x, start_pos.y]), DVector::zeros(2))?;
        let goal = StateVector::new(DVector::from_vec(vec![goal_pos.x, goal_pos.y]), DVector::zeros(2))?;
        let scenario = Scenario {
            name: format!("suite_s{}_{:02}", spec.seed, index),
            workspace,
            robot: Arc::new(RobotModel::point(Vector2::zeros(), ROBOT_RADIUS)?),
            start,
            goal,
            config: SolverConfig { eps: SUITE_EPS, ..SolverConfig::default() },
            cell_size: SUITE_CELL_SIZE,
            suite: None,
        };
        if scenario.validate().is_ok() {
            return Ok(scenario);
        }
    }
    Err(Error::scenario(format!(
        "suite generation failed to find a valid scenario for index {index} (seed {})",
        spec.seed
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[workspace]
min = [0.0, 0.0]
max = [1.0, 1.0]

[[workspace.circles]]
center = [0.5, 0.5]
radius = 0.1

[robot]
kind = "point"
radius = 0.03

[start]
position = [0.1, 0.1]

[goal]
position = [0.9, 0.9]
"#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = Scenario::from_toml_str(MINIMAL, "minimal").unwrap();
        assert_eq!(s.name, "minimal");
        assert_eq!(s.config.num_states, 11);
        assert_eq!(s.config.n_ip, 4);
        assert_eq!(s.config.eps, 0.2);
        assert_eq!(s.config.sigma_obs, 1e-3);
        assert_eq!(s.start.velocity.norm(), 0.0);
    }

    #[test]
    fn negative_eps_is_rejected_by_name() {
        let text = format!("{MINIMAL}\n[planner]\neps = -1.0\n");
        let err = Scenario::from_toml_str(&text, "bad").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("eps"), "error should name eps: {msg}");
    }

    #[test]
    fn start_in_collision_is_rejected() {
        let text = MINIMAL.replace("position = [0.1, 0.1]", "position = [0.5, 0.55]");
        let err = Scenario::from_toml_str(&text, "bad").unwrap_err();
        assert!(err.to_string().contains("collision"), "{err}");
    }

    #[test]
    fn scenario_round_trips_through_toml() {
        let s = Scenario::from_toml_str(MINIMAL, "minimal").unwrap();
        let text = s.to_toml_string().unwrap();
        let back = Scenario::from_toml_str(&text, "other").unwrap();
        assert_eq!(back.name, "minimal");
        assert_eq!(back.workspace, s.workspace);
        assert_eq!(back.config, s.config);
        assert_eq!(back.start, s.start);
    }

    #[test]
    fn suite_generation_is_deterministic() {
        let spec = SuiteSpec { count: 3, ..Default::default() };
        let a = generate_suite(&spec).unwrap();
        let b = generate_suite(&spec).unwrap();
        assert_eq!(a.len(), 3);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.workspace, y.workspace);
            assert_eq!(x.start, y.start);
            assert_eq!(x.goal, y.goal);
        }
    }

    #[test]
    fn generated_starts_sit_close_to_obstacles() {
        let spec = SuiteSpec { count: 5, ..Default::default() };
        for s in generate_suite(&spec).unwrap() {
            let clearance = s.endpoint_clearance(&s.start).unwrap();
            assert!(
                (0.01..=0.05).contains(&clearance),
                "start clearance {clearance} outside the pocket band"
            );
        }
    }
}
