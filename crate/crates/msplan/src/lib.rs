//! Collision-free trajectory planning on Gaussian-process factor graphs.
//!
//! A trajectory is a set of support states under a constant-velocity GP
//! prior; obstacle avoidance enters as hinge costs on a signed distance
//! field, evaluated at support states and at GP-interpolated states in
//! between. The factors form a chain-structured graph which is regrouped
//! into compound self- and edge-potentials and solved by min-sum message
//! passing with a Gauss-Newton solve per node. A whole-graph Gauss-Newton
//! baseline and a no-merging message-passing variant are included for
//! benchmarking, plus a scenario/suite layer for reproducible comparisons.
//!
//! Start with the `examples/` directory: each example is a runnable tour
//! of one capability (planning, benchmarking, distance fields, the GP
//! prior, message diagnostics). The `msplan` binary exposes the same
//! functionality as `plan`, `bench`, `sdf`, and `gen-suite` subcommands.

pub mod bench;
pub mod env;
pub mod error;
pub mod factors;
pub mod gp;
pub mod kinematics;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
