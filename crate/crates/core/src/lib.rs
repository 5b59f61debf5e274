//! Planar simulator and analysis toolkit for a tri-leg self-bracing drilling robot.
//!
//! The crate is organised bottom-up:
//!
//! - [`kinematics`]: leg parameterization, closed-chain solve, workspace sampling.
//! - [`drivetrain`]: linear actuators, the self-locking worm gearbox, encoder and limit switches.
//! - [`environment`]: tunnel polygons, penalty contact, friction, drill reaction, static equilibrium.
//! - [`controller`]: the four-phase force-threshold state machine.
//! - [`simulator`]: the fixed-timestep engine tying everything together, plus the
//!   step-response and tension-test harnesses.
//! - [`scenario`]: the strict JSON scenario format consumed by the CLI.
//!
//! Everything is deterministic. Data-parallel loops (workspace grids, scenario
//! batches) go through [`exec::Execution`] and use rayon when the `parallel`
//! feature is enabled.

pub mod controller;
pub mod drivetrain;
pub mod environment;
pub mod error;
pub mod exec;
pub mod format;
pub mod geometry;
pub mod kinematics;
pub mod scenario;
pub mod simulator;

pub use error::{Error, Result};
pub use geometry::{Pose, Vec2};
