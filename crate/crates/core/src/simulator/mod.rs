//! Fixed-timestep engine tying the controller, drivetrain, contact model and
//! kinematics together, plus the step-response and tension-test harnesses.

mod body;
mod record;
mod run;
mod step_response;
mod world;

use serde::{Deserialize, Serialize};

use crate::controller::HaltReason;
use crate::drivetrain::{EncoderModel, GearboxParams, LinearActuatorParams};
use crate::environment::{ContactParams, DrillParams, TunnelCrossSection};
use crate::error::{Error, Result};
use crate::geometry::Pose;

pub use body::{integrate_step, BodyState};
pub use record::{
    write_log_csv, ContactChecks, PeakForces, PhaseTransition, Ratios, ScenarioSummary, SimLogRecord, LOG_HEADER,
};
pub use run::{
    run_batch, run_scenario, run_scenario_observed, run_tension_test, ScenarioInputs, ScenarioRun, TensionContact,
    TensionOptions, TensionReport,
};
pub use step_response::{run_step_response, StepRecord, StepResponse, RISE_TOLERANCE};
pub use world::{Simulator, StepReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldMode {
    /// Pinned until every leg has latched contact.
    FixedUntilAllContact,
    /// Pinned until hard bracing has finished.
    FixedUntilBraced,
    /// Pinned until the given simulated time (s).
    FixedUntilReleaseTime(f64),
    NeverHeld,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    BracingAndDrilling,
    TensionTest,
    StepResponse,
    WorkspaceOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    /// Magnitude of gravity along −y, m/s².
    pub gravity: f64,
    pub hold_mode: HoldMode,
    pub seed: u64,
    pub initial_pose: Pose,
    /// Initial (left, right) side-leg rotations.
    pub initial_rotations: (f64, f64),
    pub scenario_kind: ScenarioKind,
    /// Physics steps per log record.
    pub log_decimation: u32,
    /// Standard deviation of additive force-sensor noise, N. 0 disables it.
    pub sensor_noise: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.001,
            duration: 30.0,
            gravity: 9.81,
            hold_mode: HoldMode::FixedUntilAllContact,
            seed: 0,
            initial_pose: Pose::default(),
            initial_rotations: (0.0, 0.0),
            scenario_kind: ScenarioKind::BracingAndDrilling,
            log_decimation: 10,
            sensor_noise: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, control_period: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("sim: dt must be positive"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config("sim: duration must be positive"));
        }
        if self.dt > control_period * (1.0 + 1e-9) {
            return Err(Error::config("sim: dt must not exceed the control period"));
        }
        let ratio = control_period / self.dt;
        if (ratio - ratio.round()).abs() > 1e-6 {
            return Err(Error::config("sim: control period must be an integer multiple of dt"));
        }
        if self.log_decimation == 0 {
            return Err(Error::config("sim: log_decimation must be at least 1"));
        }
        if !(self.gravity.is_finite() && self.sensor_noise >= 0.0 && self.sensor_noise.is_finite()) {
            return Err(Error::config(
                "sim: gravity and sensor noise must be finite, noise non-negative",
            ));
        }
        if let HoldMode::FixedUntilReleaseTime(t) = self.hold_mode {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::config("sim: release time must be non-negative"));
            }
        }
        let p = self.initial_pose;
        if ![p.x, p.y, p.phi, self.initial_rotations.0, self.initial_rotations.1]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::config("sim: initial state must be finite"));
        }
        Ok(())
    }

    /// Number of physics steps covering `duration`.
    pub fn steps(&self) -> u64 {
        (self.duration / self.dt - 1e-9).ceil().max(1.0) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivetrainParams {
    /// Shared by the three legs.
    pub actuator: LinearActuatorParams,
    pub gearbox: GearboxParams,
    pub encoder: EncoderModel,
    /// Revolute joint slew rate, rad/s.
    pub rotation_rate_limit: f64,
}

impl Default for DrivetrainParams {
    fn default() -> Self {
        Self {
            actuator: LinearActuatorParams::default(),
            gearbox: GearboxParams::default(),
            encoder: EncoderModel::default(),
            rotation_rate_limit: 0.785,
        }
    }
}

impl DrivetrainParams {
    pub fn validate(&self) -> Result<()> {
        self.gearbox.validate()?;
        let a = &self.actuator;
        if !(a.base_length > 0.0 && a.stroke > 0.0 && a.max_push_force > 0.0 && a.max_speed > 0.0) {
            return Err(Error::config("drivetrain: actuator parameters must be positive"));
        }
        if !(self.encoder.quantization_step > 0.0 && self.encoder.backlash >= 0.0) {
            return Err(Error::config(
                "drivetrain: encoder step must be positive and backlash non-negative",
            ));
        }
        if !(self.rotation_rate_limit > 0.0 && self.rotation_rate_limit.is_finite()) {
            return Err(Error::config("drivetrain: rotation rate limit must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentParams {
    pub tunnel: TunnelCrossSection,
    pub contact: ContactParams,
    pub drill: DrillParams,
}

impl EnvironmentParams {
    pub fn validate(&self) -> Result<()> {
        let c = &self.contact;
        if !(c.stiffness > 0.0 && c.damping >= 0.0 && c.friction_mu >= 0.0 && c.regularization_velocity > 0.0) {
            return Err(Error::config(
                "environment: need stiffness > 0, damping >= 0, mu >= 0, regularization velocity > 0",
            ));
        }
        let d = &self.drill;
        if !(d.feed_gain >= 0.0
            && d.reaction_cap > 0.0
            && d.feed_speed >= 0.0
            && d.base_length >= 0.0
            && d.stroke >= 0.0)
        {
            return Err(Error::config(
                "environment: need drill feed_gain >= 0, reaction_cap > 0 and non-negative geometry",
            ));
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Halted(HaltReason),
    DurationElapsed,
}

impl Outcome {
    pub fn token(self) -> String {
        match self {
            Outcome::Halted(r) => format!("halted_{}", r.as_str()),
            Outcome::DurationElapsed => "duration_elapsed".to_string(),
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.token())
    }
}

/// Each leg's share of the total leg force; all zero when nothing pushes.
pub fn force_ratios(f_left: f64, f_center: f64, f_right: f64) -> [f64; 3] {
    let total = f_left + f_center + f_right;
    if total > 0.0 {
        [f_left / total, f_center / total, f_right / total]
    } else {
        [0.0; 3]
    }
}
