//! Scenario files: strict JSON with unit-suffixed keys.
//!
//! Unknown keys are rejected and every error carries the JSON path of the
//! offending value. Everything except the tunnel polygon and the controller
//! force thresholds has a default; [`ScenarioFile::default_document`] prints them all.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::ControllerConfig;
use crate::drivetrain::{EncoderModel, GearboxParams, LinearActuatorParams};
use crate::environment::{ContactParams, DrillParams, TunnelCrossSection};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec2};
use crate::kinematics::RobotParams;
use crate::simulator::{
    DrivetrainParams, EnvironmentParams, HoldMode, ScenarioInputs, ScenarioKind, SimConfig, TensionOptions,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub meta: MetaSection,
    pub tunnel: TunnelSection,
    pub robot: RobotSection,
    pub drivetrain: DrivetrainSection,
    pub environment: EnvironmentSection,
    pub controller: ControllerSection,
    pub sim: SimSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workspace: Option<WorkspaceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tension: Option<TensionSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetaSection {
    pub name: String,
    pub description: String,
}

impl Default for MetaSection {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            description: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunnelSection {
    pub vertices_m: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobotSection {
    pub l_min_m: f64,
    pub l_max_m: f64,
    pub theta_min_rad: f64,
    pub theta_max_rad: f64,
    pub leg_mount_offsets_m: [[f64; 2]; 3],
    pub body_mass_kg: f64,
    pub body_inertia_kg_m2: f64,
}

impl Default for RobotSection {
    fn default() -> Self {
        let r = RobotParams::default();
        Self {
            l_min_m: r.l_min,
            l_max_m: r.l_max,
            theta_min_rad: r.theta_min,
            theta_max_rad: r.theta_max,
            leg_mount_offsets_m: r.leg_mount_offsets.map(|v| [v.x, v.y]),
            body_mass_kg: r.body_mass,
            body_inertia_kg_m2: r.body_inertia,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActuatorSection {
    pub base_length_m: f64,
    pub stroke_m: f64,
    pub max_push_force_n: f64,
    pub max_speed_m_per_s: f64,
}

impl Default for ActuatorSection {
    fn default() -> Self {
        let a = LinearActuatorParams::default();
        Self {
            base_length_m: a.base_length,
            stroke_m: a.stroke,
            max_push_force_n: a.max_push_force,
            max_speed_m_per_s: a.max_speed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GearboxSection {
    pub stage1_ratio: f64,
    pub stage2_ratio: f64,
    pub efficiency_eta: f64,
    pub motor_stall_torque_nm: f64,
    pub self_locking: bool,
}

impl Default for GearboxSection {
    fn default() -> Self {
        let g = GearboxParams::default();
        Self {
            stage1_ratio: g.stage1_ratio,
            stage2_ratio: g.stage2_ratio,
            efficiency_eta: g.efficiency_eta,
            motor_stall_torque_nm: g.motor_stall_torque,
            self_locking: g.self_locking,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderSection {
    pub quantization_step_rad: f64,
    pub backlash_rad: f64,
}

impl Default for EncoderSection {
    fn default() -> Self {
        let e = EncoderModel::default();
        Self {
            quantization_step_rad: e.quantization_step,
            backlash_rad: e.backlash,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DrivetrainSection {
    pub actuator: ActuatorSection,
    pub gearbox: GearboxSection,
    pub encoder: EncoderSection,
    pub rotation_rate_limit_rad_per_s: f64,
}

impl Default for DrivetrainSection {
    fn default() -> Self {
        Self {
            actuator: ActuatorSection::default(),
            gearbox: GearboxSection::default(),
            encoder: EncoderSection::default(),
            rotation_rate_limit_rad_per_s: DrivetrainParams::default().rotation_rate_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContactSection {
    pub stiffness_n_per_m: f64,
    pub damping_n_s_per_m: f64,
    pub friction_mu: f64,
    pub regularization_velocity_m_per_s: f64,
}

impl Default for ContactSection {
    fn default() -> Self {
        let c = ContactParams::default();
        Self {
            stiffness_n_per_m: c.stiffness,
            damping_n_s_per_m: c.damping,
            friction_mu: c.friction_mu,
            regularization_velocity_m_per_s: c.regularization_velocity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DrillSection {
    pub feed_gain_n_per_m: f64,
    pub feed_speed_m_per_s: f64,
    pub reaction_cap_n: f64,
    pub base_length_m: f64,
    pub stroke_m: f64,
}

impl Default for DrillSection {
    fn default() -> Self {
        let d = DrillParams::default();
        Self {
            feed_gain_n_per_m: d.feed_gain,
            feed_speed_m_per_s: d.feed_speed,
            reaction_cap_n: d.reaction_cap,
            base_length_m: d.base_length,
            stroke_m: d.stroke,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentSection {
    pub contact: ContactSection,
    pub drill: DrillSection,
}

fn default_controller() -> ControllerConfig {
    ControllerConfig::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub f_contact_n: f64,
    pub f_brace_n: f64,
    pub f_safety_n: f64,
    pub sustain_duration_s: f64,
    #[serde(default = "d_open_left")]
    pub open_target_left_rad: f64,
    #[serde(default = "d_open_right")]
    pub open_target_right_rad: f64,
    #[serde(default = "d_brace_speed")]
    pub brace_speed_m_per_s: f64,
    #[serde(default = "d_hard_speed")]
    pub hard_brace_speed_m_per_s: f64,
    #[serde(default = "d_align")]
    pub drill_align_target_rad: f64,
    #[serde(default = "d_feed")]
    pub drill_feed_speed_m_per_s: f64,
    #[serde(default = "d_period")]
    pub control_period_s: f64,
    #[serde(default = "d_tolerance")]
    pub angle_tolerance_rad: f64,
    #[serde(default)]
    pub drill_target_depth_m: Option<f64>,
    #[serde(default)]
    pub halt_after_bracing: bool,
}

fn d_open_left() -> f64 {
    default_controller().open_targets.0
}
fn d_open_right() -> f64 {
    default_controller().open_targets.1
}
fn d_brace_speed() -> f64 {
    default_controller().brace_speed
}
fn d_hard_speed() -> f64 {
    default_controller().hard_brace_speed
}
fn d_align() -> f64 {
    default_controller().drill_align_target
}
fn d_feed() -> f64 {
    default_controller().drill_feed_speed
}
fn d_period() -> f64 {
    default_controller().control_period
}
fn d_tolerance() -> f64 {
    default_controller().angle_tolerance
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = default_controller();
        Self {
            f_contact_n: c.f_contact,
            f_brace_n: c.f_brace,
            f_safety_n: c.f_safety,
            sustain_duration_s: c.sustain_duration,
            open_target_left_rad: c.open_targets.0,
            open_target_right_rad: c.open_targets.1,
            brace_speed_m_per_s: c.brace_speed,
            hard_brace_speed_m_per_s: c.hard_brace_speed,
            drill_align_target_rad: c.drill_align_target,
            drill_feed_speed_m_per_s: c.drill_feed_speed,
            control_period_s: c.control_period,
            angle_tolerance_rad: c.angle_tolerance,
            drill_target_depth_m: c.drill_target_depth,
            halt_after_bracing: c.halt_after_bracing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldModeName {
    FixedUntilAllContact,
    FixedUntilBraced,
    FixedUntilReleaseTime,
    NeverHeld,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoseSection {
    pub x_m: f64,
    pub y_m: f64,
    pub phi_rad: f64,
}

impl Default for PoseSection {
    fn default() -> Self {
        Self {
            x_m: 0.0,
            y_m: 0.0,
            phi_rad: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt_s: f64,
    pub duration_s: f64,
    pub gravity_m_per_s2: f64,
    pub hold_mode: HoldModeName,
    /// Only read when `hold_mode` is `fixed_until_release_time`.
    pub release_time_s: Option<f64>,
    pub seed: u64,
    pub initial_pose: PoseSection,
    pub initial_rotation_left_rad: f64,
    pub initial_rotation_right_rad: f64,
    pub scenario_kind: ScenarioKind,
    pub log_decimation: u32,
    pub sensor_noise_n: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            dt_s: s.dt,
            duration_s: s.duration,
            gravity_m_per_s2: s.gravity,
            hold_mode: HoldModeName::FixedUntilAllContact,
            release_time_s: None,
            seed: s.seed,
            initial_pose: PoseSection::default(),
            initial_rotation_left_rad: s.initial_rotations.0,
            initial_rotation_right_rad: s.initial_rotations.1,
            scenario_kind: s.scenario_kind,
            log_decimation: s.log_decimation,
            sensor_noise_n: s.sensor_noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceSection {
    pub anchors_m: [[f64; 2]; 3],
    #[serde(default = "d_resolution")]
    pub resolution_m: f64,
}

fn d_resolution() -> f64 {
    0.005
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    pub target_rad: f64,
    #[serde(default = "d_step_duration")]
    pub duration_s: f64,
}

fn d_step_duration() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TensionSection {
    pub settle_window_s: f64,
    pub drift_threshold_m: f64,
    pub free_fall_drift_m: f64,
}

impl Default for TensionSection {
    fn default() -> Self {
        let t = TensionOptions::default();
        Self {
            settle_window_s: t.settle_window,
            drift_threshold_m: t.drift_threshold,
            free_fall_drift_m: t.free_fall_drift,
        }
    }
}

/// Workspace request of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkspaceSpec {
    pub anchors: [Vec2; 3],
    pub resolution: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSpec {
    pub target: f64,
    pub duration: f64,
}

/// A validated scenario ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub inputs: ScenarioInputs,
    pub workspace: Option<WorkspaceSpec>,
    pub step: Option<StepSpec>,
    pub tension: TensionOptions,
}

fn vec2(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path.is_empty() || path == "." {
                Error::config(inner.to_string())
            } else {
                Error::config(format!("{path}: {inner}"))
            }
        })
    }

    /// A complete document with every default filled in, around a sample tunnel.
    pub fn default_document() -> Self {
        Self {
            meta: MetaSection::default(),
            tunnel: TunnelSection {
                vertices_m: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
            },
            robot: RobotSection::default(),
            drivetrain: DrivetrainSection::default(),
            environment: EnvironmentSection::default(),
            controller: ControllerSection::default(),
            sim: SimSection::default(),
            workspace: None,
            step: None,
            tension: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn resolve(self) -> Result<Scenario> {
        let tunnel = TunnelCrossSection::new(self.tunnel.vertices_m.iter().copied().map(vec2).collect()).map_err(
            |e| match e {
                Error::Geometry(m) => Error::Geometry(format!("tunnel.vertices_m: {m}")),
                other => other,
            },
        )?;
        let r = &self.robot;
        let robot = RobotParams {
            l_min: r.l_min_m,
            l_max: r.l_max_m,
            theta_min: r.theta_min_rad,
            theta_max: r.theta_max_rad,
            leg_mount_offsets: r.leg_mount_offsets_m.map(vec2),
            body_mass: r.body_mass_kg,
            body_inertia: r.body_inertia_kg_m2,
        };
        let d = &self.drivetrain;
        let drivetrain = DrivetrainParams {
            actuator: LinearActuatorParams {
                base_length: d.actuator.base_length_m,
                stroke: d.actuator.stroke_m,
                max_push_force: d.actuator.max_push_force_n,
                max_speed: d.actuator.max_speed_m_per_s,
            },
            gearbox: GearboxParams {
                stage1_ratio: d.gearbox.stage1_ratio,
                stage2_ratio: d.gearbox.stage2_ratio,
                efficiency_eta: d.gearbox.efficiency_eta,
                motor_stall_torque: d.gearbox.motor_stall_torque_nm,
                self_locking: d.gearbox.self_locking,
            },
            encoder: EncoderModel {
                quantization_step: d.encoder.quantization_step_rad,
                backlash: d.encoder.backlash_rad,
            },
            rotation_rate_limit: d.rotation_rate_limit_rad_per_s,
        };
        let e = &self.environment;
        let environment = EnvironmentParams {
            tunnel,
            contact: ContactParams {
                stiffness: e.contact.stiffness_n_per_m,
                damping: e.contact.damping_n_s_per_m,
                friction_mu: e.contact.friction_mu,
                regularization_velocity: e.contact.regularization_velocity_m_per_s,
            },
            drill: DrillParams {
                feed_gain: e.drill.feed_gain_n_per_m,
                feed_speed: e.drill.feed_speed_m_per_s,
                reaction_cap: e.drill.reaction_cap_n,
                base_length: e.drill.base_length_m,
                stroke: e.drill.stroke_m,
            },
        };
        let c = &self.controller;
        let controller = ControllerConfig {
            open_targets: (c.open_target_left_rad, c.open_target_right_rad),
            brace_speed: c.brace_speed_m_per_s,
            hard_brace_speed: c.hard_brace_speed_m_per_s,
            f_contact: c.f_contact_n,
            f_brace: c.f_brace_n,
            sustain_duration: c.sustain_duration_s,
            f_safety: c.f_safety_n,
            drill_align_target: c.drill_align_target_rad,
            drill_feed_speed: c.drill_feed_speed_m_per_s,
            control_period: c.control_period_s,
            angle_tolerance: c.angle_tolerance_rad,
            drill_target_depth: c.drill_target_depth_m,
            halt_after_bracing: c.halt_after_bracing,
        };
        let s = &self.sim;
        let hold_mode = match (s.hold_mode, s.release_time_s) {
            (HoldModeName::FixedUntilAllContact, _) => HoldMode::FixedUntilAllContact,
            (HoldModeName::FixedUntilBraced, _) => HoldMode::FixedUntilBraced,
            (HoldModeName::NeverHeld, _) => HoldMode::NeverHeld,
            (HoldModeName::FixedUntilReleaseTime, Some(t)) => HoldMode::FixedUntilReleaseTime(t),
            (HoldModeName::FixedUntilReleaseTime, None) => {
                return Err(Error::config(
                    "sim.release_time_s: required when hold_mode is fixed_until_release_time",
                ))
            }
        };
        let sim = SimConfig {
            dt: s.dt_s,
            duration: s.duration_s,
            gravity: s.gravity_m_per_s2,
            hold_mode,
            seed: s.seed,
            initial_pose: Pose::new(s.initial_pose.x_m, s.initial_pose.y_m, s.initial_pose.phi_rad),
            initial_rotations: (s.initial_rotation_left_rad, s.initial_rotation_right_rad),
            scenario_kind: s.scenario_kind,
            log_decimation: s.log_decimation,
            sensor_noise: s.sensor_noise_n,
        };

        let workspace = match &self.workspace {
            Some(w) => {
                if !(w.resolution_m > 0.0 && w.resolution_m.is_finite()) {
                    return Err(Error::config("workspace.resolution_m: must be positive"));
                }
                Some(WorkspaceSpec {
                    anchors: w.anchors_m.map(vec2),
                    resolution: w.resolution_m,
                })
            }
            None => None,
        };
        let step = self.step.as_ref().map(|s| StepSpec {
            target: s.target_rad,
            duration: s.duration_s,
        });
        let t = self.tension.clone().unwrap_or_default();
        let tension = TensionOptions {
            settle_window: t.settle_window_s,
            drift_threshold: t.drift_threshold_m,
            free_fall_drift: t.free_fall_drift_m,
        };

        let inputs = ScenarioInputs {
            name: self.meta.name.clone(),
            sim,
            robot,
            drivetrain,
            environment,
            controller,
        };
        // Constructing the simulator runs every cross-section check.
        inputs.simulator()?;
        Ok(Scenario {
            file: self,
            inputs,
            workspace,
            step,
            tension,
        })
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    ScenarioFile::parse(text)?.resolve()
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> serde_json::Value {
        serde_json::json!({
            "meta": {"name": "t"},
            "tunnel": {"vertices_m": [[-1, -1], [1, -1], [1, 1], [-1, 1]]},
            "robot": {},
            "drivetrain": {},
            "environment": {},
            "controller": {"f_contact_n": 8, "f_brace_n": 120, "f_safety_n": 1200, "sustain_duration_s": 1.0},
            "sim": {}
        })
    }

    #[test]
    fn minimal_document_resolves_to_defaults() {
        let s = parse_scenario(&minimal().to_string()).unwrap();
        assert_eq!(s.inputs.controller, ControllerConfig::default());
        assert_eq!(s.inputs.robot, RobotParams::default());
        assert_eq!(s.inputs.sim, SimConfig::default());
    }

    #[test]
    fn default_document_round_trips() {
        let doc = ScenarioFile::default_document();
        let text = doc.to_json();
        let back = ScenarioFile::parse(&text).unwrap();
        assert_eq!(back, doc);
        back.resolve().unwrap();
    }

    #[test]
    fn missing_threshold_names_its_path() {
        let mut v = minimal();
        v["controller"].as_object_mut().unwrap().remove("f_brace_n");
        let err = parse_scenario(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("controller") && err.contains("f_brace_n"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let mut v = minimal();
        v["environment"]["contact"] = serde_json::json!({"stiffnes_n_per_m": 1.0});
        let err = parse_scenario(&v.to_string()).unwrap_err().to_string();
        assert!(
            err.contains("environment.contact") && err.contains("stiffnes_n_per_m"),
            "{err}"
        );
        let mut v = minimal();
        v["extra"] = serde_json::json!(1);
        assert!(parse_scenario(&v.to_string()).is_err());
    }

    #[test]
    fn release_time_is_required_for_timed_release() {
        let mut v = minimal();
        v["sim"] = serde_json::json!({"hold_mode": "fixed_until_release_time"});
        assert!(parse_scenario(&v.to_string()).is_err());
        v["sim"]["release_time_s"] = serde_json::json!(0.5);
        let s = parse_scenario(&v.to_string()).unwrap();
        assert_eq!(s.inputs.sim.hold_mode, HoldMode::FixedUntilReleaseTime(0.5));
    }

    #[test]
    fn inconsistent_stroke_is_a_config_error() {
        let mut v = minimal();
        v["robot"] = serde_json::json!({"l_max_m": 1.0});
        assert!(matches!(parse_scenario(&v.to_string()), Err(Error::Config(_))));
    }

    #[test]
    fn self_intersecting_tunnel_is_a_geometry_error() {
        let mut v = minimal();
        v["tunnel"]["vertices_m"] = serde_json::json!([[0, 0], [1, 1], [1, 0], [0, 1]]);
        assert!(matches!(parse_scenario(&v.to_string()), Err(Error::Geometry(_))));
    }
}
