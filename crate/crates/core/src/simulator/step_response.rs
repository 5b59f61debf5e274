use serde::Serialize;

use super::DrivetrainParams;
use crate::drivetrain::{rotary_joint_step, Encoder};
use crate::error::{Error, Result};
use crate::format::sig9;
use crate::kinematics::JointState;

/// Distance from the target that counts as arrived, rad.
pub const RISE_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub commanded: f64,
    pub true_angle: f64,
    pub encoder_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepResponse {
    pub target_rad: f64,
    /// First time the true angle is within `RISE_TOLERANCE` of the target.
    pub rise_time_s: Option<f64>,
    pub max_encoder_error_rad: f64,
    pub final_angle_rad: f64,
    #[serde(skip)]
    pub records: Vec<StepRecord>,
}

impl StepResponse {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,commanded_rad,true_rad,encoder_rad\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{}\n",
                sig9(r.t),
                sig9(r.commanded),
                sig9(r.true_angle),
                sig9(r.encoder_angle)
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("step response serializes");
        s.push('\n');
        s
    }
}

/// Commands a single unloaded revolute joint from 0 to `target` at t = 0 and
/// records one sample per step, starting with the initial state.
pub fn run_step_response(target: f64, drivetrain: &DrivetrainParams, dt: f64, duration: f64) -> Result<StepResponse> {
    drivetrain.validate()?;
    if !(target.is_finite() && dt > 0.0 && duration > 0.0 && duration.is_finite()) {
        return Err(Error::config(
            "step response: need finite target and positive dt and duration",
        ));
    }
    let steps = (duration / dt - 1e-9).ceil() as u64;
    let mut joint = JointState::default();
    let mut encoder = Encoder::new(drivetrain.encoder, 0.0);
    let mut records = Vec::with_capacity(steps as usize + 1);
    let mut rise = None;
    let mut max_err: f64 = 0.0;
    for k in 0..=steps {
        let t = k as f64 * dt;
        let reading = encoder.read(joint.rotation);
        max_err = max_err.max((reading - joint.rotation).abs());
        if rise.is_none() && (joint.rotation - target).abs() <= RISE_TOLERANCE {
            rise = Some(t);
        }
        records.push(StepRecord {
            t,
            commanded: target,
            true_angle: joint.rotation,
            encoder_angle: reading,
        });
        if k < steps {
            joint = rotary_joint_step(
                joint,
                target,
                0.0,
                dt,
                &drivetrain.gearbox,
                drivetrain.rotation_rate_limit,
            );
        }
    }
    Ok(StepResponse {
        target_rad: target,
        rise_time_s: rise,
        max_encoder_error_rad: max_err,
        final_angle_rad: joint.rotation,
        records,
    })
}
