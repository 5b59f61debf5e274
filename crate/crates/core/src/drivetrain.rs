//! Behavioural actuator models: linear legs, the two-stage worm gearbox on the
//! side-leg revolute joints, the joint encoder and the travel-limit switches.

use crate::error::{Error, Result};
use crate::kinematics::{JointState, LegId, RobotParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearActuatorParams {
    pub base_length: f64,
    pub stroke: f64,
    pub max_push_force: f64,
    pub max_speed: f64,
}

impl Default for LinearActuatorParams {
    fn default() -> Self {
        Self {
            base_length: 0.625,
            stroke: 0.5,
            max_push_force: 1000.0,
            max_speed: 0.01,
        }
    }
}

impl LinearActuatorParams {
    pub fn max_length(&self) -> f64 {
        self.base_length + self.stroke
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GearboxParams {
    pub stage1_ratio: f64,
    pub stage2_ratio: f64,
    pub efficiency_eta: f64,
    /// Input (motor) stall torque, N·m.
    pub motor_stall_torque: f64,
    pub self_locking: bool,
}

impl Default for GearboxParams {
    fn default() -> Self {
        Self {
            stage1_ratio: 2.0,
            stage2_ratio: 40.0,
            efficiency_eta: 0.38,
            motor_stall_torque: 1.765,
            self_locking: true,
        }
    }
}

impl GearboxParams {
    pub fn overall_ratio(&self) -> f64 {
        self.stage1_ratio * self.stage2_ratio
    }

    /// Largest output torque the motor can hold or overcome.
    pub fn output_capacity(&self) -> f64 {
        self.motor_stall_torque * self.overall_ratio() * self.efficiency_eta
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stage1_ratio > 0.0 && self.stage2_ratio > 0.0) {
            return Err(Error::config("gearbox: stage ratios must be positive"));
        }
        if !(self.efficiency_eta > 0.0 && self.efficiency_eta <= 1.0) {
            return Err(Error::config("gearbox: efficiency must lie in (0, 1]"));
        }
        if !(self.motor_stall_torque >= 0.0) {
            return Err(Error::config("gearbox: stall torque must be non-negative"));
        }
        Ok(())
    }
}

/// `T_out = T_in × R × η`.
pub fn gearbox_output_torque(t_in: f64, ratio: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Domain(format!("efficiency {eta} outside (0, 1]")));
    }
    if !(ratio > 0.0) {
        return Err(Error::Domain(format!("gear ratio {ratio} must be positive")));
    }
    if !(t_in >= 0.0) {
        return Err(Error::Domain(format!("input torque {t_in} must be non-negative")));
    }
    Ok(t_in * ratio * eta)
}

/// Velocity-commanded prismatic leg. Saturates rather than failing: the command
/// is clamped to the speed limit, the actuator stalls when pushing against a
/// compressive load at or above its force limit, and the length is kept on the
/// stroke.
pub fn linear_actuator_step(
    state: JointState,
    cmd_velocity: f64,
    axial_load: f64,
    dt: f64,
    params: &LinearActuatorParams,
) -> JointState {
    let mut v = cmd_velocity.clamp(-params.max_speed, params.max_speed);
    if v > 0.0 && axial_load >= params.max_push_force {
        v = 0.0;
    }
    let next = (state.extension + v * dt).clamp(params.base_length, params.max_length());
    JointState {
        extension: next,
        extension_rate: (next - state.extension) / dt,
        ..state
    }
}

/// Position-controlled revolute joint behind the worm gearbox, modelled as
/// rate-limited tracking without overshoot.
pub fn rotary_joint_step(
    state: JointState,
    cmd_target: f64,
    external_torque: f64,
    dt: f64,
    gearbox: &GearboxParams,
    rate_limit: f64,
) -> JointState {
    let max_step = rate_limit * dt;
    let overloaded = external_torque.abs() > gearbox.output_capacity();
    let backdrive = external_torque.signum() * max_step;
    let error = cmd_target - state.rotation;

    let delta = if error == 0.0 {
        // Holding. A worm that cannot be back-driven holds under any load.
        if overloaded && !gearbox.self_locking {
            backdrive
        } else {
            0.0
        }
    } else {
        let wanted = error.clamp(-max_step, max_step);
        if overloaded && external_torque * wanted < 0.0 {
            if gearbox.self_locking {
                0.0
            } else {
                backdrive
            }
        } else {
            wanted
        }
    };

    let rotation = if delta == error {
        cmd_target
    } else {
        state.rotation + delta
    };
    JointState {
        rotation,
        rotation_rate: (rotation - state.rotation) / dt,
        ..state
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderModel {
    pub quantization_step: f64,
    /// Dead band between output shaft and motor-side encoder, rad. 0 disables it.
    pub backlash: f64,
}

impl Default for EncoderModel {
    fn default() -> Self {
        Self {
            quantization_step: 0.02,
            backlash: 0.0,
        }
    }
}

/// Quantized reading, rounding half-up.
pub fn encoder_read(true_angle: f64, model: &EncoderModel) -> f64 {
    let q = model.quantization_step;
    (true_angle / q + 0.5).floor() * q
}

/// Stateful encoder for models with backlash: the motor side only follows the
/// output once the dead band has been taken up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Encoder {
    pub model: EncoderModel,
    motor_side: f64,
}

impl Encoder {
    pub fn new(model: EncoderModel, initial_angle: f64) -> Self {
        Self {
            model,
            motor_side: initial_angle,
        }
    }

    pub fn read(&mut self, true_angle: f64) -> f64 {
        let half = 0.5 * self.model.backlash;
        let gap = true_angle - self.motor_side;
        if gap > half {
            self.motor_side = true_angle - half;
        } else if gap < -half {
            self.motor_side = true_angle + half;
        }
        encoder_read(self.motor_side, &self.model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSwitchSet {
    pub lower_trip_angle: f64,
    pub upper_trip_angle: f64,
}

impl LimitSwitchSet {
    /// Switches placed at the leg's active rotation limits.
    pub fn for_leg(params: &RobotParams, leg: LegId) -> Option<Self> {
        params.rotation_limits(leg).map(|(lo, hi)| Self {
            lower_trip_angle: lo,
            upper_trip_angle: hi,
        })
    }

    /// Restricts a rotation command so a tripped switch only lets the joint
    /// move back toward the interior.
    pub fn gate_command(&self, rotation: f64, target: f64) -> f64 {
        match limit_switch_state(rotation, self) {
            SwitchState::UpperTripped if target > rotation => rotation,
            SwitchState::LowerTripped if target < rotation => rotation,
            _ => target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SwitchState {
    #[default]
    None,
    LowerTripped,
    UpperTripped,
}

pub fn limit_switch_state(rotation: f64, switches: &LimitSwitchSet) -> SwitchState {
    if rotation <= switches.lower_trip_angle {
        SwitchState::LowerTripped
    } else if rotation >= switches.upper_trip_angle {
        SwitchState::UpperTripped
    } else {
        SwitchState::None
    }
}
