//! Four-phase bracing and drilling state machine.
//!
//! The controller is a pure transition function over sensor snapshots taken
//! once per control period: open the side legs, extend every leg until it
//! touches the wall, press harder until every leg has held a higher force for a
//! sustained window, then align and feed the drill. Any leg force above the
//! safety limit halts the robot.

use std::f64::consts::FRAC_PI_3;
use std::fmt;

use crate::drivetrain::SwitchState;
use crate::error::{Error, Result};
use crate::kinematics::{JointState, LegId};

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    /// Opening targets for the (left, right) rotations.
    pub open_targets: (f64, f64),
    pub brace_speed: f64,
    pub hard_brace_speed: f64,
    pub f_contact: f64,
    pub f_brace: f64,
    pub sustain_duration: f64,
    pub f_safety: f64,
    pub drill_align_target: f64,
    pub drill_feed_speed: f64,
    pub control_period: f64,
    /// How close a measured angle must be to its target to count as reached.
    pub angle_tolerance: f64,
    /// Feed depth past first drill contact that completes the mission.
    pub drill_target_depth: Option<f64>,
    /// End with `Halted(complete)` once hard bracing finishes instead of drilling.
    pub halt_after_bracing: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            open_targets: (FRAC_PI_3, -FRAC_PI_3),
            brace_speed: 0.01,
            hard_brace_speed: 0.002,
            f_contact: 8.0,
            f_brace: 120.0,
            sustain_duration: 1.0,
            f_safety: 1200.0,
            drill_align_target: 0.0,
            drill_feed_speed: 0.02,
            control_period: 0.01,
            angle_tolerance: 0.03,
            drill_target_depth: None,
            halt_after_bracing: false,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.open_targets.0,
            self.open_targets.1,
            self.brace_speed,
            self.hard_brace_speed,
            self.f_contact,
            self.f_brace,
            self.sustain_duration,
            self.f_safety,
            self.drill_align_target,
            self.drill_feed_speed,
            self.control_period,
            self.angle_tolerance,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("controller: all parameters must be finite"));
        }
        if !(0.0 < self.f_contact && self.f_contact < self.f_brace && self.f_brace < self.f_safety) {
            return Err(Error::config(format!(
                "controller: need 0 < f_contact < f_brace < f_safety, got {} / {} / {}",
                self.f_contact, self.f_brace, self.f_safety
            )));
        }
        if !(0.0 < self.hard_brace_speed && self.hard_brace_speed < self.brace_speed) {
            return Err(Error::config("controller: need 0 < hard_brace_speed < brace_speed"));
        }
        if !(self.sustain_duration > 0.0 && self.control_period > 0.0) {
            return Err(Error::config(
                "controller: sustain_duration and control_period must be positive",
            ));
        }
        if !(self.angle_tolerance > 0.0 && self.drill_feed_speed >= 0.0) {
            return Err(Error::config(
                "controller: angle_tolerance must be positive and drill_feed_speed non-negative",
            ));
        }
        if let Some(d) = self.drill_target_depth {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::config("controller: drill_target_depth must be positive"));
            }
        }
        Ok(())
    }

    /// Consecutive control ticks at or above `f_brace` that make up the sustain window.
    pub fn sustain_ticks(&self) -> u32 {
        (self.sustain_duration / self.control_period - 1e-9).ceil().max(1.0) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HaltReason {
    SafetyOverload,
    LimitSwitch,
    ExternalStop,
    Complete,
}

impl HaltReason {
    pub fn as_str(self) -> &'static str {
        match self {
            HaltReason::SafetyOverload => "safety_overload",
            HaltReason::LimitSwitch => "limit_switch",
            HaltReason::ExternalStop => "external_stop",
            HaltReason::Complete => "complete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Opening,
    InitialBracing,
    HardBracing,
    Drilling,
    Halted(HaltReason),
}

impl Phase {
    /// Lowercase log token, e.g. `hard_bracing` or `halted_safety_overload`.
    pub fn token(self) -> &'static str {
        match self {
            Phase::Opening => "opening",
            Phase::InitialBracing => "initial_bracing",
            Phase::HardBracing => "hard_bracing",
            Phase::Drilling => "drilling",
            Phase::Halted(HaltReason::SafetyOverload) => "halted_safety_overload",
            Phase::Halted(HaltReason::LimitSwitch) => "halted_limit_switch",
            Phase::Halted(HaltReason::ExternalStop) => "halted_external_stop",
            Phase::Halted(HaltReason::Complete) => "halted_complete",
        }
    }

    pub fn from_token(token: &str) -> Option<Phase> {
        [
            Phase::Opening,
            Phase::InitialBracing,
            Phase::HardBracing,
            Phase::Drilling,
            Phase::Halted(HaltReason::SafetyOverload),
            Phase::Halted(HaltReason::LimitSwitch),
            Phase::Halted(HaltReason::ExternalStop),
            Phase::Halted(HaltReason::Complete),
        ]
        .into_iter()
        .find(|p| p.token() == token)
    }

    /// Position in the mission order; `None` for `Halted`.
    pub fn ordinal(self) -> Option<u8> {
        match self {
            Phase::Opening => Some(0),
            Phase::InitialBracing => Some(1),
            Phase::HardBracing => Some(2),
            Phase::Drilling => Some(3),
            Phase::Halted(_) => None,
        }
    }

    pub fn is_halted(self) -> bool {
        matches!(self, Phase::Halted(_))
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SensorSnapshot {
    pub time: f64,
    /// Tip normal-force magnitudes, (left, central, right).
    pub leg_forces: [f64; 3],
    pub drill_force: f64,
    /// Joint states as measured; rotations are encoder readings.
    pub joint_states: [JointState; 3],
    pub limit_switches: [SwitchState; 3],
    /// Leg is at the end of its stroke.
    pub extension_at_limit: [bool; 3],
    /// Measured drill alignment angle.
    pub drill_angle: f64,
    /// Drill feed past its retracted position.
    pub drill_feed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CommandSet {
    /// (left, right) rotation targets; `None` holds the joints where they are.
    pub rotation_targets: Option<[f64; 2]>,
    pub extension_velocities: [f64; 3],
    pub drill_rotation_on: bool,
    pub drill_feed_velocity: f64,
    /// Drill alignment target; `None` holds the joint.
    pub drill_align_target: Option<f64>,
}

impl CommandSet {
    pub fn all_stop() -> Self {
        Self::default()
    }

    pub fn is_all_stop(&self) -> bool {
        *self == Self::all_stop()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub phase: Phase,
    pub contact_latches: [bool; 3],
    /// Consecutive control ticks each leg has spent at or above `f_brace`.
    pub sustain_ticks: [u32; 3],
    pub phase_entry_time: f64,
    pub drill_rotation_latched: bool,
    /// Drill feed at first drill contact.
    pub drill_contact_feed: Option<f64>,
}

impl Default for ControllerState {
    fn default() -> Self {
        Self {
            phase: Phase::Opening,
            contact_latches: [false; 3],
            sustain_ticks: [0; 3],
            phase_entry_time: 0.0,
            drill_rotation_latched: false,
            drill_contact_feed: None,
        }
    }
}

impl ControllerState {
    pub fn sustain_timer(&self, leg: LegId, config: &ControllerConfig) -> f64 {
        self.sustain_ticks[leg.index()] as f64 * config.control_period
    }

    fn enter(&mut self, phase: Phase, time: f64) {
        self.phase = phase;
        self.phase_entry_time = time;
    }
}

pub fn opening_done(sensors: &SensorSnapshot, config: &ControllerConfig) -> bool {
    let (left, right) = config.open_targets;
    (sensors.joint_states[0].rotation - left).abs() <= config.angle_tolerance
        && (sensors.joint_states[2].rotation - right).abs() <= config.angle_tolerance
}

pub fn initial_bracing_done(state: &ControllerState) -> bool {
    state.contact_latches.iter().all(|&l| l)
}

pub fn hard_bracing_done(state: &ControllerState, sensors: &SensorSnapshot, config: &ControllerConfig) -> bool {
    let needed = config.sustain_ticks();
    (0..3).all(|i| sensors.leg_forces[i] >= config.f_brace && state.sustain_ticks[i] >= needed)
}

/// Drilling commands: legs hold, the drill aligns, then feeds. The spindle
/// turns on at the first measured drill contact and stays on.
pub fn drilling_step(state: &ControllerState, sensors: &SensorSnapshot, config: &ControllerConfig) -> CommandSet {
    if safety_tripped(sensors, config) {
        return CommandSet::all_stop();
    }
    let aligned = (sensors.drill_angle - config.drill_align_target).abs() <= config.angle_tolerance;
    CommandSet {
        rotation_targets: Some(open_targets(config)),
        extension_velocities: [0.0; 3],
        drill_rotation_on: state.drill_rotation_latched || sensors.drill_force > 0.0,
        drill_feed_velocity: if aligned { config.drill_feed_speed } else { 0.0 },
        drill_align_target: Some(config.drill_align_target),
    }
}

fn open_targets(config: &ControllerConfig) -> [f64; 2] {
    [config.open_targets.0, config.open_targets.1]
}

fn safety_tripped(sensors: &SensorSnapshot, config: &ControllerConfig) -> bool {
    sensors.leg_forces.iter().any(|&f| f > config.f_safety)
}

/// A tripped switch on a side leg that sits on the way to its opening target.
fn switch_blocks_opening(sensors: &SensorSnapshot, config: &ControllerConfig) -> bool {
    let [left, right] = open_targets(config);
    [(0, left), (2, right)].into_iter().any(|(i, target)| {
        let rotation = sensors.joint_states[i].rotation;
        match sensors.limit_switches[i] {
            SwitchState::UpperTripped => target > rotation + config.angle_tolerance,
            SwitchState::LowerTripped => target < rotation - config.angle_tolerance,
            SwitchState::None => false,
        }
    })
}

/// Unlatched leg that has run out of stroke without finding the wall.
fn stroke_exhausted(state: &ControllerState, sensors: &SensorSnapshot, config: &ControllerConfig) -> bool {
    (0..3).any(|i| {
        sensors.extension_at_limit[i]
            && match state.phase {
                Phase::InitialBracing => !state.contact_latches[i],
                Phase::HardBracing => sensors.leg_forces[i] < config.f_brace,
                _ => false,
            }
    })
}

pub fn fsm_step(
    state: &ControllerState,
    sensors: &SensorSnapshot,
    config: &ControllerConfig,
) -> (ControllerState, CommandSet) {
    let mut next = *state;
    let t = sensors.time;

    if next.phase.is_halted() {
        return (next, CommandSet::all_stop());
    }
    if safety_tripped(sensors, config) {
        next.enter(Phase::Halted(HaltReason::SafetyOverload), t);
        return (next, CommandSet::all_stop());
    }

    if next.phase == Phase::Opening {
        if opening_done(sensors, config) {
            next.enter(Phase::InitialBracing, t);
        } else if switch_blocks_opening(sensors, config) {
            next.enter(Phase::Halted(HaltReason::LimitSwitch), t);
            return (next, CommandSet::all_stop());
        } else {
            return (
                next,
                CommandSet {
                    rotation_targets: Some(open_targets(config)),
                    ..CommandSet::default()
                },
            );
        }
    }

    if next.phase == Phase::InitialBracing {
        for i in 0..3 {
            if sensors.leg_forces[i] >= config.f_contact {
                next.contact_latches[i] = true;
            }
        }
        if initial_bracing_done(&next) {
            next.enter(Phase::HardBracing, t);
            next.sustain_ticks = [0; 3];
        } else {
            if stroke_exhausted(&next, sensors, config) {
                next.enter(Phase::Halted(HaltReason::ExternalStop), t);
                return (next, CommandSet::all_stop());
            }
            let mut v = [0.0; 3];
            for i in 0..3 {
                if !next.contact_latches[i] {
                    v[i] = config.brace_speed;
                }
            }
            return (
                next,
                CommandSet {
                    rotation_targets: Some(open_targets(config)),
                    extension_velocities: v,
                    ..CommandSet::default()
                },
            );
        }
    }

    if next.phase == Phase::HardBracing {
        for i in 0..3 {
            if sensors.leg_forces[i] >= config.f_brace {
                next.sustain_ticks[i] = next.sustain_ticks[i].saturating_add(1);
            } else {
                next.sustain_ticks[i] = 0;
            }
        }
        if hard_bracing_done(&next, sensors, config) {
            if config.halt_after_bracing {
                next.enter(Phase::Halted(HaltReason::Complete), t);
                return (next, CommandSet::all_stop());
            }
            next.enter(Phase::Drilling, t);
        } else {
            if stroke_exhausted(&next, sensors, config) {
                next.enter(Phase::Halted(HaltReason::ExternalStop), t);
                return (next, CommandSet::all_stop());
            }
            let mut v = [0.0; 3];
            for i in 0..3 {
                if sensors.leg_forces[i] < config.f_brace {
                    v[i] = config.hard_brace_speed;
                }
            }
            return (
                next,
                CommandSet {
                    rotation_targets: Some(open_targets(config)),
                    extension_velocities: v,
                    ..CommandSet::default()
                },
            );
        }
    }

    // Drilling.
    if sensors.drill_force > 0.0 {
        next.drill_rotation_latched = true;
        if next.drill_contact_feed.is_none() {
            next.drill_contact_feed = Some(sensors.drill_feed);
        }
    }
    if let (Some(target), Some(start)) = (config.drill_target_depth, next.drill_contact_feed) {
        if sensors.drill_feed - start >= target - 1e-12 {
            next.enter(Phase::Halted(HaltReason::Complete), t);
            return (next, CommandSet::all_stop());
        }
    }
    let commands = drilling_step(&next, sensors, config);
    (next, commands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivetrain::{encoder_read, EncoderModel};

    fn config() -> ControllerConfig {
        ControllerConfig {
            f_contact: 10.0,
            ..ControllerConfig::default()
        }
    }

    fn snapshot(rot_left: f64, rot_right: f64, forces: [f64; 3]) -> SensorSnapshot {
        let mut s = SensorSnapshot {
            leg_forces: forces,
            ..SensorSnapshot::default()
        };
        s.joint_states[0].rotation = rot_left;
        s.joint_states[2].rotation = rot_right;
        s
    }

    fn in_phase(phase: Phase) -> ControllerState {
        ControllerState {
            phase,
            ..ControllerState::default()
        }
    }

    #[test]
    fn opening_commands_targets() {
        let cfg = config();
        let (next, cmd) = fsm_step(&ControllerState::default(), &snapshot(0.0, 0.0, [0.0; 3]), &cfg);
        assert_eq!(next.phase, Phase::Opening);
        assert_eq!(cmd.rotation_targets, Some([FRAC_PI_3, -FRAC_PI_3]));
        assert_eq!(cmd.extension_velocities, [0.0; 3]);
    }

    #[test]
    fn opening_done_cases() {
        let cfg = ControllerConfig {
            open_targets: (1.047, -1.047),
            ..config()
        };
        assert!(opening_done(&snapshot(1.047, -1.047, [0.0; 3]), &cfg));
        assert!(!opening_done(&snapshot(1.047, -0.9, [0.0; 3]), &cfg));

        let enc = EncoderModel::default();
        for k in -50..=50 {
            let err = k as f64 * 0.0004;
            let l = encoder_read(1.047 + err, &enc);
            let r = encoder_read(-1.047 - err, &enc);
            assert!(opening_done(&snapshot(l, r, [0.0; 3]), &cfg), "offset {err}");
        }
    }

    #[test]
    fn latch_halts_the_leg() {
        let cfg = config();
        let (next, cmd) = fsm_step(
            &in_phase(Phase::InitialBracing),
            &snapshot(0.0, 0.0, [12.0, 0.0, 3.0]),
            &cfg,
        );
        assert_eq!(next.contact_latches, [true, false, false]);
        assert_eq!(cmd.extension_velocities, [0.0, cfg.brace_speed, cfg.brace_speed]);
        assert_eq!(next.phase, Phase::InitialBracing);
    }

    #[test]
    fn contact_threshold_is_inclusive() {
        let cfg = config();
        let (next, _) = fsm_step(
            &in_phase(Phase::InitialBracing),
            &snapshot(0.0, 0.0, [10.0, 9.99, 0.0]),
            &cfg,
        );
        assert_eq!(next.contact_latches, [true, false, false]);
    }

    #[test]
    fn initial_bracing_done_needs_every_latch() {
        let mut s = in_phase(Phase::InitialBracing);
        s.contact_latches = [true, true, true];
        assert!(initial_bracing_done(&s));
        s.contact_latches = [true, false, true];
        assert!(!initial_bracing_done(&s));
    }

    fn run_hard(forces: impl Fn(usize) -> [f64; 3], ticks: usize, cfg: &ControllerConfig) -> Option<usize> {
        let mut s = in_phase(Phase::HardBracing);
        s.contact_latches = [true; 3];
        for k in 0..ticks {
            let snap = SensorSnapshot {
                time: k as f64 * cfg.control_period,
                ..snapshot(0.0, 0.0, forces(k))
            };
            let (n, _) = fsm_step(&s, &snap, cfg);
            s = n;
            if s.phase == Phase::Drilling {
                return Some(k);
            }
        }
        None
    }

    #[test]
    fn sustained_force_completes_hard_bracing() {
        let cfg = config();
        assert_eq!(cfg.sustain_ticks(), 100);
        assert_eq!(run_hard(|_| [130.0, 260.0, 130.0], 200, &cfg), Some(99));
        assert_eq!(run_hard(|_| [120.0, 120.0, 120.0], 200, &cfg), Some(99));
    }

    #[test]
    fn dip_restarts_the_window() {
        let cfg = config();
        let dip = |k: usize| if k == 90 { [130.0, 100.0, 130.0] } else { [130.0; 3] };
        assert_eq!(run_hard(dip, 300, &cfg), Some(190));
    }

    #[test]
    fn hard_bracing_holds_legs_at_threshold() {
        let cfg = config();
        let mut s = in_phase(Phase::HardBracing);
        s.contact_latches = [true; 3];
        let (_, cmd) = fsm_step(&s, &snapshot(0.0, 0.0, [125.0, 50.0, 119.0]), &cfg);
        assert_eq!(
            cmd.extension_velocities,
            [0.0, cfg.hard_brace_speed, cfg.hard_brace_speed]
        );
    }

    #[test]
    fn drilling_contact_and_safety() {
        let cfg = config();
        let s = in_phase(Phase::Drilling);
        let mut snap = snapshot(0.0, 0.0, [200.0, 400.0, 200.0]);
        let cmd = drilling_step(&s, &snap, &cfg);
        assert!(!cmd.drill_rotation_on);
        assert_eq!(cmd.drill_feed_velocity, cfg.drill_feed_speed);

        snap.drill_force = 5.0;
        let (next, cmd) = fsm_step(&s, &snap, &cfg);
        assert!(cmd.drill_rotation_on);
        assert_eq!(cmd.drill_feed_velocity, cfg.drill_feed_speed);
        assert!(next.drill_rotation_latched);

        snap.leg_forces[1] = 1500.0;
        let (next, cmd) = fsm_step(&next, &snap, &cfg);
        assert_eq!(next.phase, Phase::Halted(HaltReason::SafetyOverload));
        assert!(cmd.is_all_stop());
        assert!(drilling_step(&s, &snap, &cfg).is_all_stop());
    }

    #[test]
    fn safety_threshold_is_strict() {
        let cfg = config();
        let (next, _) = fsm_step(&in_phase(Phase::Drilling), &snapshot(0.0, 0.0, [1200.0; 3]), &cfg);
        assert_eq!(next.phase, Phase::Drilling);
    }

    #[test]
    fn drilling_waits_for_alignment() {
        let cfg = ControllerConfig {
            drill_align_target: 0.5,
            ..config()
        };
        let cmd = drilling_step(&in_phase(Phase::Drilling), &snapshot(0.0, 0.0, [200.0; 3]), &cfg);
        assert_eq!(cmd.drill_feed_velocity, 0.0);
        assert_eq!(cmd.drill_align_target, Some(0.5));
    }

    #[test]
    fn target_depth_completes() {
        let cfg = ControllerConfig {
            drill_target_depth: Some(0.05),
            ..config()
        };
        let mut s = in_phase(Phase::Drilling);
        s.drill_rotation_latched = true;
        s.drill_contact_feed = Some(0.1);
        let mut snap = snapshot(0.0, 0.0, [200.0; 3]);
        snap.drill_force = 100.0;
        snap.drill_feed = 0.149;
        assert_eq!(fsm_step(&s, &snap, &cfg).0.phase, Phase::Drilling);
        snap.drill_feed = 0.15;
        assert_eq!(fsm_step(&s, &snap, &cfg).0.phase, Phase::Halted(HaltReason::Complete));
    }

    #[test]
    fn stroke_end_without_contact_stops() {
        let cfg = config();
        let mut snap = snapshot(0.0, 0.0, [20.0, 0.0, 20.0]);
        snap.extension_at_limit = [false, true, false];
        let (next, cmd) = fsm_step(&in_phase(Phase::InitialBracing), &snap, &cfg);
        assert_eq!(next.phase, Phase::Halted(HaltReason::ExternalStop));
        assert!(cmd.is_all_stop());
    }

    #[test]
    fn blocking_switch_halts_opening() {
        let cfg = config();
        let mut snap = snapshot(0.5, 0.0, [0.0; 3]);
        snap.limit_switches[0] = SwitchState::UpperTripped;
        let (next, _) = fsm_step(&ControllerState::default(), &snap, &cfg);
        assert_eq!(next.phase, Phase::Halted(HaltReason::LimitSwitch));

        let mut snap = snapshot(1.5, 0.0, [0.0; 3]);
        snap.limit_switches[0] = SwitchState::UpperTripped;
        let (next, _) = fsm_step(&ControllerState::default(), &snap, &cfg);
        assert_eq!(next.phase, Phase::Opening);
    }

    #[test]
    fn halted_is_absorbing() {
        let cfg = config();
        let s = in_phase(Phase::Halted(HaltReason::Complete));
        let (next, cmd) = fsm_step(&s, &snapshot(0.0, 0.0, [0.0; 3]), &cfg);
        assert_eq!(next, s);
        assert!(cmd.is_all_stop());
    }

    #[test]
    fn tokens_round_trip() {
        for p in [
            Phase::Opening,
            Phase::Drilling,
            Phase::Halted(HaltReason::SafetyOverload),
            Phase::Halted(HaltReason::ExternalStop),
        ] {
            assert_eq!(Phase::from_token(p.token()), Some(p));
        }
        assert_eq!(Phase::Halted(HaltReason::Complete).to_string(), "halted_complete");
    }

    #[test]
    fn config_validation() {
        assert!(ControllerConfig::default().validate().is_ok());
        let bad = ControllerConfig {
            f_brace: 5.0,
            ..ControllerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ControllerConfig {
            hard_brace_speed: 0.02,
            ..ControllerConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
