//! Leg parameterization and closed-chain kinematics.
//!
//! Legs are ordered (left, central, right). The central leg is rigid with the body
//! and always points along the body heading; the side legs carry a revolute joint
//! whose angle is measured from that heading, positive counter-clockwise.

mod workspace;

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Quantity, Result};
use crate::geometry::{angle_in_range, unit, wrap_angle, Pose, Vec2};

pub use workspace::{
    classify, is_feasible, workspace_region, workspace_region_with, Classification, WorkspaceRegion, WorkspaceSidecar,
};

/// Slack used when comparing lengths against their limits (m).
pub const LENGTH_SLACK: f64 = 1e-9;
/// Slack used when comparing angles against their limits (rad).
pub const ANGLE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegId {
    Left,
    Central,
    Right,
}

impl LegId {
    pub const ALL: [LegId; 3] = [LegId::Left, LegId::Central, LegId::Right];
    pub const SIDES: [LegId; 2] = [LegId::Left, LegId::Right];

    pub const fn index(self) -> usize {
        match self {
            LegId::Left => 0,
            LegId::Central => 1,
            LegId::Right => 2,
        }
    }

    pub fn is_side(self) -> bool {
        self != LegId::Central
    }
}

impl fmt::Display for LegId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LegId::Left => "left",
            LegId::Central => "central",
            LegId::Right => "right",
        })
    }
}

/// Geometric and inertial description of the robot.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotParams {
    pub l_min: f64,
    pub l_max: f64,
    /// Rotation range of the left leg. The right leg uses the mirrored range
    /// `[-theta_max, -theta_min]`.
    pub theta_min: f64,
    pub theta_max: f64,
    /// Body-frame mount points, (left, central, right).
    pub leg_mount_offsets: [Vec2; 3],
    pub body_mass: f64,
    pub body_inertia: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            l_min: 0.625,
            l_max: 1.125,
            theta_min: -FRAC_PI_2,
            theta_max: FRAC_PI_2,
            leg_mount_offsets: [Vec2::zeros(); 3],
            body_mass: 15.0,
            body_inertia: 0.6,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_min > 0.0 && self.l_min < self.l_max) {
            return Err(Error::config(format!(
                "robot: need 0 < l_min < l_max, got l_min={} l_max={}",
                self.l_min, self.l_max
            )));
        }
        if !(self.theta_min < self.theta_max) {
            return Err(Error::config("robot: need theta_min < theta_max"));
        }
        if !(self.body_mass > 0.0 && self.body_inertia > 0.0) {
            return Err(Error::config("robot: mass and inertia must be positive"));
        }
        Ok(())
    }

    /// Admissible rotation arc for a leg; `None` for the rigid central leg.
    pub fn rotation_limits(&self, leg: LegId) -> Option<(f64, f64)> {
        match leg {
            LegId::Left => Some((self.theta_min, self.theta_max)),
            LegId::Right => Some((-self.theta_max, -self.theta_min)),
            LegId::Central => None,
        }
    }

    pub fn extension_ok(&self, l: f64) -> bool {
        l >= self.l_min - LENGTH_SLACK && l <= self.l_max + LENGTH_SLACK
    }

    pub fn rotation_ok(&self, leg: LegId, theta: f64) -> bool {
        match self.rotation_limits(leg) {
            Some((lo, hi)) => angle_in_range(theta, lo, hi, ANGLE_SLACK),
            None => theta.abs() <= ANGLE_SLACK,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointState {
    pub extension: f64,
    pub extension_rate: f64,
    /// Always 0 for the central leg.
    pub rotation: f64,
    pub rotation_rate: f64,
}

impl JointState {
    pub fn at(extension: f64, rotation: f64) -> Self {
        Self {
            extension,
            rotation,
            ..Self::default()
        }
    }
}

/// Body pose plus the three leg joint states.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotConfiguration {
    pub body_pose: Pose,
    pub legs: [JointState; 3],
}

impl Index<LegId> for RobotConfiguration {
    type Output = JointState;
    fn index(&self, leg: LegId) -> &JointState {
        &self.legs[leg.index()]
    }
}

impl IndexMut<LegId> for RobotConfiguration {
    fn index_mut(&mut self, leg: LegId) -> &mut JointState {
        &mut self.legs[leg.index()]
    }
}

impl RobotConfiguration {
    /// World-frame heading of a leg.
    pub fn leg_heading(&self, leg: LegId) -> f64 {
        match leg {
            LegId::Central => self.body_pose.phi,
            _ => self.body_pose.phi + self[leg].rotation,
        }
    }

    pub fn mount_point(&self, leg: LegId, params: &RobotParams) -> Vec2 {
        self.body_pose.transform(params.leg_mount_offsets[leg.index()])
    }

    pub fn tip(&self, leg: LegId, params: &RobotParams) -> Vec2 {
        self.mount_point(leg, params) + self[leg].extension * unit(self.leg_heading(leg))
    }
}

pub fn forward_tip_positions(config: &RobotConfiguration, params: &RobotParams) -> [Vec2; 3] {
    LegId::ALL.map(|leg| config.tip(leg, params))
}

/// Ring of positions reachable by a leg tip around a fixed anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    pub center: Vec2,
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Annulus {
    pub fn contains(&self, p: Vec2) -> bool {
        let d = (p - self.center).norm();
        d >= self.r_inner - LENGTH_SLACK && d <= self.r_outer + LENGTH_SLACK
    }

    pub fn is_circle(&self) -> bool {
        self.r_inner == self.r_outer
    }
}

pub fn leg_annulus(anchor: Vec2, params: &RobotParams) -> Annulus {
    Annulus {
        center: anchor,
        r_inner: params.l_min,
        r_outer: params.l_max,
    }
}

/// Joint values that put every tip on its anchor for a given body pose.
pub fn closed_chain_solve(anchors: &[Vec2; 3], body_pose: Pose, params: &RobotParams) -> Result<RobotConfiguration> {
    let mut config = RobotConfiguration {
        body_pose,
        legs: [JointState::default(); 3],
    };
    for leg in LegId::ALL {
        let v = anchors[leg.index()] - config.mount_point(leg, params);
        let extension = v.norm();
        let bearing = wrap_angle(v.y.atan2(v.x) - body_pose.phi);
        if !params.extension_ok(extension) {
            return Err(Error::LimitViolation {
                leg,
                quantity: Quantity::Extension,
                value: extension,
            });
        }
        if !params.rotation_ok(leg, bearing) {
            return Err(Error::LimitViolation {
                leg,
                quantity: Quantity::Rotation,
                value: bearing,
            });
        }
        config[leg] = JointState::at(extension, if leg.is_side() { bearing } else { 0.0 });
    }
    Ok(config)
}

/// Largest tip-to-anchor gap over the three legs.
pub fn chain_residual(config: &RobotConfiguration, anchors: &[Vec2; 3], params: &RobotParams) -> f64 {
    forward_tip_positions(config, params)
        .iter()
        .zip(anchors)
        .map(|(tip, a)| (tip - a).norm())
        .fold(0.0, f64::max)
}
