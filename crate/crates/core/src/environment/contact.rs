use std::ops::{Add, AddAssign, Neg};

use serde::{Deserialize, Serialize};

use crate::geometry::{cross, perp, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactParams {
    /// Penalty stiffness, N/m.
    pub stiffness: f64,
    /// Penalty damping, N·s/m.
    pub damping: f64,
    pub friction_mu: f64,
    /// Sliding speed at which friction saturates, m/s.
    pub regularization_velocity: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            stiffness: 1e5,
            damping: 2e3,
            friction_mu: 0.6,
            regularization_velocity: 1e-3,
        }
    }
}

/// Unilateral spring-damper: `max(0, k·depth + c·rate)`, and nothing without penetration.
pub fn contact_force(depth: f64, depth_rate: f64, params: &ContactParams) -> f64 {
    if depth <= 0.0 {
        return 0.0;
    }
    (params.stiffness * depth + params.damping * depth_rate).max(0.0)
}

/// Regularized Coulomb friction opposing the tangential slip velocity.
pub fn friction_force(normal_force: f64, tangential_velocity: f64, mu: f64, regularization_velocity: f64) -> f64 {
    // Adding 0.0 turns a negative zero into a positive one.
    -mu * normal_force * (tangential_velocity / regularization_velocity).clamp(-1.0, 1.0) + 0.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrillParams {
    /// Reaction per metre of feed beyond the wall surface while cutting, N/m.
    pub feed_gain: f64,
    /// Maximum feed speed of the drill slide, m/s.
    pub feed_speed: f64,
    pub reaction_cap: f64,
    /// Distance from the body centre to the retracted bit, m.
    pub base_length: f64,
    pub stroke: f64,
}

impl Default for DrillParams {
    fn default() -> Self {
        Self {
            feed_gain: 5e4,
            feed_speed: 0.02,
            reaction_cap: 2000.0,
            base_length: 0.3,
            stroke: 0.5,
        }
    }
}

/// Axial reaction of the drill on the body, along the drill axis and opposite
/// to the feed. While the bit spins it cuts, so the reaction follows the feed
/// law up to a cap; otherwise the bit is a plain penalty contact.
pub fn drill_reaction(
    feed_beyond_surface: f64,
    rotation_active: bool,
    params: &DrillParams,
    contact: &ContactParams,
) -> f64 {
    if feed_beyond_surface <= 0.0 {
        return 0.0;
    }
    if rotation_active {
        (params.feed_gain * feed_beyond_surface).min(params.reaction_cap)
    } else {
        contact_force(feed_beyond_surface, 0.0, contact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactId {
    Left,
    Central,
    Right,
    Drill,
}

/// Planar wrench: force (N) and moment about the body centre (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub fx: f64,
    pub fy: f64,
    pub mz: f64,
}

impl Wrench {
    pub const ZERO: Wrench = Wrench {
        fx: 0.0,
        fy: 0.0,
        mz: 0.0,
    };

    pub fn new(fx: f64, fy: f64, mz: f64) -> Self {
        Self { fx, fy, mz }
    }

    /// Wrench about `center` of a force applied at `point`.
    pub fn from_force_at(force: Vec2, point: Vec2, center: Vec2) -> Self {
        Self {
            fx: force.x,
            fy: force.y,
            mz: cross(point - center, force),
        }
    }

    pub fn force(&self) -> Vec2 {
        Vec2::new(self.fx, self.fy)
    }

    pub fn is_finite(&self) -> bool {
        self.fx.is_finite() && self.fy.is_finite() && self.mz.is_finite()
    }
}

impl Add for Wrench {
    type Output = Wrench;
    fn add(self, o: Wrench) -> Wrench {
        Wrench::new(self.fx + o.fx, self.fy + o.fy, self.mz + o.mz)
    }
}

impl AddAssign for Wrench {
    fn add_assign(&mut self, o: Wrench) {
        *self = *self + o;
    }
}

impl Neg for Wrench {
    type Output = Wrench;
    fn neg(self) -> Wrench {
        Wrench::new(-self.fx, -self.fy, -self.mz)
    }
}

/// Contact at one leg tip or the drill bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactState {
    pub leg_id: ContactId,
    pub in_contact: bool,
    /// World position of the contact point.
    pub point: Vec2,
    /// Wall normal pointing into the tunnel.
    pub normal: Vec2,
    pub normal_force: f64,
    /// Signed force along `perp(normal)`.
    pub tangential_force: f64,
}

impl ContactState {
    pub fn free(leg_id: ContactId, point: Vec2, normal: Vec2) -> Self {
        Self {
            leg_id,
            in_contact: false,
            point,
            normal,
            normal_force: 0.0,
            tangential_force: 0.0,
        }
    }

    pub fn tangent(&self) -> Vec2 {
        perp(self.normal)
    }

    /// Force the wall exerts on the robot.
    pub fn force(&self) -> Vec2 {
        self.normal_force * self.normal + self.tangential_force * self.tangent()
    }

    pub fn wrench_on_body(&self, body_center: Vec2) -> Wrench {
        Wrench::from_force_at(self.force(), self.point, body_center)
    }

    /// Reaction the robot puts on the wall, expressed about the same centre.
    pub fn wrench_on_wall(&self, body_center: Vec2) -> Wrench {
        Wrench::from_force_at(-self.force(), self.point, body_center)
    }
}
