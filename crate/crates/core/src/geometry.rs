//! Small planar helpers shared by the kinematic and contact code.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

pub type Vec2 = nalgebra::Vector2<f64>;

/// Planar body pose: position in metres, heading in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, phi: f64) -> Self {
        Self { x, y, phi }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Maps a body-frame point into the world frame.
    pub fn transform(&self, local: Vec2) -> Vec2 {
        self.position() + rotate(local, self.phi)
    }
}

pub fn unit(angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c, s)
}

pub fn rotate(v: Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// z-component of the planar cross product.
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Counter-clockwise perpendicular.
pub fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

/// Tests whether `angle` lies on the arc running counter-clockwise from `lo` to `hi`,
/// with a small slack at both ends. Works for arcs that straddle ±π.
pub fn angle_in_range(angle: f64, lo: f64, hi: f64, slack: f64) -> bool {
    let span = hi - lo;
    if span >= TAU - slack {
        return true;
    }
    let d = (angle - lo).rem_euclid(TAU);
    d <= span + slack || d >= TAU - slack
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(0.0), 0.0);
    }

    #[test]
    fn arcs_across_the_seam() {
        assert!(angle_in_range(PI, 0.0, PI, 1e-12));
        assert!(angle_in_range(PI, -PI, 0.0, 1e-12));
        assert!(angle_in_range(-PI, -PI, 0.0, 1e-12));
        assert!(!angle_in_range(-0.1, 0.0, PI, 1e-12));
        assert!(angle_in_range(3.1, 3.0, 3.3, 0.0));
        assert!(angle_in_range(-3.1, 3.0, 3.3, 0.0));
        assert!(angle_in_range(1.0, -PI, PI, 0.0));
    }

    #[test]
    fn pose_transform_matches_manual_rotation() {
        let p = Pose::new(1.0, 2.0, PI / 2.0);
        let w = p.transform(Vec2::new(1.0, 0.0));
        assert!((w - Vec2::new(1.0, 3.0)).norm() < 1e-15);
    }
}
