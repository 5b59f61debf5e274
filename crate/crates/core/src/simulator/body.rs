use nalgebra::{Matrix3, Vector3};

use crate::environment::Wrench;
use crate::error::{Error, Result};
use crate::geometry::{cross, Pose, Vec2};

/// Planar rigid-body state of the robot body.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyState {
    pub pose: Pose,
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl BodyState {
    pub fn at(pose: Pose) -> Self {
        Self {
            pose,
            ..Self::default()
        }
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }

    /// World velocity of a point rigidly attached to the body.
    pub fn point_velocity(&self, point: Vec2) -> Vec2 {
        let r = point - self.pose.position();
        self.velocity() + self.omega * Vec2::new(-r.y, r.x)
    }

    pub fn kinetic_energy(&self, mass: f64, inertia: f64) -> f64 {
        0.5 * mass * (self.vx * self.vx + self.vy * self.vy) + 0.5 * inertia * self.omega * self.omega
    }

    fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.vx, self.vy, self.omega)
    }
}

/// Semi-implicit Euler: velocities first, then the pose with the new velocities.
/// A pinned body keeps its pose and loses its velocity.
pub fn integrate_step(
    state: BodyState,
    wrench: Wrench,
    dt: f64,
    mass: f64,
    inertia: f64,
    pinned: bool,
) -> Result<BodyState> {
    if !wrench.is_finite() {
        return Err(Error::Numerical("non-finite wrench on the body".into()));
    }
    if pinned {
        return Ok(BodyState::at(state.pose));
    }
    let vx = state.vx + wrench.fx / mass * dt;
    let vy = state.vy + wrench.fy / mass * dt;
    let omega = state.omega + wrench.mz / inertia * dt;
    let next = BodyState {
        pose: Pose::new(
            state.pose.x + vx * dt,
            state.pose.y + vy * dt,
            state.pose.phi + omega * dt,
        ),
        vx,
        vy,
        omega,
    };
    let finite = [next.pose.x, next.pose.y, next.pose.phi, vx, vy, omega]
        .iter()
        .all(|v| v.is_finite());
    if !finite {
        return Err(Error::Numerical("body state became non-finite".into()));
    }
    Ok(next)
}

/// One penetrating tip as seen by the velocity solve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TipContact {
    /// Tip position relative to the body centre.
    pub r: Vec2,
    pub normal: Vec2,
    /// Negative for a tip that has not reached the wall yet; such tips get
    /// the stiffness term only.
    pub depth: f64,
    /// Tip velocity from joint motion alone.
    pub joint_velocity: Vec2,
}

impl TipContact {
    fn damping(&self, p: &SolverParams) -> f64 {
        let c = if self.depth > 0.0 { p.damping } else { 0.0 };
        c + p.stiffness * p.dt
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SolverParams {
    pub stiffness: f64,
    pub damping: f64,
    pub mu: f64,
    pub v_reg: f64,
    pub dt: f64,
    pub mass: f64,
    pub inertia: f64,
}

/// Normal and tangential force per tip from the velocity solve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct TipForce {
    pub normal: f64,
    pub tangential: f64,
}

fn generalized(r: Vec2, d: Vec2) -> Vector3<f64> {
    Vector3::new(d.x, d.y, cross(r, d))
}

struct Problem<'a> {
    tips: &'a [TipContact],
    p: SolverParams,
    u_star: Vector3<f64>,
    m: Vector3<f64>,
    friction_scale: Vec<f64>,
}

impl Problem<'_> {
    fn normal_arg(&self, tip: &TipContact, u: &Vector3<f64>) -> f64 {
        let gn = generalized(tip.r, tip.normal);
        self.p.stiffness * tip.depth - tip.damping(&self.p) * (gn.dot(u) + tip.normal.dot(&tip.joint_velocity))
    }

    fn slip(&self, tip: &TipContact, u: &Vector3<f64>) -> f64 {
        let t = Vec2::new(-tip.normal.y, tip.normal.x);
        (generalized(tip.r, t).dot(u) + t.dot(&tip.joint_velocity)) / self.p.v_reg
    }

    fn objective(&self, u: &Vector3<f64>) -> f64 {
        let du = u - self.u_star;
        let mut phi = 0.5 * du.component_mul(&self.m).dot(&du);
        for (tip, &fs) in self.tips.iter().zip(&self.friction_scale) {
            let a = self.normal_arg(tip, u).max(0.0);
            let s = self.slip(tip, u);
            let huber = if s.abs() <= 1.0 { 0.5 * s * s } else { s.abs() - 0.5 };
            phi += self.p.dt * (a * a / (2.0 * tip.damping(&self.p)) + fs * self.p.v_reg * huber);
        }
        phi
    }

    fn gradient_hessian(&self, u: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
        let mut g = (u - self.u_star).component_mul(&self.m);
        let mut h = Matrix3::from_diagonal(&self.m);
        for (tip, &fs) in self.tips.iter().zip(&self.friction_scale) {
            let gn = generalized(tip.r, tip.normal);
            let gt = generalized(tip.r, Vec2::new(-tip.normal.y, tip.normal.x));
            let a = self.normal_arg(tip, u);
            if a > 0.0 {
                g -= self.p.dt * a * gn;
                h += self.p.dt * tip.damping(&self.p) * gn * gn.transpose();
            }
            let s = self.slip(tip, u);
            g += self.p.dt * fs * s.clamp(-1.0, 1.0) * gt;
            if s.abs() < 1.0 {
                h += self.p.dt * fs / self.p.v_reg * gt * gt.transpose();
            }
        }
        (g, h)
    }

    fn minimize(&self, start: Vector3<f64>) -> Vector3<f64> {
        let mut u = start;
        let mut phi = self.objective(&u);
        for _ in 0..100 {
            let (g, h) = self.gradient_hessian(&u);
            let Some(step) = h.lu().solve(&(-g)) else { break };
            let slope = g.dot(&step);
            if !(slope < 0.0) {
                break;
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-10 {
                let trial = u + alpha * step;
                let phi_trial = self.objective(&trial);
                if phi_trial <= phi + 1e-4 * alpha * slope {
                    u = trial;
                    phi = phi_trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted || (alpha * step).norm() <= 1e-13 * (1.0 + u.norm()) {
                break;
            }
        }
        u
    }
}

/// Solves for the end-of-step body velocity with penalty damping, the
/// stiffness rate term and regularized friction treated implicitly, and
/// returns the tip forces consistent with that velocity. Friction is scaled by
/// the normal force of the previous pass, so two passes are run and the final
/// friction is clipped to the cone of the final normal force.
pub(crate) fn solve_contact_forces(
    body: &BodyState,
    external: Wrench,
    tips: &[TipContact],
    initial_normals: &[f64],
    p: SolverParams,
) -> Vec<TipForce> {
    let m = Vector3::new(p.mass, p.mass, p.inertia);
    let u0 = body.as_vector();
    let u_star = u0 + p.dt * Vector3::new(external.fx, external.fy, external.mz).component_div(&m);
    let mut problem = Problem {
        tips,
        p,
        u_star,
        m,
        friction_scale: initial_normals.iter().map(|n| p.mu * n.max(0.0)).collect(),
    };
    let mut u = problem.minimize(u0);
    let normals: Vec<f64> = tips.iter().map(|t| problem.normal_arg(t, &u).max(0.0)).collect();
    problem.friction_scale = normals.iter().map(|n| p.mu * n).collect();
    u = problem.minimize(u);

    tips.iter()
        .zip(&problem.friction_scale)
        .map(|(tip, &scale)| {
            let normal = problem.normal_arg(tip, &u).max(0.0);
            let cap = p.mu * normal;
            let tangential = (-scale * problem.slip(tip, &u).clamp(-1.0, 1.0)).clamp(-cap, cap);
            TipForce { normal, tangential }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_wrench_keeps_pose() {
        let s = BodyState::at(Pose::new(0.3, -0.2, 1.0));
        assert_eq!(integrate_step(s, Wrench::ZERO, 0.001, 15.0, 0.6, false).unwrap(), s);
    }

    #[test]
    fn unit_acceleration() {
        let s = BodyState::default();
        let n = integrate_step(s, Wrench::new(15.0, 0.0, 0.0), 0.001, 15.0, 0.6, false).unwrap();
        assert_abs_diff_eq!(n.vx, 0.001, epsilon = 1e-15);
        assert_abs_diff_eq!(n.pose.x, 1e-6, epsilon = 1e-18);
    }

    #[test]
    fn constant_force_matches_closed_form() {
        let (m, f, dt) = (15.0, 30.0, 0.001);
        let mut s = BodyState::default();
        for _ in 0..1000 {
            s = integrate_step(s, Wrench::new(f, 0.0, 0.6), dt, m, 0.6, false).unwrap();
        }
        let t = 1.0;
        let exact = 0.5 * f / m * t * t;
        assert!((s.pose.x - exact).abs() <= 0.01 * exact);
        assert!((s.pose.phi - 0.5).abs() <= 0.01 * 0.5);
        assert_abs_diff_eq!(s.vx, f / m * t, epsilon = 1e-9);
    }

    #[test]
    fn pinned_body_stays() {
        let mut s = BodyState::at(Pose::new(1.0, 2.0, 0.5));
        s.vx = 3.0;
        let n = integrate_step(s, Wrench::new(100.0, 5.0, 1.0), 0.001, 15.0, 0.6, true).unwrap();
        assert_eq!(n.pose, s.pose);
        assert_eq!((n.vx, n.vy, n.omega), (0.0, 0.0, 0.0));
    }

    #[test]
    fn non_finite_is_an_error() {
        let s = BodyState::default();
        assert!(integrate_step(s, Wrench::new(f64::NAN, 0.0, 0.0), 0.001, 15.0, 0.6, false).is_err());
        assert!(integrate_step(s, Wrench::new(f64::MAX, 0.0, 0.0), 1e300, 1e-300, 0.6, false).is_err());
    }

    fn params() -> SolverParams {
        SolverParams {
            stiffness: 1e5,
            damping: 2e3,
            mu: 0.6,
            v_reg: 1e-3,
            dt: 0.001,
            mass: 15.0,
            inertia: 0.6,
        }
    }

    #[test]
    fn resting_contact_balances_weight() {
        // Body resting on a floor tip directly below the centre.
        let tip = TipContact {
            r: Vec2::new(0.0, -0.5),
            normal: Vec2::new(0.0, 1.0),
            depth: 15.0 * 9.81 / 1e5,
            joint_velocity: Vec2::zeros(),
        };
        let body = BodyState::default();
        let f = solve_contact_forces(&body, Wrench::new(0.0, -15.0 * 9.81, 0.0), &[tip], &[147.15], params());
        assert_abs_diff_eq!(f[0].normal, 147.15, epsilon = 1e-6);
        assert_abs_diff_eq!(f[0].tangential, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn friction_stays_in_cone_and_opposes_slip() {
        let tip = TipContact {
            r: Vec2::new(0.0, -0.5),
            normal: Vec2::new(0.0, 1.0),
            depth: 0.001,
            joint_velocity: Vec2::zeros(),
        };
        let body = BodyState {
            vx: 0.5,
            ..BodyState::default()
        };
        let f = solve_contact_forces(&body, Wrench::ZERO, &[tip], &[100.0], params());
        // Tangent is perp(n) = (-1, 0), so opposing +x slip means a positive coordinate.
        assert!(f[0].tangential > 0.0);
        assert!(f[0].tangential.abs() <= 0.6 * f[0].normal + 1e-12);
    }
}
