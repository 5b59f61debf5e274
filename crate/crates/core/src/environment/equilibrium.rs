use nalgebra::{DMatrix, DVector};

use super::contact::{ContactState, Wrench};
use crate::error::{Error, Result};
use crate::geometry::{cross, perp, Vec2};
use crate::kinematics::{RobotConfiguration, RobotParams};

/// Largest residual force (N) for which a load counts as supported.
pub const SUPPORT_FORCE_TOLERANCE: f64 = 0.5;
/// Largest residual moment (N·m) for which a load counts as supported.
pub const SUPPORT_MOMENT_TOLERANCE: f64 = 0.1;

const ITERATION_BUDGET: usize = 10_000;
// Moment rows are scaled so both tolerances weigh equally in the fit.
const MOMENT_WEIGHT: f64 = SUPPORT_FORCE_TOLERANCE / SUPPORT_MOMENT_TOLERANCE;

/// A point contact available to carry load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPoint {
    pub point: Vec2,
    /// Unit wall normal pointing into the tunnel.
    pub normal: Vec2,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub residual_force: f64,
    pub residual_moment: f64,
    pub supported: bool,
    /// Normal force per contact, in input order.
    pub normal_forces: Vec<f64>,
    /// Tangential force per contact along `perp(normal)`.
    pub tangential_forces: Vec<f64>,
}

/// Finds admissible contact forces that best cancel `load` (the applied
/// wrench about `center`, excluding contacts).
///
/// Each friction cone is spanned by its edge rays `n ± μt`, so the problem is a
/// non-negative least-squares fit solved with the Lawson–Hanson active set method.
pub fn solve_contact_equilibrium(center: Vec2, contacts: &[ContactPoint], load: Wrench) -> Result<EquilibriumReport> {
    if !load.is_finite() {
        return Err(Error::Solver("non-finite load".into()));
    }
    let mut columns: Vec<(usize, f64)> = Vec::new();
    let mut data: Vec<f64> = Vec::new();
    for (i, c) in contacts.iter().enumerate() {
        let norm = c.normal.norm();
        if !(norm.is_finite() && (norm - 1.0).abs() < 1e-6) {
            return Err(Error::Solver(format!("contact {i} normal is not a unit vector")));
        }
        if !(c.mu >= 0.0 && c.mu.is_finite()) {
            return Err(Error::Solver(format!("contact {i} has invalid friction coefficient")));
        }
        let slopes: &[f64] = if c.mu > 0.0 { &[1.0, -1.0] } else { &[0.0] };
        for &s in slopes {
            let dir = c.normal + s * c.mu * perp(c.normal);
            data.extend_from_slice(&[dir.x, dir.y, MOMENT_WEIGHT * cross(c.point - center, dir)]);
            columns.push((i, s));
        }
    }

    let target = DVector::from_vec(vec![-load.fx, -load.fy, -MOMENT_WEIGHT * load.mz]);
    let x = if columns.is_empty() {
        DVector::zeros(0)
    } else {
        let a = DMatrix::from_column_slice(3, columns.len(), &data);
        nnls(&a, &target)?
    };

    let mut normal_forces = vec![0.0; contacts.len()];
    let mut tangential_forces = vec![0.0; contacts.len()];
    for (k, &(i, s)) in columns.iter().enumerate() {
        normal_forces[i] += x[k];
        tangential_forces[i] += s * contacts[i].mu * x[k];
    }

    let mut net = load;
    for (i, c) in contacts.iter().enumerate() {
        let f = normal_forces[i] * c.normal + tangential_forces[i] * perp(c.normal);
        net += Wrench::from_force_at(f, c.point, center);
    }
    let residual_force = net.force().norm();
    let residual_moment = net.mz.abs();
    Ok(EquilibriumReport {
        residual_force,
        residual_moment,
        supported: residual_force <= SUPPORT_FORCE_TOLERANCE && residual_moment <= SUPPORT_MOMENT_TOLERANCE,
        normal_forces,
        tangential_forces,
    })
}

/// Whether the contacts currently in touch can hold the body against gravity
/// (acting along −y) plus an external wrench about the body centre.
pub fn static_equilibrium(
    config: &RobotConfiguration,
    params: &RobotParams,
    contacts: &[ContactState],
    mu: f64,
    gravity: f64,
    external_wrench: Wrench,
) -> Result<EquilibriumReport> {
    let points: Vec<ContactPoint> = contacts
        .iter()
        .filter(|c| c.in_contact)
        .map(|c| ContactPoint {
            point: c.point,
            normal: c.normal,
            mu,
        })
        .collect();
    let load = external_wrench + Wrench::new(0.0, -params.body_mass * gravity, 0.0);
    solve_contact_equilibrium(config.body_pose.position(), &points, load)
}

fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    let scale = a.norm().max(1.0) * b.norm().max(1.0);
    let tol = 1e-12 * scale;
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let mut iterations = 0usize;

    loop {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;

        loop {
            iterations += 1;
            if iterations > ITERATION_BUDGET {
                return Err(Error::Solver(format!(
                    "equilibrium fit did not converge in {ITERATION_BUDGET} iterations"
                )));
            }
            let z = passive_least_squares(a, b, &passive)?;
            let blocking: Vec<usize> = (0..n).filter(|&k| passive[k] && z[k] <= 0.0).collect();
            if blocking.is_empty() {
                x = z;
                break;
            }
            let alpha = blocking
                .iter()
                .map(|&k| x[k] / (x[k] - z[k]))
                .fold(f64::INFINITY, f64::min);
            x += alpha * (&z - &x);
            for k in 0..n {
                if passive[k] && x[k] <= tol {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
        }
    }
    Ok(x)
}

fn passive_least_squares(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> Result<DVector<f64>> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&k| passive[k]).collect();
    let sub = a.select_columns(&idx);
    let sol = sub
        .svd(true, true)
        .solve(b, 1e-12)
        .map_err(|e| Error::Solver(e.to_string()))?;
    let mut z = DVector::zeros(passive.len());
    for (row, &k) in idx.iter().enumerate() {
        z[k] = sol[row];
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::unit;
    use nalgebra::{Matrix3, Vector3};
    use std::f64::consts::PI;

    fn wood_frame(mu: f64) -> Vec<ContactPoint> {
        let wall_left = ContactPoint {
            point: Vec2::new(-0.8, 0.0),
            normal: Vec2::new(1.0, 0.0),
            mu,
        };
        let side = |angle: f64| ContactPoint {
            point: 0.9 * unit(angle),
            normal: Vec2::new(-1.0, 0.0),
            mu,
        };
        vec![side(-PI / 3.0), wall_left, side(PI / 3.0)]
    }

    /// Brute-force feasibility: sweep each contact's tangential share over
    /// [−μN, μN] on a grid and solve the square force-balance system for N ≥ 0.
    fn sampled_feasible(contacts: &[ContactPoint], load: Wrench, steps: usize) -> bool {
        assert_eq!(contacts.len(), 3);
        let grid: Vec<f64> = (0..=steps).map(|i| -1.0 + 2.0 * i as f64 / steps as f64).collect();
        let rhs = Vector3::new(-load.fx, -load.fy, -load.mz);
        for &s0 in &grid {
            for &s1 in &grid {
                for &s2 in &grid {
                    let mut m = Matrix3::zeros();
                    for (col, (c, s)) in contacts.iter().zip([s0, s1, s2]).enumerate() {
                        let d = c.normal + s * c.mu * perp(c.normal);
                        m.set_column(col, &Vector3::new(d.x, d.y, cross(c.point, d)));
                    }
                    if let Some(n) = m.try_inverse().map(|inv| inv * rhs) {
                        if n.iter().all(|&v| v >= 0.0) {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    #[test]
    fn null_load_is_supported_with_zero_residual() {
        let contacts: Vec<ContactPoint> = (0..3)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / 3.0;
                ContactPoint {
                    point: unit(a),
                    normal: -unit(a),
                    mu: 0.6,
                }
            })
            .collect();
        let r = solve_contact_equilibrium(Vec2::zeros(), &contacts, Wrench::ZERO).unwrap();
        assert!(r.supported);
        assert_eq!(r.residual_force, 0.0);
        assert_eq!(r.residual_moment, 0.0);
    }

    #[test]
    fn y_in_frame_with_friction_matches_sampling_oracle() {
        let contacts = wood_frame(0.6);
        let load = Wrench::new(0.0, -15.0 * 9.81, 0.0);
        assert!(sampled_feasible(&contacts, load, 40));
        let r = solve_contact_equilibrium(Vec2::zeros(), &contacts, load).unwrap();
        assert!(r.supported, "{r:?}");
        for (n, t) in r.normal_forces.iter().zip(&r.tangential_forces) {
            assert!(*n >= 0.0);
            assert!(t.abs() <= 0.6 * n + 1e-9);
        }
    }

    #[test]
    fn frictionless_horizontal_contacts_cannot_hold_weight() {
        let contacts = wood_frame(0.0);
        let load = Wrench::new(0.0, -15.0 * 9.81, 0.0);
        assert!(!sampled_feasible(&contacts, load, 4));
        let r = solve_contact_equilibrium(Vec2::zeros(), &contacts, load).unwrap();
        assert!(!r.supported);
        assert!((r.residual_force - 15.0 * 9.81).abs() < 1e-6);
    }

    #[test]
    fn oracle_agrees_on_tilted_loads() {
        let contacts = wood_frame(0.3);
        for k in 0..12 {
            let a = 2.0 * PI * k as f64 / 12.0;
            let load = Wrench::new(100.0 * a.cos(), 100.0 * a.sin(), 5.0 * (k as f64 - 6.0));
            let oracle = sampled_feasible(&contacts, load, 40);
            let r = solve_contact_equilibrium(Vec2::zeros(), &contacts, load).unwrap();
            if oracle {
                assert!(r.supported, "load {k}: {r:?}");
            }
            if !r.supported {
                assert!(!oracle, "load {k}");
            }
        }
    }

    #[test]
    fn no_contacts_leaves_the_whole_load() {
        let r = solve_contact_equilibrium(Vec2::zeros(), &[], Wrench::new(3.0, 4.0, 1.0)).unwrap();
        assert!(!r.supported);
        assert_eq!(r.residual_force, 5.0);
        assert_eq!(r.residual_moment, 1.0);
    }

    #[test]
    fn rejects_non_unit_normals() {
        let c = ContactPoint {
            point: Vec2::zeros(),
            normal: Vec2::new(2.0, 0.0),
            mu: 0.5,
        };
        assert!(matches!(
            solve_contact_equilibrium(Vec2::zeros(), &[c], Wrench::ZERO),
            Err(Error::Solver(_))
        ));
    }
}
