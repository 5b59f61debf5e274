use serde::Serialize;

use super::record::{ContactChecks, PeakForces, PhaseTransition, Ratios, ScenarioSummary, SimLogRecord};
use super::world::{Simulator, StepReport};
use super::{DrivetrainParams, EnvironmentParams, HoldMode, Outcome, SimConfig};
use crate::controller::{ControllerConfig, HaltReason, Phase};
use crate::environment::{static_equilibrium, ContactId, Wrench};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::Vec2;
use crate::kinematics::RobotParams;

/// Everything needed to run one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioInputs {
    pub name: String,
    pub sim: SimConfig,
    pub robot: RobotParams,
    pub drivetrain: DrivetrainParams,
    pub environment: EnvironmentParams,
    pub controller: ControllerConfig,
}

impl ScenarioInputs {
    pub fn simulator(&self) -> Result<Simulator> {
        Simulator::new(
            &self.sim,
            &self.robot,
            &self.drivetrain,
            &self.environment,
            &self.controller,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub records: Vec<SimLogRecord>,
    pub outcome: Outcome,
    pub summary: ScenarioSummary,
}

impl ScenarioRun {
    pub fn log_csv(&self) -> String {
        let mut buf = Vec::new();
        super::write_log_csv(&self.records, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("log is ASCII")
    }
}

#[derive(Default)]
struct Stats {
    transitions: Vec<PhaseTransition>,
    last_phase: Option<Phase>,
    peaks: PeakForces,
    checks: ContactChecks,
}

impl Stats {
    fn observe(&mut self, report: &StepReport, mu: f64) {
        if self.last_phase != Some(report.phase) {
            self.transitions.push(PhaseTransition {
                phase: report.phase.token().to_string(),
                t_s: report.t,
            });
            self.last_phase = Some(report.phase);
        }
        let f = report.contacts.map(|c| c.normal_force);
        self.peaks.left_n = self.peaks.left_n.max(f[0]);
        self.peaks.central_n = self.peaks.central_n.max(f[1]);
        self.peaks.right_n = self.peaks.right_n.max(f[2]);
        self.peaks.drill_n = self.peaks.drill_n.max(report.drill.normal_force);
        for c in &report.contacts {
            self.checks.min_normal_force_n = self.checks.min_normal_force_n.min(c.normal_force);
            self.checks.max_cone_excess_n = self
                .checks
                .max_cone_excess_n
                .max(c.tangential_force.abs() - mu * c.normal_force);
        }
        for d in report.leg_penetration {
            self.checks.max_leg_penetration_m = self.checks.max_leg_penetration_m.max(d);
        }
    }
}

pub fn run_scenario(inputs: &ScenarioInputs) -> Result<ScenarioRun> {
    run_scenario_observed(inputs, |_| {})
}

/// Like [`run_scenario`], calling `observer` after every physics step.
pub fn run_scenario_observed(inputs: &ScenarioInputs, mut observer: impl FnMut(&StepReport)) -> Result<ScenarioRun> {
    let mut world = inputs.simulator()?;
    let mu = inputs.environment.contact.friction_mu;
    let steps = inputs.sim.steps();
    let mut records = Vec::new();
    let mut stats = Stats::default();
    let mut outcome = Outcome::DurationElapsed;
    let mut end_time = steps as f64 * inputs.sim.dt;
    let mut done = 0;
    for _ in 0..steps {
        let report = world.step()?;
        done += 1;
        observer(&report);
        stats.observe(&report, mu);
        if let Some(r) = report.record {
            records.push(r);
        }
        if let Phase::Halted(reason) = report.phase {
            outcome = Outcome::Halted(reason);
            end_time = report.t;
            break;
        }
    }
    let last = records.last().map(|r| r.ratios()).unwrap_or([0.0; 3]);
    let summary = ScenarioSummary {
        scenario: inputs.name.clone(),
        outcome,
        end_time_s: end_time,
        steps: done,
        records: records.len(),
        transitions: stats.transitions,
        peak_forces: stats.peaks,
        final_ratios: Ratios {
            left: last[0],
            central: last[1],
            right: last[2],
        },
        contact_checks: stats.checks,
    };
    Ok(ScenarioRun {
        records,
        outcome,
        summary,
    })
}

/// Runs independent scenarios; results are in input order either way.
pub fn run_batch(inputs: &[ScenarioInputs], exec: Execution) -> Vec<Result<ScenarioRun>> {
    exec.map(inputs, run_scenario)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensionOptions {
    pub settle_window: f64,
    pub drift_threshold: f64,
    /// Drift beyond which the body is considered to be falling and the run stops.
    pub free_fall_drift: f64,
}

impl Default for TensionOptions {
    fn default() -> Self {
        Self {
            settle_window: 5.0,
            drift_threshold: 0.001,
            free_fall_drift: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensionContact {
    pub leg: ContactId,
    pub in_contact: bool,
    pub normal_force_n: f64,
    pub tangential_force_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensionReport {
    pub supported: bool,
    pub max_drift_m: f64,
    pub bracing_completed: bool,
    pub release_time_s: Option<f64>,
    pub settle_window_s: f64,
    pub drift_threshold_m: f64,
    pub free_fall: bool,
    pub contacts_at_release: Vec<TensionContact>,
    /// Static check of the contact set at release.
    pub equilibrium_supported: Option<bool>,
    pub equilibrium_residual_force_n: Option<f64>,
    pub equilibrium_residual_moment_nm: Option<f64>,
    pub final_phase: String,
}

impl TensionReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("tension report serializes");
        s.push('\n');
        s
    }
}

/// Brace inside the frame, stop after hard bracing, drop the fixture and watch
/// the body for `settle_window`. With the default hold mode the fixture stays
/// on through hard bracing; other hold modes release as configured.
pub fn run_tension_test(inputs: &ScenarioInputs, options: &TensionOptions) -> Result<TensionReport> {
    if !(options.settle_window > 0.0
        && options.drift_threshold > 0.0
        && options.free_fall_drift > options.drift_threshold)
    {
        return Err(Error::config(
            "tension: need settle window > 0 and 0 < drift threshold < free-fall drift",
        ));
    }
    let mut inputs = inputs.clone();
    inputs.controller.halt_after_bracing = true;
    if inputs.sim.hold_mode == HoldMode::FixedUntilAllContact {
        inputs.sim.hold_mode = HoldMode::FixedUntilBraced;
    }
    let mut world = inputs.simulator()?;
    let mu = inputs.environment.contact.friction_mu;
    let settle_steps = (options.settle_window / inputs.sim.dt).ceil() as u64;
    let budget = inputs.sim.steps() + settle_steps + 1;

    let mut release: Option<(f64, Vec2)> = None;
    let mut contacts_at_release = Vec::new();
    let mut equilibrium = None;
    let mut max_drift: f64 = 0.0;
    let mut free_fall = false;
    let mut window_done = false;
    let mut phase = Phase::Opening;

    for _ in 0..budget {
        let before = world.body().pose.position();
        let report = world.step()?;
        phase = report.phase;
        if release.is_none() && !report.pinned {
            release = Some((report.t, before));
            contacts_at_release = report
                .contacts
                .iter()
                .map(|c| TensionContact {
                    leg: c.leg_id,
                    in_contact: c.in_contact,
                    normal_force_n: c.normal_force,
                    tangential_force_n: c.tangential_force,
                })
                .collect();
            equilibrium = Some(static_equilibrium(
                &world.configuration(),
                &inputs.robot,
                &report.contacts,
                mu,
                inputs.sim.gravity,
                Wrench::ZERO,
            )?);
        }
        if let Some((t0, p0)) = release {
            max_drift = max_drift.max((world.body().pose.position() - p0).norm());
            if max_drift > options.free_fall_drift {
                free_fall = true;
                break;
            }
            if world.time() - t0 >= options.settle_window - 1e-9 {
                window_done = true;
                break;
            }
        }
        if matches!(phase, Phase::Halted(r) if r != HaltReason::Complete) && release.is_none() {
            break;
        }
    }

    let bracing_completed = phase == Phase::Halted(HaltReason::Complete);
    Ok(TensionReport {
        supported: bracing_completed && window_done && !free_fall && max_drift < options.drift_threshold,
        max_drift_m: max_drift,
        bracing_completed,
        release_time_s: release.map(|r| r.0),
        settle_window_s: options.settle_window,
        drift_threshold_m: options.drift_threshold,
        free_fall,
        contacts_at_release,
        equilibrium_supported: equilibrium.as_ref().map(|e| e.supported),
        equilibrium_residual_force_n: equilibrium.as_ref().map(|e| e.residual_force),
        equilibrium_residual_moment_nm: equilibrium.as_ref().map(|e| e.residual_moment),
        final_phase: phase.token().to_string(),
    })
}
