use std::io::{self, Write};

use serde::Serialize;

use super::Outcome;
use crate::controller::Phase;
use crate::format::sig9;

pub const LOG_HEADER: &str = "t_s,phase,f_left_n,f_center_n,f_right_n,f_drill_n,l_left_m,l_center_m,l_right_m,theta_left_rad,theta_right_rad,drill_depth_m,body_x_m,body_y_m,body_phi_rad,ratio_left,ratio_center,ratio_right";

/// One row of the time-series log. Forces are true tip normal forces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimLogRecord {
    pub t: f64,
    pub phase: Phase,
    pub f_left: f64,
    pub f_center: f64,
    pub f_right: f64,
    pub f_drill: f64,
    pub l_left: f64,
    pub l_center: f64,
    pub l_right: f64,
    pub theta_left: f64,
    pub theta_right: f64,
    pub drill_depth: f64,
    pub body_x: f64,
    pub body_y: f64,
    pub body_phi: f64,
    pub force_ratio_left: f64,
    pub force_ratio_center: f64,
    pub force_ratio_right: f64,
}

impl SimLogRecord {
    pub fn leg_forces(&self) -> [f64; 3] {
        [self.f_left, self.f_center, self.f_right]
    }

    pub fn ratios(&self) -> [f64; 3] {
        [self.force_ratio_left, self.force_ratio_center, self.force_ratio_right]
    }

    pub fn csv_row(&self) -> String {
        let values = [
            self.t,
            self.f_left,
            self.f_center,
            self.f_right,
            self.f_drill,
            self.l_left,
            self.l_center,
            self.l_right,
            self.theta_left,
            self.theta_right,
            self.drill_depth,
            self.body_x,
            self.body_y,
            self.body_phi,
            self.force_ratio_left,
            self.force_ratio_center,
            self.force_ratio_right,
        ];
        let mut row = sig9(values[0]);
        row.push(',');
        row.push_str(self.phase.token());
        for v in &values[1..] {
            row.push(',');
            row.push_str(&sig9(*v));
        }
        row
    }
}

pub fn write_log_csv<W: Write>(records: &[SimLogRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{LOG_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseTransition {
    pub phase: String,
    pub t_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PeakForces {
    pub left_n: f64,
    pub central_n: f64,
    pub right_n: f64,
    pub drill_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Ratios {
    pub left: f64,
    pub central: f64,
    pub right: f64,
}

/// Contact sanity measured over every physics step, not only logged ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactChecks {
    pub min_normal_force_n: f64,
    /// Largest `|tangential| − mu·normal` seen; ≤ 0 means always inside the cone.
    pub max_cone_excess_n: f64,
    pub max_leg_penetration_m: f64,
}

impl Default for ContactChecks {
    fn default() -> Self {
        Self {
            min_normal_force_n: 0.0,
            max_cone_excess_n: f64::NEG_INFINITY,
            max_leg_penetration_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub outcome: Outcome,
    pub end_time_s: f64,
    pub steps: u64,
    pub records: usize,
    pub transitions: Vec<PhaseTransition>,
    pub peak_forces: PeakForces,
    pub final_ratios: Ratios,
    pub contact_checks: ContactChecks,
}

impl ScenarioSummary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}
