//! Grid-sampled body workspace for fixed anchor points.
//!
//! A candidate body position `p` is feasible when every anchor lies inside its
//! leg's annulus around `p`, and, with the heading fixed by the direction from
//! `p` to the central anchor, each side anchor's body-frame bearing lies inside
//! that leg's rotation arc.

use serde::{Deserialize, Serialize};

use super::{LegId, RobotParams, ANGLE_SLACK};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::format::sig9;
use crate::geometry::{angle_in_range, wrap_angle, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "empty")]
    Empty,
    #[serde(rename = "single-point")]
    SinglePoint,
    #[serde(rename = "line-like")]
    LineLike,
    #[serde(rename = "area")]
    Area,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Empty => "empty",
            Classification::SinglePoint => "single-point",
            Classification::LineLike => "line-like",
            Classification::Area => "area",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceRegion {
    pub resolution: f64,
    /// Row-major (y, then x) grid order.
    pub feasible_points: Vec<Vec2>,
    pub classification: Classification,
}

/// JSON sidecar written next to the workspace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceSidecar {
    pub classification: Classification,
    pub resolution_m: f64,
    pub count: usize,
}

impl WorkspaceRegion {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x_m,y_m\n");
        for p in &self.feasible_points {
            out.push_str(&sig9(p.x));
            out.push(',');
            out.push_str(&sig9(p.y));
            out.push('\n');
        }
        out
    }

    pub fn sidecar(&self) -> WorkspaceSidecar {
        WorkspaceSidecar {
            classification: self.classification,
            resolution_m: self.resolution,
            count: self.feasible_points.len(),
        }
    }

    /// Extents along the major and minor principal axes.
    pub fn principal_extents(&self) -> (f64, f64) {
        principal_extents(&self.feasible_points)
    }
}

pub fn is_feasible(p: Vec2, anchors: &[Vec2; 3], params: &RobotParams) -> bool {
    if !anchors.iter().all(|a| params.extension_ok((a - p).norm())) {
        return false;
    }
    let ahead = anchors[LegId::Central.index()] - p;
    if ahead.norm() == 0.0 {
        return false;
    }
    let heading = ahead.y.atan2(ahead.x);
    LegId::SIDES.iter().all(|&leg| {
        let v = anchors[leg.index()] - p;
        let bearing = wrap_angle(v.y.atan2(v.x) - heading);
        let (lo, hi) = params.rotation_limits(leg).expect("side leg");
        angle_in_range(bearing, lo, hi, ANGLE_SLACK)
    })
}

pub fn workspace_region(anchors: &[Vec2; 3], params: &RobotParams, resolution: f64) -> Result<WorkspaceRegion> {
    workspace_region_with(anchors, params, resolution, Execution::default())
}

pub fn workspace_region_with(
    anchors: &[Vec2; 3],
    params: &RobotParams,
    resolution: f64,
    exec: Execution,
) -> Result<WorkspaceRegion> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::Domain(format!("resolution must be positive, got {resolution}")));
    }
    for i in 0..3 {
        for j in i + 1..3 {
            if anchors[i] == anchors[j] {
                return Err(Error::Domain("anchors must be pairwise distinct".into()));
            }
        }
    }

    // Feasible points lie inside every outer disk, so the intersection of the
    // three disk bounding boxes is enough. Grid nodes sit on integer multiples
    // of the resolution.
    let r = params.l_max;
    let lo = anchors.iter().fold(Vec2::repeat(f64::NEG_INFINITY), |m, a| {
        Vec2::new(m.x.max(a.x - r), m.y.max(a.y - r))
    });
    let hi = anchors.iter().fold(Vec2::repeat(f64::INFINITY), |m, a| {
        Vec2::new(m.x.min(a.x + r), m.y.min(a.y + r))
    });
    let index_range = |lo: f64, hi: f64| {
        let a = (lo / resolution - 1e-9).ceil() as i64;
        let b = (hi / resolution + 1e-9).floor() as i64;
        a..b + 1
    };
    let (cols, rows) = (index_range(lo.x, hi.x), index_range(lo.y, hi.y));

    let per_row = exec.map_range(rows, |j| {
        let y = j as f64 * resolution;
        cols.clone()
            .map(|i| Vec2::new(i as f64 * resolution, y))
            .filter(|&p| is_feasible(p, anchors, params))
            .collect::<Vec<_>>()
    });
    let feasible_points: Vec<Vec2> = per_row.into_iter().flatten().collect();
    let classification = classify(&feasible_points, resolution);
    Ok(WorkspaceRegion {
        resolution,
        feasible_points,
        classification,
    })
}

fn principal_extents(points: &[Vec2]) -> (f64, f64) {
    if points.len() < 2 {
        return (0.0, 0.0);
    }
    let n = points.len() as f64;
    let mean = points.iter().fold(Vec2::zeros(), |s, p| s + p) / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in points {
        let d = p - mean;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let major = Vec2::new(angle.cos(), angle.sin());
    let minor = Vec2::new(-major.y, major.x);
    let extent = |axis: Vec2| {
        let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            let s = axis.dot(&(p - mean));
            (lo.min(s), hi.max(s))
        });
        hi - lo
    };
    let (a, b) = (extent(major), extent(minor));
    (a.max(b), a.min(b))
}

/// Shape class of a point set sampled at `resolution`.
pub fn classify(points: &[Vec2], resolution: f64) -> Classification {
    if points.is_empty() {
        return Classification::Empty;
    }
    let slack = 1e-9 * resolution.max(1.0);
    let (major, minor) = principal_extents(points);
    let thin = 2.0 * resolution + slack;
    if major <= resolution + slack {
        Classification::SinglePoint
    } else if minor <= thin && major > thin {
        Classification::LineLike
    } else {
        Classification::Area
    }
}
