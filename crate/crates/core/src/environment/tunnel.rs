use crate::error::{Error, Result};
use crate::geometry::{cross, perp, Vec2};

/// Simple polygon the robot operates inside. Stored counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct TunnelCrossSection {
    vertices: Vec<Vec2>,
}

impl TunnelCrossSection {
    /// Validates the polygon. Clockwise input is reversed into counter-clockwise order.
    pub fn new(mut vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Geometry(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(Error::Geometry("polygon has non-finite vertices".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            if (vertices[(i + 1) % n] - vertices[i]).norm() < 1e-12 {
                return Err(Error::Geometry(format!("edge {i} has zero length")));
            }
        }
        let area = signed_area(&vertices);
        if area.abs() < 1e-12 {
            return Err(Error::Geometry("polygon has zero area".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a0, a1) = (vertices[i], vertices[(i + 1) % n]);
                let (b0, b1) = (vertices[j], vertices[(j + 1) % n]);
                let bad = if adjacent {
                    // Adjacent edges may only share their common vertex.
                    let (shared, a_other, b_other) = if j == i + 1 { (a1, a0, b1) } else { (a0, a1, b0) };
                    let ea = a_other - shared;
                    let eb = b_other - shared;
                    cross(ea, eb).abs() < 1e-12 * ea.norm() * eb.norm() && ea.dot(&eb) > 0.0
                } else {
                    segments_touch(a0, a1, b0, b1)
                };
                if bad {
                    return Err(Error::Geometry(format!(
                        "polygon is self-intersecting (edges {i} and {j})"
                    )));
                }
            }
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Unit normal of edge `i` pointing into the interior.
    pub fn inward_normal(&self, i: usize) -> Vec2 {
        let n = self.vertices.len();
        let e = self.vertices[(i + 1) % n] - self.vertices[i];
        perp(e).normalize()
    }

    /// Even-odd containment. Points on the boundary may land either way.
    pub fn contains(&self, p: Vec2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Closest boundary point, the edge it lies on, and the distance to it.
    pub fn nearest_boundary_point(&self, p: Vec2) -> (Vec2, usize, f64) {
        let mut best = (self.vertices[0], 0, f64::INFINITY);
        for (i, (a, b)) in self.edges().enumerate() {
            let q = closest_on_segment(p, a, b);
            let d = (p - q).norm();
            if d < best.2 {
                best = (q, i, d);
            }
        }
        best
    }
}

fn signed_area(v: &[Vec2]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>()
}

fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let e = b - a;
    let t = ((p - a).dot(&e) / e.norm_squared()).clamp(0.0, 1.0);
    a + t * e
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    cross(b - a, c - a)
}

fn on_segment(p: Vec2, a: Vec2, b: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_touch(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> bool {
    let d1 = orient(b0, b1, a0);
    let d2 = orient(b0, b1, a1);
    let d3 = orient(a0, a1, b0);
    let d4 = orient(a0, a1, b1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(a0, b0, b1))
        || (d2 == 0.0 && on_segment(a1, b0, b1))
        || (d3 == 0.0 && on_segment(b0, a0, a1))
        || (d4 == 0.0 && on_segment(b1, a0, a1))
}

/// How far a point has crossed the tunnel wall, and the wall normal pointing
/// back into the interior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penetration {
    pub depth: f64,
    pub normal: Vec2,
}

pub fn signed_penetration(tip: Vec2, tunnel: &TunnelCrossSection) -> Penetration {
    let (q, edge, dist) = tunnel.nearest_boundary_point(tip);
    if tunnel.contains(tip) || dist < 1e-15 {
        return Penetration {
            depth: 0.0,
            normal: tunnel.inward_normal(edge),
        };
    }
    Penetration {
        depth: dist,
        normal: (q - tip) / dist,
    }
}
