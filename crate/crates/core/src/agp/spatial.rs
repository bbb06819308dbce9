use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{polyline_length_3d, Circle, Vec2, Vec3};

use super::planner::{plan_circles, PlanObstacle};
use super::insert_waypoints;

/// Static spherical obstacle; `radius` is the body radius, the robot radius
/// is added when planning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

/// Cross-section of an inflated sphere by a slicing plane, in plane
/// coordinates `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceCircle {
    pub sphere: usize,
    pub center: Vec2,
    pub radius: f64,
    /// Signed offset of the sphere center from the plane.
    pub offset: f64,
    /// Whether the center projects between start and end (`0 <= u <= L`).
    pub in_span: bool,
}

/// One plane of the family through the start→end axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSlice {
    pub index: usize,
    pub angle: f64,
    pub e1: Vec3,
    pub e2: Vec3,
    pub normal: Vec3,
    pub circles: Vec<SliceCircle>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SliceOutcome {
    Planned { length: f64 },
    Failed { reason: String },
}

/// Result of a 3D plan: lifted path plus what happened on every slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan3d {
    pub nodes: Vec<Vec3>,
    pub waypoints: Vec<Vec3>,
    pub length: f64,
    pub plane: usize,
    pub outcomes: Vec<SliceOutcome>,
}

#[derive(Serialize)]
struct Plan3dDoc<'a> {
    nodes: &'a [Vec3],
    waypoints: &'a [Vec3],
    length: f64,
    plane: usize,
}

impl Plan3d {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&Plan3dDoc { nodes: &self.nodes, waypoints: &self.waypoints, length: self.length, plane: self.plane })
            .expect("path serializes")
    }
}

/// Some unit vector orthogonal to `d` (unit).
fn orthonormal(d: Vec3) -> Vec3 {
    let (ax, ay, az) = (d.x.abs(), d.y.abs(), d.z.abs());
    let helper = if ax <= ay && ax <= az {
        Vec3::new(1.0, 0.0, 0.0)
    } else if ay <= az {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(0.0, 0.0, 1.0)
    };
    d.cross(helper).normalized()
}

/// Plane `index` of `n_planes`, rotated by `2π·index/n` about the axis, with
/// the spheres it cuts.
pub fn slice_plane(
    start: Vec3,
    end: Vec3,
    index: usize,
    n_planes: usize,
    spheres: &[Sphere],
    robot_radius: f64,
) -> Result<PlaneSlice> {
    if n_planes == 0 {
        return Err(Error::InvalidArgument("need at least one plane".into()));
    }
    let d = end - start;
    let len = d.norm();
    if !(len > 0.0) {
        return Err(Error::InvalidArgument("start and end coincide".into()));
    }
    let e1 = d * (1.0 / len);
    let q0 = orthonormal(e1);
    let angle = std::f64::consts::TAU * index as f64 / n_planes as f64;
    let e2 = (q0 * angle.cos() + e1.cross(q0) * angle.sin()).normalized();
    let normal = e1.cross(e2);
    let circles = spheres
        .iter()
        .enumerate()
        .filter_map(|(k, s)| {
            let r3 = s.radius + robot_radius;
            let rel = s.center - start;
            let offset = rel.dot(normal);
            let r_int_sq = r3 * r3 - offset * offset;
            (r_int_sq > 0.0).then(|| {
                let u = rel.dot(e1);
                SliceCircle {
                    sphere: k,
                    center: Vec2::new(u, rel.dot(e2)),
                    radius: r_int_sq.sqrt(),
                    offset,
                    in_span: (0.0..=len).contains(&u),
                }
            })
        })
        .collect();
    Ok(PlaneSlice { index, angle, e1, e2, normal, circles })
}

/// Plane coordinates of a point (its projection onto the slice).
pub fn project(slice: &PlaneSlice, start: Vec3, p: Vec3) -> Vec2 {
    let rel = p - start;
    Vec2::new(rel.dot(slice.e1), rel.dot(slice.e2))
}

/// Point of the slice at plane coordinates `uv`.
pub fn lift(slice: &PlaneSlice, start: Vec3, uv: Vec2) -> Vec3 {
    start + slice.e1 * uv.x + slice.e2 * uv.y
}

/// Plans on `n_planes` planes through the start→end axis and lifts the
/// shortest slice path back to 3D.
///
/// Each slice sees every sphere it cuts; the in-plane planner prunes to the
/// ones whose centers project onto the axis segment but validates against
/// all of them. Ties in slice length go to the lowest plane index.
pub fn plan_3d(
    start: Vec3,
    end: Vec3,
    spheres: &[Sphere],
    robot_radius: f64,
    n_planes: usize,
    spacing: f64,
    alpha: f64,
) -> Result<Plan3d> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument(format!("waypoint spacing must be > 0, got {spacing}")));
    }
    for (which, p) in [("start", start), ("end", end)] {
        if let Some(k) = spheres.iter().position(|s| p.dist(s.center) < s.radius + robot_radius) {
            return Err(Error::EndpointInZone { which, point: Vec2::new(p.x, p.y), obstacle: k as u32 });
        }
    }
    let len = (end - start).norm();
    let mut best: Option<(f64, PlaneSlice, Vec<Vec2>)> = None;
    let mut outcomes = Vec::with_capacity(n_planes);
    for i in 0..n_planes {
        let slice = slice_plane(start, end, i, n_planes, spheres, robot_radius)?;
        let zones: Vec<PlanObstacle> = slice
            .circles
            .iter()
            .map(|c| PlanObstacle { id: c.sphere as u32, zone: Circle::new(c.center, c.radius) })
            .collect();
        match plan_circles(&zones, Vec2::ZERO, Vec2::new(len, 0.0), alpha, None) {
            Ok(nodes) => {
                let l: f64 = nodes.windows(2).map(|w| w[0].dist(w[1])).sum();
                outcomes.push(SliceOutcome::Planned { length: l });
                if best.as_ref().is_none_or(|b| l < b.0) {
                    best = Some((l, slice, nodes));
                }
            }
            Err(e) => outcomes.push(SliceOutcome::Failed { reason: e.to_string() }),
        }
    }
    let Some((_, slice, nodes2)) = best else {
        let reasons: Vec<String> = outcomes
            .iter()
            .enumerate()
            .map(|(i, o)| match o {
                SliceOutcome::Failed { reason } => format!("plane {i}: {reason}"),
                SliceOutcome::Planned { .. } => unreachable!(),
            })
            .collect();
        return Err(Error::PlanFailed { reason: format!("every slice failed [{}]", reasons.join("; ")), nodes: vec![] });
    };
    let lift_all = |pts: &[Vec2]| -> Vec<Vec3> {
        let mut out: Vec<Vec3> = pts.iter().map(|uv| lift(&slice, start, *uv)).collect();
        out[0] = start;
        *out.last_mut().unwrap() = end;
        out
    };
    let nodes = lift_all(&nodes2);
    let waypoints = lift_all(&insert_waypoints(&nodes2, spacing));
    let length = polyline_length_3d(&waypoints);
    Ok(Plan3d { nodes, waypoints, length, plane: slice.index, outcomes })
}

/// A 3D planning problem: spheres to avoid, a start, an end and the robot
/// radius that every sphere is grown by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereScene {
    pub start: Vec3,
    pub end: Vec3,
    pub robot_radius: f64,
    pub spheres: Vec<Sphere>,
}

impl SphereScene {
    /// `n` spheres of radius 30..80 crowding the middle of a 1000 px cube,
    /// with the start and end on opposite faces and kept clear.
    pub fn random(n: usize, seed: u64) -> SphereScene {
        let mut rng = crate::rng::Prng::new(seed);
        let start = Vec3::new(0.0, 500.0, 500.0);
        let end = Vec3::new(1000.0, 500.0, 500.0);
        let robot_radius = 10.0;
        let mut spheres = Vec::with_capacity(n);
        while spheres.len() < n {
            let center = Vec3::new(rng.uniform(100.0, 900.0), rng.uniform(300.0, 700.0), rng.uniform(300.0, 700.0));
            let radius = rng.uniform(30.0, 80.0);
            if center.dist(start) > radius + robot_radius && center.dist(end) > radius + robot_radius {
                spheres.push(Sphere { center, radius });
            }
        }
        SphereScene { start, end, robot_radius, spheres }
    }

    pub fn from_json(text: &str) -> Result<SphereScene> {
        let scene: SphereScene = serde_json::from_str(text).map_err(|e| Error::Parse(format!("sphere scene: {e}")))?;
        if !(scene.robot_radius >= 0.0) || scene.spheres.iter().any(|s| !(s.radius > 0.0)) {
            return Err(Error::InvalidArgument("radii must be positive".into()));
        }
        Ok(scene)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<SphereScene> {
        SphereScene::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn plan(&self, n_planes: usize, spacing: f64, alpha: f64) -> Result<Plan3d> {
        plan_3d(self.start, self.end, &self.spheres, self.robot_radius, n_planes, spacing, alpha)
    }
}
