//! Analytic-geometry global planner (AGP).
//!
//! The planner starts from the straight segment between start and end (the
//! *ideal path*), keeps only obstacles whose center projects onto that
//! segment and lies inside a strip of half-width `alpha * r_i`, and then
//! walks forward node by node. Each new node lies on the line through the
//! next obstacle's foot point that is perpendicular to the ideal path: the
//! straight-ahead foot of the current node when it is free, otherwise the
//! closest valid intersection of a tangent (from the current node to a
//! nearby safety circle) with that line. The walk ends as soon as the
//! segment to the end point crosses no safety zone. Nodes are densified into
//! evenly spaced waypoints.
//!
//! [`plan_3d`] lifts the same construction to spheres by slicing space with
//! planes through the ideal path.

mod planner;
mod spatial;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{polyline_length, Circle, Vec2};
use crate::scene::Obstacle;

pub use planner::{plan_circles, Bounds, PlanObstacle};
pub use spatial::{lift, plan_3d, project, slice_plane, Plan3d, PlaneSlice, SliceCircle, SliceOutcome, Sphere, SphereScene};

/// Contact tolerance for clearance checks, px.
pub const CLEARANCE_EPS: f64 = 1e-6;
pub const DEFAULT_ALPHA: f64 = 6.0;
pub const DEFAULT_SPACING: f64 = 20.0;
pub const DEFAULT_PLANES: usize = 16;

/// The straight start→end segment that seeds the planner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealLine {
    pub start: Vec2,
    pub end: Vec2,
    pub dir: Vec2,
}

impl IdealLine {
    pub fn new(start: Vec2, end: Vec2) -> Result<Self> {
        let dir = end - start;
        if !(dir.norm() > 0.0) {
            return Err(Error::InvalidArgument("start and end coincide".into()));
        }
        Ok(IdealLine { start, end, dir })
    }

    /// Slope `dy/dx`, absent for a vertical line.
    pub fn slope(&self) -> Option<f64> {
        (self.dir.x != 0.0).then(|| self.dir.y / self.dir.x)
    }

    pub fn length(&self) -> f64 {
        self.dir.norm()
    }

    /// Projection parameter of `p` (0 at start, 1 at end).
    pub fn param(&self, p: Vec2) -> f64 {
        (p - self.start).dot(self.dir) / self.dir.norm_sq()
    }

    pub fn at(&self, t: f64) -> Vec2 {
        self.start + self.dir * t
    }
}

/// Obstacles kept by the strip test, ordered by the x-coordinate of their
/// foot point (then y, then id).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PruneResult {
    pub retained: Vec<u32>,
    pub feet: Vec<Vec2>,
    pub t: Vec<f64>,
}

/// Keeps obstacle `i` iff its foot parameter lies in `[0, 1]` and its center
/// is within `alpha * r_i` of the foot.
pub fn prune_obstacles(obstacles: &[PlanObstacle], start: Vec2, end: Vec2, alpha: f64) -> Result<PruneResult> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be > 0, got {alpha}")));
    }
    let line = IdealLine::new(start, end)?;
    let mut kept: Vec<(u32, Vec2, f64)> = obstacles
        .iter()
        .filter_map(|o| in_strip(&line, &o.zone, alpha).map(|(foot, t)| (o.id, foot, t)))
        .collect();
    kept.sort_by(|a, b| a.1.x.total_cmp(&b.1.x).then(a.1.y.total_cmp(&b.1.y)).then(a.0.cmp(&b.0)));
    Ok(PruneResult {
        retained: kept.iter().map(|k| k.0).collect(),
        feet: kept.iter().map(|k| k.1).collect(),
        t: kept.iter().map(|k| k.2).collect(),
    })
}

/// Foot point and parameter of a zone kept by the strip test.
pub(crate) fn in_strip(line: &IdealLine, zone: &Circle, alpha: f64) -> Option<(Vec2, f64)> {
    let t = line.param(zone.center);
    let foot = line.at(t);
    ((0.0..=1.0).contains(&t) && zone.center.dist(foot) <= alpha * zone.radius).then_some((foot, t))
}

/// Slopes of the two tangents from `v` to the circle `(c, r)`:
/// `tan(theta ± asin(r/d))`. A vertical tangent is reported as an infinite
/// slope.
pub fn tangent_slopes(v: Vec2, c: Vec2, r: f64) -> Result<(f64, f64)> {
    let [a, b] = tangent_directions(v, c, r)?;
    let slope = |d: Vec2| if d.x.abs() < 1e-12 { f64::INFINITY } else { d.y / d.x };
    Ok((slope(a), slope(b)))
}

/// Unit directions of the two tangents from `v` to the circle `(c, r)`, at
/// angles `theta + asin(r/d)` and `theta - asin(r/d)`.
pub fn tangent_directions(v: Vec2, c: Vec2, r: f64) -> Result<[Vec2; 2]> {
    let d = v.dist(c);
    if !(d > r) {
        return Err(Error::TangentInfeasible { distance: d, radius: r });
    }
    let theta = (c - v).angle();
    let beta = (r / d).asin();
    Ok([Vec2::from_angle(theta + beta), Vec2::from_angle(theta - beta)])
}

/// Densifies a polyline: each segment gets `ceil(len / h) - 1` evenly spaced
/// interior points. Zero-length segments are dropped.
pub fn insert_waypoints(nodes: &[Vec2], spacing: f64) -> Vec<Vec2> {
    assert!(spacing > 0.0, "waypoint spacing must be > 0");
    let mut out = Vec::with_capacity(nodes.len() * 4);
    let Some(&first) = nodes.first() else {
        return out;
    };
    out.push(first);
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = a.dist(b);
        if len == 0.0 {
            continue;
        }
        let parts = ((len / spacing) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        for k in 1..parts {
            out.push(a.lerp(b, k as f64 / parts as f64));
        }
        out.push(b);
    }
    out
}

/// Per-obstacle additive zone inflation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InflationSpec(BTreeMap<u32, f64>);

impl InflationSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, id: u32, delta: f64) -> Result<()> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("inflation must be finite and >= 0, got {delta}")));
        }
        if delta == 0.0 {
            self.0.remove(&id);
        } else {
            self.0.insert(id, delta);
        }
        Ok(())
    }

    pub fn with(mut self, id: u32, delta: f64) -> Result<Self> {
        self.set(id, delta)?;
        Ok(self)
    }

    pub fn get(&self, id: u32) -> f64 {
        self.0.get(&id).copied().unwrap_or(0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }
}

/// Options for a 2D plan.
#[derive(Debug, Clone, PartialEq)]
pub struct AgpParams {
    pub alpha: f64,
    pub spacing: f64,
    pub inflation: InflationSpec,
    pub via: Vec<Vec2>,
    /// Box that primary nodes must stay inside; unbounded when absent.
    pub bounds: Option<Bounds>,
}

impl Default for AgpParams {
    fn default() -> Self {
        AgpParams {
            alpha: DEFAULT_ALPHA,
            spacing: DEFAULT_SPACING,
            inflation: InflationSpec::new(),
            via: Vec::new(),
            bounds: None,
        }
    }
}

impl AgpParams {
    /// Defaults with nodes confined to the arena `[0, W] x [0, H]`.
    pub fn within(width: f64, height: f64) -> Self {
        AgpParams { bounds: Some((Vec2::ZERO, Vec2::new(width, height))), ..Self::default() }
    }
}

/// Primary nodes, dense waypoints and total length of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    pub nodes: Vec<Vec2>,
    pub waypoints: Vec<Vec2>,
    pub length: f64,
}

impl PlannedPath {
    pub fn from_nodes(nodes: Vec<Vec2>, spacing: f64) -> Self {
        let waypoints = insert_waypoints(&nodes, spacing);
        let length = polyline_length(&waypoints);
        PlannedPath { nodes, waypoints, length }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("path serializes")
    }

    /// Smallest signed clearance between the waypoint polyline and the zones.
    pub fn min_clearance(&self, zones: &[Circle]) -> f64 {
        let mut best = f64::INFINITY;
        for w in self.waypoints.windows(2) {
            for z in zones {
                best = best.min(crate::geom::point_segment_distance(w[0], w[1], z.center) - z.radius);
            }
        }
        if self.waypoints.len() == 1 {
            for z in zones {
                best = best.min(z.clearance(self.waypoints[0]));
            }
        }
        best
    }
}

/// Zones of scene obstacles after inflation.
pub fn plan_obstacles(obstacles: &[Obstacle], inflation: &InflationSpec) -> Vec<PlanObstacle> {
    obstacles
        .iter()
        .map(|o| PlanObstacle { id: o.id, zone: Circle::new(o.center, o.safety_radius + inflation.get(o.id)) })
        .collect()
}

/// Plans from `start` to `end` through the scene's safety zones, honoring
/// per-obstacle inflation and visiting the via points in order.
pub fn plan_2d(obstacles: &[Obstacle], start: Vec2, end: Vec2, params: &AgpParams) -> Result<PlannedPath> {
    let zones = plan_obstacles(obstacles, &params.inflation);
    plan_with_via(&zones, start, end, params)
}

/// Sequential plans start→via₁→…→end, concatenated.
pub fn plan_with_via(zones: &[PlanObstacle], start: Vec2, end: Vec2, params: &AgpParams) -> Result<PlannedPath> {
    if !(params.spacing > 0.0) {
        return Err(Error::InvalidArgument(format!("waypoint spacing must be > 0, got {}", params.spacing)));
    }
    if start == end {
        return Err(Error::InvalidArgument("start and end coincide".into()));
    }
    for v in &params.via {
        planner::check_endpoint(zones, *v, "via")?;
    }
    let mut stops = Vec::with_capacity(params.via.len() + 2);
    stops.push(start);
    stops.extend(params.via.iter().copied());
    stops.push(end);
    stops.dedup();
    let mut nodes: Vec<Vec2> = vec![start];
    for leg in stops.windows(2) {
        let part = plan_circles(zones, leg[0], leg[1], params.alpha, params.bounds)?;
        nodes.extend_from_slice(&part[1..]);
    }
    Ok(PlannedPath::from_nodes(nodes, params.spacing))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(id: u32, x: f64, y: f64, r: f64) -> PlanObstacle {
        PlanObstacle { id, zone: Circle::new(Vec2::new(x, y), r) }
    }

    #[test]
    fn prune_examples() {
        let s = Vec2::new(0.0, 0.0);
        let e = Vec2::new(100.0, 0.0);
        let r = prune_obstacles(&[obs(0, 50.0, 0.0, 5.0)], s, e, 6.0).unwrap();
        assert_eq!(r.retained, vec![0]);
        assert_eq!(r.t, vec![0.5]);
        let r = prune_obstacles(&[obs(0, -20.0, 1.0, 5.0)], s, e, 6.0).unwrap();
        assert!(r.retained.is_empty());
        // strip of half-width 3 r: 20 <= 30 kept, 40 > 30 dropped
        let r = prune_obstacles(&[obs(1, 50.0, 20.0, 10.0), obs(3, 50.0, 40.0, 10.0)], s, e, 3.0).unwrap();
        assert_eq!(r.retained, vec![1]);
        assert!(prune_obstacles(&[], s, s, 3.0).is_err());
        assert!(prune_obstacles(&[], s, e, 0.0).is_err());
    }

    #[test]
    fn prune_orders_by_foot_x_then_y_then_id() {
        let s = Vec2::new(0.0, 0.0);
        let e = Vec2::new(100.0, 0.0);
        let r = prune_obstacles(&[obs(5, 60.0, 1.0, 5.0), obs(2, 30.0, 3.0, 5.0), obs(1, 60.0, -1.0, 5.0)], s, e, 6.0)
            .unwrap();
        assert_eq!(r.retained, vec![2, 1, 5]);
        // vertical ideal path: equal foot x, ordered by foot y
        let r = prune_obstacles(
            &[obs(7, 1.0, 80.0, 5.0), obs(4, -1.0, 20.0, 5.0)],
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 100.0),
            6.0,
        )
        .unwrap();
        assert_eq!(r.retained, vec![4, 7]);
    }

    #[test]
    fn tangent_examples() {
        let (m1, m2) = tangent_slopes(Vec2::ZERO, Vec2::new(10.0, 0.0), 5.0).unwrap();
        let t30 = (30f64).to_radians().tan();
        assert!((m1 - t30).abs() < 1e-12 && (m2 + t30).abs() < 1e-12);
        let (m1, m2) = tangent_slopes(Vec2::ZERO, Vec2::new(0.0, 10.0), 5.0).unwrap();
        assert!((m1 - (120f64).to_radians().tan()).abs() < 1e-9);
        assert!((m2 - (60f64).to_radians().tan()).abs() < 1e-9);
        assert!(matches!(tangent_slopes(Vec2::ZERO, Vec2::new(3.0, 0.0), 5.0), Err(Error::TangentInfeasible { .. })));
        assert!(tangent_slopes(Vec2::ZERO, Vec2::new(5.0, 0.0), 5.0).is_err());
        let (a, b) = tangent_slopes(Vec2::ZERO, Vec2::new(10.0, 10.0), 10.0).unwrap();
        assert!(a.is_infinite());
        assert!(b.abs() < 1e-12);
    }

    #[test]
    fn waypoint_examples() {
        let w = insert_waypoints(&[Vec2::ZERO, Vec2::new(10.0, 0.0)], 5.0);
        assert_eq!(w, vec![Vec2::ZERO, Vec2::new(5.0, 0.0), Vec2::new(10.0, 0.0)]);
        let w = insert_waypoints(&[Vec2::ZERO, Vec2::new(3.0, 4.0)], 10.0);
        assert_eq!(w, vec![Vec2::ZERO, Vec2::new(3.0, 4.0)]);
    }

    #[test]
    fn inflation_rejects_negative() {
        let mut i = InflationSpec::new();
        assert!(i.set(1, -1.0).is_err());
        i.set(1, 150.0).unwrap();
        assert_eq!(i.get(1), 150.0);
        assert_eq!(i.get(2), 0.0);
    }

    #[test]
    fn ideal_line_slope() {
        let l = IdealLine::new(Vec2::ZERO, Vec2::new(2.0, 4.0)).unwrap();
        assert_eq!(l.slope(), Some(2.0));
        let v = IdealLine::new(Vec2::ZERO, Vec2::new(0.0, 4.0)).unwrap();
        assert_eq!(v.slope(), None);
    }
}
