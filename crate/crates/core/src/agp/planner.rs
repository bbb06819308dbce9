use std::collections::{HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::geom::{segment_hits_circle, Circle, Vec2};

use super::{in_strip, IdealLine};

/// A safety zone as the planner sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanObstacle {
    pub id: u32,
    pub zone: Circle,
}

impl PlanObstacle {
    pub fn new(id: u32, center: Vec2, radius: f64) -> Self {
        PlanObstacle { id, zone: Circle::new(center, radius) }
    }
}

/// Segments may graze a zone by this much; tangent lines touch exactly.
pub(crate) const TOUCH_TOL: f64 = 1e-7;
const MAX_EXPANSIONS: usize = 3_000;
const MAX_TARGETS_PER_LINE: usize = 8;

pub(crate) fn check_endpoint(zones: &[PlanObstacle], p: Vec2, which: &'static str) -> Result<()> {
    if !p.is_finite() {
        return Err(Error::InvalidArgument(format!("{which} point is not finite")));
    }
    match zones.iter().find(|o| p.dist(o.zone.center) < o.zone.radius - TOUCH_TOL) {
        Some(o) => Err(Error::EndpointInZone { which, point: p, obstacle: o.id }),
        None => Ok(()),
    }
}

fn blocked(zones: &[PlanObstacle], a: Vec2, b: Vec2) -> bool {
    zones.iter().any(|o| segment_hits_circle(a, b, o.zone.center, o.zone.radius, TOUCH_TOL))
}

/// Tangent directions from `p`, tolerating `p` on the boundary (the tangent
/// at `p` itself).
fn tangents(p: Vec2, zone: &Circle) -> [Vec2; 2] {
    let d = p.dist(zone.center);
    let theta = (zone.center - p).angle();
    let beta = if d > zone.radius { (zone.radius / d).asin() } else { std::f64::consts::FRAC_PI_2 };
    [Vec2::from_angle(theta + beta), Vec2::from_angle(theta - beta)]
}

struct Sweep<'a> {
    zones: &'a [PlanObstacle],
    start: Vec2,
    axis: Vec2,
    /// Retained obstacle indices with their foot coordinate along the axis,
    /// ordered by (coordinate, id).
    feet: Vec<(usize, f64)>,
    length: f64,
    eps: f64,
    bounds: Option<Bounds>,
}

impl Sweep<'_> {
    fn coord(&self, p: Vec2) -> f64 {
        (p - self.start).dot(self.axis)
    }

    /// Distinct perpendicular lines strictly ahead of `u`, ending with the
    /// line through the end point.
    fn lines_ahead(&self, u: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &(_, fu) in &self.feet {
            if fu > u + self.eps && out.last().is_none_or(|&l| fu > l + self.eps) && fu < self.length - self.eps {
                out.push(fu);
            }
        }
        if self.length > u + self.eps {
            out.push(self.length);
        }
        out
    }

    fn retained_hits(&self, a: Vec2, b: Vec2) -> impl Iterator<Item = usize> + '_ {
        self.feet
            .iter()
            .map(|&(i, _)| i)
            .filter(move |&i| segment_hits_circle(a, b, self.zones[i].zone.center, self.zones[i].zone.radius, TOUCH_TOL))
    }

    fn inside_bounds(&self, q: Vec2) -> bool {
        self.bounds.is_none_or(|(lo, hi)| q.x >= lo.x && q.y >= lo.y && q.x <= hi.x && q.y <= hi.y)
    }

    /// Valid nodes on the perpendicular line at `uj`, closest first.
    fn candidates_on_line(&self, p: Vec2, up: f64, uj: f64) -> Vec<Vec2> {
        let du = uj - up;
        let foot = p + self.axis * du;
        let mut found: Vec<(f64, Vec2)> = Vec::new();
        if self.inside_bounds(foot) && !blocked(self.zones, p, foot) {
            found.push((p.dist(foot), foot));
        }

        let mut nearest: Vec<(f64, usize)> = self
            .feet
            .iter()
            .filter(|&&(_, fu)| fu > up + self.eps)
            .map(|&(i, _)| (p.dist(self.zones[i].zone.center), i))
            .collect();
        nearest.sort_by(|a, b| a.0.total_cmp(&b.0).then(self.zones[a.1].id.cmp(&self.zones[b.1].id)));
        let mut queue: VecDeque<usize> = nearest.iter().take(2).map(|n| n.1).collect();
        queue.extend(self.retained_hits(p, foot));

        let mut tried: Vec<usize> = Vec::new();
        while let Some(k) = queue.pop_front() {
            if tried.contains(&k) {
                continue;
            }
            if tried.len() >= MAX_TARGETS_PER_LINE {
                break;
            }
            tried.push(k);
            for dir in tangents(p, &self.zones[k].zone) {
                let along = dir.dot(self.axis);
                if along <= 1e-12 {
                    continue;
                }
                let q = p + dir * (du / along);
                if !q.is_finite() || !self.inside_bounds(q) {
                    continue;
                }
                if blocked(self.zones, p, q) {
                    queue.extend(self.retained_hits(p, q).filter(|i| !tried.contains(i)));
                    continue;
                }
                found.push((p.dist(q), q));
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.x.total_cmp(&b.1.x)).then(a.1.y.total_cmp(&b.1.y)));
        found.dedup_by(|a, b| a.1.dist(b.1) <= self.eps);
        found.into_iter().map(|f| f.1).collect()
    }
}

/// A node on the search stack with its lazily generated successors.
struct Frame {
    p: Vec2,
    up: f64,
    lines: Vec<f64>,
    next_line: usize,
    /// Candidates of the current line, farthest first (popped from the end).
    pending: Vec<Vec2>,
}

impl Frame {
    fn new(sweep: &Sweep, p: Vec2, up: f64) -> Self {
        Frame { p, up, lines: sweep.lines_ahead(up), next_line: 0, pending: Vec::new() }
    }

    fn next_child(&mut self, sweep: &Sweep) -> Option<(Vec2, f64)> {
        loop {
            if let Some(q) = self.pending.pop() {
                return Some((q, self.lines[self.next_line - 1]));
            }
            let &uj = self.lines.get(self.next_line)?;
            self.next_line += 1;
            self.pending = sweep.candidates_on_line(self.p, self.up, uj);
            self.pending.reverse();
        }
    }
}

/// Axis-aligned box `(min, max)` that nodes must stay inside.
pub type Bounds = (Vec2, Vec2);

/// Primary nodes from `start` to `end` around `zones` (no via points, no
/// densification).
///
/// Nodes advance monotonically along the start→end axis. From each node the
/// planner stops if the segment to `end` crosses no zone; otherwise it moves
/// to a node on the first perpendicular line ahead (through a retained
/// obstacle's foot, or through `end`) that holds one, preferring the
/// straight-ahead foot and then the closest tangent intersection. A node is
/// valid when the segment reaching it crosses no zone at all, retained or
/// not. When a node has no successor the search backs up and tries the next
/// candidate, so the first path found is the greedy one whenever the greedy
/// walk succeeds.
pub fn plan_circles(zones: &[PlanObstacle], start: Vec2, end: Vec2, alpha: f64, bounds: Option<Bounds>) -> Result<Vec<Vec2>> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be > 0, got {alpha}")));
    }
    let line = IdealLine::new(start, end)?;
    check_endpoint(zones, start, "start")?;
    check_endpoint(zones, end, "end")?;

    let length = line.length();
    let mut feet: Vec<(usize, f64)> = zones
        .iter()
        .enumerate()
        .filter_map(|(i, o)| in_strip(&line, &o.zone, alpha).map(|(_, t)| (i, t * length)))
        .collect();
    feet.sort_by(|a, b| a.1.total_cmp(&b.1).then(zones[a.0].id.cmp(&zones[b.0].id)));
    let sweep = Sweep { zones, start, axis: line.dir / length, feet, length, eps: 1e-9 * length.max(1.0), bounds };

    let key = |q: Vec2| ((q.x * 1e6).round() as i64, (q.y * 1e6).round() as i64);
    let mut seen: HashSet<(i64, i64)> = HashSet::new();
    let mut stack = vec![Frame::new(&sweep, start, 0.0)];
    let mut deepest: Vec<Vec2> = vec![start];
    let mut expanded = 0usize;
    while let Some(top) = stack.last_mut() {
        if !blocked(zones, top.p, end) {
            let mut nodes: Vec<Vec2> = stack.iter().map(|f| f.p).collect();
            nodes.push(end);
            return Ok(nodes);
        }
        match top.next_child(&sweep) {
            Some((q, uj)) => {
                if !seen.insert(key(q)) {
                    continue;
                }
                expanded += 1;
                if expanded > MAX_EXPANSIONS {
                    return Err(Error::PlanFailed { reason: format!("search limit of {MAX_EXPANSIONS} nodes reached"), nodes: deepest });
                }
                let up = uj.max(sweep.coord(q));
                stack.push(Frame::new(&sweep, q, up));
                if stack.len() > deepest.len() {
                    deepest = stack.iter().map(|f| f.p).collect();
                }
            }
            None => {
                stack.pop();
            }
        }
    }
    Err(Error::PlanFailed { reason: "no valid node on any line ahead".into(), nodes: deepest })
}
