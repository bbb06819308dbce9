//! Scene representation: obstacles with safety zones, vessel boundaries,
//! flow, start and targets, plus seeded arena generation and the JSON
//! document format.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::geom::{Circle, Vec2};
use crate::rng::Prng;

pub const SCENE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleKind {
    Static,
    Dynamic,
    #[serde(rename = "boundary")]
    BoundaryCell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub id: u32,
    pub center: Vec2,
    /// Physical radius of the body.
    pub radius: f64,
    /// Radius of the safety zone around the body (robot radius included).
    pub safety_radius: f64,
    /// Displacement per frame.
    pub velocity: Vec2,
    pub kind: ObstacleKind,
}

impl Obstacle {
    pub fn new_static(id: u32, center: Vec2, radius: f64, safety_radius: f64) -> Self {
        Obstacle { id, center, radius, safety_radius, velocity: Vec2::ZERO, kind: ObstacleKind::Static }
    }

    pub fn zone(&self) -> Circle {
        Circle::new(self.center, self.safety_radius)
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

/// Mean channel flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowModel {
    /// Mean flow speed, µm/s.
    #[serde(rename = "u")]
    pub u_flow: f64,
    #[serde(rename = "dir")]
    pub direction: Vec2,
    /// Wall-coupling coefficient in (0, 1].
    pub alpha_c: f64,
}

impl FlowModel {
    pub fn new(u_flow: f64, direction: Vec2, alpha_c: f64) -> Result<Self> {
        let f = FlowModel { u_flow, direction: direction.normalized(), alpha_c };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        if !(self.u_flow >= 0.0 && self.u_flow.is_finite()) {
            return Err(Error::InvalidArgument(format!("flow speed must be >= 0, got {}", self.u_flow)));
        }
        if !(self.alpha_c > 0.0 && self.alpha_c <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha_c must be in (0, 1], got {}", self.alpha_c)));
        }
        if (self.direction.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument("flow direction must be a unit vector".into()));
        }
        Ok(())
    }
}

/// A target that moves by a fixed displacement each frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub pos: Vec2,
    #[serde(default)]
    pub vel: Vec2,
}

impl Target {
    pub fn fixed(pos: Vec2) -> Self {
        Target { pos, vel: Vec2::ZERO }
    }
}

/// Robot body carried by a scene file; simulation configs fall back to their
/// own values when absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub radius: f64,
    /// Displacement per frame.
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    pub obstacles: Vec<Obstacle>,
    pub boundaries: Vec<Vec<Vec2>>,
    pub flow: Option<FlowModel>,
    pub start: Option<Vec2>,
    pub targets: Vec<Target>,
    pub robot: Option<RobotSpec>,
}

impl Scene {
    pub fn new(width: u32, height: u32) -> Self {
        Scene {
            width,
            height,
            seed: 0,
            obstacles: Vec::new(),
            boundaries: Vec::new(),
            flow: None,
            start: None,
            targets: Vec::new(),
            robot: None,
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= self.width as f64 && p.y <= self.height as f64
    }

    pub fn obstacle(&self, id: u32) -> Option<&Obstacle> {
        self.obstacles.iter().find(|o| o.id == id)
    }

    pub fn next_id(&self) -> u32 {
        self.obstacles.iter().map(|o| o.id + 1).max().unwrap_or(0)
    }

    pub fn zones(&self) -> Vec<Circle> {
        self.obstacles.iter().map(Obstacle::zone).collect()
    }

    /// Checks the scene invariants: finite values, centers in bounds,
    /// unique ids and `safety_radius >= radius`.
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("scene dimensions must be positive".into()));
        }
        let mut ids = HashSet::with_capacity(self.obstacles.len());
        for o in &self.obstacles {
            if !ids.insert(o.id) {
                return Err(Error::InvalidArgument(format!("duplicate obstacle id {}", o.id)));
            }
            if !o.center.is_finite() || !o.velocity.is_finite() || !o.radius.is_finite() || !o.safety_radius.is_finite() {
                return Err(Error::InvalidArgument(format!("obstacle {} has non-finite fields", o.id)));
            }
            if !self.contains(o.center) {
                return Err(Error::InvalidArgument(format!("obstacle {} center {:?} outside bounds", o.id, o.center)));
            }
            if o.radius < 0.0 || o.safety_radius <= 0.0 || o.safety_radius < o.radius {
                return Err(Error::InvalidArgument(format!(
                    "obstacle {} radii invalid (r={}, safety_r={})",
                    o.id, o.radius, o.safety_radius
                )));
            }
        }
        if let Some(f) = &self.flow {
            f.validate()?;
        }
        if let Some(r) = &self.robot {
            if !(r.radius >= 0.0 && r.speed > 0.0 && r.radius.is_finite() && r.speed.is_finite()) {
                return Err(Error::InvalidArgument(format!("robot radius {} / speed {} invalid", r.radius, r.speed)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SceneDoc::from(self)).expect("scene serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&SceneDoc::from(self)).expect("scene serializes")
    }

    pub fn from_json(text: &str) -> Result<Scene> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: SceneDoc = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            Error::Parse(format!(
                "scene document at line {} column {} (field `{}`): {}",
                inner.line(),
                inner.column(),
                e.path(),
                inner
            ))
        })?;
        if doc.version == 0 || doc.version > SCENE_VERSION {
            return Err(Error::Parse(format!("unsupported scene version {}", doc.version)));
        }
        let scene = Scene::try_from(doc)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_pretty())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scene> {
        let text = std::fs::read_to_string(path)?;
        Scene::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct ObstacleDoc {
    id: u32,
    cx: f64,
    cy: f64,
    r: f64,
    safety_r: f64,
    #[serde(default)]
    vx: f64,
    #[serde(default)]
    vy: f64,
    kind: ObstacleKind,
}

#[derive(Serialize, Deserialize)]
struct SceneDoc {
    version: u32,
    width: u32,
    height: u32,
    #[serde(default)]
    seed: u64,
    obstacles: Vec<ObstacleDoc>,
    #[serde(default)]
    boundaries: Vec<Vec<Vec2>>,
    #[serde(default)]
    flow: Option<FlowModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<Vec2>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    targets: Vec<Target>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    robot: Option<RobotSpec>,
}

impl From<&Scene> for SceneDoc {
    fn from(s: &Scene) -> Self {
        SceneDoc {
            version: SCENE_VERSION,
            width: s.width,
            height: s.height,
            seed: s.seed,
            obstacles: s
                .obstacles
                .iter()
                .map(|o| ObstacleDoc {
                    id: o.id,
                    cx: o.center.x,
                    cy: o.center.y,
                    r: o.radius,
                    safety_r: o.safety_radius,
                    vx: o.velocity.x,
                    vy: o.velocity.y,
                    kind: o.kind,
                })
                .collect(),
            boundaries: s.boundaries.clone(),
            flow: s.flow,
            start: s.start,
            targets: s.targets.clone(),
            robot: s.robot,
        }
    }
}

impl TryFrom<SceneDoc> for Scene {
    type Error = Error;

    fn try_from(d: SceneDoc) -> Result<Scene> {
        Ok(Scene {
            width: d.width,
            height: d.height,
            seed: d.seed,
            obstacles: d
                .obstacles
                .into_iter()
                .map(|o| Obstacle {
                    id: o.id,
                    center: Vec2::new(o.cx, o.cy),
                    radius: o.r,
                    safety_radius: o.safety_r,
                    velocity: Vec2::new(o.vx, o.vy),
                    kind: o.kind,
                })
                .collect(),
            boundaries: d.boundaries,
            flow: d.flow,
            start: d.start,
            targets: d.targets,
            robot: d.robot,
        })
    }
}

/// Safety radius of a bounding-box obstacle: half the box diagonal plus the
/// robot radius.
pub fn bbox_safety_radius(w: f64, h: f64, robot_radius: f64) -> Result<f64> {
    ensure_finite("w", w)?;
    ensure_finite("h", h)?;
    ensure_finite("R", robot_radius)?;
    if w < 0.0 || h < 0.0 {
        return Err(Error::InvalidArgument(format!("box dimensions must be >= 0, got {w}x{h}")));
    }
    if robot_radius <= 0.0 {
        return Err(Error::InvalidArgument(format!("robot radius must be > 0, got {robot_radius}")));
    }
    Ok(0.5 * w.hypot(h) + robot_radius)
}

/// Safety radius of a circular obstacle: body radius plus robot radius.
pub fn circle_safety_radius(obstacle_radius: f64, robot_radius: f64) -> Result<f64> {
    ensure_finite("r_obs", obstacle_radius)?;
    ensure_finite("R", robot_radius)?;
    if obstacle_radius < 0.0 || robot_radius <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "need r_obs >= 0 and R > 0, got r_obs={obstacle_radius}, R={robot_radius}"
        )));
    }
    Ok(obstacle_radius + robot_radius)
}

/// Grid cells (by integer index) of side `g` touched by the polyline.
///
/// A cell `(i, j)` covers `[i g, (i+1) g) x [j g, (j+1) g)`; segments are
/// traversed exactly with a DDA walk.
pub fn contour_cells(contour: &[Vec2], g: f64) -> BTreeSet<(i64, i64)> {
    let mut cells = BTreeSet::new();
    let cell_of = |p: Vec2| ((p.x / g).floor() as i64, (p.y / g).floor() as i64);
    match contour.len() {
        0 => return cells,
        1 => {
            cells.insert(cell_of(contour[0]));
            return cells;
        }
        _ => {}
    }
    for w in contour.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (mut i, mut j) = cell_of(a);
        let end = cell_of(b);
        cells.insert((i, j));
        let d = b - a;
        let step_i: i64 = if d.x > 0.0 { 1 } else if d.x < 0.0 { -1 } else { 0 };
        let step_j: i64 = if d.y > 0.0 { 1 } else if d.y < 0.0 { -1 } else { 0 };
        let next_boundary = |idx: i64, step: i64| if step > 0 { (idx + 1) as f64 * g } else { idx as f64 * g };
        let mut t_max_x = if step_i != 0 { (next_boundary(i, step_i) - a.x) / d.x } else { f64::INFINITY };
        let mut t_max_y = if step_j != 0 { (next_boundary(j, step_j) - a.y) / d.y } else { f64::INFINITY };
        let t_dx = if step_i != 0 { g / d.x.abs() } else { f64::INFINITY };
        let t_dy = if step_j != 0 { g / d.y.abs() } else { f64::INFINITY };
        let max_steps = ((end.0 - i).abs() + (end.1 - j).abs()) as usize + 2;
        for _ in 0..max_steps {
            if (i, j) == end {
                break;
            }
            if t_max_x < t_max_y {
                if t_max_x > 1.0 {
                    break;
                }
                i += step_i;
                t_max_x += t_dx;
            } else {
                if t_max_y > 1.0 {
                    break;
                }
                j += step_j;
                t_max_y += t_dy;
            }
            cells.insert((i, j));
        }
        cells.insert(end);
    }
    cells
}

/// Replaces a wall contour by square cells of side `g`; every touched cell
/// becomes a boundary obstacle centered on the cell with safety radius
/// `sqrt(2) g / 2 + R`. Ids are assigned from `first_id` in cell order.
pub fn discretize_boundary(contour: &[Vec2], g: f64, robot_radius: f64, first_id: u32) -> Result<Vec<Obstacle>> {
    ensure_finite("g", g)?;
    ensure_finite("R", robot_radius)?;
    if g <= 0.0 {
        return Err(Error::InvalidArgument(format!("cell size must be > 0, got {g}")));
    }
    if robot_radius < 0.0 {
        return Err(Error::InvalidArgument(format!("robot radius must be >= 0, got {robot_radius}")));
    }
    let half_diag = std::f64::consts::SQRT_2 * g / 2.0;
    Ok(contour_cells(contour, g)
        .into_iter()
        .enumerate()
        .map(|(k, (i, j))| Obstacle {
            id: first_id + k as u32,
            center: Vec2::new((i as f64 + 0.5) * g, (j as f64 + 0.5) * g),
            radius: half_diag,
            safety_radius: half_diag + robot_radius,
            velocity: Vec2::ZERO,
            kind: ObstacleKind::BoundaryCell,
        })
        .collect())
}

/// Parameters of a seeded benchmark arena of equal circular obstacles.
#[derive(Debug, Clone, PartialEq)]
pub struct ArenaSpec {
    pub width: u32,
    pub height: u32,
    pub n_obstacles: usize,
    pub obstacle_radius: f64,
    pub robot_radius: f64,
    pub seed: u64,
    pub start: Vec2,
    pub end: Vec2,
}

pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

impl ArenaSpec {
    /// The 2000x2000 px layout used for planner comparison: 50 px bodies with
    /// 75 px zones, start near the upper-left corner and end near the
    /// lower-right one.
    pub fn benchmark(n_obstacles: usize, seed: u64) -> Self {
        ArenaSpec {
            width: 2000,
            height: 2000,
            n_obstacles,
            obstacle_radius: 50.0,
            robot_radius: 25.0,
            seed,
            start: Vec2::new(100.0, 100.0),
            end: Vec2::new(1900.0, 1900.0),
        }
    }
}

/// Rejection-samples obstacle centers uniformly inside the bounds. A
/// candidate is rejected when its body overlaps an earlier body or its
/// center is within `safety_radius + R` of the start or end point.
pub fn generate_arena(spec: &ArenaSpec) -> Result<Scene> {
    let safety = circle_safety_radius(spec.obstacle_radius, spec.robot_radius)?;
    let (w, h) = (spec.width as f64, spec.height as f64);
    let r = spec.obstacle_radius;
    if 2.0 * r >= w || 2.0 * r >= h {
        return Err(Error::GenerationFailed("obstacle does not fit in the arena".into()));
    }
    let clearance = safety + spec.robot_radius;
    let mut rng = Prng::new(spec.seed);
    let mut obstacles: Vec<Obstacle> = Vec::with_capacity(spec.n_obstacles);
    for id in 0..spec.n_obstacles {
        let mut placed = false;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let c = Vec2::new(rng.uniform(r, w - r), rng.uniform(r, h - r));
            if c.dist(spec.start) < clearance || c.dist(spec.end) < clearance {
                continue;
            }
            if obstacles.iter().any(|o| o.center.dist(c) < o.radius + r) {
                continue;
            }
            obstacles.push(Obstacle::new_static(id as u32, c, r, safety));
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::GenerationFailed(format!(
                "could not place obstacle {id} of {} after {MAX_PLACEMENT_ATTEMPTS} attempts",
                spec.n_obstacles
            )));
        }
    }
    Ok(Scene {
        width: spec.width,
        height: spec.height,
        seed: spec.seed,
        obstacles,
        boundaries: Vec::new(),
        flow: None,
        start: Some(spec.start),
        targets: vec![Target::fixed(spec.end)],
        robot: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bbox_radius_examples() {
        assert_eq!(bbox_safety_radius(30.0, 40.0, 25.0).unwrap(), 50.0);
        assert_eq!(bbox_safety_radius(0.0, 0.0, 25.0).unwrap(), 25.0);
        // sqrt(6400 + 3600) = 100
        assert_eq!(bbox_safety_radius(80.0, 60.0, 10.0).unwrap(), 60.0);
        assert!(bbox_safety_radius(f64::NAN, 1.0, 1.0).is_err());
        assert!(bbox_safety_radius(1.0, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn circle_radius_examples() {
        assert_eq!(circle_safety_radius(50.0, 25.0).unwrap(), 75.0);
        assert_eq!(circle_safety_radius(0.0, 25.0).unwrap(), 25.0);
        assert_eq!(circle_safety_radius(25.0, 25.0).unwrap(), 50.0);
        assert!(circle_safety_radius(f64::NAN, 25.0).is_err());
    }

    #[test]
    fn boundary_cell_radius() {
        let cells = discretize_boundary(&[Vec2::new(5.0, 5.0), Vec2::new(100.0, 5.0)], 30.0, 8.0, 0).unwrap();
        let expected = 2f64.sqrt() * 15.0 + 8.0;
        assert!((expected - 29.213_203_435_596_43).abs() < 1e-12);
        for c in &cells {
            assert!((c.safety_radius - expected).abs() < 1e-12);
            assert_eq!(c.kind, ObstacleKind::BoundaryCell);
        }
        let unit = discretize_boundary(&[Vec2::new(0.1, 0.1)], 2f64.sqrt(), 0.0, 0).unwrap();
        assert!((unit[0].safety_radius - 1.0).abs() < 1e-15);
        assert!(discretize_boundary(&[], 30.0, 8.0, 0).unwrap().is_empty());
        assert!(discretize_boundary(&[Vec2::ZERO], 0.0, 8.0, 0).is_err());
    }

    #[test]
    fn axis_segment_of_three_cells() {
        let g = 30.0;
        // starts mid-cell: touches 4 cells
        let cells = contour_cells(&[Vec2::new(15.0, 5.0), Vec2::new(15.0 + 3.0 * g, 5.0)], g);
        assert_eq!(cells.len(), 4);
        // pixel chain covering exactly three cells
        let cells = contour_cells(&[Vec2::new(0.0, 5.0), Vec2::new(3.0 * g - 1.0, 5.0)], g);
        assert_eq!(cells.len(), 3);
    }

    #[test]
    fn arena_generation_is_reproducible() {
        let a = generate_arena(&ArenaSpec::benchmark(10, 1)).unwrap();
        let b = generate_arena(&ArenaSpec::benchmark(10, 1)).unwrap();
        assert_eq!(a.obstacles.len(), 10);
        assert_eq!(a.to_json(), b.to_json());
        for o in &a.obstacles {
            assert!(a.contains(o.center));
            assert_eq!(o.safety_radius, 75.0);
        }
        let c = generate_arena(&ArenaSpec::benchmark(60, 7)).unwrap();
        assert_eq!(c.obstacles.len(), 60);
        assert_ne!(a.to_json(), generate_arena(&ArenaSpec::benchmark(10, 2)).unwrap().to_json());
    }

    #[test]
    fn arena_generation_fails_when_too_dense() {
        let mut spec = ArenaSpec::benchmark(2000, 3);
        spec.width = 600;
        spec.height = 600;
        spec.start = Vec2::new(10.0, 10.0);
        spec.end = Vec2::new(590.0, 590.0);
        assert!(matches!(generate_arena(&spec), Err(Error::GenerationFailed(_))));
    }

    #[test]
    fn json_missing_obstacles_is_an_error() {
        let err = Scene::from_json(r#"{"version":1,"width":10,"height":10,"seed":0}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("obstacles"), "{msg}");
    }

    #[test]
    fn json_unknown_keys_are_ignored() {
        let s = Scene::from_json(
            r#"{"version":1,"width":10,"height":10,"seed":3,"obstacles":[],"boundaries":[],"flow":null,"colour":"red"}"#,
        )
        .unwrap();
        assert_eq!(s.seed, 3);
    }

    #[test]
    fn json_field_error_reports_location() {
        let err = Scene::from_json(
            "{\"version\":1,\"width\":10,\"height\":10,\n\"obstacles\":[{\"id\":0,\"cx\":\"x\",\"cy\":1,\"r\":1,\"safety_r\":2,\"kind\":\"static\"}]}",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("line 2") && err.contains("obstacles[0].cx"), "{err}");
    }

    #[test]
    fn json_rejects_invalid_scenes() {
        let dup = r#"{"version":1,"width":100,"height":100,"obstacles":[
            {"id":1,"cx":5,"cy":5,"r":1,"safety_r":2,"kind":"static"},
            {"id":1,"cx":6,"cy":6,"r":1,"safety_r":2,"kind":"static"}]}"#;
        assert!(Scene::from_json(dup).is_err());
        let outside = r#"{"version":1,"width":100,"height":100,"obstacles":[
            {"id":1,"cx":500,"cy":5,"r":1,"safety_r":2,"kind":"static"}]}"#;
        assert!(Scene::from_json(outside).is_err());
        let v0 = r#"{"version":0,"width":100,"height":100,"obstacles":[]}"#;
        assert!(Scene::from_json(v0).is_err());
    }

    #[test]
    fn flow_round_trips() {
        let mut s = Scene::new(100, 50);
        s.flow = Some(FlowModel::new(400.0, Vec2::new(2.0, 0.0), 0.3).unwrap());
        s.boundaries = vec![vec![Vec2::new(0.0, 1.0), Vec2::new(100.0, 1.0)]];
        let back = Scene::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert!(FlowModel::new(1.0, Vec2::new(1.0, 0.0), 0.0).is_err());
    }
}
