//! Frame-stepped dynamic arena: moving and static circular obstacles with
//! elastic bounces, scripted moving targets, vessel phantoms made of boundary
//! cells, and collision and safety-zone bookkeeping.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::rng::Prng;
use crate::scene::{discretize_boundary, Obstacle, ObstacleKind, Scene, Target, MAX_PLACEMENT_ATTEMPTS};

/// Wall-contour cell size used when loading phantoms.
pub const PHANTOM_CELL: f64 = 30.0;
/// Robot radius assumed for phantoms that do not carry one.
pub const PHANTOM_ROBOT_RADIUS: f64 = 8.0;
/// Frame period in seconds.
pub const FRAME_PERIOD: f64 = 0.04;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub width: f64,
    pub height: f64,
    pub robot_radius: f64,
    /// Robot displacement per frame.
    pub robot_speed: f64,
    pub n_dynamic: usize,
    pub n_static: usize,
    pub radius_range: (f64, f64),
    pub speed_range: (f64, f64),
    /// Number of evenly spaced headings a dynamic obstacle may start with.
    pub directions: usize,
    pub dt: f64,
    pub seed: u64,
}

impl SimConfig {
    /// 2000x2000 px, R = 25, v_m = 10, 50 dynamic and 5 static obstacles of
    /// radius 25..50 moving at 4..8 px/frame along 16 headings.
    pub fn arena(seed: u64) -> Self {
        SimConfig {
            width: 2000.0,
            height: 2000.0,
            robot_radius: 25.0,
            robot_speed: 10.0,
            n_dynamic: 50,
            n_static: 5,
            radius_range: (25.0, 50.0),
            speed_range: (4.0, 8.0),
            directions: 16,
            dt: FRAME_PERIOD,
            seed,
        }
    }

    /// The arena with eight headings, as used for policy training.
    pub fn training(seed: u64) -> Self {
        SimConfig { directions: 8, ..Self::arena(seed) }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.width) || !pos(self.height) || !pos(self.robot_speed) || !pos(self.dt) || self.robot_radius < 0.0 {
            return Err(Error::InvalidArgument("arena size, robot speed and dt must be > 0".into()));
        }
        let (r0, r1) = self.radius_range;
        let (s0, s1) = self.speed_range;
        if !(pos(r0) && r1 >= r0 && pos(s0) && s1 >= s0 && s1.is_finite()) {
            return Err(Error::InvalidArgument("radius and speed ranges must be positive and ordered".into()));
        }
        if self.directions == 0 {
            return Err(Error::InvalidArgument("direction set must not be empty".into()));
        }
        Ok(())
    }
}

/// Zone buffer for one frame of motion: robot speed plus the fastest obstacle.
pub fn zone_buffer(robot_speed: f64, obstacles: &[Obstacle]) -> f64 {
    robot_speed + obstacles.iter().map(Obstacle::speed).fold(0.0, f64::max)
}

/// Rewrites every safety radius as `r + R + buffer`.
pub fn apply_sim_zones(obstacles: &mut [Obstacle], robot_radius: f64, robot_speed: f64) {
    let buffer = zone_buffer(robot_speed, obstacles);
    for o in obstacles {
        o.safety_radius = o.radius + robot_radius + buffer;
    }
}

/// Seeded dynamic arena. Obstacles never overlap each other and keep their
/// zones (plus one robot step) off every point in `keep_clear`. Dynamic ids
/// come first.
pub fn generate_dynamic(config: &SimConfig, keep_clear: &[Vec2]) -> Result<Vec<Obstacle>> {
    config.validate()?;
    let mut rng = Prng::new(config.seed);
    let (r0, r1) = config.radius_range;
    let (s0, s1) = config.speed_range;
    let worst_zone = r1 + config.robot_radius + config.robot_speed + s1;
    let total = config.n_dynamic + config.n_static;
    let mut out: Vec<Obstacle> = Vec::with_capacity(total);
    for id in 0..total {
        let dynamic = id < config.n_dynamic;
        let r = rng.uniform(r0, r1);
        let velocity = if dynamic {
            let k = rng.index(config.directions);
            Vec2::from_angle(2.0 * PI * k as f64 / config.directions as f64) * rng.uniform(s0, s1)
        } else {
            Vec2::ZERO
        };
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let c = Vec2::new(rng.uniform(r, config.width - r), rng.uniform(r, config.height - r));
            let clear = keep_clear.iter().all(|p| p.dist(c) > worst_zone + config.robot_speed);
            if clear && out.iter().all(|o| o.center.dist(c) >= o.radius + r) {
                placed = Some(c);
                break;
            }
        }
        let center = placed.ok_or_else(|| {
            Error::GenerationFailed(format!("could not place obstacle {id} of {total} after {MAX_PLACEMENT_ATTEMPTS} attempts"))
        })?;
        let kind = if dynamic { ObstacleKind::Dynamic } else { ObstacleKind::Static };
        out.push(Obstacle { id: id as u32, center, radius: r, safety_radius: r, velocity, kind });
    }
    apply_sim_zones(&mut out, config.robot_radius, config.robot_speed);
    Ok(out)
}

/// Controller in charge of a frame, as written to trajectory logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Global,
    Rule,
    Rl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventKind {
    ZoneEnter { obstacle: u32 },
    ZoneExit { obstacle: u32 },
    Collision { obstacle: u32 },
    TargetReached { target: usize },
    Replan { nodes: usize },
    ModeSwitch { from: Mode, to: Mode },
    NavigationFailed { frames: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub frame: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub frame: u64,
    pub robot: Vec2,
    /// Unit heading of the last nonzero robot move.
    pub robot_dir: Vec2,
    pub obstacles: Vec<Obstacle>,
    pub targets: Vec<Target>,
    pub events: Vec<Event>,
    /// The robot body overlaps an obstacle body this frame.
    pub collided: bool,
    /// Collision onsets so far.
    pub collisions: usize,
    inside: BTreeSet<u32>,
    contact: BTreeSet<u32>,
}

impl SimState {
    pub fn push_event(&mut self, kind: EventKind) {
        self.events.push(Event { frame: self.frame, kind });
    }

    /// Ids whose safety zone contains the robot center.
    pub fn zones_containing_robot(&self) -> &BTreeSet<u32> {
        &self.inside
    }
}

/// Signed clearance from `m` to the nearest safety zone; `+inf` without
/// obstacles.
pub fn clearance_at(obstacles: &[Obstacle], m: Vec2) -> f64 {
    obstacles.iter().map(|o| m.dist(o.center) - o.safety_radius).fold(f64::INFINITY, f64::min)
}

/// Minimum signed clearance of the robot to any safety zone.
pub fn min_clearance(state: &SimState) -> f64 {
    clearance_at(&state.obstacles, state.robot)
}

/// Net velocity of a rolling robot against a mean flow:
/// `alpha_c * 2 pi R f - u_flow` (µm/s for `R` in µm and `f` in Hz).
pub fn net_velocity(f: f64, radius: f64, alpha_c: f64, u_flow: f64) -> f64 {
    alpha_c * 2.0 * PI * radius * f - u_flow
}

/// Owner of one simulation instance.
#[derive(Debug, Clone)]
pub struct Sim {
    pub width: f64,
    pub height: f64,
    pub robot_radius: f64,
    pub robot_speed: f64,
    pub state: SimState,
}

impl Sim {
    pub fn new(width: f64, height: f64, robot_radius: f64, robot_speed: f64, robot: Vec2, obstacles: Vec<Obstacle>, targets: Vec<Target>) -> Self {
        let mut sim = Sim {
            width,
            height,
            robot_radius,
            robot_speed,
            state: SimState {
                frame: 0,
                robot,
                robot_dir: Vec2::new(1.0, 0.0),
                obstacles,
                targets,
                events: Vec::new(),
                collided: false,
                collisions: 0,
                inside: BTreeSet::new(),
                contact: BTreeSet::new(),
            },
        };
        sim.state.inside = sim.zone_set();
        sim.state.contact = sim.contact_set();
        sim.state.collided = !sim.state.contact.is_empty();
        sim
    }

    /// Simulation over a scene: robot at the scene start (or arena center),
    /// zones rewritten as `r + R + buffer`.
    pub fn from_scene(scene: &Scene, robot_radius: f64, robot_speed: f64) -> Self {
        let mut obstacles = scene.obstacles.clone();
        apply_sim_zones(&mut obstacles, robot_radius, robot_speed);
        let (w, h) = (scene.width as f64, scene.height as f64);
        let start = scene.start.unwrap_or(Vec2::new(w / 2.0, h / 2.0));
        Sim::new(w, h, robot_radius, robot_speed, start, obstacles, scene.targets.clone())
    }

    fn zone_set(&self) -> BTreeSet<u32> {
        let m = self.state.robot;
        self.state.obstacles.iter().filter(|o| m.dist(o.center) < o.safety_radius).map(|o| o.id).collect()
    }

    fn contact_set(&self) -> BTreeSet<u32> {
        let m = self.state.robot;
        self.state.obstacles.iter().filter(|o| m.dist(o.center) < o.radius + self.robot_radius).map(|o| o.id).collect()
    }

    pub fn min_clearance(&self) -> f64 {
        min_clearance(&self.state)
    }

    /// Advances one frame: obstacles and targets move, bounces resolve, then
    /// the robot moves by `displacement`.
    pub fn step(&mut self, displacement: Vec2) -> Result<()> {
        let len = displacement.norm();
        if !(len <= self.robot_speed + 1e-9) {
            return Err(Error::InvalidCommand(format!(
                "displacement {len} exceeds robot speed {}",
                self.robot_speed
            )));
        }
        self.state.frame += 1;
        advance_obstacles(&mut self.state.obstacles, self.width, self.height);
        for t in &mut self.state.targets {
            t.pos += t.vel;
            if t.pos.x < 0.0 || t.pos.x > self.width {
                t.vel.x = -t.vel.x;
                t.pos.x = t.pos.x.clamp(0.0, self.width);
            }
            if t.pos.y < 0.0 || t.pos.y > self.height {
                t.vel.y = -t.vel.y;
                t.pos.y = t.pos.y.clamp(0.0, self.height);
            }
        }
        let r = self.robot_radius.min(self.width / 2.0).min(self.height / 2.0);
        let m = self.state.robot + displacement;
        self.state.robot = Vec2::new(m.x.clamp(r, self.width - r), m.y.clamp(r, self.height - r));
        if len > 0.0 {
            self.state.robot_dir = displacement / len;
        }

        let inside = self.zone_set();
        let contact = self.contact_set();
        let entered: Vec<u32> = inside.difference(&self.state.inside).copied().collect();
        let left: Vec<u32> = self.state.inside.difference(&inside).copied().collect();
        let hits: Vec<u32> = contact.difference(&self.state.contact).copied().collect();
        for obstacle in entered {
            self.state.push_event(EventKind::ZoneEnter { obstacle });
        }
        for obstacle in left {
            self.state.push_event(EventKind::ZoneExit { obstacle });
        }
        for obstacle in hits {
            self.state.collisions += 1;
            self.state.push_event(EventKind::Collision { obstacle });
        }
        self.state.collided = !contact.is_empty();
        self.state.inside = inside;
        self.state.contact = contact;
        Ok(())
    }
}

/// Moves every obstacle by its velocity and resolves contacts. Bodies that
/// overlap and approach each other reflect their velocity about the line of
/// centers and are pushed apart; walls reflect the normal component.
pub fn advance_obstacles(obstacles: &mut [Obstacle], width: f64, height: f64) {
    for o in obstacles.iter_mut() {
        o.center += o.velocity;
    }
    let n = obstacles.len();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = obstacles.split_at_mut(j);
            let (p, q) = (&mut a[i], &mut b[0]);
            let p_moves = p.kind == ObstacleKind::Dynamic;
            let q_moves = q.kind == ObstacleKind::Dynamic;
            if !p_moves && !q_moves {
                continue;
            }
            let d = q.center - p.center;
            let dist = d.norm();
            let reach = p.radius + q.radius;
            if dist >= reach {
                continue;
            }
            let normal = if dist > 0.0 { d / dist } else { Vec2::new(1.0, 0.0) };
            if p_moves && p.velocity.dot(normal) > 0.0 {
                p.velocity = p.velocity - normal * (2.0 * p.velocity.dot(normal));
            }
            if q_moves && q.velocity.dot(normal) < 0.0 {
                q.velocity = q.velocity - normal * (2.0 * q.velocity.dot(normal));
            }
            let overlap = reach - dist;
            match (p_moves, q_moves) {
                (true, true) => {
                    p.center -= normal * (overlap / 2.0);
                    q.center += normal * (overlap / 2.0);
                }
                (true, false) => p.center -= normal * overlap,
                _ => q.center += normal * overlap,
            }
        }
    }
    for o in obstacles.iter_mut().filter(|o| o.kind == ObstacleKind::Dynamic) {
        let r = o.radius;
        if o.center.x < r {
            o.velocity.x = o.velocity.x.abs();
            o.center.x = r.min(width / 2.0);
        } else if o.center.x > width - r {
            o.velocity.x = -o.velocity.x.abs();
            o.center.x = (width - r).max(width / 2.0);
        }
        if o.center.y < r {
            o.velocity.y = o.velocity.y.abs();
            o.center.y = r.min(height / 2.0);
        } else if o.center.y > height - r {
            o.velocity.y = -o.velocity.y.abs();
            o.center.y = (height - r).max(height / 2.0);
        }
    }
}

/// Parses a scene and turns each wall contour into boundary cells of side
/// `g`, sized for the scene's robot (8 px when unspecified).
pub fn phantom_from_json(text: &str, g: f64) -> Result<Scene> {
    let mut scene = Scene::from_json(text)?;
    let robot_radius = scene.robot.map_or(PHANTOM_ROBOT_RADIUS, |r| r.radius);
    let mut next = scene.next_id();
    for contour in scene.boundaries.clone() {
        let cells = discretize_boundary(&contour, g, robot_radius, next)?;
        next += cells.len() as u32;
        scene.obstacles.extend(cells);
    }
    let (w, h) = (scene.width as f64, scene.height as f64);
    scene.obstacles.retain(|o| o.center.x >= 0.0 && o.center.y >= 0.0 && o.center.x <= w && o.center.y <= h);
    Ok(scene)
}

/// [`phantom_from_json`] on a file with the default cell size.
pub fn load_phantom(path: impl AsRef<Path>) -> Result<Scene> {
    phantom_from_json(&std::fs::read_to_string(path)?, PHANTOM_CELL)
}

/// One line of a trajectory log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: u64,
    pub robot: Vec2,
    pub phi: f64,
    pub mode: Mode,
    pub events: Vec<Event>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<Vec<Vec2>>,
}

/// JSONL writer for per-frame records.
pub struct TrajectoryLog<W: Write> {
    out: W,
    frames: u64,
}

impl<W: Write> TrajectoryLog<W> {
    pub fn new(out: W) -> Self {
        TrajectoryLog { out, frames: 0 }
    }

    pub fn write(&mut self, record: &FrameRecord) -> Result<()> {
        // +inf clearance (no obstacles) has no JSON number
        let mut v = serde_json::to_value(record).map_err(|e| Error::Parse(e.to_string()))?;
        if !record.phi.is_finite() {
            v["phi"] = serde_json::Value::Null;
        }
        serde_json::to_writer(&mut self.out, &v).map_err(|e| Error::Parse(e.to_string()))?;
        self.out.write_all(b"\n")?;
        self.frames += 1;
        Ok(())
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dynamic(id: u32, c: Vec2, r: f64, v: Vec2) -> Obstacle {
        Obstacle { id, center: c, radius: r, safety_radius: r + 10.0, velocity: v, kind: ObstacleKind::Dynamic }
    }

    #[test]
    fn wall_reflection() {
        let mut obs = vec![dynamic(0, Vec2::new(5.0, 100.0), 25.0, Vec2::new(-8.0, 0.0))];
        advance_obstacles(&mut obs, 500.0, 500.0);
        assert_eq!(obs[0].velocity, Vec2::new(8.0, 0.0));
        assert_eq!(obs[0].center.x, 25.0);
    }

    #[test]
    fn head_on_exchange() {
        let mut obs = vec![
            dynamic(0, Vec2::new(200.0, 100.0), 25.0, Vec2::new(5.0, 0.0)),
            dynamic(1, Vec2::new(250.0, 100.0), 25.0, Vec2::new(-5.0, 0.0)),
        ];
        advance_obstacles(&mut obs, 500.0, 500.0);
        assert_eq!(obs[0].velocity, Vec2::new(-5.0, 0.0));
        assert_eq!(obs[1].velocity, Vec2::new(5.0, 0.0));
        assert!(obs[0].center.dist(obs[1].center) >= 50.0 - 1e-12);
    }

    #[test]
    fn net_velocity_examples() {
        assert!((net_velocity(20.0, 5.0, 0.2, 0.0) - 40.0 * PI).abs() < 1e-12);
        let v = net_velocity(20.0, 5.0, 0.2, 0.0);
        assert_eq!(net_velocity(20.0, 5.0, 0.2, v), 0.0);
    }

    #[test]
    fn clearance_examples() {
        let o = Obstacle::new_static(0, Vec2::new(100.0, 100.0), 10.0, 30.0);
        assert_eq!(clearance_at(std::slice::from_ref(&o), Vec2::new(130.0, 100.0)), 0.0);
        assert_eq!(clearance_at(std::slice::from_ref(&o), Vec2::new(100.0, 100.0)), -30.0);
        assert_eq!(clearance_at(&[], Vec2::ZERO), f64::INFINITY);
    }

    #[test]
    fn oversized_step_rejected() {
        let mut sim = Sim::new(100.0, 100.0, 5.0, 10.0, Vec2::new(50.0, 50.0), vec![], vec![]);
        assert!(matches!(sim.step(Vec2::new(10.1, 0.0)), Err(Error::InvalidCommand(_))));
        sim.step(Vec2::new(6.0, 8.0)).unwrap();
        assert_eq!(sim.state.robot, Vec2::new(56.0, 58.0));
    }

    #[test]
    fn zone_and_collision_events() {
        let o = Obstacle::new_static(4, Vec2::new(100.0, 50.0), 10.0, 40.0);
        let mut sim = Sim::new(300.0, 100.0, 5.0, 10.0, Vec2::new(50.0, 50.0), vec![o], vec![]);
        let mut kinds = Vec::new();
        for _ in 0..10 {
            sim.step(Vec2::new(10.0, 0.0)).unwrap();
            kinds.extend(sim.state.events.drain(..).map(|e| (e.frame, e.kind)));
        }
        assert_eq!(kinds[0], (2, EventKind::ZoneEnter { obstacle: 4 }));
        assert_eq!(kinds[1], (4, EventKind::Collision { obstacle: 4 }));
        assert_eq!(sim.state.collisions, 1);
        assert!(kinds.contains(&(9, EventKind::ZoneExit { obstacle: 4 })));
    }

    #[test]
    fn event_json_shape() {
        let e = Event { frame: 3, kind: EventKind::ModeSwitch { from: Mode::Global, to: Mode::Rl } };
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"{"frame":3,"kind":"mode-switch","from":"global","to":"rl"}"#);
        assert_eq!(serde_json::from_str::<Event>(&s).unwrap(), e);
    }

    #[test]
    fn generated_arena_respects_config() {
        let c = SimConfig::arena(3);
        let obs = generate_dynamic(&c, &[Vec2::new(1000.0, 1000.0)]).unwrap();
        assert_eq!(obs.len(), 55);
        let vmax = obs.iter().map(Obstacle::speed).fold(0.0, f64::max);
        for o in &obs {
            assert!((25.0..=50.0).contains(&o.radius));
            assert!((o.safety_radius - (o.radius + 25.0 + 10.0 + vmax)).abs() < 1e-12);
            match o.kind {
                ObstacleKind::Dynamic => assert!((4.0..=8.0).contains(&o.speed())),
                _ => assert_eq!(o.speed(), 0.0),
            }
            assert!(o.center.dist(Vec2::new(1000.0, 1000.0)) > o.safety_radius);
        }
    }
}
