//! One simulation instance driven by one operator connection. The session
//! is synchronous; the server owns it from a single task and calls
//! [`Session::apply`] between frames and [`Session::tick`] once per frame.

use micronav::bench::{arena_scenario, scene_sim};
use micronav::escape::PolicyHandle;
use micronav::nav::{Controller, NavConfig, Navigator};
use micronav::scene::Target;
use micronav::sim::{Mode, Sim};
use micronav::{Error, Result, Scene, Vec2};

use crate::wire::{Command, ObstacleView, Snapshot, Telemetry};

/// Where a session's world comes from.
#[derive(Debug, Clone)]
pub enum WorldSource {
    /// Seeded dynamic arena; `reset` may pick a new seed.
    Arena { moving: bool },
    Scene(Scene),
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub world: WorldSource,
    pub nav: NavConfig,
    pub policy: Option<PolicyHandle>,
    pub seed: u64,
    pub fps: f64,
}

impl SessionConfig {
    pub fn arena(seed: u64) -> Self {
        SessionConfig { world: WorldSource::Arena { moving: false }, nav: NavConfig::default(), policy: None, seed, fps: 25.0 }
    }
}

pub struct Session {
    config: SessionConfig,
    sim: Sim,
    nav: Navigator,
    paused: bool,
    last: Option<(Mode, Option<micronav::escape::Case>, bool)>,
}

fn build(config: &SessionConfig, seed: u64) -> Result<(Sim, Navigator)> {
    let sim = match &config.world {
        WorldSource::Arena { moving } => arena_scenario(seed, *moving)?,
        WorldSource::Scene(scene) => {
            scene.validate()?;
            scene_sim(scene)
        }
    };
    let nav = Navigator::new(config.nav.clone(), config.policy.clone())?;
    Ok((sim, nav))
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self> {
        if !(config.fps > 0.0 && config.fps.is_finite()) {
            return Err(Error::InvalidArgument(format!("fps must be positive, got {}", config.fps)));
        }
        let (sim, nav) = build(&config, config.seed)?;
        Ok(Session { config, sim, nav, paused: false, last: None })
    }

    pub fn sim(&self) -> &Sim {
        &self.sim
    }

    pub fn navigator(&self) -> &Navigator {
        &self.nav
    }

    pub fn paused(&self) -> bool {
        self.paused
    }

    pub fn fps(&self) -> f64 {
        self.config.fps
    }

    /// Frame of the next telemetry message.
    pub fn next_frame(&self) -> u64 {
        self.sim.state.frame + 1
    }

    fn in_bounds(&self, p: Vec2) -> bool {
        p.x.is_finite() && p.y.is_finite() && (0.0..=self.sim.width).contains(&p.x) && (0.0..=self.sim.height).contains(&p.y)
    }

    /// Applies a command at the current frame boundary. On error the
    /// session is left untouched.
    pub fn apply(&mut self, command: &Command) -> Result<()> {
        match *command {
            Command::SetTarget { x, y } => {
                let p = Vec2::new(x, y);
                if !self.in_bounds(p) {
                    return Err(Error::InvalidArgument(format!("target ({x}, {y}) is outside the arena")));
                }
                self.sim.state.targets = vec![Target::fixed(p)];
                self.nav.restart();
            }
            Command::AddVia { x, y } => {
                let p = Vec2::new(x, y);
                if !self.in_bounds(p) {
                    return Err(Error::InvalidArgument(format!("via point ({x}, {y}) is outside the arena")));
                }
                let zones = self.nav.planning_zones(self.sim.state.robot, &self.sim.state.obstacles);
                if let Some(z) = zones.iter().find(|z| z.zone.center.dist(p) < z.zone.radius) {
                    return Err(Error::InvalidArgument(format!("via point ({x}, {y}) lies inside the zone of obstacle {}", z.id)));
                }
                if let Some(o) = self.sim.state.obstacles.iter().find(|o| o.center.dist(p) < o.safety_radius) {
                    return Err(Error::InvalidArgument(format!("via point ({x}, {y}) lies inside the zone of obstacle {}", o.id)));
                }
                self.nav.state.via.push(p);
                self.nav.request_replan();
            }
            Command::ClearVia => {
                self.nav.state.via.clear();
                self.nav.request_replan();
            }
            Command::InflateObstacle { obstacle, delta } => {
                if !self.sim.state.obstacles.iter().any(|o| o.id == obstacle) {
                    return Err(Error::InvalidArgument(format!("unknown obstacle id {obstacle}")));
                }
                self.nav.state.inflation.set(obstacle, delta)?;
                self.nav.request_replan();
            }
            Command::SwitchController { controller } => {
                self.nav.set_controller(controller, None)?;
            }
            Command::Pause => self.paused = true,
            Command::Resume => self.paused = false,
            Command::Reset { seed } => {
                let seed = seed.unwrap_or(self.config.seed);
                let controller = self.nav.config.controller;
                let (mut sim, mut nav) = build(&self.config, seed)?;
                if controller != nav.config.controller {
                    nav.set_controller(controller, None)?;
                }
                // frame numbers keep counting across resets
                sim.state.frame = self.sim.state.frame;
                self.config.seed = seed;
                self.sim = sim;
                self.nav = nav;
                self.last = None;
            }
        }
        Ok(())
    }

    /// Steps one frame unless paused. Returns the telemetry of the new
    /// frame, or `None` while paused.
    pub fn tick(&mut self) -> Result<Option<Telemetry>> {
        if self.paused {
            return Ok(None);
        }
        let f = self.nav.advance(&mut self.sim)?;
        self.last = Some((f.output.mode, f.output.case, f.output.planned));
        Ok(Some(self.telemetry()))
    }

    /// Current state without stepping. Drains the pending events.
    pub fn telemetry(&mut self) -> Telemetry {
        let (mode, case, planned) = self.last.unwrap_or((Mode::Global, None, false));
        let st = &self.sim.state;
        let inflation = &self.nav.state.inflation;
        let obstacles = st
            .obstacles
            .iter()
            .map(|o| ObstacleView {
                id: o.id,
                x: o.center.x,
                y: o.center.y,
                r: o.radius,
                safety_r: o.safety_radius,
                zone_r: o.safety_radius + inflation.get(o.id),
                vx: o.velocity.x,
                vy: o.velocity.y,
                kind: o.kind,
            })
            .collect();
        let plan = if mode == Mode::Global { self.nav.state.plan.as_ref().map(|p| p.nodes.clone()) } else { None };
        Telemetry {
            frame: st.frame,
            paused: self.paused,
            robot: st.robot,
            robot_radius: self.sim.robot_radius,
            heading: st.robot_dir,
            mode,
            case,
            controller: self.nav.config.controller,
            phi: Some(self.sim.min_clearance()).filter(|p| p.is_finite()),
            obstacles,
            targets: st.targets.iter().map(|t| t.pos).collect(),
            active_target: self.nav.state.target,
            via: self.nav.state.via.clone(),
            plan,
            planned,
            collisions: st.collisions as u64,
            events: std::mem::take(&mut self.sim.state.events),
        }
    }

    pub fn snapshot(&mut self) -> Snapshot {
        Snapshot {
            width: self.sim.width,
            height: self.sim.height,
            fps: self.config.fps,
            seed: self.config.seed,
            state: self.telemetry(),
        }
    }

    pub fn controller(&self) -> Controller {
        self.nav.config.controller
    }
}
