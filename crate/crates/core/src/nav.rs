//! The hybrid closed loop. In global mode AGP replans from the current
//! robot, obstacle and target states and the robot tracks the first
//! unreached waypoint; inside a safety zone a local escape controller takes
//! over until the robot is clear again.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::agp::{plan_with_via, AgpParams, InflationSpec, PlanObstacle, PlannedPath, DEFAULT_ALPHA, DEFAULT_SPACING};
use crate::error::{Error, Result};
use crate::escape::{apply_action, build_observation, policy_act, step_toward, Case, PolicyHandle, RuleController, DEFAULT_COMMIT};
use crate::geom::{Circle, Vec2, Vec3};
use crate::scene::Obstacle;
use crate::sim::{EventKind, Mode, Sim};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Controller {
    None,
    Rule,
    Rl,
}

impl Controller {
    fn mode(self) -> Mode {
        match self {
            Controller::Rl => Mode::Rl,
            _ => Mode::Rule,
        }
    }
}

impl std::str::FromStr for Controller {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Controller::None),
            "rule" => Ok(Controller::Rule),
            "rl" => Ok(Controller::Rl),
            _ => Err(Error::InvalidArgument(format!("unknown controller {s:?} (none, rule, rl)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplanPolicy {
    EveryFrame,
    /// Keep the current plan until a zone exit or a command invalidates it.
    OnExit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavConfig {
    /// Arrival circle radius.
    pub gamma: f64,
    pub alpha: f64,
    pub spacing: f64,
    /// Extra clearance added to every planning zone.
    pub plan_margin: f64,
    pub controller: Controller,
    pub replan: ReplanPolicy,
    /// Plan with AGP; when false the robot heads straight for the target.
    pub use_planner: bool,
    pub commit: u32,
    /// Consecutive frames without a plan before navigation is declared failed.
    pub timeout_frames: u64,
    /// Field amplitude (mT) and rotation frequency (Hz) for actuation output.
    pub b0: f64,
    pub frequency: f64,
    pub frame_period: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        NavConfig {
            gamma: 10.0,
            alpha: DEFAULT_ALPHA,
            spacing: DEFAULT_SPACING,
            plan_margin: 5.0,
            controller: Controller::Rule,
            replan: ReplanPolicy::EveryFrame,
            use_planner: true,
            commit: DEFAULT_COMMIT,
            timeout_frames: 500,
            b0: 1.0,
            frequency: 35.0,
            frame_period: crate::sim::FRAME_PERIOD,
        }
    }
}

impl NavConfig {
    pub fn with_controller(controller: Controller) -> Self {
        NavConfig { controller, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.alpha > 0.0 && self.spacing > 0.0 && self.plan_margin >= 0.0) {
            return Err(Error::InvalidArgument("gamma, alpha and spacing must be > 0, margin >= 0".into()));
        }
        if !(self.b0 >= 0.0 && self.frequency >= 0.0 && self.frame_period > 0.0) {
            return Err(Error::InvalidArgument("field amplitude, frequency and frame period must be non-negative".into()));
        }
        Ok(())
    }
}

/// Rotating-field command: rotation axis azimuth and tilt, amplitude and
/// angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuationCmd {
    pub azimuth: f64,
    pub tilt: f64,
    pub amplitude: f64,
    pub omega: f64,
}

impl ActuationCmd {
    /// Planar rolling toward `bearing`.
    pub fn rolling(bearing: f64, amplitude: f64, omega: f64) -> Self {
        ActuationCmd { azimuth: bearing + FRAC_PI_2, tilt: FRAC_PI_2, amplitude, omega }
    }

    pub fn field(&self, t: f64) -> Vec3 {
        rotating_field(self.azimuth, self.tilt, self.amplitude, self.omega, t)
    }
}

/// Bearing and distance from `m` to `w`; `(0, 0)` when they coincide.
pub fn track_bearing(m: Vec2, w: Vec2) -> (f64, f64) {
    let d = w - m;
    if d == Vec2::ZERO {
        return (0.0, 0.0);
    }
    (d.y.atan2(d.x), d.norm())
}

/// Field vector for a rotation axis at azimuth `alpha` and tilt `beta`.
pub fn rotating_field(alpha: f64, beta: f64, b0: f64, omega: f64, t: f64) -> Vec3 {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let (s, c) = (omega * t).sin_cos();
    Vec3::new(b0 * (-cb * ca * c + sa * s), b0 * (-cb * sa * c - ca * s), b0 * sb * c)
}

/// Planar field that rolls the robot along bearing `theta`.
pub fn field_command(theta: f64, b0: f64, omega: f64, t: f64) -> Vec3 {
    let alpha = theta + FRAC_PI_2;
    let s = (omega * t).sin();
    Vec3::new(b0 * alpha.sin() * s, -b0 * alpha.cos() * s, b0 * (omega * t).cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NavMode {
    Global,
    Local,
}

#[derive(Debug, Clone)]
pub struct NavState {
    pub mode: NavMode,
    /// Index of the active waypoint in `plan`.
    pub waypoint: usize,
    pub plan: Option<PlannedPath>,
    pub local_frames: u64,
    /// Index into the simulation's target list.
    pub target: usize,
    pub via: Vec<Vec2>,
    pub inflation: InflationSpec,
    pub rule: RuleController,
    pub stalled_frames: u64,
    pub finished: bool,
    replan_pending: bool,
}

/// Decision for one frame.
#[derive(Debug, Clone)]
pub struct NavOutput {
    pub displacement: Vec2,
    pub command: Option<ActuationCmd>,
    pub mode: Mode,
    pub case: Option<Case>,
    /// A fresh plan was computed this frame.
    pub planned: bool,
    pub events: Vec<EventKind>,
}

/// Result of [`Navigator::advance`].
#[derive(Debug, Clone)]
pub struct FrameOutcome {
    pub output: NavOutput,
    /// Wall-clock time of the navigation decision.
    pub compute_s: f64,
}

#[derive(Debug, Clone)]
pub struct Navigator {
    pub config: NavConfig,
    pub state: NavState,
    policy: Option<PolicyHandle>,
}

impl Navigator {
    pub fn new(config: NavConfig, policy: Option<PolicyHandle>) -> Result<Self> {
        config.validate()?;
        if config.controller == Controller::Rl && policy.is_none() {
            return Err(Error::InvalidArgument("the rl controller needs a policy".into()));
        }
        let rule = RuleController::new(config.commit);
        Ok(Navigator {
            config,
            state: NavState {
                mode: NavMode::Global,
                waypoint: 0,
                plan: None,
                local_frames: 0,
                target: 0,
                via: Vec::new(),
                inflation: InflationSpec::new(),
                rule,
                stalled_frames: 0,
                finished: false,
                replan_pending: true,
            },
            policy,
        })
    }

    pub fn policy(&self) -> Option<&PolicyHandle> {
        self.policy.as_ref()
    }

    pub fn set_controller(&mut self, controller: Controller, policy: Option<PolicyHandle>) -> Result<()> {
        let policy = policy.or_else(|| self.policy.clone());
        if controller == Controller::Rl && policy.is_none() {
            return Err(Error::InvalidArgument("the rl controller needs a policy".into()));
        }
        self.config.controller = controller;
        self.policy = policy;
        self.state.rule.reset();
        self.request_replan();
        Ok(())
    }

    /// Forces a fresh plan (and a replan event) on the next global frame.
    pub fn request_replan(&mut self) {
        self.state.replan_pending = true;
    }

    /// Re-arms the navigator after the target list changed.
    pub fn restart(&mut self) {
        self.state.target = 0;
        self.state.finished = false;
        self.state.plan = None;
        self.state.stalled_frames = 0;
        self.request_replan();
    }

    /// Planning zones seen from `m`: the simulator zones grown by the margin
    /// and inflation, but never so large that they swallow the robot. Zones
    /// the robot is already inside are dropped.
    pub fn planning_zones(&self, m: Vec2, obstacles: &[Obstacle]) -> Vec<PlanObstacle> {
        obstacles
            .iter()
            .filter(|o| m.dist(o.center) >= o.safety_radius)
            .map(|o| {
                let r = o.safety_radius + self.config.plan_margin + self.state.inflation.get(o.id);
                let r = r.min(m.dist(o.center) - 1e-3).max(o.safety_radius);
                PlanObstacle { id: o.id, zone: Circle::new(o.center, r) }
            })
            .collect()
    }

    fn actuation(&self, d: Vec2) -> Option<ActuationCmd> {
        (d != Vec2::ZERO).then(|| ActuationCmd::rolling(d.y.atan2(d.x), self.config.b0, TAU * self.config.frequency))
    }

    /// Chooses this frame's displacement without touching the simulation.
    pub fn decide(&mut self, sim: &Sim) -> NavOutput {
        let mut events = Vec::new();
        let st = &sim.state;
        let m = st.robot;
        let mut out = NavOutput { displacement: Vec2::ZERO, command: None, mode: Mode::Global, case: None, planned: false, events: Vec::new() };
        let Some(target) = st.targets.get(self.state.target).map(|t| t.pos) else {
            self.state.finished = true;
            return out;
        };
        if self.state.finished {
            return out;
        }

        let phi = sim.min_clearance();
        let ctl = self.config.controller;
        let committed = ctl == Controller::Rule && self.state.rule.committed();
        let want_local = ctl != Controller::None && (phi < 0.0 || (self.state.mode == NavMode::Local && committed));
        match (self.state.mode, want_local) {
            (NavMode::Global, true) => {
                self.state.mode = NavMode::Local;
                self.state.local_frames = 0;
                self.state.rule.reset();
                events.push(EventKind::ModeSwitch { from: Mode::Global, to: ctl.mode() });
            }
            (NavMode::Local, false) => {
                self.state.mode = NavMode::Global;
                self.state.replan_pending = true;
                events.push(EventKind::ModeSwitch { from: ctl.mode(), to: Mode::Global });
            }
            _ => {}
        }

        if self.state.mode == NavMode::Local {
            self.state.local_frames += 1;
            out.mode = ctl.mode();
            let v_m = sim.robot_speed;
            out.displacement = match ctl {
                Controller::Rl => {
                    let v_cmax = st.obstacles.iter().map(Obstacle::speed).fold(0.0, f64::max);
                    let o = build_observation(m, &st.obstacles, sim.width, sim.height, v_cmax);
                    let policy = self.policy.as_ref().expect("checked at construction");
                    apply_action(policy_act(policy, &o), v_m).expect("policy actions are in range")
                }
                _ => {
                    let (case, d) = self.state.rule.act(m, st.robot_dir, &st.obstacles, v_m);
                    out.case = Some(case);
                    d
                }
            };
            out.command = self.actuation(out.displacement);
            out.events = events;
            return out;
        }

        self.state.via.retain(|v| v.dist(m) > self.config.gamma);
        if m.dist(target) <= self.config.gamma {
            out.events = events;
            return out;
        }
        if !self.config.use_planner {
            out.displacement = step_toward(m, target, sim.robot_speed);
            out.command = self.actuation(out.displacement);
            out.events = events;
            return out;
        }

        let fresh = self.state.replan_pending || self.state.plan.is_none() || self.config.replan == ReplanPolicy::EveryFrame;
        if fresh {
            let zones = self.planning_zones(m, &st.obstacles);
            let params = AgpParams {
                alpha: self.config.alpha,
                spacing: self.config.spacing,
                inflation: InflationSpec::new(),
                via: self.state.via.clone(),
                bounds: Some((Vec2::ZERO, Vec2::new(sim.width, sim.height))),
            };
            match plan_with_via(&zones, m, target, &params) {
                Ok(p) => {
                    if self.state.replan_pending {
                        events.push(EventKind::Replan { nodes: p.nodes.len() });
                        self.state.replan_pending = false;
                    }
                    self.state.plan = Some(p);
                    self.state.waypoint = 1;
                    self.state.stalled_frames = 0;
                    out.planned = true;
                }
                Err(_) => {
                    self.state.plan = None;
                    self.state.stalled_frames += 1;
                    if self.state.stalled_frames > self.config.timeout_frames {
                        events.push(EventKind::NavigationFailed { frames: self.state.stalled_frames });
                        self.state.stalled_frames = 0;
                    }
                    out.events = events;
                    return out;
                }
            }
        }
        let plan = self.state.plan.as_ref().expect("plan present");
        let last = plan.waypoints.len() - 1;
        let mut j = self.state.waypoint.min(last);
        while j < last && m.dist(plan.waypoints[j]) <= self.config.gamma {
            j += 1;
        }
        self.state.waypoint = j;
        out.displacement = step_toward(m, plan.waypoints[j], sim.robot_speed);
        out.command = self.actuation(out.displacement);
        out.events = events;
        out
    }

    /// One closed-loop frame: decide, step the simulation, stamp the
    /// navigator's events, and check arrival.
    pub fn advance(&mut self, sim: &mut Sim) -> Result<FrameOutcome> {
        let t0 = Instant::now();
        let output = self.decide(sim);
        let compute_s = t0.elapsed().as_secs_f64();
        sim.step(output.displacement)?;
        for e in &output.events {
            sim.state.push_event(e.clone());
        }
        if let Some(t) = sim.state.targets.get(self.state.target) {
            if !self.state.finished && sim.state.robot.dist(t.pos) <= self.config.gamma {
                sim.state.push_event(EventKind::TargetReached { target: self.state.target });
                self.state.target += 1;
                self.state.plan = None;
                self.request_replan();
                if self.state.target >= sim.state.targets.len() {
                    self.state.finished = true;
                }
            }
        }
        Ok(FrameOutcome { output, compute_s })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bearing_examples() {
        let (t, d) = track_bearing(Vec2::ZERO, Vec2::new(1.0, 1.0));
        assert!((t - std::f64::consts::FRAC_PI_4).abs() < 1e-15 && (d - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(track_bearing(Vec2::new(3.0, 3.0), Vec2::new(3.0, 3.0)), (0.0, 0.0));
    }

    #[test]
    fn field_at_zero_and_planar_form() {
        assert_eq!(field_command(0.3, 2.0, 10.0, 0.0), Vec3::new(0.0, 0.0, 2.0));
        for k in 0..50 {
            let t = k as f64 * 0.013;
            let a = field_command(0.7, 1.5, 220.0, t);
            let b = rotating_field(0.7 + FRAC_PI_2, FRAC_PI_2, 1.5, 220.0, t);
            assert!((a - b).norm() < 1e-12);
        }
    }

    fn straight_frames(gamma: f64) -> u32 {
        let target = crate::scene::Target::fixed(Vec2::new(400.0, 100.0));
        let mut sim = Sim::new(500.0, 200.0, 5.0, 10.0, Vec2::new(100.0, 100.0), vec![], vec![target]);
        let config = NavConfig { gamma, ..NavConfig::with_controller(Controller::Rule) };
        let mut nav = Navigator::new(config, None).unwrap();
        let mut frames = 0;
        while !nav.state.finished {
            let f = nav.advance(&mut sim).unwrap();
            assert_eq!(f.output.mode, Mode::Global);
            frames += 1;
            assert!(frames < 100);
        }
        frames
    }

    #[test]
    fn straight_run_reaches_target() {
        assert_eq!(straight_frames(0.5), 30);
        // the default arrival circle saves the last frame
        assert_eq!(straight_frames(10.0), 29);
    }
}
