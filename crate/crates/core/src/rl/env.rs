//! The escape training environment.
//!
//! Each episode places the robot at the arena center and drives it straight
//! along a random compass heading (reflecting off walls) until it first
//! enters a safety zone. Those frames carry `ignore_transition`; from then
//! on the agent's actions move the robot until it collides, leaves every
//! zone, or the frame cap runs out.

use serde::{Deserialize, Serialize};

use super::reward;
use crate::error::Result;
use crate::escape::{apply_action, build_observation, Observation16, COMPASS};
use crate::geom::Vec2;
use crate::rng::Prng;
use crate::sim::{generate_dynamic, Sim, SimConfig};

pub const DEFAULT_MAX_FRAMES: u64 = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// Arena template; its seed is replaced on every reset.
    pub sim: SimConfig,
    pub max_frames: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig { sim: SimConfig::training(0), max_frames: DEFAULT_MAX_FRAMES }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepInfo {
    /// Frame of the global phase: no action was taken and nothing is learned.
    pub ignore_transition: bool,
    pub collided: bool,
    /// First exit from all zones after having entered one.
    pub success: bool,
    pub truncated: bool,
    pub phi: f64,
}

impl StepInfo {
    /// Episode ended by the dynamics rather than the frame cap.
    pub fn terminal(&self) -> bool {
        self.collided || self.success
    }
}

#[derive(Debug, Clone)]
pub struct EnvStep {
    pub obs: Observation16,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// What the trainer needs from an environment.
pub trait Environment: Send {
    fn reset(&mut self) -> Result<Observation16>;
    /// Whether the next step takes the agent's action into account.
    fn wants_action(&self) -> bool;
    fn step(&mut self, action: usize) -> Result<EnvStep>;
}

#[derive(Debug, Clone)]
pub struct EscapeEnv {
    config: EnvConfig,
    rng: Prng,
    sim: Sim,
    heading: Vec2,
    local: bool,
    phi: f64,
    v_cmax: f64,
}

impl EscapeEnv {
    pub fn new(config: EnvConfig, seed: u64) -> Result<Self> {
        config.sim.validate()?;
        let c = &config.sim;
        let sim = Sim::new(c.width, c.height, c.robot_radius, c.robot_speed, Vec2::ZERO, vec![], vec![]);
        let mut env = EscapeEnv { config, rng: Prng::new(seed), sim, heading: COMPASS[0], local: false, phi: 0.0, v_cmax: 0.0 };
        env.reset()?;
        Ok(env)
    }

    pub fn sim(&self) -> &Sim {
        &self.sim
    }

    pub fn in_local_phase(&self) -> bool {
        self.local
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn observe(&self) -> Observation16 {
        let c = &self.config.sim;
        build_observation(self.sim.state.robot, &self.sim.state.obstacles, c.width, c.height, self.v_cmax)
    }

    fn global_move(&mut self) -> Vec2 {
        let c = &self.config.sim;
        let m = self.sim.state.robot;
        let next = m + self.heading * c.robot_speed;
        let r = c.robot_radius;
        if next.x < r || next.x > c.width - r {
            self.heading.x = -self.heading.x;
        }
        if next.y < r || next.y > c.height - r {
            self.heading.y = -self.heading.y;
        }
        self.heading * c.robot_speed
    }
}

impl Environment for EscapeEnv {
    fn reset(&mut self) -> Result<Observation16> {
        let c = SimConfig { seed: self.rng.next_u64(), ..self.config.sim.clone() };
        let center = Vec2::new(c.width / 2.0, c.height / 2.0);
        let obstacles = generate_dynamic(&c, &[center])?;
        self.v_cmax = obstacles.iter().map(|o| o.speed()).fold(0.0, f64::max);
        self.sim = Sim::new(c.width, c.height, c.robot_radius, c.robot_speed, center, obstacles, vec![]);
        self.heading = COMPASS[self.rng.index(COMPASS.len())];
        self.phi = self.sim.min_clearance();
        self.local = self.phi < 0.0;
        Ok(self.observe())
    }

    fn wants_action(&self) -> bool {
        self.local
    }

    fn step(&mut self, action: usize) -> Result<EnvStep> {
        let was_local = self.local;
        let d = if was_local { apply_action(action, self.config.sim.robot_speed)? } else { self.global_move() };
        let prev = self.phi;
        self.sim.step(d)?;
        self.phi = self.sim.min_clearance();
        let collided = self.sim.state.collided;
        let truncated = self.sim.state.frame >= self.config.max_frames;
        let mut info = StepInfo { ignore_transition: !was_local, collided, truncated, phi: self.phi, ..StepInfo::default() };
        let mut r = 0.0;
        if was_local {
            info.success = !collided && self.phi >= 0.0;
            r = reward(self.phi, prev, collided, info.success);
        } else if self.phi < 0.0 {
            self.local = true;
        }
        let done = info.terminal() || truncated;
        Ok(EnvStep { obs: self.observe(), reward: r, done, info })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_phase_is_ignored_until_a_zone() {
        let mut env = EscapeEnv::new(EnvConfig::default(), 3).unwrap();
        assert!(!env.wants_action());
        let mut frames = 0;
        while !env.wants_action() {
            let s = env.step(0).unwrap();
            assert!(s.info.ignore_transition && s.reward == 0.0);
            frames += 1;
            assert!(frames < 2000);
        }
        assert!(env.phi() < 0.0);
        let s = env.step(1).unwrap();
        assert!(!s.info.ignore_transition);
    }
}
