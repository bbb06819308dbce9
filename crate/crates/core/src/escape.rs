//! Local escape controllers: reflection rules and greedy inference over a
//! trained Q-network, plus the observation both the policy and its training
//! environment see.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::rl::mlp::{argmax, Mlp};
use crate::rl::model;
use crate::scene::Obstacle;

pub const OBS_DIM: usize = 16;
pub const N_ACTIONS: usize = 9;
/// Frames the rule controller keeps heading to one intermediate target.
pub const DEFAULT_COMMIT: u32 = 1;

/// Unit headings of actions 1..=8: east first, then counterclockwise in
/// 45 degree steps.
pub const COMPASS: [Vec2; 8] = [
    Vec2::new(1.0, 0.0),
    Vec2::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Vec2::new(0.0, 1.0),
    Vec2::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
    Vec2::new(-1.0, 0.0),
    Vec2::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    Vec2::new(0.0, -1.0),
    Vec2::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
];

/// Robot displacement for a discrete action: 0 stays, 1..=8 move `v_m`
/// along [`COMPASS`].
pub fn apply_action(action: usize, v_m: f64) -> Result<Vec2> {
    match action {
        0 => Ok(Vec2::ZERO),
        1..=8 => Ok(COMPASS[action - 1] * v_m),
        _ => Err(Error::InvalidArgument(format!("action {action} outside 0..=8"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    None,
    /// The arrow tip is inside a zone.
    I,
    /// The robot center is inside a zone.
    II,
}

/// Arrow tip one frame ahead: `m + (v_m + v_cmax) * dir`.
pub fn arrow_tip(m: Vec2, dir: Vec2, v_m: f64, v_cmax: f64) -> Vec2 {
    m + dir.normalized() * (v_m + v_cmax)
}

/// Intermediate target from the reflection rules. When the robot itself is
/// inside a zone the nearest such obstacle center is reflected through `m`;
/// otherwise, when the arrow tip is inside a zone, the tip is.
pub fn rule_intermediate(m: Vec2, tip: Vec2, obstacles: &[Obstacle]) -> (Case, Option<Vec2>) {
    let containing = obstacles
        .iter()
        .filter(|o| m.dist(o.center) < o.safety_radius)
        .min_by(|a, b| m.dist_sq(a.center).total_cmp(&m.dist_sq(b.center)).then(a.id.cmp(&b.id)));
    if let Some(o) = containing {
        return (Case::II, Some(m * 2.0 - o.center));
    }
    if obstacles.iter().any(|o| tip.dist(o.center) < o.safety_radius) {
        return (Case::I, Some(m * 2.0 - tip));
    }
    (Case::None, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleState {
    pub active_case: Case,
    pub commit_frames_left: u32,
    pub current_intermediate: Option<Vec2>,
}

impl Default for RuleState {
    fn default() -> Self {
        RuleState { active_case: Case::None, commit_frames_left: 0, current_intermediate: None }
    }
}

/// Rule controller with a commitment window.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleController {
    pub commit: u32,
    pub state: RuleState,
}

impl Default for RuleController {
    fn default() -> Self {
        RuleController::new(DEFAULT_COMMIT)
    }
}

impl RuleController {
    pub fn new(commit: u32) -> Self {
        RuleController { commit: commit.max(1), state: RuleState::default() }
    }

    pub fn reset(&mut self) {
        self.state = RuleState::default();
    }

    pub fn committed(&self) -> bool {
        self.state.commit_frames_left > 0
    }

    /// Target to head for this frame, or `None` when neither case holds. A
    /// fresh target is kept for `commit` frames before the cases are
    /// evaluated again.
    pub fn target(&mut self, m: Vec2, dir: Vec2, obstacles: &[Obstacle], v_m: f64) -> (Case, Option<Vec2>) {
        if let (true, Some(t)) = (self.committed(), self.state.current_intermediate) {
            self.state.commit_frames_left -= 1;
            let case = self.state.active_case;
            if self.state.commit_frames_left == 0 {
                self.state.current_intermediate = None;
            }
            return (case, Some(t));
        }
        let v_cmax = obstacles.iter().map(Obstacle::speed).fold(0.0, f64::max);
        let (case, target) = rule_intermediate(m, arrow_tip(m, dir, v_m, v_cmax), obstacles);
        self.state.active_case = case;
        if target.is_some() && self.commit > 1 {
            self.state.commit_frames_left = self.commit - 1;
            self.state.current_intermediate = target;
        } else {
            self.state.commit_frames_left = 0;
            self.state.current_intermediate = None;
        }
        (case, target)
    }

    /// Displacement of at most `v_m` toward the current rule target.
    pub fn act(&mut self, m: Vec2, dir: Vec2, obstacles: &[Obstacle], v_m: f64) -> (Case, Vec2) {
        let (case, target) = self.target(m, dir, obstacles, v_m);
        (case, target.map_or(Vec2::ZERO, |t| step_toward(m, t, v_m)))
    }
}

/// Move of length `min(v_m, |t - m|)` from `m` toward `t`.
pub fn step_toward(m: Vec2, t: Vec2, v_m: f64) -> Vec2 {
    let d = t - m;
    let len = d.norm();
    if len <= v_m {
        d
    } else {
        d * (v_m / len)
    }
}

/// Relative positions and velocities of the four nearest obstacles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation16(pub [f64; OBS_DIM]);

impl Observation16 {
    pub fn to_f32(&self) -> [f32; OBS_DIM] {
        self.0.map(|v| v as f32)
    }
}

/// Four nearest obstacles (ties by id), each as
/// `(dx / D_max, dy / D_max, vx / v_cmax, vy / v_cmax)` with
/// `D_max = sqrt(W^2 + H^2)`; missing slots are zero.
pub fn build_observation(m: Vec2, obstacles: &[Obstacle], width: f64, height: f64, v_cmax: f64) -> Observation16 {
    let d_max = (width * width + height * height).sqrt();
    let mut order: Vec<&Obstacle> = obstacles.iter().collect();
    order.sort_by(|a, b| m.dist_sq(a.center).total_cmp(&m.dist_sq(b.center)).then(a.id.cmp(&b.id)));
    let mut o = [0.0; OBS_DIM];
    for (slot, ob) in order.iter().take(4).enumerate() {
        let d = ob.center - m;
        let v = if v_cmax > 0.0 { ob.velocity / v_cmax } else { Vec2::ZERO };
        o[slot * 4] = (d.x / d_max).clamp(-1.0, 1.0);
        o[slot * 4 + 1] = (d.y / d_max).clamp(-1.0, 1.0);
        o[slot * 4 + 2] = v.x;
        o[slot * 4 + 3] = v.y;
    }
    Observation16(o)
}

/// Immutable Q-network of shape 16 -> ... -> 9, cheap to clone and share.
#[derive(Debug, Clone)]
pub struct PolicyHandle {
    net: Arc<Mlp<f32>>,
}

impl PolicyHandle {
    pub fn new(net: Mlp<f32>) -> Result<Self> {
        if net.input_dim() != OBS_DIM || net.output_dim() != N_ACTIONS {
            return Err(Error::ModelFormat(format!(
                "policy must map {OBS_DIM} inputs to {N_ACTIONS} actions, got {:?}",
                net.sizes()
            )));
        }
        Ok(PolicyHandle { net: Arc::new(net) })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        PolicyHandle::new(model::load_model(path)?.net)
    }

    pub fn net(&self) -> &Mlp<f32> {
        &self.net
    }

    pub fn q_values(&self, obs: &Observation16) -> Vec<f32> {
        self.net.forward(&obs.to_f32(), 1)
    }
}

/// Greedy action; ties resolve to the lowest index.
pub fn policy_act(policy: &PolicyHandle, obs: &Observation16) -> usize {
    argmax(&policy.q_values(obs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zone(id: u32, c: Vec2, r: f64) -> Obstacle {
        Obstacle::new_static(id, c, r / 2.0, r)
    }

    #[test]
    fn case_one_reflects_tip() {
        let m = Vec2::new(100.0, 100.0);
        let obs = [zone(0, Vec2::new(125.0, 100.0), 20.0)];
        assert_eq!(rule_intermediate(m, Vec2::new(110.0, 100.0), &obs), (Case::I, Some(Vec2::new(90.0, 100.0))));
    }

    #[test]
    fn case_two_reflects_center_and_wins() {
        let m = Vec2::new(100.0, 100.0);
        let obs = [zone(0, Vec2::new(120.0, 100.0), 30.0)];
        assert_eq!(rule_intermediate(m, Vec2::new(110.0, 100.0), &obs), (Case::II, Some(Vec2::new(80.0, 100.0))));
        assert_eq!(rule_intermediate(m, Vec2::new(60.0, 100.0), &obs).0, Case::II);
    }

    #[test]
    fn actions() {
        assert_eq!(apply_action(0, 10.0).unwrap(), Vec2::ZERO);
        assert_eq!(apply_action(1, 10.0).unwrap(), Vec2::new(10.0, 0.0));
        let ne = apply_action(2, 10.0).unwrap();
        assert!((ne.x - 7.0711).abs() < 1e-4 && (ne.y - 7.0711).abs() < 1e-4);
        assert!(apply_action(9, 10.0).is_err());
    }

    #[test]
    fn observation_examples() {
        let o = build_observation(Vec2::ZERO, &[], 2000.0, 2000.0, 8.0);
        assert_eq!(o.0, [0.0; 16]);
        let d_max = (2.0f64 * 2000.0 * 2000.0).sqrt();
        assert!((d_max - 2828.427).abs() < 1e-3);
        let ob = Obstacle::new_static(0, Vec2::new(d_max, 0.0), 1.0, 2.0);
        let o = build_observation(Vec2::ZERO, &[ob], 2000.0, 2000.0, 8.0);
        assert_eq!(&o.0[..4], &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn commitment_window() {
        let mut rc = RuleController::new(3);
        let obs = [zone(0, Vec2::new(120.0, 100.0), 30.0)];
        let m = Vec2::new(100.0, 100.0);
        let (_, t0) = rc.target(m, Vec2::new(1.0, 0.0), &obs, 10.0);
        assert_eq!(rc.state.commit_frames_left, 2);
        assert!(rc.state.current_intermediate.is_some());
        // obstacle gone, target kept until the window closes
        assert_eq!(rc.target(m, Vec2::new(1.0, 0.0), &[], 10.0).1, t0);
        assert_eq!(rc.target(m, Vec2::new(1.0, 0.0), &[], 10.0).1, t0);
        assert_eq!(rc.state, RuleState { active_case: Case::II, commit_frames_left: 0, current_intermediate: None });
        assert_eq!(rc.target(m, Vec2::new(1.0, 0.0), &[], 10.0), (Case::None, None));
    }
}
