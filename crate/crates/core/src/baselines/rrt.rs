use crate::agp::{insert_waypoints, PlannedPath, DEFAULT_SPACING};
use crate::error::{Error, Result};
use crate::geom::{polyline_length, segment_hits_circle, Circle, Vec2};
use crate::rng::Prng;

#[derive(Debug, Clone, PartialEq)]
pub struct RrtParams {
    pub step: f64,
    pub goal_tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl RrtParams {
    /// 50 px steps and 50 px goal tolerance, capped at 100,000 samples.
    pub fn benchmark(seed: u64) -> Self {
        RrtParams { step: 50.0, goal_tolerance: 50.0, max_iterations: 100_000, seed }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeNode {
    pub pos: Vec2,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RrtResult {
    pub path: PlannedPath,
    pub tree: Vec<TreeNode>,
    pub iterations: usize,
}

/// Moves `step` from `near` toward `target`.
pub fn steer(near: Vec2, target: Vec2, step: f64) -> Vec2 {
    near + (target - near).normalized() * step
}

fn edge_free(zones: &[Circle], a: Vec2, b: Vec2) -> bool {
    !zones.iter().any(|z| segment_hits_circle(a, b, z.center, z.radius, 0.0))
}

/// Plain RRT over `[0, W] x [0, H]` with uniform sampling and no goal bias.
pub fn rrt_plan(zones: &[Circle], width: f64, height: f64, start: Vec2, end: Vec2, params: &RrtParams) -> Result<RrtResult> {
    if !(params.step > 0.0 && params.goal_tolerance > 0.0) {
        return Err(Error::InvalidArgument("RRT step and goal tolerance must be > 0".into()));
    }
    let mut rng = Prng::new(params.seed);
    let mut tree = vec![TreeNode { pos: start, parent: None }];
    let mut goal = None;
    if start.dist(end) <= params.goal_tolerance && edge_free(zones, start, end) {
        goal = Some(0);
    }
    let mut iterations = 0;
    while goal.is_none() {
        if iterations >= params.max_iterations {
            let nodes = tree.iter().map(|n| n.pos).collect();
            return Err(Error::PlanFailed { reason: format!("RRT iteration cap {} reached", params.max_iterations), nodes });
        }
        iterations += 1;
        let sample = Vec2::new(rng.uniform(0.0, width), rng.uniform(0.0, height));
        let (near, _) = tree
            .iter()
            .enumerate()
            .map(|(i, n)| (i, n.pos.dist_sq(sample)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("tree has a root");
        let from = tree[near].pos;
        if from == sample {
            continue;
        }
        let new = steer(from, sample, params.step);
        if !edge_free(zones, from, new) {
            continue;
        }
        tree.push(TreeNode { pos: new, parent: Some(near) });
        if new.dist(end) <= params.goal_tolerance && edge_free(zones, new, end) {
            goal = Some(tree.len() - 1);
        }
    }
    let mut nodes = vec![end];
    let mut cur = goal;
    while let Some(i) = cur {
        nodes.push(tree[i].pos);
        cur = tree[i].parent;
    }
    nodes.reverse();
    let waypoints = insert_waypoints(&nodes, DEFAULT_SPACING);
    let length = polyline_length(&nodes);
    Ok(RrtResult { path: PlannedPath { nodes, waypoints, length }, tree, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steer_example() {
        assert_eq!(steer(Vec2::ZERO, Vec2::new(3.0, 4.0), 50.0), Vec2::new(30.0, 40.0));
    }

    #[test]
    fn free_space_and_reproducible() {
        let s = Vec2::new(100.0, 100.0);
        let e = Vec2::new(1900.0, 1900.0);
        let a = rrt_plan(&[], 2000.0, 2000.0, s, e, &RrtParams::benchmark(5)).unwrap();
        assert!(a.path.length >= s.dist(e));
        let b = rrt_plan(&[], 2000.0, 2000.0, s, e, &RrtParams::benchmark(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cap_reached_is_plan_failed() {
        let e = Vec2::new(1000.0, 1000.0);
        let zones = [Circle::new(e, 40.0), Circle::new(Vec2::new(1000.0, 1030.0), 200.0)];
        let p = RrtParams { max_iterations: 200, ..RrtParams::benchmark(1) };
        assert!(matches!(rrt_plan(&zones, 2000.0, 2000.0, Vec2::ZERO, Vec2::new(1000.0, 1100.0), &p), Err(Error::PlanFailed { .. })));
    }
}
