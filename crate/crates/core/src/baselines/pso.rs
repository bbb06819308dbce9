use crate::agp::PlannedPath;
use crate::error::{Error, Result};
use crate::geom::{Circle, Vec2};
use crate::rng::Prng;

use super::spline::NaturalSpline;

/// Swarm settings. Positions are the ordinates of the interior spline nodes
/// along the dependent axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PsoParams {
    pub interior_nodes: usize,
    pub segments: usize,
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub c1: f64,
    pub c2: f64,
    pub v_max: f64,
    pub y_bounds: (f64, f64),
    pub w_damp: f64,
    pub collision_weight: f64,
    pub seed: u64,
}

/// Clerc–Kennedy constriction with `phi1 = phi2 = 2.05`, `k = 1`:
/// returns `(chi, chi*phi1, chi*phi2)`.
pub fn constriction_coefficients() -> (f64, f64, f64) {
    let (phi1, phi2, k) = (2.05, 2.05, 1.0);
    let phi: f64 = phi1 + phi2;
    let chi = 2.0 * k / (2.0 - phi - (phi * phi - 4.0 * phi).sqrt()).abs();
    (chi, chi * phi1, chi * phi2)
}

impl PsoParams {
    /// Five interior nodes and 25 segments, 2000 px arena bounds.
    pub fn example(seed: u64) -> Self {
        let (w, c1, c2) = constriction_coefficients();
        PsoParams {
            interior_nodes: 5,
            segments: 25,
            particles: 100,
            iterations: 50,
            inertia: w,
            c1,
            c2,
            v_max: 400.0,
            y_bounds: (0.0, 2000.0),
            w_damp: 0.9,
            collision_weight: 100.0,
            seed,
        }
    }

    /// Settings of the planner comparison: 50 segments, 100 particles up to 30
    /// obstacles and 200 beyond, 50 iterations.
    pub fn benchmark(n_obstacles: usize, seed: u64) -> Self {
        PsoParams { segments: 50, particles: if n_obstacles <= 30 { 100 } else { 200 }, ..Self::example(seed) }
    }

    fn validate(&self) -> Result<()> {
        if self.interior_nodes == 0 || self.segments == 0 || self.particles == 0 || self.iterations == 0 {
            return Err(Error::InvalidArgument("PSO counts must be >= 1".into()));
        }
        if !(self.w_damp > 0.0 && self.w_damp <= 1.0) {
            return Err(Error::InvalidArgument(format!("w_damp must be in (0, 1], got {}", self.w_damp)));
        }
        if !(self.y_bounds.1 > self.y_bounds.0) || !(self.v_max > 0.0) {
            return Err(Error::InvalidArgument("PSO bounds and v_max must be non-degenerate".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsoCost {
    pub cost: f64,
    pub length: f64,
    pub violation: f64,
}

/// Length times `(1 + C_v * V)`, where `V` sums `max(1 - |w - c| / r, 0)` over
/// every waypoint and zone.
pub fn pso_cost(waypoints: &[Vec2], zones: &[Circle], collision_weight: f64) -> PsoCost {
    let length: f64 = waypoints.windows(2).map(|w| w[0].dist(w[1])).sum();
    let mut violation = 0.0;
    for w in waypoints {
        for z in zones {
            violation += (1.0 - w.dist(z.center) / z.radius).max(0.0);
        }
    }
    PsoCost { cost: length * (1.0 + collision_weight * violation), length, violation }
}

/// Output of [`pso_plan`]; `history[g]` is the global-best cost after
/// iteration `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    pub path: PlannedPath,
    pub best: PsoCost,
    pub history: Vec<f64>,
}

impl PsoResult {
    pub fn feasible(&self) -> bool {
        self.best.violation == 0.0
    }
}

/// Maps node ordinates to the sampled waypoint polyline. The independent
/// axis is whichever of x or y changes more from start to end.
struct Layout {
    swap: bool,
    s: (f64, f64),
    e: (f64, f64),
    knot_x: Vec<f64>,
    sample_x: Vec<f64>,
}

impl Layout {
    fn new(start: Vec2, end: Vec2, k: usize, j: usize) -> Self {
        let swap = (end.y - start.y).abs() > (end.x - start.x).abs();
        let to = |p: Vec2| if swap { (p.y, p.x) } else { (p.x, p.y) };
        let (s, e) = (to(start), to(end));
        let knot_x = (0..=k + 1).map(|i| s.0 + (e.0 - s.0) * i as f64 / (k + 1) as f64).collect();
        let sample_x = (0..=j).map(|i| s.0 + (e.0 - s.0) * i as f64 / j as f64).collect();
        Layout { swap, s, e, knot_x, sample_x }
    }

    fn waypoints(&self, ys: &[f64]) -> Vec<Vec2> {
        let mut knots_y = Vec::with_capacity(ys.len() + 2);
        knots_y.push(self.s.1);
        knots_y.extend_from_slice(ys);
        knots_y.push(self.e.1);
        let (kx, ky, sx): (Vec<f64>, Vec<f64>, Vec<f64>) = if self.knot_x[0] <= *self.knot_x.last().unwrap() {
            (self.knot_x.clone(), knots_y, self.sample_x.clone())
        } else {
            // spline wants increasing abscissae
            let mut kx = self.knot_x.clone();
            kx.reverse();
            knots_y.reverse();
            (kx, knots_y, self.sample_x.clone())
        };
        let spline = NaturalSpline::new(&kx, &ky).expect("knots are distinct");
        let last = sx.len() - 1;
        sx.iter()
            .enumerate()
            .map(|(i, &x)| {
                let (a, b) = match i {
                    0 => self.s,
                    _ if i == last => self.e,
                    _ => (x, spline.eval(x)),
                };
                if self.swap {
                    Vec2::new(b, a)
                } else {
                    Vec2::new(a, b)
                }
            })
            .collect()
    }

    fn straight(&self) -> Vec<f64> {
        let (s, e) = (self.s, self.e);
        self.knot_x[1..self.knot_x.len() - 1].iter().map(|&x| s.1 + (e.1 - s.1) * (x - s.0) / (e.0 - s.0)).collect()
    }
}

/// Particle swarm over interior spline nodes; the initial global best is the
/// straight line. Infeasible results are returned with `violation > 0`.
pub fn pso_plan(zones: &[Circle], start: Vec2, end: Vec2, params: &PsoParams) -> Result<PsoResult> {
    pso_plan_observed(zones, start, end, params, |_| {})
}

/// Swarm state handed to the observer after each iteration.
#[derive(Debug)]
pub struct SwarmView<'a> {
    pub iteration: usize,
    pub positions: &'a [Vec<f64>],
    pub velocities: &'a [Vec<f64>],
    pub global_best: &'a [f64],
    pub global_best_cost: f64,
}

/// [`pso_plan`] with a callback after every iteration.
pub fn pso_plan_observed(
    zones: &[Circle],
    start: Vec2,
    end: Vec2,
    params: &PsoParams,
    mut observe: impl FnMut(&SwarmView),
) -> Result<PsoResult> {
    params.validate()?;
    if start == end {
        return Err(Error::InvalidArgument("start and end coincide".into()));
    }
    let k = params.interior_nodes;
    let layout = Layout::new(start, end, k, params.segments);
    let (y_min, y_max) = params.y_bounds;
    let vm = params.v_max;
    let eval = |ys: &[f64]| pso_cost(&layout.waypoints(ys), zones, params.collision_weight);

    let mut rng = Prng::new(params.seed);
    let mut pos: Vec<Vec<f64>> = (0..params.particles).map(|_| (0..k).map(|_| rng.uniform(y_min, y_max)).collect()).collect();
    let mut vel: Vec<Vec<f64>> = (0..params.particles).map(|_| (0..k).map(|_| rng.uniform(-vm, vm)).collect()).collect();
    let mut pbest = pos.clone();
    let mut pbest_cost = vec![f64::INFINITY; params.particles];
    let mut gbest = layout.straight();
    let mut gbest_cost = eval(&gbest);

    let mut w = params.inertia;
    let mut history = Vec::with_capacity(params.iterations);
    for iteration in 0..params.iterations {
        for p in 0..params.particles {
            let c = eval(&pos[p]);
            if c.cost < pbest_cost[p] {
                pbest_cost[p] = c.cost;
                pbest[p].clone_from(&pos[p]);
            }
            if pbest_cost[p] < gbest_cost.cost {
                gbest.clone_from(&pbest[p]);
                gbest_cost = eval(&gbest);
            }
            let r1 = rng.unit();
            let r2 = rng.unit();
            for d in 0..k {
                let v = w * vel[p][d] + params.c1 * r1 * (pbest[p][d] - pos[p][d]) + params.c2 * r2 * (gbest[d] - pos[p][d]);
                vel[p][d] = v.clamp(-vm, vm);
                pos[p][d] = (pos[p][d] + vel[p][d]).clamp(y_min, y_max);
            }
        }
        w *= params.w_damp;
        history.push(gbest_cost.cost);
        observe(&SwarmView {
            iteration,
            positions: &pos,
            velocities: &vel,
            global_best: &gbest,
            global_best_cost: gbest_cost.cost,
        });
    }
    let waypoints = layout.waypoints(&gbest);
    let path = PlannedPath { nodes: waypoints.clone(), length: gbest_cost.length, waypoints };
    Ok(PsoResult { path, best: gbest_cost, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constriction_value() {
        let (w, c1, c2) = constriction_coefficients();
        assert!((w - 0.7298).abs() < 1e-3);
        assert_eq!(c1, c2);
        assert!((c1 / w - 2.05).abs() < 1e-12);
    }

    #[test]
    fn cost_examples() {
        let w = [Vec2::ZERO, Vec2::new(3.0, 4.0)];
        let c = pso_cost(&w, &[Circle::new(Vec2::new(100.0, 0.0), 10.0)], 50.0);
        assert_eq!(c.cost, 5.0);
        let c = pso_cost(&w, &[Circle::new(Vec2::new(3.0, 4.0), 10.0)], 2.0);
        assert_eq!(c.violation, 1.0 + 0.5);
        assert_eq!(c.cost, 5.0 * (1.0 + 2.0 * 1.5));
    }

    #[test]
    fn free_space_converges_to_line() {
        let params = PsoParams { iterations: 10, particles: 30, ..PsoParams::example(3) };
        let r = pso_plan(&[], Vec2::new(100.0, 100.0), Vec2::new(1900.0, 700.0), &params).unwrap();
        let straight = Vec2::new(100.0, 100.0).dist(Vec2::new(1900.0, 700.0));
        assert!((r.best.cost - straight).abs() < 1e-6 * straight);
        assert!(r.history.windows(2).all(|h| h[1] <= h[0]));
    }

    #[test]
    fn steep_and_reversed_directions() {
        for (s, e) in [
            (Vec2::new(500.0, 1900.0), Vec2::new(600.0, 100.0)),
            (Vec2::new(1900.0, 1000.0), Vec2::new(100.0, 900.0)),
        ] {
            let zones = [Circle::new(s.lerp(e, 0.5), 75.0)];
            let r = pso_plan(&zones, s, e, &PsoParams::example(9)).unwrap();
            assert_eq!(r.path.waypoints[0], s);
            assert_eq!(*r.path.waypoints.last().unwrap(), e);
            assert!(r.feasible());
        }
    }
}
