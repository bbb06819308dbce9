//! Reference planners used for comparison with the analytic planner:
//! particle swarm over spline nodes, RRT, and weighted A* on an occupancy
//! grid.

pub mod pso;
pub mod rrt;
pub mod spline;
pub mod wastar;

pub use pso::{constriction_coefficients, pso_cost, pso_plan, pso_plan_observed, PsoCost, PsoParams, PsoResult, SwarmView};
pub use rrt::{rrt_plan, steer, RrtParams, RrtResult, TreeNode};
pub use spline::NaturalSpline;
pub use wastar::{grid_search, wastar_plan, Grid, GridPath, StepCost, WaStarParams, WaStarResult};
