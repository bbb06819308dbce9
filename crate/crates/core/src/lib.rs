//! Microrobot motion planning: an analytic-geometry global planner, baseline
//! planners for comparison, a frame-stepped dynamic simulator, local escape
//! controllers (reflection rules and a DQN policy) and the hybrid navigator
//! that ties them together.

pub mod agp;
pub mod baselines;
pub mod bench;
pub mod error;
pub mod escape;
pub mod geom;
pub mod mask;
pub mod nav;
pub mod rl;
pub mod rng;
pub mod scene;
pub mod sim;

pub use error::{Error, Result};
pub use geom::{Circle, Vec2, Vec3};
pub use rng::Prng;
pub use scene::{Obstacle, ObstacleKind, RobotSpec, Scene};
