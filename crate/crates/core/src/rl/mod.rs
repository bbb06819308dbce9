//! Deep Q-learning for the local escape policy, written from scratch: dense
//! network with backprop, Huber loss, Adam, replay, the escape environment
//! and the training loop.

pub mod adam;
pub mod dqn;
pub mod env;
pub mod mlp;
pub mod model;
pub mod replay;

pub use adam::Adam;
pub use dqn::{evaluate, greedy_policy, random_policy, train, train_observed, EvalRecord, EvalReport, TrainConfig, TrainOutcome, TrainProbe};
pub use env::{EnvConfig, EnvStep, Environment, EscapeEnv, StepInfo};
pub use mlp::{argmax, Mlp, Scalar};
pub use model::{load_model, save_model, SavedModel, MODEL_VERSION};
pub use replay::{ReplayBuffer, Transition};

/// Hidden layer widths of the escape network.
pub const HIDDEN: [usize; 2] = [512, 256];
pub const K_SHAPE: f64 = 1.0;
pub const TIME_PENALTY: f64 = 0.05;
pub const COLLISION_REWARD: f64 = -50.0;
pub const SUCCESS_REWARD: f64 = 50.0;

/// Step reward from the clearance before (`phi_prev`) and after (`phi`).
/// Collision wins over everything, then leaving all zones; inside a zone the
/// clearance change is rewarded minus a time penalty.
pub fn reward(phi: f64, phi_prev: f64, collided: bool, exited: bool) -> f64 {
    if collided {
        COLLISION_REWARD
    } else if exited || (phi_prev < 0.0 && phi >= 0.0) {
        SUCCESS_REWARD
    } else if phi < 0.0 {
        K_SHAPE * (phi - phi_prev) - TIME_PENALTY
    } else {
        0.0
    }
}

/// One-step bootstrap target `r + gamma (1 - done) max q_next`.
pub fn td_target(r: f64, done: bool, q_next: &[f64], gamma: f64) -> f64 {
    if done {
        return r;
    }
    r + gamma * q_next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Huber loss of `e = target - pred` and its derivative with respect to
/// `pred`.
pub fn huber_loss_and_grad(pred: f64, target: f64, kappa: f64) -> (f64, f64) {
    let e = target - pred;
    if e.abs() <= kappa {
        (0.5 * e * e, -e)
    } else {
        (kappa * (e.abs() - 0.5 * kappa), -kappa * e.signum())
    }
}

/// Linear decay from `start` to `end` over `fraction * total` steps, flat
/// afterwards.
pub fn linear_schedule(step: u64, total: u64, fraction: f64, start: f64, end: f64) -> f64 {
    let span = (fraction * total as f64).max(1.0);
    let p = step as f64 / span;
    if p >= 1.0 {
        end
    } else {
        start + (end - start) * p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_cases() {
        assert!((reward(-5.0, -10.0, false, false) - 4.95).abs() < 1e-12);
        assert_eq!(reward(-5.0, -10.0, true, false), -50.0);
        assert_eq!(reward(0.0, -1.0, false, false), 50.0);
        assert_eq!(reward(3.0, 2.0, false, false), 0.0);
    }

    #[test]
    fn td_examples() {
        assert_eq!(td_target(1.5, true, &[100.0], 0.99), 1.5);
        assert!((td_target(0.0, false, &[3.0, 10.0, -1.0], 0.99) - 9.9).abs() < 1e-12);
    }

    #[test]
    fn huber_examples() {
        assert_eq!(huber_loss_and_grad(1.0, 1.0, 1.0), (0.0, 0.0));
        assert_eq!(huber_loss_and_grad(0.0, 0.5, 1.0), (0.125, -0.5));
        let (l, g) = huber_loss_and_grad(0.0, 3.0, 1.0);
        assert_eq!((l, g.abs()), (2.5, 1.0));
    }

    #[test]
    fn schedule_endpoints() {
        assert_eq!(linear_schedule(0, 1000, 0.4, 1.0, 0.01), 1.0);
        assert!((linear_schedule(400, 1000, 0.4, 1.0, 0.01) - 0.01).abs() < 1e-15);
        assert_eq!(linear_schedule(900, 1000, 0.4, 1.0, 0.01), 0.01);
    }
}
