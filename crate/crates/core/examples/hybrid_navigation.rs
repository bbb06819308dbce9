//! The full closed loop on the dynamic arena: global planning with each
//! local controller, and each controller without the planner.

use micronav::bench::{bundled_policy, cmd_scenario, ScenarioSource, DEFAULT_FRAMES_CAP};
use micronav::nav::{Controller, NavConfig};

fn main() -> micronav::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let policy = bundled_policy()?;
    for (ctl, use_planner) in [
        (Controller::None, true),
        (Controller::Rule, true),
        (Controller::Rl, true),
        (Controller::Rule, false),
        (Controller::Rl, false),
    ] {
        let config = NavConfig { use_planner, ..NavConfig::with_controller(ctl) };
        let r = cmd_scenario(&ScenarioSource::Fixed, config, Some(policy.clone()), seed, DEFAULT_FRAMES_CAP, None)?;
        println!(
            "{:<5} planner {:<5}: {:?} after {:4} frames, {:2} collisions, {:3} local frames, {:.2} ms/frame",
            format!("{ctl:?}").to_lowercase(),
            use_planner,
            r.outcome,
            r.frames,
            r.collisions,
            r.local_frames,
            r.mean_compute_ms
        );
    }
    Ok(())
}
