//! Navigates the bundled vascular phantom and writes the trajectory log.

use std::path::Path;

use micronav::bench::{cmd_scenario, ScenarioSource};
use micronav::nav::{Controller, NavConfig};

fn main() -> micronav::Result<()> {
    let phantom = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/phantom_vascular.json");
    let out = std::env::temp_dir().join("phantom_trajectory.jsonl");
    let mut log = std::fs::File::create(&out)?;
    let r = cmd_scenario(&ScenarioSource::Scene(phantom), NavConfig::with_controller(Controller::Rule), None, 0, 2000, Some(&mut log))?;
    println!("{:?} in {} frames, {} collisions, {:.2} ms/frame", r.outcome, r.frames, r.collisions, r.mean_compute_ms);
    println!("trajectory in {}", out.display());
    Ok(())
}
