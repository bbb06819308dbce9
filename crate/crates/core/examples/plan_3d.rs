//! Plans through a cloud of spheres by slicing planes around the
//! start-end axis and lifting the best slice back to 3D.

use std::time::Instant;

use micronav::agp::{SliceOutcome, SphereScene, DEFAULT_ALPHA, DEFAULT_PLANES, DEFAULT_SPACING};

fn main() -> micronav::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let scene = SphereScene::random(30, seed);
    let t0 = Instant::now();
    let plan = scene.plan(DEFAULT_PLANES, DEFAULT_SPACING, DEFAULT_ALPHA)?;
    let ms = 1e3 * t0.elapsed().as_secs_f64();
    for (i, o) in plan.outcomes.iter().enumerate() {
        match o {
            SliceOutcome::Planned { length } => println!("plane {i:2}: {length:8.2}"),
            SliceOutcome::Failed { reason } => println!("plane {i:2}: failed ({reason})"),
        }
    }
    let clearance = plan
        .waypoints
        .iter()
        .flat_map(|w| scene.spheres.iter().map(move |s| w.dist(s.center) - s.radius - scene.robot_radius))
        .fold(f64::INFINITY, f64::min);
    println!("best plane {} length {:.2} nodes {} clearance {clearance:.3} in {ms:.1} ms", plan.plane, plan.length, plan.nodes.len());
    Ok(())
}
