//! Plans across the six seeded benchmark arenas with the analytic planner
//! and reports length, node count, clearance and time.

use std::time::Instant;

use micronav::agp::{plan_2d, AgpParams};
use micronav::bench::arena_scene;

fn main() -> micronav::Result<()> {
    for arena in 1..=6 {
        let scene = arena_scene(arena)?;
        let (start, end) = (scene.start.unwrap(), scene.targets[0].pos);
        let t0 = Instant::now();
        let path = plan_2d(&scene.obstacles, start, end, &AgpParams::within(scene.width as f64, scene.height as f64))?;
        let ms = 1e3 * t0.elapsed().as_secs_f64();
        println!(
            "arena {arena} ({:2} obstacles): length {:8.2} px, {:2} nodes, clearance {:+.3}, {ms:.3} ms",
            scene.obstacles.len(),
            path.length,
            path.nodes.len(),
            path.min_clearance(&scene.zones()),
        );
    }
    Ok(())
}
