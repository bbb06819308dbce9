//! Runs the grid, sampling and swarm baselines next to the analytic planner
//! on one benchmark arena.

use micronav::bench::{arena_scene, run_planner, Planner};

fn main() -> micronav::Result<()> {
    let arena = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let scene = arena_scene(arena)?;
    println!("arena {arena}: {} obstacles", scene.obstacles.len());
    for planner in Planner::ALL {
        for seed in 0..3 {
            let (length, time_s) = run_planner(planner, &scene, seed);
            let length = length.map_or("infeasible".to_string(), |l| format!("{l:.2} px"));
            println!("{:<7} seed {seed}: {length:>12} in {:8.2} ms", planner.name(), 1e3 * time_s);
        }
    }
    Ok(())
}
