//! Operator edits to a plan: inflating one obstacle's zone pushes the path
//! away from it, and a via point drags the path through a chosen spot.

use micronav::agp::{plan_2d, AgpParams, InflationSpec};
use micronav::{Obstacle, Vec2};

fn main() -> micronav::Result<()> {
    let obstacles = vec![
        Obstacle::new_static(1, Vec2::new(300.0, 200.0), 50.0, 75.0),
        Obstacle::new_static(2, Vec2::new(550.0, 320.0), 50.0, 75.0),
    ];
    let (s, e) = (Vec2::new(50.0, 220.0), Vec2::new(800.0, 250.0));

    let base = plan_2d(&obstacles, s, e, &AgpParams::default())?;
    println!("plain:    {:7.2} px via {:?}", base.length, base.nodes);

    let inflation = InflationSpec::new().with(1, 150.0)?;
    let wide = plan_2d(&obstacles, s, e, &AgpParams { inflation, ..AgpParams::default() })?;
    println!("inflated: {:7.2} px via {:?}", wide.length, wide.nodes);

    let via = vec![Vec2::new(420.0, 60.0)];
    let routed = plan_2d(&obstacles, s, e, &AgpParams { via, ..AgpParams::default() })?;
    println!("via:      {:7.2} px via {:?}", routed.length, routed.nodes);
    Ok(())
}
