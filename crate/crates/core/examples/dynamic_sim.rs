//! Steps a seeded dynamic arena with a robot heading straight for the
//! target and prints the events the simulator raises.

use micronav::bench::arena_scenario;
use micronav::nav::track_bearing;
use micronav::sim::net_velocity;
use micronav::Vec2;

fn main() -> micronav::Result<()> {
    let mut sim = arena_scenario(7, false)?;
    let target = sim.state.targets[0].pos;
    while sim.state.frame < 400 {
        let (theta, d) = track_bearing(sim.state.robot, target);
        if d < 10.0 {
            break;
        }
        let step = sim.robot_speed.min(d);
        sim.step(Vec2::new(theta.cos(), theta.sin()) * step)?;
        for e in sim.state.events.drain(..) {
            println!("{}", serde_json::to_string(&e).unwrap());
        }
    }
    println!("frame {} robot {:?} collisions {} clearance {:.1}", sim.state.frame, sim.state.robot, sim.state.collisions, sim.min_clearance());
    // rolling speed of a 5 um robot at 20 Hz against a 30 um/s flow
    println!("net velocity {:.1} um/s", net_velocity(20.0, 5.0, 0.2, 30.0));
    Ok(())
}
