//! The reflection rules in isolation: a robot caught inside a zone picks
//! its escape point frame by frame until it is clear.

use micronav::escape::{rule_intermediate, RuleController};
use micronav::{Obstacle, Vec2};

fn main() {
    let obstacles = vec![Obstacle::new_static(0, Vec2::new(200.0, 200.0), 30.0, 80.0)];
    let tip = Vec2::new(180.0, 150.0);
    println!("arrow tip {tip:?} from (100, 150): {:?}", rule_intermediate(Vec2::new(100.0, 150.0), tip, &obstacles));

    let mut ctl = RuleController::new(1);
    let mut m = Vec2::new(170.0, 180.0);
    let mut dir = Vec2::new(1.0, 0.0);
    for frame in 1..=20 {
        let (case, d) = ctl.act(m, dir, &obstacles, 10.0);
        m += d;
        if d != Vec2::ZERO {
            dir = d / d.norm();
        }
        let clearance = m.dist(obstacles[0].center) - obstacles[0].safety_radius;
        println!("frame {frame:2}: case {case:?} robot ({:6.1}, {:6.1}) clearance {clearance:+6.1}", m.x, m.y);
        if clearance >= 0.0 {
            break;
        }
    }
}
