//! Turns a binary occupancy mask into circular obstacles and saves the
//! result as a scene document.

use micronav::mask::{connected_components, extract_obstacles, BinaryMask};
use micronav::scene::Target;
use micronav::{Scene, Vec2};

fn main() -> micronav::Result<()> {
    let mut mask = BinaryMask::new(400, 300)?;
    mask.fill_rect(80, 60, 110, 100);
    mask.fill_rect(200, 150, 260, 190);
    mask.fill_rect(320, 40, 340, 260);

    for c in connected_components(&mask) {
        println!("blob {}x{} at ({}, {}), {} px", c.max_x - c.min_x + 1, c.max_y - c.min_y + 1, c.min_x, c.min_y, c.pixels);
    }
    let robot_radius = 10.0;
    let mut scene = Scene::new(400, 300);
    scene.obstacles = extract_obstacles(&mask, robot_radius)?;
    scene.start = Some(Vec2::new(20.0, 150.0));
    scene.targets = vec![Target::fixed(Vec2::new(380.0, 280.0))];
    for o in &scene.obstacles {
        println!("obstacle {} center {:?} r {:.2} zone {:.2}", o.id, o.center, o.radius, o.safety_radius);
    }
    let path = std::env::temp_dir().join("mask_scene.json");
    scene.save(&path)?;
    println!("saved {}", path.display());
    Ok(())
}
