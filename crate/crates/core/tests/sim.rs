use std::collections::BTreeSet;

use micronav::geom::Vec2;
use micronav::rng::Prng;
use micronav::scene::ObstacleKind;
use micronav::sim::*;
use proptest::prelude::*;

fn assets() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

fn random_displacement(rng: &mut Prng, vm: f64) -> Vec2 {
    Vec2::from_angle(rng.uniform(0.0, std::f64::consts::TAU)) * rng.uniform(0.0, vm)
}

fn arena_sim(seed: u64) -> Sim {
    let c = SimConfig::arena(seed);
    let center = Vec2::new(1000.0, 1000.0);
    let obs = generate_dynamic(&c, &[center]).unwrap();
    Sim::new(c.width, c.height, c.robot_radius, c.robot_speed, center, obs, vec![])
}

#[test]
fn speeds_conserved_over_ten_thousand_steps() {
    let mut sim = arena_sim(5);
    let initial: Vec<f64> = sim.state.obstacles.iter().map(|o| o.speed()).collect();
    let mut rng = Prng::new(99);
    for _ in 0..10_000 {
        let d = random_displacement(&mut rng, 10.0);
        sim.step(d).unwrap();
        for o in &sim.state.obstacles {
            assert!(o.center.x >= -o.radius && o.center.x <= 2000.0 + o.radius);
            assert!(o.center.y >= -o.radius && o.center.y <= 2000.0 + o.radius);
        }
    }
    for (o, s) in sim.state.obstacles.iter().zip(initial) {
        assert!((o.speed() - s).abs() <= 1e-9, "obstacle {} speed {} vs {}", o.id, o.speed(), s);
        if o.kind == ObstacleKind::Static {
            assert_eq!(o.speed(), 0.0);
        }
    }
}

#[test]
fn identical_command_streams_give_identical_logs() {
    let run = || {
        let mut sim = arena_sim(8);
        let mut rng = Prng::new(1);
        let mut log = TrajectoryLog::new(Vec::new());
        for _ in 0..500 {
            sim.step(random_displacement(&mut rng, 10.0)).unwrap();
            let rec = FrameRecord {
                frame: sim.state.frame,
                robot: sim.state.robot,
                phi: sim.min_clearance(),
                mode: Mode::Global,
                events: std::mem::take(&mut sim.state.events),
                plan: None,
            };
            log.write(&rec).unwrap();
        }
        log.into_inner()
    };
    let a = run();
    assert_eq!(a, run());
    let text = String::from_utf8(a).unwrap();
    let mut last = 0;
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let f = v["frame"].as_u64().unwrap();
        assert!(f > last);
        last = f;
        for e in v["events"].as_array().unwrap() {
            assert_eq!(e["frame"].as_u64().unwrap(), f);
        }
        assert!(v["mode"] == "global" && v["robot"].as_array().unwrap().len() == 2);
    }
}

#[test]
fn straight_channel_phantom_has_two_rows() {
    let scene = load_phantom(assets().join("phantom_channel.json")).unwrap();
    let cells: Vec<_> = scene.obstacles.iter().filter(|o| o.kind == ObstacleKind::BoundaryCell).collect();
    // brute-force rasterization of the two walls
    let g = PHANTOM_CELL;
    let mut want = BTreeSet::new();
    for y in [80.0f64, 320.0] {
        for k in 0..=120_000 {
            let x = k as f64 * 0.01;
            let (i, j) = ((x / g).floor() as i64, (y / g).floor() as i64);
            if (i as f64 + 0.5) * g <= 1200.0 {
                want.insert((i, j));
            }
        }
    }
    let got: BTreeSet<_> = cells.iter().map(|o| ((o.center.x / g).floor() as i64, (o.center.y / g).floor() as i64)).collect();
    assert_eq!(got, want);
    let rows: BTreeSet<i64> = got.iter().map(|c| c.1).collect();
    assert_eq!(rows.len(), 2);
    let expected_r = std::f64::consts::SQRT_2 * 15.0 + 8.0;
    assert!(cells.iter().all(|o| (o.safety_radius - expected_r).abs() < 1e-12));
}

#[test]
fn phantom_without_walls_is_unchanged() {
    let text = r#"{"version":1,"width":300,"height":300,"obstacles":[{"id":0,"cx":50,"cy":50,"r":10,"safety_r":20,"kind":"static"}]}"#;
    let plain = micronav::Scene::from_json(text).unwrap();
    assert_eq!(phantom_from_json(text, 30.0).unwrap(), plain);
}

#[test]
fn vascular_phantom_loads_with_small_robot() {
    let scene = load_phantom(assets().join("phantom_vascular.json")).unwrap();
    let robot = scene.robot.unwrap();
    assert_eq!(robot.radius, 8.0);
    let circles: Vec<_> = scene.obstacles.iter().filter(|o| o.kind != ObstacleKind::BoundaryCell).collect();
    assert!(!circles.is_empty() && circles.iter().all(|o| o.radius == 10.0));
    assert!(scene.obstacles.iter().any(|o| o.kind == ObstacleKind::BoundaryCell));
    let mut sim = Sim::from_scene(&scene, robot.radius, robot.speed);
    let speeds: Vec<f64> = sim.state.obstacles.iter().map(|o| o.speed()).collect();
    for _ in 0..2000 {
        sim.step(Vec2::ZERO).unwrap();
    }
    for (o, s) in sim.state.obstacles.iter().zip(speeds) {
        assert!((o.speed() - s).abs() <= 1e-9);
    }
}

#[test]
fn moving_target_advances_by_script() {
    let t = micronav::scene::Target { pos: Vec2::new(100.0, 100.0), vel: Vec2::new(2.0, -1.0) };
    let mut sim = Sim::new(500.0, 500.0, 5.0, 10.0, Vec2::new(10.0, 10.0), vec![], vec![t]);
    for _ in 0..10 {
        sim.step(Vec2::ZERO).unwrap();
    }
    assert_eq!(sim.state.targets[0].pos, Vec2::new(120.0, 90.0));
}

proptest! {
    #[test]
    fn min_clearance_matches_brute_force(seed in 0u64..500, x in 0.0..2000.0f64, y in 0.0..2000.0f64) {
        let mut sim = arena_sim(seed % 7);
        sim.state.robot = Vec2::new(x, y);
        let mut best = f64::INFINITY;
        for o in &sim.state.obstacles {
            let d = ((x - o.center.x).powi(2) + (y - o.center.y).powi(2)).sqrt() - o.safety_radius;
            if d < best { best = d; }
        }
        prop_assert!((min_clearance(&sim.state) - best).abs() < 1e-9);
    }

    #[test]
    fn min_clearance_is_one_lipschitz(seed in 0u64..7, a in (0.0..2000.0f64, 0.0..2000.0f64), b in (0.0..2000.0f64, 0.0..2000.0f64)) {
        let sim = arena_sim(seed);
        let (p, q) = (Vec2::new(a.0, a.1), Vec2::new(b.0, b.1));
        let obs = &sim.state.obstacles;
        prop_assert!((clearance_at(obs, p) - clearance_at(obs, q)).abs() <= p.dist(q) + 1e-9);
    }

    #[test]
    fn net_velocity_formula(f in 0.0..100.0f64, r in 0.1..50.0f64, a in 0.01..1.0f64, u in 0.0..1000.0f64) {
        let v = net_velocity(f, r, a, u);
        prop_assert!((v - (a * 2.0 * std::f64::consts::PI * r * f - u)).abs() < 1e-9);
    }
}
