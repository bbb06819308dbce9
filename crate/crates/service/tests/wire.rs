use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use micronav::nav::{Controller, NavConfig};
use micronav::scene::{Obstacle, Target};
use micronav::sim::EventKind;
use micronav::{Scene, Vec2};
use micronav_service::wire::Snapshot;
use micronav_service::{Server, ServerMsg, SessionConfig, Telemetry, WorldSource};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

fn static_scene() -> Scene {
    let mut s = Scene::new(800, 600);
    s.obstacles = vec![
        Obstacle::new_static(1, Vec2::new(400.0, 300.0), 30.0, 60.0),
        Obstacle::new_static(2, Vec2::new(600.0, 150.0), 20.0, 40.0),
    ];
    s.start = Some(Vec2::new(100.0, 300.0));
    s.targets = vec![Target::fixed(Vec2::new(700.0, 300.0))];
    s
}

fn scene_config(controller: Controller) -> SessionConfig {
    SessionConfig {
        world: WorldSource::Scene(static_scene()),
        nav: NavConfig::with_controller(controller),
        policy: None,
        seed: 0,
        fps: 50.0,
    }
}

async fn start(config: SessionConfig) -> String {
    let server = Server::bind("127.0.0.1:0", config).await.unwrap();
    let addr = server.local_addr().unwrap();
    tokio::spawn(server.run());
    format!("ws://{addr}")
}

async fn connect(url: &str) -> (Ws, Snapshot) {
    let (mut ws, _) = tokio_tungstenite::connect_async(url).await.unwrap();
    match recv(&mut ws).await {
        ServerMsg::Snapshot(s) => (ws, s),
        other => panic!("expected a snapshot, got {other:?}"),
    }
}

async fn recv_raw(ws: &mut Ws) -> String {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next()).await.expect("server went quiet").unwrap().unwrap();
        if let Message::Text(t) = msg {
            return t.to_string();
        }
    }
}

async fn recv(ws: &mut Ws) -> ServerMsg {
    ServerMsg::from_json(&recv_raw(ws).await).unwrap()
}

async fn send(ws: &mut Ws, json: serde_json::Value) {
    ws.send(Message::text(json.to_string())).await.unwrap();
}

async fn telemetry(ws: &mut Ws) -> Telemetry {
    loop {
        if let ServerMsg::Telemetry(t) = recv(ws).await {
            return t;
        }
    }
}

/// Sends a command and returns the acknowledged frame of effect, keeping
/// the telemetry that arrived meanwhile.
async fn command(ws: &mut Ws, seq: u64, mut json: serde_json::Value, seen: &mut Vec<Telemetry>) -> Result<u64, String> {
    json["proto"] = 1.into();
    json["seq"] = seq.into();
    send(ws, json).await;
    loop {
        match recv(ws).await {
            ServerMsg::Telemetry(t) => seen.push(t),
            ServerMsg::Ack { seq: s, frame, .. } => {
                assert_eq!(s, Some(seq));
                return Ok(frame);
            }
            ServerMsg::Error { seq: s, message } => {
                assert_eq!(s, Some(seq));
                return Err(message);
            }
            ServerMsg::Snapshot(_) => panic!("second snapshot"),
        }
    }
}

/// Telemetry of frame `frame`, checking that no frame is skipped on the way.
async fn frame_at(ws: &mut Ws, frame: u64, seen: &mut Vec<Telemetry>) -> Telemetry {
    loop {
        let t = telemetry(ws).await;
        if let Some(prev) = seen.last() {
            assert_eq!(t.frame, prev.frame + 1);
        }
        seen.push(t.clone());
        if t.frame == frame {
            return t;
        }
        assert!(t.frame < frame, "frame {frame} was skipped");
    }
}

#[tokio::test]
async fn connect_sends_full_snapshot() {
    let url = start(scene_config(Controller::Rule)).await;
    let (mut ws, _) = tokio_tungstenite::connect_async(&url).await.unwrap();
    let raw: serde_json::Value = serde_json::from_str(&recv_raw(&mut ws).await).unwrap();
    assert_eq!(raw["proto"], 1);
    assert_eq!(raw["type"], "snapshot");
    let snap = match ServerMsg::from_json(&raw.to_string()).unwrap() {
        ServerMsg::Snapshot(s) => s,
        other => panic!("{other:?}"),
    };
    assert_eq!((snap.width, snap.height, snap.fps), (800.0, 600.0, 50.0));
    assert_eq!(snap.state.frame, 0);
    assert_eq!(snap.state.robot, Vec2::new(100.0, 300.0));
    assert_eq!(snap.state.obstacles.len(), 2);
    assert_eq!(snap.state.targets, vec![Vec2::new(700.0, 300.0)]);
    assert_eq!(snap.state.controller, Controller::Rule);
    let first = telemetry(&mut ws).await;
    assert_eq!(first.frame, 1);
    assert!(first.events.iter().any(|e| matches!(e.kind, EventKind::Replan { .. })));
}

#[tokio::test]
async fn set_target_replans_in_the_acknowledged_frame() {
    let url = start(scene_config(Controller::Rule)).await;
    let (mut ws, _) = connect(&url).await;
    let mut seen = Vec::new();
    for _ in 0..5 {
        seen.push(telemetry(&mut ws).await);
    }
    let f = command(&mut ws, 1, serde_json::json!({"type": "set_target", "x": 700.0, "y": 500.0}), &mut seen).await.unwrap();
    let t = frame_at(&mut ws, f, &mut seen).await;
    assert!(t.events.iter().any(|e| matches!(e.kind, EventKind::Replan { .. })), "{:?}", t.events);
    assert_eq!(t.targets, vec![Vec2::new(700.0, 500.0)]);
    assert_eq!(*t.plan.unwrap().last().unwrap(), Vec2::new(700.0, 500.0));
    // frames before the ack still show the old target
    assert!(seen.iter().filter(|s| s.frame < f).all(|s| s.targets == vec![Vec2::new(700.0, 300.0)]));
}

#[tokio::test]
async fn pause_and_resume_keep_frames_gap_free() {
    let url = start(scene_config(Controller::Rule)).await;
    let (mut ws, _) = connect(&url).await;
    let mut seen = Vec::new();
    for _ in 0..3 {
        seen.push(telemetry(&mut ws).await);
    }
    let paused_at = command(&mut ws, 1, serde_json::json!({"type": "pause"}), &mut seen).await.unwrap();
    // nothing is emitted while paused
    let quiet = tokio::time::timeout(Duration::from_millis(300), ws.next()).await;
    assert!(quiet.is_err(), "telemetry while paused: {quiet:?}");
    let resumed_at = command(&mut ws, 2, serde_json::json!({"type": "resume"}), &mut seen).await.unwrap();
    assert_eq!(paused_at, resumed_at);
    let t = frame_at(&mut ws, resumed_at + 3, &mut seen).await;
    assert!(!t.paused);
    let frames: Vec<u64> = seen.iter().map(|t| t.frame).collect();
    assert_eq!(frames, (1..=resumed_at + 3).collect::<Vec<_>>());
}

#[tokio::test]
async fn via_point_appears_in_the_next_plan() {
    let url = start(scene_config(Controller::Rule)).await;
    let (mut ws, _) = connect(&url).await;
    let mut seen = vec![telemetry(&mut ws).await];
    let via = Vec2::new(300.0, 500.0);
    let f = command(&mut ws, 7, serde_json::json!({"type": "add_via", "x": via.x, "y": via.y}), &mut seen).await.unwrap();
    let t = frame_at(&mut ws, f, &mut seen).await;
    assert_eq!(t.via, vec![via]);
    assert!(t.plan.unwrap().contains(&via));

    let f = command(&mut ws, 8, serde_json::json!({"type": "clear_via"}), &mut seen).await.unwrap();
    let t = frame_at(&mut ws, f, &mut seen).await;
    assert!(t.via.is_empty());
    assert!(!t.plan.unwrap().contains(&via));
}

#[tokio::test]
async fn inflation_grows_the_reported_zone() {
    let url = start(scene_config(Controller::Rule)).await;
    let (mut ws, snap) = connect(&url).await;
    let base = snap.state.obstacles.iter().find(|o| o.id == 1).unwrap().clone();
    assert_eq!(base.zone_r, base.safety_r);
    let mut seen = Vec::new();
    let f = command(&mut ws, 1, serde_json::json!({"type": "inflate_obstacle", "obstacle": 1, "delta": 150.0}), &mut seen).await.unwrap();
    let t = frame_at(&mut ws, f, &mut seen).await;
    let o = t.obstacles.iter().find(|o| o.id == 1).unwrap();
    assert_eq!(o.zone_r, base.safety_r + 150.0);
    assert_eq!(o.safety_r, base.safety_r);
    let other = t.obstacles.iter().find(|o| o.id == 2).unwrap();
    assert_eq!(other.zone_r, other.safety_r);
    assert!(seen.iter().filter(|s| s.frame < f).all(|s| s.obstacles.iter().all(|o| o.zone_r == o.safety_r)));
}

#[tokio::test]
async fn bad_commands_are_rejected_and_the_session_continues() {
    let url = start(scene_config(Controller::Rule)).await;
    let (mut ws, _) = connect(&url).await;
    let mut seen = Vec::new();
    let cases = [
        (serde_json::json!({"type": "inflate_obstacle", "obstacle": 1, "delta": -1.0}), "inflation"),
        (serde_json::json!({"type": "inflate_obstacle", "obstacle": 99, "delta": 10.0}), "unknown obstacle"),
        (serde_json::json!({"type": "set_target", "x": 900.0, "y": 100.0}), "outside"),
        (serde_json::json!({"type": "add_via", "x": -5.0, "y": 100.0}), "outside"),
        (serde_json::json!({"type": "add_via", "x": 410.0, "y": 300.0}), "inside the zone of obstacle 1"),
        (serde_json::json!({"type": "switch_controller", "controller": "rl"}), "policy"),
        (serde_json::json!({"type": "teleport"}), "bad command"),
        (serde_json::json!({"type": "set_target", "x": 1.0}), "bad command"),
    ];
    for (i, (json, needle)) in cases.into_iter().enumerate() {
        let err = command(&mut ws, i as u64, json, &mut seen).await.unwrap_err();
        assert!(err.contains(needle), "{err:?} lacks {needle:?}");
    }

    ws.send(Message::text("{not json")).await.unwrap();
    ws.send(Message::text(r#"{"proto":2,"seq":40,"type":"pause"}"#)).await.unwrap();
    ws.send(Message::text(r#"{"seq":41,"type":"pause"}"#)).await.unwrap();
    let mut errors = Vec::new();
    while errors.len() < 3 {
        match recv(&mut ws).await {
            ServerMsg::Error { seq, message } => errors.push((seq, message)),
            ServerMsg::Telemetry(t) => seen.push(t),
            other => panic!("{other:?}"),
        }
    }
    assert_eq!(errors[0].0, None);
    assert!(errors[0].1.contains("malformed JSON"));
    assert_eq!(errors[1].0, Some(40));
    assert!(errors[1].1.contains("proto"));
    assert_eq!(errors[2].0, Some(41));

    // still alive, nothing was applied, and frames never skipped
    let f = command(&mut ws, 50, serde_json::json!({"type": "set_target", "x": 700.0, "y": 500.0}), &mut seen).await.unwrap();
    let t = frame_at(&mut ws, f, &mut seen).await;
    assert!(t.obstacles.iter().all(|o| o.zone_r == o.safety_r));
    assert!(t.via.is_empty());
    assert_eq!(t.controller, Controller::Rule);
    let frames: Vec<u64> = seen.iter().map(|t| t.frame).collect();
    assert_eq!(frames, (1..=f).collect::<Vec<_>>());
}

#[tokio::test]
async fn controller_switch_takes_effect_at_the_ack_frame() {
    let url = start(scene_config(Controller::Rule)).await;
    let (mut ws, _) = connect(&url).await;
    let mut seen = vec![telemetry(&mut ws).await];
    let f = command(&mut ws, 3, serde_json::json!({"type": "switch_controller", "controller": "none"}), &mut seen).await.unwrap();
    let t = frame_at(&mut ws, f, &mut seen).await;
    assert_eq!(t.controller, Controller::None);
    assert!(t.events.iter().any(|e| matches!(e.kind, EventKind::Replan { .. })));
    assert!(seen.iter().filter(|s| s.frame < f).all(|s| s.controller == Controller::Rule));
}

#[tokio::test]
async fn reset_restores_the_world_and_keeps_counting() {
    let url = start(scene_config(Controller::Rule)).await;
    let (mut ws, snap) = connect(&url).await;
    let mut seen = Vec::new();
    command(&mut ws, 1, serde_json::json!({"type": "inflate_obstacle", "obstacle": 2, "delta": 30.0}), &mut seen).await.unwrap();
    for _ in 0..5 {
        seen.push(telemetry(&mut ws).await);
    }
    let f = command(&mut ws, 2, serde_json::json!({"type": "reset"}), &mut seen).await.unwrap();
    let t = frame_at(&mut ws, f, &mut seen).await;
    assert!(t.obstacles.iter().all(|o| o.zone_r == o.safety_r));
    // one step from the start position
    assert!(t.robot.dist(snap.state.robot) <= 10.0 + 1e-9);
    assert!(t.events.iter().any(|e| matches!(e.kind, EventKind::Replan { .. })));
    for w in seen.windows(2) {
        assert_eq!(w[1].frame, w[0].frame + 1);
    }
}

#[tokio::test]
async fn sessions_are_isolated() {
    let url = start(scene_config(Controller::Rule)).await;
    let (mut a, _) = connect(&url).await;
    let (mut b, _) = connect(&url).await;
    let mut seen_a = Vec::new();
    command(&mut a, 1, serde_json::json!({"type": "pause"}), &mut seen_a).await.unwrap();
    let mut seen_b = Vec::new();
    let f = command(&mut b, 1, serde_json::json!({"type": "set_target", "x": 700.0, "y": 500.0}), &mut seen_b).await.unwrap();
    let t = frame_at(&mut b, f + 5, &mut seen_b).await;
    assert_eq!(t.targets, vec![Vec2::new(700.0, 500.0)]);
    assert!(!t.paused);

    let g = command(&mut a, 2, serde_json::json!({"type": "resume"}), &mut seen_a).await.unwrap();
    let u = frame_at(&mut a, g, &mut seen_a).await;
    assert_eq!(u.targets, vec![Vec2::new(700.0, 300.0)]);
}

#[tokio::test]
async fn emitted_plans_clear_the_zones_they_were_planned_against() {
    let config = SessionConfig {
        world: WorldSource::Arena { moving: true },
        nav: NavConfig::with_controller(Controller::Rule),
        policy: None,
        seed: 11,
        fps: 100.0,
    };
    let url = start(config).await;
    let (mut ws, snap) = connect(&url).await;
    let mut prev = snap.state;
    let mut checked = 0;
    for _ in 0..120 {
        let t = telemetry(&mut ws).await;
        assert_eq!(t.frame, prev.frame + 1);
        if let (true, Some(plan)) = (t.planned, &t.plan) {
            assert_eq!(plan[0], prev.robot);
            // zones as seen when the plan was made: clipped below the robot
            // distance, dropped when they contain the robot
            let zones: Vec<(Vec2, f64)> = prev
                .obstacles
                .iter()
                .map(|o| (Vec2::new(o.x, o.y), o))
                .filter(|(c, o)| prev.robot.dist(*c) >= o.safety_r)
                .map(|(c, o)| (c, o.zone_r.min(prev.robot.dist(c) - 1e-3)))
                .collect();
            for seg in plan.windows(2) {
                for &(c, r) in &zones {
                    assert!(segment_distance(seg[0], seg[1], c) >= r - 1e-6, "frame {}", t.frame);
                }
            }
            checked += 1;
        }
        prev = t;
    }
    assert!(checked > 50);
}

fn segment_distance(a: Vec2, b: Vec2, p: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.x * ab.x + ab.y * ab.y;
    let t = if len2 == 0.0 { 0.0 } else { (((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2).clamp(0.0, 1.0) };
    p.dist(a + ab * t)
}

#[test]
fn requests_round_trip_through_the_parser() {
    use micronav_service::wire::{parse_request, Request};
    use micronav_service::Command;
    let commands = [
        Command::SetTarget { x: 1.5, y: 2.0 },
        Command::AddVia { x: 3.0, y: 4.0 },
        Command::ClearVia,
        Command::InflateObstacle { obstacle: 3, delta: 150.0 },
        Command::SwitchController { controller: Controller::Rl },
        Command::Pause,
        Command::Resume,
        Command::Reset { seed: Some(9) },
        Command::Reset { seed: None },
    ];
    for (i, command) in commands.into_iter().enumerate() {
        let req = Request { seq: Some(i as u64), command };
        assert_eq!(parse_request(&req.to_json()).unwrap(), req);
    }
    assert_eq!(parse_request(r#"{"proto":1,"type":"pause"}"#).unwrap().seq, None);
}
