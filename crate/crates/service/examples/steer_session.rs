//! Starts a server on a free port, connects as an operator, and steers the
//! robot: new target, a via point, an inflated obstacle, then a pause.

use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use micronav_service::wire::Request;
use micronav_service::{Command, Server, ServerMsg, SessionConfig};
use tokio_tungstenite::tungstenite::Message;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let server = Server::bind("127.0.0.1:0", SessionConfig::arena(4)).await?;
    let url = format!("ws://{}", server.local_addr()?);
    tokio::spawn(server.run());

    let (mut ws, _) = tokio_tungstenite::connect_async(&url).await?;
    let script = [
        (10, Command::SetTarget { x: 1800.0, y: 300.0 }),
        (20, Command::AddVia { x: 1000.0, y: 150.0 }),
        (30, Command::InflateObstacle { obstacle: 0, delta: 60.0 }),
        (40, Command::Pause),
    ];
    let mut next = 0;
    let mut seq = 0;
    while let Ok(Some(msg)) = tokio::time::timeout(Duration::from_secs(1), ws.next()).await {
        let Message::Text(text) = msg? else { continue };
        match ServerMsg::from_json(&text)? {
            ServerMsg::Snapshot(s) => println!("snapshot {}x{} at {} fps, {} obstacles", s.width, s.height, s.fps, s.state.obstacles.len()),
            ServerMsg::Telemetry(t) => {
                let plan = t.plan.as_ref().map_or(0, |p| p.len());
                println!("frame {:3} {:?} robot ({:6.1}, {:6.1}) plan {plan:2} nodes, {} events", t.frame, t.mode, t.robot.x, t.robot.y, t.events.len());
                if let Some((at, cmd)) = script.get(next) {
                    if t.frame >= *at {
                        seq += 1;
                        ws.send(Message::text(Request { seq: Some(seq), command: cmd.clone() }.to_json())).await?;
                        next += 1;
                    }
                }
            }
            ServerMsg::Ack { command, frame, .. } => println!("ack {command}, effective at frame {frame}"),
            ServerMsg::Error { message, .. } => println!("error: {message}"),
        }
    }
    println!("paused; no more telemetry");
    Ok(())
}
