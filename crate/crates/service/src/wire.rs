//! JSON messages exchanged with operator consoles. Every message carries
//! `"proto": 1` next to its `"type"` tag; see `docs/wire.md`.

use micronav::escape::Case;
use micronav::nav::Controller;
use micronav::scene::ObstacleKind;
use micronav::sim::{Event, Mode};
use micronav::Vec2;
use serde::{Deserialize, Serialize};

pub const PROTO: u32 = 1;

/// Steering command sent by a client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    SetTarget { x: f64, y: f64 },
    AddVia { x: f64, y: f64 },
    ClearVia,
    InflateObstacle { obstacle: u32, delta: f64 },
    SwitchController { controller: Controller },
    Pause,
    Resume,
    Reset {
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SetTarget { .. } => "set_target",
            Command::AddVia { .. } => "add_via",
            Command::ClearVia => "clear_via",
            Command::InflateObstacle { .. } => "inflate_obstacle",
            Command::SwitchController { .. } => "switch_controller",
            Command::Pause => "pause",
            Command::Resume => "resume",
            Command::Reset { .. } => "reset",
        }
    }
}

/// A command with its envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub seq: Option<u64>,
    pub command: Command,
}

/// Why an incoming text frame was refused, with whatever `seq` could be
/// recovered from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejected {
    pub seq: Option<u64>,
    pub message: String,
}

pub fn parse_request(text: &str) -> Result<Request, Rejected> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Rejected { seq: None, message: format!("malformed JSON: {e}") })?;
    let Some(obj) = value.as_object_mut() else {
        return Err(Rejected { seq: None, message: "message must be a JSON object".into() });
    };
    let seq = match obj.remove("seq") {
        None | Some(serde_json::Value::Null) => None,
        Some(v) => Some(v.as_u64().ok_or_else(|| Rejected { seq: None, message: "seq must be a non-negative integer".into() })?),
    };
    let reject = |message: String| Rejected { seq, message };
    match obj.remove("proto").and_then(|p| p.as_u64()) {
        Some(p) if p == PROTO as u64 => {}
        Some(p) => return Err(reject(format!("unsupported proto {p}, server speaks {PROTO}"))),
        None => return Err(reject("missing proto".into())),
    }
    let command = serde_json::from_value(value).map_err(|e| reject(format!("bad command: {e}")))?;
    Ok(Request { seq, command })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleView {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub r: f64,
    /// Simulator safety zone.
    pub safety_r: f64,
    /// Zone the planner avoids: `safety_r` plus the operator's inflation.
    pub zone_r: f64,
    pub vx: f64,
    pub vy: f64,
    pub kind: ObstacleKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub frame: u64,
    pub paused: bool,
    pub robot: Vec2,
    pub robot_radius: f64,
    pub heading: Vec2,
    pub mode: Mode,
    pub case: Option<Case>,
    pub controller: Controller,
    /// Minimum signed clearance to any safety zone; null without obstacles.
    pub phi: Option<f64>,
    pub obstacles: Vec<ObstacleView>,
    pub targets: Vec<Vec2>,
    pub active_target: usize,
    pub via: Vec<Vec2>,
    /// Nodes of the plan used this frame. It was computed from the previous
    /// frame's obstacle state.
    pub plan: Option<Vec<Vec2>>,
    /// `plan` was recomputed this frame.
    pub planned: bool,
    pub collisions: u64,
    /// Events raised since the previous telemetry message.
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub width: f64,
    pub height: f64,
    pub fps: f64,
    pub seed: u64,
    #[serde(flatten)]
    pub state: Telemetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMsg {
    Snapshot(Snapshot),
    Telemetry(Telemetry),
    /// `frame` is the first telemetry frame that reflects the command.
    Ack { seq: Option<u64>, command: String, frame: u64 },
    Error { seq: Option<u64>, message: String },
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    proto: u32,
    #[serde(flatten)]
    body: T,
}

impl ServerMsg {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&Envelope { proto: PROTO, body: self }).expect("server messages serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<ServerMsg> {
        let env: Envelope<ServerMsg> = serde_json::from_str(text)?;
        if env.proto != PROTO {
            return Err(serde::de::Error::custom(format!("unsupported proto {}", env.proto)));
        }
        Ok(env.body)
    }
}

impl Request {
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(&self.command).expect("commands serialize");
        let obj = v.as_object_mut().expect("commands are objects");
        obj.insert("proto".into(), PROTO.into());
        if let Some(seq) = self.seq {
            obj.insert("seq".into(), seq.into());
        }
        v.to_string()
    }
}
