//! WebSocket session server for live steering. Every connection gets its
//! own simulation, stepped at a fixed rate; commands are applied between
//! frames and each frame is pushed to the client as telemetry.

pub mod session;
pub mod wire;

use std::net::SocketAddr;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream, ToSocketAddrs};
use tokio::sync::mpsc;
use tokio::time::MissedTickBehavior;
use tokio_tungstenite::tungstenite::Message;

pub use session::{Session, SessionConfig, WorldSource};
pub use wire::{Command, Request, ServerMsg, Telemetry, PROTO};

const QUEUE: usize = 256;

pub struct Server {
    listener: TcpListener,
    config: SessionConfig,
}

impl Server {
    /// Binds the listener after checking that a session can be built from
    /// `config`.
    pub async fn bind(addr: impl ToSocketAddrs, config: SessionConfig) -> std::io::Result<Server> {
        Session::new(config.clone()).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
        let listener = TcpListener::bind(addr).await?;
        Ok(Server { listener, config })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections until the task is dropped.
    pub async fn run(self) -> std::io::Result<()> {
        loop {
            let (stream, peer) = self.listener.accept().await?;
            let config = self.config.clone();
            tokio::spawn(async move {
                log::info!("session {peer} opened");
                match connection(stream, config).await {
                    Ok(()) => log::info!("session {peer} closed"),
                    Err(e) => log::warn!("session {peer} ended: {e}"),
                }
            });
        }
    }
}

/// Runs a server on its own runtime until Ctrl-C.
pub fn serve(addr: &str, config: SessionConfig) -> std::io::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let server = Server::bind(addr, config).await?;
        log::info!("listening on ws://{}", server.local_addr()?);
        tokio::select! {
            r = server.run() => r,
            r = tokio::signal::ctrl_c() => r,
        }
    })
}

type BoxError = Box<dyn std::error::Error + Send + Sync>;

async fn connection(stream: TcpStream, config: SessionConfig) -> Result<(), BoxError> {
    let ws = tokio_tungstenite::accept_async(stream).await?;
    let (mut sink, mut source) = ws.split();
    let (out_tx, mut out_rx) = mpsc::channel::<String>(QUEUE);
    let (in_tx, mut in_rx) = mpsc::channel::<Message>(QUEUE);

    let writer = tokio::spawn(async move {
        while let Some(text) = out_rx.recv().await {
            if sink.send(Message::text(text)).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });
    let reader = tokio::spawn(async move {
        while let Some(Ok(msg)) = source.next().await {
            if msg.is_close() || in_tx.send(msg).await.is_err() {
                break;
            }
        }
    });

    let result = drive(config, &mut in_rx, &out_tx).await;
    drop(out_tx);
    reader.abort();
    let _ = writer.await;
    result
}

/// The session owner: the only place that touches the simulation.
async fn drive(config: SessionConfig, inbox: &mut mpsc::Receiver<Message>, out: &mpsc::Sender<String>) -> Result<(), BoxError> {
    let mut session = Session::new(config)?;
    out.send(ServerMsg::Snapshot(session.snapshot()).to_json()).await?;

    let mut clock = tokio::time::interval(Duration::from_secs_f64(1.0 / session.fps()));
    // a slow frame delays the following ones; none is dropped
    clock.set_missed_tick_behavior(MissedTickBehavior::Delay);
    clock.tick().await;

    loop {
        tokio::select! {
            _ = clock.tick() => {
                if let Some(t) = session.tick()? {
                    out.send(ServerMsg::Telemetry(t).to_json()).await?;
                }
            }
            msg = inbox.recv() => {
                let Some(msg) = msg else { return Ok(()) };
                let reply = match msg {
                    Message::Text(text) => handle_text(&mut session, &text),
                    Message::Binary(_) => ServerMsg::Error { seq: None, message: "binary frames are not supported".into() },
                    _ => continue,
                };
                out.send(reply.to_json()).await?;
            }
        }
    }
}

fn handle_text(session: &mut Session, text: &str) -> ServerMsg {
    match wire::parse_request(text) {
        Err(r) => ServerMsg::Error { seq: r.seq, message: r.message },
        Ok(req) => match session.apply(&req.command) {
            Ok(()) => ServerMsg::Ack { seq: req.seq, command: req.command.name().into(), frame: session.next_frame() },
            Err(e) => ServerMsg::Error { seq: req.seq, message: e.to_string() },
        },
    }
}
