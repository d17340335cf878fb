//! Scripted WebSocket client against an in-process server.

#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::Path;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use teleop_entropy::CommandSample64;
use teleop_entropy_harness::arena::Arena;
use teleop_entropy_harness::config::SessionConfig;
use teleop_entropy_harness::driver::{simulate_driver, DriverModel, Segment};
use teleop_entropy_harness::server::serve;
use teleop_entropy_harness::wire::{ClientMessage, ServerMessage};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::oneshot;
use tokio::task::JoinHandle;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

pub type Client = WebSocketStream<MaybeTlsStream<TcpStream>>;

pub struct TestServer {
    pub addr: SocketAddr,
    stop: oneshot::Sender<()>,
    task: JoinHandle<std::io::Result<()>>,
}

impl TestServer {
    pub async fn start(config: SessionConfig) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let (stop, rx) = oneshot::channel::<()>();
        let task = tokio::spawn(serve(listener, config, async {
            let _ = rx.await;
        }));
        Self { addr, stop, task }
    }

    pub async fn connect(&self) -> Client {
        tokio_tungstenite::connect_async(format!("ws://{}", self.addr)).await.unwrap().0
    }

    /// Stops accepting, closes live sessions and waits for their files.
    pub async fn shutdown(self) {
        let _ = self.stop.send(());
        self.task.await.unwrap().unwrap();
    }
}

pub fn parse(msg: &Message) -> Option<ServerMessage> {
    match msg {
        Message::Text(t) => Some(serde_json::from_str(t).expect("server sends valid frames")),
        _ => None,
    }
}

/// A workload step: `calm_s` of light noise, then `loaded_s` of heavy.
pub fn scripted_commands(calm_s: f64, loaded_s: f64, seed: u64) -> Vec<CommandSample64> {
    let schedule = [Segment::constant("calm", calm_s, 1.0), Segment::constant("loaded", loaded_s, 8.0)]
        .into_iter()
        .filter(|s| s.duration_s > 0.0)
        .collect();
    let model = DriverModel::new(schedule, seed);
    simulate_driver(&model, &Arena::default(), calm_s + loaded_s).unwrap()
}

/// Sends `commands` at 20 Hz of wall-clock time, then closes. Returns every
/// frame the server sent, in order.
pub async fn drive_at_20hz(client: Client, commands: &[CommandSample64]) -> Vec<ServerMessage> {
    let (mut tx, mut rx) = client.split();
    let reader = tokio::spawn(async move {
        let mut got = Vec::new();
        while let Some(Ok(m)) = rx.next().await {
            if let Some(s) = parse(&m) {
                got.push(s);
            }
        }
        got
    });
    let mut tick = tokio::time::interval(Duration::from_millis(50));
    for &c in commands {
        tick.tick().await;
        let text = serde_json::to_string(&ClientMessage::from(c)).unwrap();
        tx.send(Message::text(text)).await.unwrap();
    }
    tx.send(Message::Close(None)).await.unwrap();
    tokio::time::timeout(Duration::from_secs(10), reader).await.unwrap().unwrap()
}

pub fn config_with_outputs(dir: &Path) -> SessionConfig {
    let mut cfg = SessionConfig::default();
    cfg.output.trace = Some(dir.join("live.csv"));
    cfg.output.log = Some(dir.join("live.jsonl"));
    cfg
}
