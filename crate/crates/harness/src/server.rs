//! Live session service over WebSocket.
//!
//! One operator at a time. Each connection's frames are handled in order on
//! its own task, so the session (pipeline, trace, captured log) is only ever
//! touched from one place.

use std::collections::VecDeque;
use std::fs::File;
use std::future::Future;
use std::io::{self, BufWriter, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::watch;
use tokio::task::JoinSet;
use tokio::time::Instant;
use tokio_tungstenite::tungstenite::protocol::frame::coding::CloseCode;
use tokio_tungstenite::tungstenite::protocol::CloseFrame;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::WebSocketStream;
use tracing::{info, warn};

use crate::arena::{Arena, Pose, STEP_S};
use crate::config::SessionConfig;
use crate::session::Session;
use crate::telemetry::{write_record, LogHeader};
use crate::wire::{ClientMessage, ServerMessage, PROTOCOL_VERSION};

pub const NOMINAL_HZ: f64 = 20.0;
pub const RATE_WINDOW: Duration = Duration::from_secs(5);
const RATE_CHECK_EVERY: Duration = Duration::from_secs(1);
const REFUSAL_LINGER: Duration = Duration::from_secs(2);
/// Longest gap integrated into the pose in one step.
const MAX_POSE_DT_S: f64 = 0.25;

pub const BUSY_REASON: &str = "a session is already in progress; one operator at a time";

/// Wall-clock command rate over a sliding window.
#[derive(Debug)]
pub struct RateMonitor {
    arrivals: VecDeque<Instant>,
    since: Instant,
    last_warning: Option<Instant>,
}

impl RateMonitor {
    pub fn new(now: Instant) -> Self {
        Self {
            arrivals: VecDeque::new(),
            since: now,
            last_warning: None,
        }
    }

    pub fn arrival(&mut self, now: Instant) {
        self.arrivals.push_back(now);
    }

    /// The windowed rate, when it has been off-nominal (above twice or below
    /// half of 20 Hz) over a full window. Repeats at most once per window.
    pub fn check(&mut self, now: Instant) -> Option<f64> {
        while self.arrivals.front().is_some_and(|&t| now.duration_since(t) > RATE_WINDOW) {
            self.arrivals.pop_front();
        }
        if now.duration_since(self.since) < RATE_WINDOW {
            return None;
        }
        if self.last_warning.is_some_and(|w| now.duration_since(w) < RATE_WINDOW) {
            return None;
        }
        let rate = self.arrivals.len() as f64 / RATE_WINDOW.as_secs_f64();
        if rate > 2.0 * NOMINAL_HZ || rate < 0.5 * NOMINAL_HZ {
            self.last_warning = Some(now);
            Some(rate)
        } else {
            None
        }
    }
}

/// Accepts connections on `listener` until `shutdown` resolves, then closes
/// any live session cleanly and returns.
pub async fn serve(listener: TcpListener, config: SessionConfig, shutdown: impl Future<Output = ()>) -> io::Result<()> {
    config
        .validate()
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
    let config = Arc::new(config);
    let busy = Arc::new(AtomicBool::new(false));
    let (stop_tx, stop_rx) = watch::channel(false);
    let mut tasks = JoinSet::new();
    tokio::pin!(shutdown);
    info!(addr = %listener.local_addr()?, "listening");
    loop {
        tokio::select! {
            _ = &mut shutdown => break,
            accepted = listener.accept() => {
                let (stream, peer) = accepted?;
                let (config, busy, stop) = (config.clone(), busy.clone(), stop_rx.clone());
                tasks.spawn(async move {
                    if let Err(e) = connection(stream, &config, &busy, stop).await {
                        warn!(%peer, "connection ended with error: {e}");
                    }
                });
            }
            Some(_) = tasks.join_next(), if !tasks.is_empty() => {}
        }
    }
    let _ = stop_tx.send(true);
    while tasks.join_next().await.is_some() {}
    Ok(())
}

async fn connection(
    stream: TcpStream,
    config: &SessionConfig,
    busy: &AtomicBool,
    stop: watch::Receiver<bool>,
) -> io::Result<()> {
    let mut ws = tokio_tungstenite::accept_async(stream).await.map_err(io::Error::other)?;
    if busy.swap(true, Ordering::SeqCst) {
        info!("refusing second client");
        ws.close(Some(CloseFrame {
            code: CloseCode::Again,
            reason: BUSY_REASON.into(),
        }))
        .await
        .map_err(io::Error::other)?;
        // Give the client a moment to acknowledge the close.
        let _ = tokio::time::timeout(REFUSAL_LINGER, async { while let Some(Ok(_)) = ws.next().await {} }).await;
        return Ok(());
    }
    let result = run_session(&mut ws, config, stop).await;
    busy.store(false, Ordering::SeqCst);
    result
}

async fn send(ws: &mut WebSocketStream<TcpStream>, msg: &ServerMessage) -> io::Result<()> {
    ws.send(Message::text(msg.to_json())).await.map_err(io::Error::other)
}

fn create(path: &Option<std::path::PathBuf>) -> io::Result<Box<dyn Write + Send>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::sink()),
    })
}

async fn run_session(
    ws: &mut WebSocketStream<TcpStream>,
    config: &SessionConfig,
    stop: watch::Receiver<bool>,
) -> io::Result<()> {
    send(
        ws,
        &ServerMessage::Session {
            protocol: PROTOCOL_VERSION,
            wais_threshold: config.wais.threshold,
            period_ms: config.entropy.period_ms,
        },
    )
    .await?;
    let (mut session, initial) = match Session::start(config, create(&config.output.trace)?, &[]) {
        Ok(s) => s,
        Err(e) => {
            send(ws, &ServerMessage::Fault { message: e.to_string() }).await?;
            return ws.close(None).await.map_err(io::Error::other);
        }
    };
    for e in &initial {
        send(ws, &e.to_wire()).await?;
    }
    let mut log = create(&config.output.log)?;
    serde_json::to_writer(&mut log, &LogHeader::new(Vec::new(), config.seed))?;
    log.write_all(b"\n")?;

    info!("session started");
    let outcome = pump(ws, &mut session, &mut log, stop).await;
    // Finalize whatever happened to the connection.
    let (summary, mut trace) = session.finish().map_err(io::Error::other)?;
    trace.flush()?;
    log.flush()?;
    info!(rows = summary.rows, "session finished");
    outcome
}

async fn pump(
    ws: &mut WebSocketStream<TcpStream>,
    session: &mut Session<Box<dyn Write + Send>>,
    log: &mut impl Write,
    mut stop: watch::Receiver<bool>,
) -> io::Result<()> {
    let mut pose: Pose = Arena::default().start_pose();
    let mut last_t: Option<u64> = None;
    let mut rate = RateMonitor::new(Instant::now());
    let mut timer = tokio::time::interval(RATE_CHECK_EVERY);
    loop {
        let frame = tokio::select! {
            frame = ws.next() => frame,
            _ = timer.tick() => {
                if let Some(hz) = rate.check(Instant::now()) {
                    send(ws, &rate_warning(last_t, hz)).await?;
                }
                continue;
            }
            _ = stop.changed() => {
                let _ = ws.close(None).await;
                break;
            }
        };
        let text = match frame {
            Some(Ok(Message::Text(t))) => t,
            Some(Ok(Message::Binary(_))) => {
                send(ws, &ServerMessage::Fault { message: "binary frames are not part of the protocol".into() }).await?;
                continue;
            }
            Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
            Some(Ok(_)) => continue,
        };
        let now = Instant::now();
        rate.arrival(now);
        let cmd = match serde_json::from_str::<ClientMessage>(&text) {
            Ok(c) => c,
            Err(e) => {
                send(ws, &ServerMessage::Fault { message: format!("malformed message: {e}") }).await?;
                continue;
            }
        };
        let sample = cmd.sample();
        let events = match session.push(sample) {
            Ok(ev) => ev,
            Err(e) => {
                send(ws, &ServerMessage::Fault { message: e.to_string() }).await?;
                continue;
            }
        };
        write_record(&mut *log, &sample)?;
        let dt = last_t.map_or(STEP_S, |p| ((sample.t_ms - p) as f64 / 1000.0).min(MAX_POSE_DT_S));
        pose.step(sample.lin, sample.ang, dt);
        last_t = Some(sample.t_ms);
        send(
            ws,
            &ServerMessage::Pose {
                t_ms: sample.t_ms,
                x: pose.x,
                y: pose.y,
                theta: pose.theta,
            },
        )
        .await?;
        if !events.is_empty() {
            session.flush()?;
        }
        for e in &events {
            send(ws, &e.to_wire()).await?;
        }
        if let Some(hz) = rate.check(now) {
            send(ws, &rate_warning(last_t, hz)).await?;
        }
    }

    Ok(())
}

fn rate_warning(last_t: Option<u64>, rate_hz: f64) -> ServerMessage {
    ServerMessage::RateWarning {
        t_ms: last_t.unwrap_or(0),
        rate_hz,
        nominal_hz: NOMINAL_HZ,
        window_s: RATE_WINDOW.as_secs_f64(),
    }
}
