mod common;

use std::time::Duration;

use common::*;
use futures_util::{SinkExt, StreamExt};
use teleop_entropy_harness::server::BUSY_REASON;
use teleop_entropy_harness::session::replay;
use teleop_entropy_harness::telemetry::TelemetryLog;
use teleop_entropy_harness::wire::{ServerMessage, WireIndication};
use tokio::time::{timeout, Instant};
use tokio_tungstenite::tungstenite::protocol::frame::coding::CloseCode;
use tokio_tungstenite::tungstenite::Message;

#[tokio::test]
async fn live_session_matches_offline_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_with_outputs(dir.path());
    let server = TestServer::start(cfg.clone()).await;
    let commands = scripted_commands(5.0, 12.0, 11);
    let live = drive_at_20hz(server.connect().await, &commands).await;
    server.shutdown().await;

    assert!(matches!(live[0], ServerMessage::Session { protocol: 1, period_ms: 2500, .. }));
    let poses = live.iter().filter(|m| matches!(m, ServerMessage::Pose { .. })).count();
    assert_eq!(poses, commands.len());

    let captured = TelemetryLog::load(&dir.path().join("live.jsonl")).unwrap();
    assert_eq!(captured.samples, commands);

    let offline = replay(&captured, &cfg, Vec::new()).unwrap();
    let live_events: Vec<&ServerMessage> = live.iter().filter(|m| m.is_pipeline_output()).collect();
    let offline_events: Vec<ServerMessage> = offline.events.iter().map(|e| e.to_wire()).collect();
    assert_eq!(live_events.len(), offline_events.len());
    assert!(live_events.iter().zip(&offline_events).all(|(a, b)| *a == b));
    // The loaded stretch must have raised the warning.
    assert!(offline_events.iter().any(|m| matches!(
        m,
        ServerMessage::Indication {
            state: WireIndication::High,
            play_ping: true,
            ..
        }
    )));

    let live_trace = std::fs::read(dir.path().join("live.csv")).unwrap();
    assert_eq!(live_trace, offline.trace);
}

#[tokio::test]
async fn second_client_is_refused() {
    let server = TestServer::start(Default::default()).await;
    let mut first = server.connect().await;
    let hello = first.next().await.unwrap().unwrap();
    assert!(matches!(parse(&hello), Some(ServerMessage::Session { .. })));

    let mut second = server.connect().await;
    let Some(Ok(Message::Close(Some(frame)))) = second.next().await else {
        panic!("second client was not refused with a close frame");
    };
    assert_eq!(frame.code, CloseCode::Again);
    assert_eq!(frame.reason.as_str(), BUSY_REASON);

    // Once the first operator leaves, the next one is accepted.
    first.close(None).await.unwrap();
    while let Some(Ok(_)) = first.next().await {}
    let mut third = None;
    for _ in 0..50 {
        let mut c = server.connect().await;
        match c.next().await {
            Some(Ok(m)) if matches!(parse(&m), Some(ServerMessage::Session { .. })) => {
                third = Some(c);
                break;
            }
            _ => tokio::time::sleep(Duration::from_millis(20)).await,
        }
    }
    assert!(third.is_some());
    server.shutdown().await;
}

#[tokio::test]
async fn silence_produces_no_entropy() {
    let server = TestServer::start(Default::default()).await;
    let client = server.connect().await;
    let (mut tx, mut rx) = client.split();
    let commands = scripted_commands(3.0, 0.0, 2);
    for &c in &commands {
        let text = serde_json::to_string(&teleop_entropy_harness::wire::ClientMessage::from(c)).unwrap();
        tx.send(Message::text(text)).await.unwrap();
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    // Drain what the commands produced.
    while let Ok(Some(Ok(_))) = timeout(Duration::from_millis(300), rx.next()).await {}

    let quiet_until = Instant::now() + Duration::from_secs(10);
    let mut during = Vec::new();
    while let Ok(Some(Ok(m))) = timeout(quiet_until.saturating_duration_since(Instant::now()), rx.next()).await {
        during.extend(parse(&m));
    }
    assert!(
        !during.iter().any(|m| matches!(m, ServerMessage::Entropy { .. })),
        "{during:?}"
    );
    // The stalled stream is reported instead.
    assert!(during.iter().any(|m| matches!(m, ServerMessage::RateWarning { rate_hz, .. } if *rate_hz < 10.0)));
    drop(tx);
    server.shutdown().await;
}

#[tokio::test]
async fn bad_frames_are_reported_and_skipped() {
    let server = TestServer::start(Default::default()).await;
    let mut c = server.connect().await;
    c.next().await.unwrap().unwrap();
    c.next().await.unwrap().unwrap(); // starting profile
    for frame in [
        r#"{"type":"cmd","t_ms":100,"lin":0.1}"#,
        r#"{"type":"cmd","t_ms":100,"lin":0.1,"ang":0}"#,
        r#"{"type":"cmd","t_ms":100,"lin":0.1,"ang":0}"#,
        r#"{"type":"cmd","t_ms":150,"lin":0.1,"ang":0}"#,
    ] {
        c.send(Message::text(frame)).await.unwrap();
    }
    let mut got = Vec::new();
    for _ in 0..4 {
        got.push(parse(&c.next().await.unwrap().unwrap()).unwrap());
    }
    assert!(matches!(&got[0], ServerMessage::Fault { message } if message.contains("malformed")));
    assert!(matches!(got[1], ServerMessage::Pose { t_ms: 100, .. }));
    assert!(matches!(&got[2], ServerMessage::Fault { message } if message.contains("does not follow")));
    assert!(matches!(got[3], ServerMessage::Pose { t_ms: 150, .. }));
    server.shutdown().await;
}
