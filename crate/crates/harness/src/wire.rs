//! Session wire protocol: JSON text frames tagged by `"type"`.

use serde::{Deserialize, Serialize};
use teleop_entropy::{CommandSample64, Indication, PipelineEvent64};

use crate::profile_file::float_or_inf;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Cmd { t_ms: u64, lin: f64, ang: f64 },
}

impl ClientMessage {
    pub fn sample(&self) -> CommandSample64 {
        match *self {
            ClientMessage::Cmd { t_ms, lin, ang } => CommandSample64::new(t_ms, lin, ang),
        }
    }
}

impl From<CommandSample64> for ClientMessage {
    fn from(s: CommandSample64) -> Self {
        ClientMessage::Cmd {
            t_ms: s.t_ms,
            lin: s.lin,
            ang: s.ang,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum WireIndication {
    Normal,
    High,
}

impl From<Indication> for WireIndication {
    fn from(i: Indication) -> Self {
        match i {
            Indication::Normal => WireIndication::Normal,
            Indication::High => WireIndication::High,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    /// First frame of every accepted connection.
    Session {
        protocol: u32,
        wais_threshold: f64,
        period_ms: u64,
    },
    Pose {
        t_ms: u64,
        x: f64,
        y: f64,
        theta: f64,
    },
    Entropy {
        t_ms: u64,
        hp_lin: f64,
        hp_ang: f64,
        total: f64,
        avg: f64,
    },
    Indication {
        state: WireIndication,
        t_ms: u64,
        play_ping: bool,
    },
    ProfileUpdate {
        t_ms: u64,
        alpha_lin: f64,
        alpha_ang: f64,
        revision: u32,
        #[serde(with = "float_or_inf")]
        avg_threshold: f64,
        #[serde(with = "float_or_inf")]
        std_threshold: f64,
    },
    RateWarning {
        t_ms: u64,
        rate_hz: f64,
        nominal_hz: f64,
        window_s: f64,
    },
    Fault {
        message: String,
    },
}

impl ServerMessage {
    pub fn from_event(e: &PipelineEvent64) -> Self {
        match e {
            PipelineEvent64::Entropy(r) => ServerMessage::Entropy {
                t_ms: r.computation.t_ms,
                hp_lin: r.computation.hp_lin,
                hp_ang: r.computation.hp_ang,
                total: r.computation.total,
                avg: r.wais_avg,
            },
            PipelineEvent64::Indication(t) => ServerMessage::Indication {
                state: t.to.into(),
                t_ms: t.t_ms,
                play_ping: t.play_ping(),
            },
            PipelineEvent64::ProfileUpdate(u) => ServerMessage::ProfileUpdate {
                t_ms: u.t_ms,
                alpha_lin: u.profile.alpha_lin,
                alpha_ang: u.profile.alpha_ang,
                revision: u.profile.revision,
                avg_threshold: u.thresholds.avg,
                std_threshold: u.thresholds.std,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }

    /// Messages that depend only on the command stream, not on wall-clock
    /// timing or the robot model.
    pub fn is_pipeline_output(&self) -> bool {
        matches!(
            self,
            ServerMessage::Entropy { .. } | ServerMessage::Indication { .. } | ServerMessage::ProfileUpdate { .. }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::{json, Value};
    use teleop_entropy::TransitionEvent;

    #[test]
    fn client_frames() {
        let m: ClientMessage = serde_json::from_str(r#"{"type":"cmd","t_ms":50,"lin":0.5,"ang":-0.1}"#).unwrap();
        assert_eq!(m.sample(), CommandSample64::new(50, 0.5, -0.1));
        for bad in [
            r#"{"type":"cmd","t_ms":50,"lin":0.5}"#,
            r#"{"type":"pose","t_ms":50,"lin":0.5,"ang":0}"#,
            r#"{"t_ms":50,"lin":0.5,"ang":0}"#,
        ] {
            assert!(serde_json::from_str::<ClientMessage>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn indication_frame() {
        let e = PipelineEvent64::Indication(TransitionEvent {
            t_ms: 7500,
            to: Indication::High,
            avg: 0.65,
        });
        let v: Value = serde_json::from_str(&ServerMessage::from_event(&e).to_json()).unwrap();
        assert_eq!(v, json!({"type": "indication", "state": "HIGH", "t_ms": 7500, "play_ping": true}));
    }

    #[test]
    fn profile_update_with_unbounded_thresholds() {
        let m = ServerMessage::ProfileUpdate {
            t_ms: 0,
            alpha_lin: 0.2,
            alpha_ang: 0.4,
            revision: 0,
            avg_threshold: f64::INFINITY,
            std_threshold: 0.1,
        };
        let text = m.to_json();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["type"], "profile_update");
        assert_eq!(v["avg_threshold"], "inf");
        assert_eq!(serde_json::from_str::<ServerMessage>(&text).unwrap(), m);
    }

    #[test]
    fn other_frames() {
        let v: Value = serde_json::from_str(
            &ServerMessage::RateWarning {
                t_ms: 1,
                rate_hz: 4.0,
                nominal_hz: 20.0,
                window_s: 5.0,
            }
            .to_json(),
        )
        .unwrap();
        assert_eq!(v["type"], "rate_warning");
        let v: Value = serde_json::from_str(&ServerMessage::Fault { message: "x".into() }.to_json()).unwrap();
        assert_eq!(v, json!({"type": "fault", "message": "x"}));
    }
}
