//! One operator session: baseline resolution, the pipeline and the trace.
//! The live server and offline replay both drive this type, which is what
//! makes their outputs identical for the same command stream.

use std::io::{self, Write};

use teleop_entropy::pipeline::{run_baseline, skipped_baseline};
use teleop_entropy::{
    Baseline64, CommandSample64, DefaultAlphas, EngineError, Pipeline64, PipelineConfig64, PipelineEvent64,
};
use thiserror::Error;

use crate::config::{BaselineSource, SessionConfig};
use crate::driver::SegmentSpan;
use crate::profile_file::{ProfileFile, ProfileFileError};
use crate::telemetry::TelemetryLog;
use crate::trace::TraceWriter;
use crate::wire::ServerMessage;

#[derive(Debug, Clone, PartialEq)]
pub enum SessionEvent {
    /// The starting profile is known: immediately for file and default
    /// baselines, after the trial span for an inline one.
    BaselineReady { t_ms: u64, profile: ProfileFile },
    Pipeline(PipelineEvent64),
}

impl SessionEvent {
    pub fn to_wire(&self) -> ServerMessage {
        match self {
            SessionEvent::BaselineReady { t_ms, profile } => ServerMessage::ProfileUpdate {
                t_ms: *t_ms,
                alpha_lin: profile.alpha_lin,
                alpha_ang: profile.alpha_ang,
                revision: profile.revision,
                avg_threshold: profile.dpu.avg,
                std_threshold: profile.dpu.std,
            },
            SessionEvent::Pipeline(e) => ServerMessage::from_event(e),
        }
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("baseline profile: {0}")]
    Profile(#[from] ProfileFileError),
    #[error("trace: {0}")]
    Io(#[from] io::Error),
}

enum Phase {
    Collecting { samples: Vec<CommandSample64>, duration_ms: u64 },
    Running(Box<Pipeline64>),
}

pub struct Session<W: Write> {
    pipeline_config: PipelineConfig64,
    phase: Phase,
    trace: TraceWriter<W>,
    rows: usize,
}

/// How a session ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionSummary {
    pub rows: usize,
    /// False when an inline baseline never completed.
    pub baseline_complete: bool,
}

impl<W: Write> Session<W> {
    /// Resolves the baseline and writes the trace header. Returns the
    /// session and the events known before any command arrives.
    pub fn start(
        config: &SessionConfig,
        trace_out: W,
        segments: &[SegmentSpan],
    ) -> Result<(Self, Vec<SessionEvent>), SessionError> {
        let pipeline_config = config.pipeline_config();
        pipeline_config.validate()?;
        let (phase, events) = match &config.baseline {
            BaselineSource::Inline { duration_ms } => (
                Phase::Collecting {
                    samples: Vec::new(),
                    duration_ms: *duration_ms,
                },
                Vec::new(),
            ),
            BaselineSource::File { path } => {
                let file = ProfileFile::load(path)?;
                Self::running(pipeline_config, file.to_baseline()?, 0)?
            }
            BaselineSource::Defaults { alpha_lin, alpha_ang } => {
                let base = skipped_baseline(DefaultAlphas {
                    alpha_lin: *alpha_lin,
                    alpha_ang: *alpha_ang,
                })?;
                Self::running(pipeline_config, base, 0)?
            }
        };
        let trace = TraceWriter::new(trace_out, &config.provenance_json(), segments)?;
        Ok((
            Self {
                pipeline_config,
                phase,
                trace,
                rows: 0,
            },
            events,
        ))
    }

    fn running(config: PipelineConfig64, base: Baseline64, t_ms: u64) -> Result<(Phase, Vec<SessionEvent>), SessionError> {
        let event = SessionEvent::BaselineReady {
            t_ms,
            profile: ProfileFile::from_baseline(&base),
        };
        let pipeline = Pipeline64::new(config, base.profile, base.thresholds)?;
        Ok((Phase::Running(Box::new(pipeline)), vec![event]))
    }

    pub fn indication(&self) -> teleop_entropy::Indication {
        match &self.phase {
            Phase::Running(p) => p.indication(),
            Phase::Collecting { .. } => teleop_entropy::Indication::Normal,
        }
    }

    /// Feeds one command. A rejected sample leaves the session unchanged.
    pub fn push(&mut self, sample: CommandSample64) -> Result<Vec<SessionEvent>, SessionError> {
        let mut out = Vec::new();
        if let Phase::Collecting { samples, duration_ms } = &mut self.phase {
            if !(sample.lin.is_finite() && sample.ang.is_finite()) {
                return Err(EngineError::NonFiniteSample { t_ms: sample.t_ms }.into());
            }
            if let Some(last) = samples.last().filter(|l| sample.t_ms <= l.t_ms) {
                return Err(EngineError::NonMonotonicTimestamp {
                    t_ms: sample.t_ms,
                    previous_ms: last.t_ms,
                }
                .into());
            }
            let start = samples.first().map_or(sample.t_ms, |s| s.t_ms);
            if sample.t_ms < start.saturating_add(*duration_ms) {
                samples.push(sample);
                return Ok(out);
            }
            let base = run_baseline(samples, &self.pipeline_config, *duration_ms)?;
            let (phase, events) = Self::running(self.pipeline_config, base, sample.t_ms)?;
            self.phase = phase;
            out = events;
        }
        let Phase::Running(pipeline) = &mut self.phase else {
            unreachable!("baseline phase handled above")
        };
        let mut events = Vec::new();
        pipeline.push_into(sample, &mut events)?;
        for e in &events {
            if let PipelineEvent64::Entropy(r) = e {
                self.trace.row(r)?;
                self.rows += 1;
            }
        }
        out.extend(events.into_iter().map(SessionEvent::Pipeline));
        Ok(out)
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.trace.flush()
    }

    pub fn finish(self) -> Result<(SessionSummary, W), SessionError> {
        let summary = SessionSummary {
            rows: self.rows,
            baseline_complete: matches!(self.phase, Phase::Running(_)),
        };
        Ok((summary, self.trace.finish()?))
    }
}

#[derive(Debug)]
pub struct ReplayOutput<W> {
    pub events: Vec<SessionEvent>,
    pub summary: SessionSummary,
    pub trace: W,
}

/// Runs a recorded log through a fresh session at simulated time.
pub fn replay<W: Write>(log: &TelemetryLog, config: &SessionConfig, trace_out: W) -> Result<ReplayOutput<W>, SessionError> {
    let (mut session, mut events) = Session::start(config, trace_out, log.segments())?;
    for &s in &log.samples {
        events.extend(session.push(s)?);
    }
    let (summary, trace) = session.finish()?;
    Ok(ReplayOutput { events, summary, trace })
}
