//! Trace CSV: one row per entropy computation, after a commented header
//! carrying the format version, the session config and, for synthetic
//! runs, the workload segments.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use teleop_entropy::EntropyRecord64;
use thiserror::Error;

use crate::driver::SegmentSpan;

pub const TRACE_MAGIC: &str = "# teleop-entropy trace v1";
const CONFIG_PREFIX: &str = "# config: ";
const SEGMENTS_PREFIX: &str = "# segments: ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t_ms: u64,
    pub hp_lin: f64,
    pub hp_ang: f64,
    pub total: f64,
    pub wais_avg: f64,
    pub indication: String,
    pub alpha_lin: f64,
    pub alpha_ang: f64,
    pub profile_revision: u32,
}

impl From<&EntropyRecord64> for TraceRow {
    fn from(r: &EntropyRecord64) -> Self {
        Self {
            t_ms: r.computation.t_ms,
            hp_lin: r.computation.hp_lin,
            hp_ang: r.computation.hp_ang,
            total: r.computation.total,
            wais_avg: r.wais_avg,
            indication: r.indication.as_str().to_string(),
            alpha_lin: r.alpha_lin,
            alpha_ang: r.alpha_ang,
            profile_revision: r.profile_revision,
        }
    }
}

/// Streams rows as they are produced; `flush` makes everything so far
/// durable, so a live trace is readable at any moment.
pub struct TraceWriter<W: Write> {
    csv: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, config_json: &str, segments: &[SegmentSpan]) -> io::Result<Self> {
        writeln!(out, "{TRACE_MAGIC}")?;
        writeln!(out, "{CONFIG_PREFIX}{config_json}")?;
        if !segments.is_empty() {
            writeln!(out, "{SEGMENTS_PREFIX}{}", serde_json::to_string(segments)?)?;
        }
        let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        // Column row even for an empty trace.
        csv.write_record([
            "t_ms",
            "hp_lin",
            "hp_ang",
            "total",
            "wais_avg",
            "indication",
            "alpha_lin",
            "alpha_ang",
            "profile_revision",
        ])?;
        Ok(Self { csv })
    }

    pub fn row(&mut self, record: &EntropyRecord64) -> io::Result<()> {
        self.csv.serialize(TraceRow::from(record))?;
        Ok(())
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.csv.flush()
    }

    pub fn finish(self) -> io::Result<W> {
        self.csv.into_inner().map_err(|e| e.into_error())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub config_json: String,
    pub segments: Vec<SegmentSpan>,
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("not a trace file (missing \"{TRACE_MAGIC}\" header)")]
    NotATrace,
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
}

impl Trace {
    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let mut lines = text.lines();
        if lines.next() != Some(TRACE_MAGIC) {
            return Err(TraceError::NotATrace);
        }
        let mut config_json = String::new();
        let mut segments = Vec::new();
        for (i, line) in lines.enumerate().take_while(|(_, l)| l.starts_with('#')) {
            if let Some(c) = line.strip_prefix(CONFIG_PREFIX) {
                config_json = c.to_string();
            } else if let Some(s) = line.strip_prefix(SEGMENTS_PREFIX) {
                segments = serde_json::from_str(s).map_err(|e| TraceError::Malformed {
                    line: i as u64 + 2,
                    message: e.to_string(),
                })?;
            }
        }
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let rows = reader
            .deserialize()
            .collect::<Result<Vec<TraceRow>, _>>()
            .map_err(|e| TraceError::Malformed {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
        Ok(Self {
            config_json,
            segments,
            rows,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TraceError> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use teleop_entropy::{EntropyComputation64, Indication};

    fn record(t_ms: u64, total: f64) -> EntropyRecord64 {
        EntropyRecord64 {
            computation: EntropyComputation64 {
                t_ms,
                hp_lin: total,
                hp_ang: total,
                total,
                batch_size: 17,
            },
            wais_avg: total,
            indication: if total > 0.6 { Indication::High } else { Indication::Normal },
            alpha_lin: 0.2,
            alpha_ang: 0.4,
            profile_revision: 0,
        }
    }

    fn written(records: &[EntropyRecord64], segments: &[SegmentSpan]) -> String {
        let mut w = TraceWriter::new(Vec::new(), "{\"seed\":1}", segments).unwrap();
        for r in records {
            w.row(r).unwrap();
        }
        String::from_utf8(w.finish().unwrap()).unwrap()
    }

    #[test]
    fn layout() {
        let text = written(&[record(2500, 0.25), record(5000, 0.7)], &[]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRACE_MAGIC);
        assert_eq!(lines[1], "# config: {\"seed\":1}");
        assert_eq!(
            lines[2],
            "t_ms,hp_lin,hp_ang,total,wais_avg,indication,alpha_lin,alpha_ang,profile_revision"
        );
        assert_eq!(lines[3], "2500,0.25,0.25,0.25,0.25,NORMAL,0.2,0.4,0");
        assert_eq!(lines[4], "5000,0.7,0.7,0.7,0.7,HIGH,0.2,0.4,0");
    }

    #[test]
    fn round_trip() {
        let spans = vec![SegmentSpan {
            label: "baseline".into(),
            start_ms: 0,
            end_ms: 300_000,
        }];
        let records = [record(2500, 1.0 / 3.0), record(5000, 0.0)];
        let trace = Trace::parse(&written(&records, &spans)).unwrap();
        assert_eq!(trace.segments, spans);
        assert_eq!(trace.config_json, "{\"seed\":1}");
        assert_eq!(trace.rows.len(), 2);
        assert_eq!(trace.rows[0].total.to_bits(), (1.0f64 / 3.0).to_bits());
        assert_eq!(trace.rows[1], TraceRow::from(&records[1]));
    }

    #[test]
    fn empty_trace_has_header_only() {
        let text = written(&[], &[]);
        assert_eq!(text.lines().count(), 3);
        assert!(Trace::parse(&text).unwrap().rows.is_empty());
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(Trace::parse("t_ms\n1\n"), Err(TraceError::NotATrace)));
        let mut text = written(&[record(2500, 0.1)], &[]);
        text.push_str("5000,x,0,0,0,NORMAL,0.2,0.4,0\n");
        assert!(matches!(Trace::parse(&text), Err(TraceError::Malformed { line: 5, .. })));
    }
}
