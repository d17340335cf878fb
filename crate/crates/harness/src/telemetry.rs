//! Telemetry logs: JSON Lines, one `{"t_ms", "lin", "ang"}` object per raw
//! command, optionally preceded by a header object naming the format.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use teleop_entropy::CommandSample64;
use thiserror::Error;

use crate::driver::SegmentSpan;

pub const LOG_FORMAT: &str = "teleop-entropy-log";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    /// Workload segments of a synthetic run, for reporting.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub segments: Vec<SegmentSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl LogHeader {
    pub fn new(segments: Vec<SegmentSpan>, seed: Option<u64>) -> Self {
        Self {
            format: LOG_FORMAT.to_string(),
            version: LOG_VERSION,
            segments,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    t_ms: u64,
    lin: f64,
    ang: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TelemetryLog {
    pub header: Option<LogHeader>,
    pub samples: Vec<CommandSample64>,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: timestamp {t_ms} ms does not follow {previous_ms} ms")]
    Regression { line: usize, t_ms: u64, previous_ms: u64 },
    #[error("line {line}: non-finite velocity")]
    NonFinite { line: usize },
    #[error("line {line}: unsupported log header {format} v{version}")]
    Unsupported { line: usize, format: String, version: u32 },
}

impl LogError {
    /// 1-based line the error refers to, if any.
    pub fn line(&self) -> Option<usize> {
        match self {
            LogError::Io(_) => None,
            LogError::Malformed { line, .. }
            | LogError::Regression { line, .. }
            | LogError::NonFinite { line }
            | LogError::Unsupported { line, .. } => Some(*line),
        }
    }
}

impl TelemetryLog {
    pub fn new(samples: Vec<CommandSample64>) -> Self {
        Self { header: None, samples }
    }

    pub fn with_header(mut self, header: LogHeader) -> Self {
        self.header = Some(header);
        self
    }

    pub fn segments(&self) -> &[SegmentSpan] {
        self.header.as_ref().map_or(&[], |h| &h.segments)
    }

    /// Parses a log, checking every record as it goes. Blank lines are
    /// skipped; the header, if any, must come first.
    pub fn read(reader: impl BufRead) -> Result<Self, LogError> {
        let mut log = TelemetryLog::default();
        let mut previous: Option<u64> = None;
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            let value: serde_json::Value = serde_json::from_str(text).map_err(|e| LogError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
            if value.get("format").is_some() {
                if log.header.is_some() || !log.samples.is_empty() {
                    return Err(LogError::Malformed {
                        line: line_no,
                        message: "header must be the first line".into(),
                    });
                }
                let header: LogHeader = serde_json::from_value(value).map_err(|e| LogError::Malformed {
                    line: line_no,
                    message: e.to_string(),
                })?;
                if header.format != LOG_FORMAT || header.version != LOG_VERSION {
                    return Err(LogError::Unsupported {
                        line: line_no,
                        format: header.format,
                        version: header.version,
                    });
                }
                log.header = Some(header);
                continue;
            }
            let r: Record = serde_json::from_value(value).map_err(|e| LogError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
            if !(r.lin.is_finite() && r.ang.is_finite()) {
                return Err(LogError::NonFinite { line: line_no });
            }
            if let Some(p) = previous.filter(|&p| r.t_ms <= p) {
                return Err(LogError::Regression {
                    line: line_no,
                    t_ms: r.t_ms,
                    previous_ms: p,
                });
            }
            previous = Some(r.t_ms);
            log.samples.push(CommandSample64::new(r.t_ms, r.lin, r.ang));
        }
        Ok(log)
    }

    pub fn load(path: &Path) -> Result<Self, LogError> {
        Self::read(BufReader::new(File::open(path)?))
    }

    pub fn write(&self, mut w: impl Write) -> io::Result<()> {
        if let Some(h) = &self.header {
            serde_json::to_writer(&mut w, h)?;
            w.write_all(b"\n")?;
        }
        for s in &self.samples {
            write_record(&mut w, s)?;
        }
        w.flush()
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }
}

/// One record line; floats use the shortest representation that parses
/// back to the same bits.
pub fn write_record(mut w: impl Write, s: &CommandSample64) -> io::Result<()> {
    let r = Record {
        t_ms: s.t_ms,
        lin: s.lin,
        ang: s.ang,
    };
    serde_json::to_writer(&mut w, &r)?;
    w.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<TelemetryLog, LogError> {
        TelemetryLog::read(text.as_bytes())
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let samples = vec![
            CommandSample64::new(0, 0.1, -0.2),
            CommandSample64::new(50, 1.0 / 3.0, std::f64::consts::PI),
            CommandSample64::new(100, -1e-300, 5e-324),
        ];
        let log = TelemetryLog::new(samples).with_header(LogHeader::new(vec![], Some(3)));
        let mut buf = Vec::new();
        log.write(&mut buf).unwrap();
        let back = read(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, log);
        for (a, b) in back.samples.iter().zip(&log.samples) {
            assert_eq!(a.lin.to_bits(), b.lin.to_bits());
            assert_eq!(a.ang.to_bits(), b.ang.to_bits());
        }
    }

    #[test]
    fn headerless_and_blank_lines() {
        let log = read("{\"t_ms\":0,\"lin\":0.5,\"ang\":0}\n\n{\"t_ms\":50,\"lin\":0.5,\"ang\":0.1}\n").unwrap();
        assert!(log.header.is_none());
        assert_eq!(log.samples.len(), 2);
    }

    #[test]
    fn empty_log() {
        assert_eq!(read("").unwrap(), TelemetryLog::default());
    }

    #[test]
    fn errors_name_the_line() {
        let text = "{\"t_ms\":0,\"lin\":0,\"ang\":0}\n{\"t_ms\":50,\"lin\":0,\"ang\":0}\n{\"t_ms\":50,\"lin\":0,\"ang\":0}\n";
        let e = read(text).unwrap_err();
        assert!(matches!(e, LogError::Regression { line: 3, t_ms: 50, previous_ms: 50 }));
        assert!(e.to_string().starts_with("line 3:"));

        let e = read("{\"t_ms\":0,\"lin\":0,\"ang\":0}\n{\"t_ms\":50,\"lin\":\"x\",\"ang\":0}\n").unwrap_err();
        assert_eq!(e.line(), Some(2));
        let e = read("{\"t_ms\":0,\"lin\":0,\"ang\":0}\nnot json\n").unwrap_err();
        assert_eq!(e.line(), Some(2));
        let e = read("{\"t_ms\":0,\"lin\":0}\n").unwrap_err();
        assert_eq!(e.line(), Some(1));
        let e = read("{\"t_ms\":-5,\"lin\":0,\"ang\":0}\n").unwrap_err();
        assert_eq!(e.line(), Some(1));
    }

    #[test]
    fn header_checks() {
        let e = read("{\"t_ms\":0,\"lin\":0,\"ang\":0}\n{\"format\":\"teleop-entropy-log\",\"version\":1}\n").unwrap_err();
        assert_eq!(e.line(), Some(2));
        let e = read("{\"format\":\"teleop-entropy-log\",\"version\":9}\n").unwrap_err();
        assert!(matches!(e, LogError::Unsupported { line: 1, version: 9, .. }));
    }
}
