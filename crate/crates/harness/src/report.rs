//! Per-segment descriptive statistics over one or more traces: one row per
//! trace, an M/SD column pair per segment and an average row.

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::config::SessionConfig;
use crate::driver::SegmentSpan;
use crate::experiments::{segment_stats, SegmentStats};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub segments: Vec<String>,
    pub rows: Vec<(String, Vec<SegmentStats>)>,
    /// Mean of the per-trace M and SD values, per segment.
    pub average: Vec<(f64, f64)>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("no traces given")]
    Empty,
    #[error("trace {name} has segments {found:?}, expected {expected:?}")]
    SegmentMismatch {
        name: String,
        found: Vec<String>,
        expected: Vec<String>,
    },
}

fn spans_of(trace: &Trace) -> Vec<SegmentSpan> {
    if !trace.segments.is_empty() {
        return trace.segments.clone();
    }
    // A trace without segments is one segment.
    vec![SegmentSpan {
        label: "session".into(),
        start_ms: 0,
        end_ms: trace.rows.last().map_or(0, |r| r.t_ms),
    }]
}

fn period_of(trace: &Trace) -> u64 {
    SessionConfig::parse(&trace.config_json)
        .map(|c| c.entropy.period_ms)
        .unwrap_or_else(|_| SessionConfig::default().entropy.period_ms)
}

impl Report {
    pub fn build(traces: &[(String, Trace)]) -> Result<Self, ReportError> {
        let first = traces.first().ok_or(ReportError::Empty)?;
        let labels = |t: &Trace| spans_of(t).into_iter().map(|s| s.label).collect::<Vec<_>>();
        let segments = labels(&first.1);
        let mut rows = Vec::new();
        for (name, trace) in traces {
            let found = labels(trace);
            if found != segments {
                return Err(ReportError::SegmentMismatch {
                    name: name.clone(),
                    found,
                    expected: segments.clone(),
                });
            }
            let spans = spans_of(trace);
            let totals: Vec<(u64, f64)> = trace.rows.iter().map(|r| (r.t_ms, r.total)).collect();
            // Without segments every row counts.
            let period = if trace.segments.is_empty() { 0 } else { period_of(trace) };
            rows.push((name.clone(), segment_stats(&totals, &spans, period)));
        }
        let n = rows.len() as f64;
        let average = (0..segments.len())
            .map(|i| {
                let m = rows.iter().map(|(_, s)| s[i].mean).sum::<f64>() / n;
                let sd = rows.iter().map(|(_, s)| s[i].sd).sum::<f64>() / n;
                (m, sd)
            })
            .collect();
        Ok(Self {
            segments,
            rows,
            average,
        })
    }
}

const CELL: usize = 8;

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name_w = self
            .rows
            .iter()
            .map(|(n, _)| n.len())
            .chain(["Average".len(), "Trace".len()])
            .max()
            .unwrap_or(0);
        let pair_w = 2 * CELL + 1;
        let mut head = format!("{:<name_w$}", "Trace");
        let mut sub = " ".repeat(name_w);
        for s in &self.segments {
            let _ = write!(head, " | {s:^pair_w$}");
            let _ = write!(sub, " | {:>CELL$} {:>CELL$}", "M", "SD");
        }
        writeln!(f, "{head}")?;
        writeln!(f, "{sub}")?;
        let rule = "-".repeat(sub.len());
        writeln!(f, "{rule}")?;
        let line = |f: &mut fmt::Formatter<'_>, name: &str, cells: &mut dyn Iterator<Item = (f64, f64)>| {
            write!(f, "{name:<name_w$}")?;
            for (m, sd) in cells {
                write!(f, " | {m:>CELL$.4} {sd:>CELL$.4}")?;
            }
            writeln!(f)
        };
        for (name, stats) in &self.rows {
            line(f, name, &mut stats.iter().map(|s| (s.mean, s.sd)))?;
        }
        writeln!(f, "{rule}")?;
        line(f, "Average", &mut self.average.iter().copied())
    }
}
