//! Seeded synthetic-operator experiments for the engine's behavioural
//! properties: the workload ladder, profile adaptation and the closed-loop
//! warning response.

use teleop_entropy::pipeline::{run_baseline, DEFAULT_BASELINE_MS};
use teleop_entropy::{
    Baseline64, EntropyRecord64, Indication, Pipeline64, PipelineConfig64, PipelineEvent64, ProfileUpdate64,
};

use crate::arena::Arena;
use crate::driver::{simulate_driver, DriverModel, Segment, SegmentSpan};
use crate::sim::{run_closed_loop, SimError};

/// Seed offset separating an operator's trial run from their session.
const BASELINE_SEED_OFFSET: u64 = 0x5eed_0000;

/// Ten-minute unloaded trial run by the same operator as `model`.
pub fn operator_baseline(model: &DriverModel, config: &PipelineConfig64) -> Result<Baseline64, SimError> {
    let mut trial = model.clone();
    trial.schedule = vec![Segment::constant("baseline", DEFAULT_BASELINE_MS as f64 / 1000.0, 1.0)];
    trial.warning_response.enabled = false;
    trial.seed = model.seed.wrapping_add(BASELINE_SEED_OFFSET);
    let log = simulate_driver(&trial, &Arena::default(), trial.schedule_duration_s())?;
    Ok(run_baseline(&log, config, DEFAULT_BASELINE_MS)?)
}

/// Runs `model` for its whole schedule after its own trial run.
pub fn run_session(model: &DriverModel, config: &PipelineConfig64) -> Result<Vec<PipelineEvent64>, SimError> {
    let base = operator_baseline(model, config)?;
    let mut pipeline = Pipeline64::new(*config, base.profile, base.thresholds)?;
    let run = run_closed_loop(model, &Arena::default(), &mut pipeline, model.schedule_duration_s())?;
    Ok(run.events)
}

pub fn entropy_records(events: &[PipelineEvent64]) -> Vec<EntropyRecord64> {
    events
        .iter()
        .filter_map(|e| match e {
            PipelineEvent64::Entropy(r) => Some(*r),
            _ => None,
        })
        .collect()
}

pub fn profile_updates(events: &[PipelineEvent64]) -> Vec<ProfileUpdate64> {
    events
        .iter()
        .filter_map(|e| match e {
            PipelineEvent64::ProfileUpdate(u) => Some(*u),
            _ => None,
        })
        .collect()
}

/// Mean and population standard deviation.
pub fn mean_sd(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    Some((m, v.sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentStats {
    pub label: String,
    pub batches: usize,
    pub mean: f64,
    pub sd: f64,
}

/// `(t_ms, total)` of each computation.
pub fn totals(records: &[EntropyRecord64]) -> Vec<(u64, f64)> {
    records.iter().map(|r| (r.computation.t_ms, r.computation.total)).collect()
}

/// Total-entropy statistics per schedule segment. A batch belongs to a
/// segment when it lies wholly inside it.
pub fn segment_stats(totals: &[(u64, f64)], spans: &[SegmentSpan], period_ms: u64) -> Vec<SegmentStats> {
    spans
        .iter()
        .map(|s| {
            let inside: Vec<f64> = totals
                .iter()
                .filter(|(t, _)| *t >= s.start_ms + period_ms && *t <= s.end_ms)
                .map(|&(_, x)| x)
                .collect();
            let (mean, sd) = mean_sd(&inside).unwrap_or((f64::NAN, f64::NAN));
            SegmentStats {
                label: s.label.clone(),
                batches: inside.len(),
                mean,
                sd,
            }
        })
        .collect()
}

/// Per-segment statistics of the four-step workload ladder.
pub fn ladder(seed: u64, config: &PipelineConfig64) -> Result<Vec<SegmentStats>, SimError> {
    let model = DriverModel::preset("ladder", seed).expect("preset exists");
    let events = run_session(&model, config)?;
    Ok(segment_stats(&totals(&entropy_records(&events)), &model.spans(), config.entropy.period_ms))
}

/// Profile updates over a session of the named preset.
pub fn adaptation(preset: &str, seed: u64, config: &PipelineConfig64) -> Result<Vec<ProfileUpdate64>, SimError> {
    let model = DriverModel::preset(preset, seed).expect("preset exists");
    Ok(profile_updates(&run_session(&model, config)?))
}

/// Mean total entropy just before and just after one HIGH indication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarningWindow {
    pub t_ms: u64,
    pub pre: f64,
    pub post: f64,
}

/// Pre/post windows of `window_ms` around every HIGH transition with full
/// data on both sides.
pub fn warning_windows(events: &[PipelineEvent64], window_ms: u64) -> Vec<WarningWindow> {
    let records = entropy_records(events);
    let last_t = records.last().map_or(0, |r| r.computation.t_ms);
    let mean_in = |lo: u64, hi: u64| {
        let xs: Vec<f64> = records
            .iter()
            .filter(|r| r.computation.t_ms > lo && r.computation.t_ms <= hi)
            .map(|r| r.computation.total)
            .collect();
        mean_sd(&xs).map(|(m, _)| m)
    };
    events
        .iter()
        .filter_map(|e| match e {
            PipelineEvent64::Indication(t) if t.to == Indication::High => Some(t.t_ms),
            _ => None,
        })
        .filter(|&t| t >= window_ms && t + window_ms <= last_t)
        .filter_map(|t| {
            Some(WarningWindow {
                t_ms: t,
                // The batch that raised the warning belongs to the pre window.
                pre: mean_in(t - window_ms, t)?,
                post: mean_in(t, t + window_ms)?,
            })
        })
        .collect()
}

/// Closed-loop warning-responsive run under the high-workload schedule.
pub fn warning_response(seed: u64, config: &PipelineConfig64) -> Result<Vec<WarningWindow>, SimError> {
    let model = DriverModel::preset("warning", seed).expect("preset exists");
    Ok(warning_windows(&run_session(&model, config)?, 10_000))
}
