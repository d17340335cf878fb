use proptest::prelude::*;
use teleop_entropy::pipeline::{run_baseline, DEFAULT_BASELINE_MS};
use teleop_entropy::{CommandSample64, EngineError, PipelineConfig64, PipelineEvent64};
use teleop_entropy_harness::arena::Arena;
use teleop_entropy_harness::config::SessionConfig;
use teleop_entropy_harness::driver::{simulate_driver, DriverModel, Segment};
use teleop_entropy_harness::profile_file::ProfileFile;
use teleop_entropy_harness::session::{replay, SessionEvent};
use teleop_entropy_harness::telemetry::{LogError, LogHeader, TelemetryLog};
use teleop_entropy_harness::trace::Trace;

fn calm_operator(duration_s: f64, seed: u64) -> Vec<CommandSample64> {
    let model = DriverModel::new(vec![Segment::constant("baseline", duration_s, 1.0)], seed);
    simulate_driver(&model, &Arena::default(), duration_s).unwrap()
}

fn finite() -> impl Strategy<Value = f64> {
    any::<f64>().prop_filter("finite", |x| x.is_finite())
}

proptest! {
    #[test]
    fn log_floats_round_trip_bit_exact(
        values in prop::collection::vec((1u64..500, finite(), finite()), 1..60)
    ) {
        let mut t = 0;
        let samples: Vec<_> = values
            .iter()
            .map(|&(dt, lin, ang)| {
                t += dt;
                CommandSample64::new(t, lin, ang)
            })
            .collect();
        let mut buf = Vec::new();
        TelemetryLog::new(samples.clone()).write(&mut buf).unwrap();
        let back = TelemetryLog::read(buf.as_slice()).unwrap();
        prop_assert_eq!(back.samples.len(), samples.len());
        for (a, b) in back.samples.iter().zip(&samples) {
            prop_assert_eq!(a.t_ms, b.t_ms);
            prop_assert_eq!(a.lin.to_bits(), b.lin.to_bits());
            prop_assert_eq!(a.ang.to_bits(), b.ang.to_bits());
        }
    }
}

#[test]
fn ten_minute_baseline_round_trips_through_profile_file() {
    let dir = tempfile::tempdir().unwrap();
    let samples = calm_operator(600.0, 4);
    let base = run_baseline(&samples, &PipelineConfig64::default(), DEFAULT_BASELINE_MS).unwrap();
    assert!(base.profile.alpha_lin.is_finite() && base.profile.alpha_lin > 0.0);
    assert!(base.profile.alpha_ang.is_finite() && base.profile.alpha_ang > 0.0);
    assert!(base.thresholds.avg.is_finite() && base.thresholds.std.is_finite());
    // 600 s at 2.5 s per batch.
    assert!((235..=240).contains(&base.entropy_history.len()));

    let path = dir.path().join("profile.json");
    ProfileFile::from_baseline(&base).save(&path).unwrap();
    let back = ProfileFile::load(&path).unwrap().to_baseline().unwrap();
    assert_eq!(back.profile.alpha_lin, base.profile.alpha_lin);
    assert_eq!(back.profile.alpha_ang, base.profile.alpha_ang);
    assert_eq!(back.profile.boundaries_lin, base.profile.boundaries_lin);
    assert_eq!(back.thresholds, base.thresholds);
}

#[test]
fn short_baseline_is_refused() {
    let samples = calm_operator(30.0, 4);
    let err = run_baseline(&samples, &PipelineConfig64::default(), DEFAULT_BASELINE_MS).unwrap_err();
    let EngineError::InsufficientBaseline { covered_ms, .. } = err else {
        panic!("{err:?}")
    };
    assert!(covered_ms <= 30_000);
}

#[test]
fn motionless_operator_has_no_entropy() {
    let samples: Vec<_> = (0..2400).map(|i| CommandSample64::new(i * 50, 0.5, 0.0)).collect();
    let out = replay(&TelemetryLog::new(samples), &SessionConfig::default(), Vec::new()).unwrap();
    let totals: Vec<f64> = out
        .events
        .iter()
        .filter_map(|e| match e {
            SessionEvent::Pipeline(PipelineEvent64::Entropy(r)) => Some(r.computation.total),
            _ => None,
        })
        .collect();
    assert!(totals.len() > 40);
    assert!(totals.iter().all(|&h| h == 0.0), "{totals:?}");
}

#[test]
fn empty_log_gives_header_only_trace() {
    let out = replay(&TelemetryLog::default(), &SessionConfig::default(), Vec::new()).unwrap();
    assert_eq!(out.summary.rows, 0);
    let text = String::from_utf8(out.trace).unwrap();
    let trace = Trace::parse(&text).unwrap();
    assert!(trace.rows.is_empty());
    assert!(text.lines().all(|l| l.starts_with('#') || l.starts_with("t_ms")), "{text}");
}

#[test]
fn trace_matches_records() {
    let model = DriverModel::preset("ladder", 2).unwrap();
    let samples = simulate_driver(&model, &Arena::default(), 120.0).unwrap();
    let log = TelemetryLog::new(samples).with_header(LogHeader::new(model.spans(), Some(2)));
    let out = replay(&log, &SessionConfig::default(), Vec::new()).unwrap();
    let trace = Trace::parse(std::str::from_utf8(&out.trace).unwrap()).unwrap();
    assert_eq!(trace.segments, model.spans());
    let records: Vec<_> = out
        .events
        .iter()
        .filter_map(|e| match e {
            SessionEvent::Pipeline(PipelineEvent64::Entropy(r)) => Some(r),
            _ => None,
        })
        .collect();
    assert_eq!(trace.rows.len(), records.len());
    for (row, r) in trace.rows.iter().zip(records) {
        assert_eq!(row.t_ms, r.computation.t_ms);
        assert_eq!(row.total.to_bits(), r.computation.total.to_bits());
        assert_eq!(row.hp_lin.to_bits(), r.computation.hp_lin.to_bits());
    }
}

#[test]
fn timestamp_regression_names_its_line() {
    for k in [2usize, 5, 9] {
        let mut lines: Vec<String> = (0..10).map(|i| format!(r#"{{"t_ms":{},"lin":0.1,"ang":0.0}}"#, i * 50)).collect();
        lines[k - 1] = r#"{"t_ms":0,"lin":0.1,"ang":0.0}"#.to_string();
        let err = TelemetryLog::read(lines.join("\n").as_bytes()).unwrap_err();
        assert!(matches!(err, LogError::Regression { line, .. } if line == k), "{err}");
        assert!(err.to_string().starts_with(&format!("line {k}:")));
    }
}
