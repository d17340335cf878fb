use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teleop-entropy"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_baseline_replay_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |o: Output| {
        assert!(o.status.success(), "{}", stderr(&o));
        o
    };
    ok(run(&["simulate", "--preset", "baseline", "--seed", "1", "--out", "trial.jsonl"], d));
    ok(run(&["baseline", "--log", "trial.jsonl", "--out", "profile.json"], d));
    let profile: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("profile.json")).unwrap()).unwrap();
    assert!(profile["alpha_lin"].as_f64().unwrap() > 0.0);

    for seed in ["1", "2"] {
        let log = format!("ladder{seed}.jsonl");
        ok(run(&["simulate", "--preset", "ladder", "--seed", seed, "--out", &log], d));
        ok(run(
            &["replay", "--log", &log, "--profile", "profile.json", "--trace", &format!("ladder{seed}.csv")],
            d,
        ));
    }
    let report = ok(run(&["report", "ladder1.csv", "ladder2.csv"], d));
    let text = String::from_utf8(report.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    for label in ["baseline", "low", "medium", "high"] {
        assert!(lines[0].contains(label), "{text}");
    }
    assert!(lines.iter().any(|l| l.starts_with("ladder1 ")), "{text}");
    assert!(lines.last().unwrap().starts_with("Average"), "{text}");
}

#[test]
fn replay_writes_wire_events() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(&["simulate", "--preset", "warning", "--duration", "60", "--seed", "3", "--out", "w.jsonl"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["replay", "--log", "w.jsonl", "--skip-baseline", "--events", "ev.jsonl"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    // Without --trace the trace goes to stdout.
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("# teleop-entropy trace v1"));
    let events = std::fs::read_to_string(d.join("ev.jsonl")).unwrap();
    let kinds: Vec<String> = events
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["type"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(kinds[0], "profile_update");
    assert!(kinds.iter().filter(|k| *k == "entropy").count() >= 20);
}

#[test]
fn failures_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(run(&["simulate", "--preset", "constant", "--duration", "30", "--out", "short.jsonl"], d).status.success());

    let o = run(&["baseline", "--log", "short.jsonl", "--out", "p.json"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"), "{}", stderr(&o));
    assert!(!d.join("p.json").exists());

    std::fs::write(d.join("bad.jsonl"), "{\"t_ms\":0,\"lin\":0,\"ang\":0}\n{\"t_ms\":0,\"lin\":0,\"ang\":0}\n").unwrap();
    let o = run(&["replay", "--log", "bad.jsonl"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = run(&["replay", "--log", "missing.jsonl"], d);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["simulate", "--trace", "t.csv"], d);
    assert_eq!(o.status.code(), Some(2), "--trace needs --closed-loop");

    let o = run(&["report"], d);
    assert_ne!(o.status.code(), Some(0));
}
