use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use teleop_entropy::pipeline::{run_baseline, skipped_baseline, DEFAULT_BASELINE_MS};
use teleop_entropy::{DefaultAlphas, Indication};
use teleop_entropy_harness::arena::Arena;
use teleop_entropy_harness::config::{BaselineSource, SessionConfig, Taylor};
use teleop_entropy_harness::driver::{Driver, DriverModel};
use teleop_entropy_harness::profile_file::ProfileFile;
use teleop_entropy_harness::report::Report;
use teleop_entropy_harness::server::serve;
use teleop_entropy_harness::session::{replay, Session};
use teleop_entropy_harness::telemetry::{LogHeader, TelemetryLog};
use teleop_entropy_harness::trace::Trace;
use tracing::warn;

/// Operator workload estimation from teleoperation commands.
#[derive(Parser)]
#[command(name = "teleop-entropy", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic operator's command log.
    Simulate(SimulateArgs),
    /// Build a driver profile from a trial-run log.
    Baseline(BaselineArgs),
    /// Run a log through a session offline and write its trace.
    Replay(ReplayArgs),
    /// Host live sessions over WebSocket.
    Serve(ServeArgs),
    /// Per-segment entropy statistics of one or more traces.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TaylorArg {
    Summed,
    Classical,
}

/// Session settings; flags override the `--config` file.
#[derive(Args)]
struct SessionArgs {
    /// Session config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Entropy period in seconds (2.5 to 5).
    #[arg(long)]
    period: Option<f64>,
    /// WAIS threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Linear and angular entropy weights, e.g. `0.5,0.5`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    weights: Option<Vec<f64>>,
    #[arg(long)]
    hysteresis: Option<f64>,
    /// Keep the starting profile for the whole session.
    #[arg(long)]
    no_dpu: bool,
    #[arg(long, value_enum)]
    taylor: Option<TaylorArg>,
    /// Starting profile written by `baseline`.
    #[arg(long, conflicts_with_all = ["inline_baseline", "skip_baseline"])]
    profile: Option<PathBuf>,
    /// Use the first N seconds of the session as the trial run.
    #[arg(long, value_name = "SECONDS", conflicts_with = "skip_baseline")]
    inline_baseline: Option<f64>,
    /// Start from default α with unbounded DPU thresholds.
    #[arg(long)]
    skip_baseline: bool,
}

impl SessionArgs {
    fn resolve(&self, seed: Option<u64>) -> Result<SessionConfig> {
        let mut cfg = match &self.config {
            Some(p) => SessionConfig::load(p)?,
            None => SessionConfig::default(),
        };
        if let Some(p) = self.period {
            cfg.entropy.period_ms = seconds_to_ms(p)?;
        }
        if let Some(t) = self.threshold {
            cfg.wais.threshold = t;
        }
        if let Some(w) = &self.weights {
            cfg.entropy.weights = [w[0], w[1]];
        }
        if let Some(h) = self.hysteresis {
            cfg.wais.hysteresis = h;
        }
        if self.no_dpu {
            cfg.dpu_enabled = false;
        }
        if let Some(t) = self.taylor {
            cfg.taylor = match t {
                TaylorArg::Summed => Taylor::Summed,
                TaylorArg::Classical => Taylor::Classical,
            };
        }
        if let Some(p) = &self.profile {
            cfg.baseline = BaselineSource::File { path: p.clone() };
        }
        if let Some(s) = self.inline_baseline {
            cfg.baseline = BaselineSource::Inline {
                duration_ms: seconds_to_ms(s)?,
            };
        }
        if self.skip_baseline {
            cfg.baseline = BaselineSource::default();
        }
        if seed.is_some() {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn seconds_to_ms(s: f64) -> Result<u64> {
    if !(s.is_finite() && s >= 0.0) {
        bail!("invalid duration {s} s");
    }
    Ok((s * 1000.0).round() as u64)
}

#[derive(Args)]
struct SimulateArgs {
    /// baseline, ladder, decay, constant or warning.
    #[arg(long, default_value = "ladder", conflicts_with = "model")]
    preset: String,
    /// Driver model JSON instead of a preset.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds to simulate; defaults to the schedule length.
    #[arg(long)]
    duration: Option<f64>,
    /// Speed-cap multiplier for segments labelled "low".
    #[arg(long)]
    low_speed_scale: Option<f64>,
    /// Let the operator see the session's warnings.
    #[arg(long)]
    closed_loop: bool,
    /// Output log (JSON Lines).
    #[arg(long)]
    out: PathBuf,
    /// Trace of the closed-loop session.
    #[arg(long, requires = "closed_loop")]
    trace: Option<PathBuf>,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Args)]
struct BaselineArgs {
    /// Trial-run log.
    #[arg(long, required_unless_present = "skip_baseline")]
    log: Option<PathBuf>,
    /// Profile file to write.
    #[arg(long)]
    out: PathBuf,
    /// Trial-run length in seconds.
    #[arg(long, default_value_t = DEFAULT_BASELINE_MS as f64 / 1000.0)]
    duration: f64,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    log: PathBuf,
    /// Trace CSV; defaults to the config's output path or stdout.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Also write the session events as wire-protocol JSON Lines.
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8765)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    /// Where to write the live trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Where to capture the received command log.
    #[arg(long)]
    capture: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    session: SessionArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Trace files; each becomes one row.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut model = match &args.model {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            let mut m: DriverModel = serde_json::from_str(&text).context("malformed driver model")?;
            m.seed = args.seed;
            m
        }
        None => DriverModel::preset(&args.preset, args.seed)
            .with_context(|| format!("unknown preset '{}'", args.preset))?,
    };
    if let Some(s) = args.low_speed_scale {
        for seg in model.schedule.iter_mut().filter(|s| s.label == "low") {
            seg.speed_scale = s;
        }
    }
    model.warning_response.enabled &= args.closed_loop;
    let duration_s = args.duration.unwrap_or_else(|| model.schedule_duration_s());
    let steps = (seconds_to_ms(duration_s)? / 50) as usize;
    let spans = model.spans();
    let mut driver = Driver::new(model, Arena::default())?;
    let mut samples = Vec::with_capacity(steps);

    if args.closed_loop {
        let cfg = args.session.resolve(Some(args.seed))?;
        if matches!(cfg.baseline, BaselineSource::Inline { .. }) {
            bail!("closed-loop simulation needs a profile file or the default baseline");
        }
        let trace: Box<dyn Write> = match &args.trace {
            Some(p) => Box::new(create(p)?),
            None => Box::new(io::sink()),
        };
        let (mut session, _) = Session::start(&cfg, trace, &spans)?;
        for _ in 0..steps {
            let s = driver.step(session.indication())?;
            session.push(s)?;
            samples.push(s);
        }
        session.finish()?.1.flush()?;
    } else {
        for _ in 0..steps {
            samples.push(driver.step(Indication::Normal)?);
        }
    }
    TelemetryLog::new(samples)
        .with_header(LogHeader::new(spans, Some(args.seed)))
        .save(&args.out)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    Ok(())
}

fn baseline(args: BaselineArgs) -> Result<()> {
    let cfg = args.session.resolve(None)?;
    let base = if args.session.skip_baseline {
        skipped_baseline(DefaultAlphas::default())?
    } else {
        let path = args.log.as_ref().expect("clap requires --log");
        let log = TelemetryLog::load(path).with_context(|| format!("{}", path.display()))?;
        run_baseline(&log.samples, &cfg.pipeline_config(), seconds_to_ms(args.duration)?)?
    };
    ProfileFile::from_baseline(&base)
        .save(&args.out)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    Ok(())
}

fn replay_cmd(args: ReplayArgs) -> Result<()> {
    let cfg = args.session.resolve(args.seed)?;
    let log = TelemetryLog::load(&args.log).with_context(|| format!("{}", args.log.display()))?;
    if log.samples.is_empty() {
        warn!("{} holds no commands; the trace has a header only", args.log.display());
    }
    let trace_path = args.trace.clone().or_else(|| cfg.output.trace.clone());
    let out: Box<dyn Write> = match &trace_path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let result = replay(&log, &cfg, out)?;
    let mut trace = result.trace;
    trace.flush()?;
    if !result.summary.baseline_complete {
        warn!("the log ended before the inline baseline completed");
    }
    if let Some(p) = &args.events {
        let mut w = create(p)?;
        for e in &result.events {
            writeln!(w, "{}", e.to_wire().to_json())?;
        }
        w.flush()?;
    }
    Ok(())
}

fn serve_cmd(args: ServeArgs) -> Result<()> {
    let mut cfg = args.session.resolve(args.seed)?;
    if args.trace.is_some() {
        cfg.output.trace = args.trace;
    }
    if args.capture.is_some() {
        cfg.output.log = args.capture;
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind((args.bind.as_str(), args.port))
            .await
            .with_context(|| format!("cannot listen on {}:{}", args.bind, args.port))?;
        eprintln!("listening on ws://{}", listener.local_addr()?);
        serve(listener, cfg, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
        Ok(())
    })
}

fn report(args: ReportArgs) -> Result<()> {
    let traces = args
        .traces
        .iter()
        .map(|p| {
            let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            Ok((name, Trace::load(p).with_context(|| format!("{}", p.display()))?))
        })
        .collect::<Result<Vec<_>>>()?;
    print!("{}", Report::build(&traces)?);
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn,teleop_entropy_harness=info".into()),
        )
        .with_writer(io::stderr)
        .init();
    let result = match Cli::parse().command {
        Command::Simulate(a) => simulate(a),
        Command::Baseline(a) => baseline(a),
        Command::Replay(a) => replay_cmd(a),
        Command::Serve(a) => serve_cmd(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
