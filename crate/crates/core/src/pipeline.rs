//! Session pipeline: raw commands in, entropy rows and events out.
//!
//! Time is driven entirely by sample timestamps. Entropy ticks fall on
//! multiples of the period in session time; a tick fires when the first
//! sample at or after it arrives and covers the errors produced since the
//! previous tick. The same input therefore yields the same output whether it
//! is replayed from a file or streamed live.

use crate::dpu::{seed_thresholds, DpuState, ProfileUpdate, Thresholds, DPU_WINDOW};
use crate::entropy::{on_tick, EntropyComputation, EntropyConfig};
use crate::error::Result;
use crate::estimator::{CommandSample, ErrorPair, Estimator, TaylorForm};
use crate::profile::{build_baseline, DriverProfile, ErrorHistory, ALPHA_FLOOR};
use crate::scalar::Real;
use crate::wais::{Indication, IndicationState, TransitionEvent, WaisConfig};

/// Nominal spacing of raw commands (20 Hz).
pub const RAW_INTERVAL_MS: u64 = 50;

/// Default baseline length, ten minutes.
pub const DEFAULT_BASELINE_MS: u64 = 600_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig<T> {
    pub entropy: EntropyConfig<T>,
    pub wais: WaisConfig<T>,
    pub dpu_enabled: bool,
    pub taylor: TaylorForm,
}

impl<T: Real> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            entropy: EntropyConfig::default(),
            wais: WaisConfig::default(),
            dpu_enabled: true,
            taylor: TaylorForm::default(),
        }
    }
}

impl<T: Real> PipelineConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.entropy.validate()?;
        self.wais.validate()
    }
}

/// One entropy computation together with the WAIS state after it and the
/// profile it was computed against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyRecord<T> {
    pub computation: EntropyComputation<T>,
    pub wais_avg: T,
    pub indication: Indication,
    pub alpha_lin: T,
    pub alpha_ang: T,
    pub profile_revision: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PipelineEvent<T> {
    Entropy(EntropyRecord<T>),
    Indication(TransitionEvent<T>),
    ProfileUpdate(ProfileUpdate<T>),
}

#[derive(Debug, Clone)]
pub struct Pipeline<T> {
    config: PipelineConfig<T>,
    estimator: Estimator<T>,
    profile: DriverProfile<T>,
    pending: Vec<ErrorPair<T>>,
    recent_errors: ErrorHistory<T>,
    next_tick_ms: u64,
    dpu: DpuState<T>,
    wais: IndicationState<T>,
    history: Vec<EntropyComputation<T>>,
}

impl<T: Real> Pipeline<T> {
    pub fn new(config: PipelineConfig<T>, profile: DriverProfile<T>, thresholds: Thresholds<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            estimator: Estimator::new(config.taylor),
            pending: Vec::new(),
            recent_errors: ErrorHistory::with_capacity(DPU_WINDOW),
            next_tick_ms: config.entropy.period_ms,
            dpu: DpuState::new(thresholds, profile.revision),
            wais: IndicationState::new(),
            history: Vec::new(),
            profile,
            config,
        })
    }

    pub fn config(&self) -> &PipelineConfig<T> {
        &self.config
    }

    pub fn profile(&self) -> &DriverProfile<T> {
        &self.profile
    }

    pub fn thresholds(&self) -> Thresholds<T> {
        self.dpu.thresholds()
    }

    pub fn indication(&self) -> Indication {
        self.wais.status()
    }

    /// Every entropy computation so far, in order.
    pub fn history(&self) -> &[EntropyComputation<T>] {
        &self.history
    }

    /// Feeds one raw command. Ticks that fall due at or before the sample's
    /// timestamp are evaluated first.
    pub fn push(&mut self, sample: CommandSample<T>) -> Result<Vec<PipelineEvent<T>>> {
        let mut events = Vec::new();
        self.push_into(sample, &mut events)?;
        Ok(events)
    }

    pub fn push_into(&mut self, sample: CommandSample<T>, events: &mut Vec<PipelineEvent<T>>) -> Result<()> {
        // Validate before any tick fires so a rejected sample has no effect.
        let mut probe = self.estimator.clone();
        let step = probe.ingest(sample)?;
        self.fire_due_ticks(sample.t_ms, events)?;
        self.estimator = probe;
        if let Some(e) = step.error {
            self.pending.push(e);
            self.recent_errors.push(e);
        }
        Ok(())
    }

    fn fire_due_ticks(&mut self, now_ms: u64, events: &mut Vec<PipelineEvent<T>>) -> Result<()> {
        let period = self.config.entropy.period_ms;
        while self.next_tick_ms <= now_ms {
            if self.pending.is_empty() {
                // Idle: skip straight past every empty tick.
                self.next_tick_ms = (now_ms / period + 1) * period;
                break;
            }
            let tick = self.next_tick_ms;
            self.next_tick_ms += period;
            self.tick(tick, events)?;
        }
        Ok(())
    }

    fn tick(&mut self, t_ms: u64, events: &mut Vec<PipelineEvent<T>>) -> Result<()> {
        let batch = std::mem::take(&mut self.pending);
        let Some(c) = on_tick(t_ms, &batch, &self.profile, &self.config.entropy) else {
            return Ok(());
        };
        self.history.push(c);
        let transition = self.wais.step(t_ms, c.total, &self.config.wais);
        events.push(PipelineEvent::Entropy(EntropyRecord {
            computation: c,
            wais_avg: self.wais.avg().expect("WAIS evaluated"),
            indication: self.wais.status(),
            alpha_lin: self.profile.alpha_lin,
            alpha_ang: self.profile.alpha_ang,
            profile_revision: self.profile.revision,
        }));
        if let Some(ev) = transition {
            events.push(PipelineEvent::Indication(ev));
        }
        if self.config.dpu_enabled {
            self.dpu.record_entropy(c.total);
            if let Some(update) = self.dpu.step(t_ms, &self.recent_errors)? {
                self.profile = update.profile;
                events.push(PipelineEvent::ProfileUpdate(update));
            }
        }
        Ok(())
    }
}

/// Output of a trial-run session.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline<T> {
    pub profile: DriverProfile<T>,
    pub thresholds: Thresholds<T>,
    /// Total entropies of the trial run evaluated against its own profile.
    pub entropy_history: Vec<T>,
}

/// Where a session's starting profile comes from when no trial run is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefaultAlphas<T> {
    pub alpha_lin: T,
    pub alpha_ang: T,
}

impl<T: Real> Default for DefaultAlphas<T> {
    fn default() -> Self {
        Self {
            alpha_lin: T::lit(0.2),
            alpha_ang: T::lit(0.4),
        }
    }
}

/// Profile from defaults with unbounded DPU thresholds.
pub fn skipped_baseline<T: Real>(defaults: DefaultAlphas<T>) -> Result<Baseline<T>> {
    Ok(Baseline {
        profile: DriverProfile::new(defaults.alpha_lin, defaults.alpha_ang, 0, 0)?,
        thresholds: Thresholds::unbounded(),
        entropy_history: Vec::new(),
    })
}

/// Builds a baseline from the first `duration_ms` of a trial-run stream.
///
/// α comes from every estimation error in that span. The span is then
/// replayed against the new profile to obtain the entropy history whose mean
/// and standard deviation seed the DPU thresholds. A zero-motion trial
/// (both α at the floor) seeds `+∞` thresholds, since an all-zero entropy
/// history would lock the DPU forever.
pub fn run_baseline<T: Real>(
    samples: &[CommandSample<T>],
    config: &PipelineConfig<T>,
    duration_ms: u64,
) -> Result<Baseline<T>> {
    config.validate()?;
    let start = samples.first().map_or(0, |s| s.t_ms);
    let span: Vec<CommandSample<T>> = samples
        .iter()
        .copied()
        .take_while(|s| s.t_ms < start.saturating_add(duration_ms))
        .collect();

    let mut estimator = Estimator::new(config.taylor);
    let mut errors = Vec::new();
    for &s in &span {
        errors.extend(estimator.ingest(s)?.error);
    }
    let covered_ms = match (span.first(), span.last()) {
        (Some(a), Some(b)) => b.t_ms - a.t_ms + RAW_INTERVAL_MS,
        _ => 0,
    };
    let profile = build_baseline(&errors, covered_ms, duration_ms)?;

    let replay_cfg = PipelineConfig {
        dpu_enabled: false,
        ..*config
    };
    let mut pipeline = Pipeline::new(replay_cfg, profile, Thresholds::unbounded())?;
    for &s in &span {
        pipeline.push(s)?;
    }
    let entropy_history: Vec<T> = pipeline.history().iter().map(|c| c.total).collect();
    let floor = T::lit(ALPHA_FLOOR);
    let zero_motion = profile.alpha_lin <= floor && profile.alpha_ang <= floor;
    let thresholds = if zero_motion {
        Thresholds::unbounded()
    } else {
        seed_thresholds(Some(&entropy_history))
    };
    Ok(Baseline {
        profile,
        thresholds,
        entropy_history,
    })
}
