//! Scripted synthetic operators.
//!
//! A smooth track-following controller produces the operator's intended
//! commands: constant cruise speed, curvature feed-forward and feedback on
//! the offset and heading from the track. Workload is modelled as corrective jerks added on top: short
//! held offsets that start at random, plus a small tremor. The amplitude of
//! both scales with `noise_sigma × schedule multiplier`. A warning-responsive
//! operator scales the noise down while a HIGH indication is showing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use teleop_entropy::{CommandSample64, Indication};
use thiserror::Error;

use crate::arena::{wrap_angle, Arena, ArenaError, Pose, STEP_S};

const STEP_MS: u64 = 50;

/// One stretch of the workload schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub label: String,
    pub duration_s: f64,
    /// Noise multiplier at the start of the segment.
    pub multiplier: f64,
    /// Multiplier reached at the end of the segment, interpolated
    /// geometrically. Constant when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier_end: Option<f64>,
    /// Exponent on elapsed time in the interpolation; above 1 the decay
    /// accelerates through the segment.
    #[serde(default = "one")]
    pub decay_shape: f64,
    /// Scale on the controller's speed caps.
    #[serde(default = "one")]
    pub speed_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Segment {
    pub fn constant(label: &str, duration_s: f64, multiplier: f64) -> Self {
        Self {
            label: label.to_string(),
            duration_s,
            multiplier,
            multiplier_end: None,
            decay_shape: 1.0,
            speed_scale: 1.0,
        }
    }

    pub fn decaying(label: &str, duration_s: f64, from: f64, to: f64) -> Self {
        Self {
            multiplier_end: Some(to),
            ..Self::constant(label, duration_s, from)
        }
    }

    fn multiplier_at(&self, into_s: f64) -> f64 {
        match self.multiplier_end {
            Some(end) if self.duration_s > 0.0 => {
                let frac = (into_s / self.duration_s).clamp(0.0, 1.0).powf(self.decay_shape);
                self.multiplier * (end / self.multiplier).powf(frac)
            }
            _ => self.multiplier,
        }
    }
}

/// Labelled time span of a schedule, in session milliseconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSpan {
    pub label: String,
    pub start_ms: u64,
    pub end_ms: u64,
}

/// Shape of the corrective-jerk process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JerkModel {
    /// Mean jerk onsets per second, per dimension.
    pub rate_hz: f64,
    /// Raw samples a jerk offset is held for.
    pub hold_samples: u32,
    /// Jerk magnitude is uniform in `σ·[1 - spread, 1 + spread]`.
    pub spread: f64,
    /// Per-sample Gaussian tremor, as a fraction of σ.
    pub tremor: f64,
}

impl Default for JerkModel {
    fn default() -> Self {
        Self {
            rate_hz: 0.7,
            hold_samples: 5,
            spread: 0.6,
            tremor: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarningResponse {
    pub enabled: bool,
    /// Noise multiplier applied while responding to a warning.
    pub recovery_factor: f64,
    pub reaction_delay_s: f64,
    /// Once reacting, the operator stays calm for at least this long even
    /// if the warning clears sooner.
    #[serde(default)]
    pub hold_s: f64,
}

impl Default for WarningResponse {
    fn default() -> Self {
        Self {
            enabled: false,
            recovery_factor: 0.2,
            reaction_delay_s: 1.0,
            hold_s: 10.0,
        }
    }
}

/// Controller gains and caps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Controller {
    /// Cruise speed, m/s.
    pub cruise_lin: f64,
    /// Cap on the intended angular command, rad/s.
    pub max_ang: f64,
    /// rad/s per rad of heading error.
    pub heading_gain: f64,
    /// rad/s per metre of offset from the track.
    pub offset_gain: f64,
}

impl Default for Controller {
    fn default() -> Self {
        Self {
            cruise_lin: 0.5,
            max_ang: 1.0,
            heading_gain: 1.0,
            offset_gain: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverModel {
    pub noise_sigma_lin: f64,
    pub noise_sigma_ang: f64,
    #[serde(default)]
    pub jerk: JerkModel,
    pub schedule: Vec<Segment>,
    #[serde(default)]
    pub warning_response: WarningResponse,
    #[serde(default)]
    pub controller: Controller,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Arena(#[from] ArenaError),
    #[error("invalid driver model: {0}")]
    Model(String),
}

impl DriverModel {
    pub fn new(schedule: Vec<Segment>, seed: u64) -> Self {
        Self {
            noise_sigma_lin: 0.12,
            noise_sigma_ang: 0.25,
            jerk: JerkModel::default(),
            schedule,
            warning_response: WarningResponse::default(),
            controller: Controller::default(),
            seed,
        }
    }

    /// Named schedules used by the CLI and the experiments.
    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        let schedule = match name {
            "baseline" => vec![Segment::constant("baseline", 600.0, 1.0)],
            "ladder" => vec![
                Segment::constant("baseline", 300.0, 1.0),
                Segment::constant("low", 300.0, 2.0),
                Segment::constant("medium", 300.0, 4.0),
                Segment::constant("high", 300.0, 8.0),
            ],
            "decay" => {
                let mut s = Segment::decaying("decay", 1800.0, 1.0, 1e-4);
                s.decay_shape = 1.5;
                vec![s]
            }
            "constant" => vec![Segment::constant("constant", 1800.0, 1.0)],
            "warning" => {
                let mut m = Self::new(vec![Segment::constant("high", 2700.0, 8.0)], seed);
                m.warning_response.enabled = true;
                return Some(m);
            }
            _ => return None,
        };
        Some(Self::new(schedule, seed))
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        let bad = |m: &str| Err(DriverError::Model(m.to_string()));
        if !(self.noise_sigma_lin >= 0.0 && self.noise_sigma_ang >= 0.0) {
            return bad("noise sigma must be non-negative");
        }
        if self.schedule.is_empty() {
            return bad("workload schedule is empty");
        }
        for s in &self.schedule {
            let end_ok = s.multiplier_end.is_none_or(|e| e > 0.0) && s.decay_shape > 0.0;
            if !(s.duration_s > 0.0 && s.multiplier >= 0.0 && s.speed_scale > 0.0 && end_ok) {
                return bad(&format!("segment '{}' has invalid parameters", s.label));
            }
            if s.multiplier_end.is_some() && s.multiplier <= 0.0 {
                return bad(&format!("decaying segment '{}' must start above zero", s.label));
            }
        }
        let j = &self.jerk;
        if !(j.rate_hz >= 0.0 && j.hold_samples > 0 && (0.0..=1.0).contains(&j.spread) && j.tremor >= 0.0) {
            return bad("invalid jerk model");
        }
        let w = &self.warning_response;
        if !(w.recovery_factor >= 0.0 && w.reaction_delay_s >= 0.0 && w.hold_s >= 0.0) {
            return bad("invalid warning response");
        }
        Ok(())
    }

    pub fn schedule_duration_s(&self) -> f64 {
        self.schedule.iter().map(|s| s.duration_s).sum()
    }

    /// Segment spans in session time.
    pub fn spans(&self) -> Vec<SegmentSpan> {
        let mut start = 0u64;
        self.schedule
            .iter()
            .map(|s| {
                let end = start + (s.duration_s * 1000.0).round() as u64;
                let span = SegmentSpan {
                    label: s.label.clone(),
                    start_ms: start,
                    end_ms: end,
                };
                start = end;
                span
            })
            .collect()
    }

    /// Active segment at `t_s`; the last segment holds past the end.
    fn segment_at(&self, t_s: f64) -> (&Segment, f64) {
        let mut start = 0.0;
        for s in &self.schedule {
            if t_s < start + s.duration_s {
                return (s, t_s - start);
            }
            start += s.duration_s;
        }
        let last = self.schedule.last().expect("validated schedule");
        (last, last.duration_s)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Jerk {
    remaining: u32,
    offset: f64,
}

#[derive(Debug, Clone)]
struct NoiseChannel {
    jerks: Vec<Jerk>,
}

impl NoiseChannel {
    fn new() -> Self {
        Self { jerks: Vec::new() }
    }

    /// Draws the same number of random values on every call so the noise
    /// stream does not depend on the workload path taken.
    fn sample(&mut self, rng: &mut ChaCha8Rng, jerk: &JerkModel, sigma: f64) -> f64 {
        let onset: f64 = rng.random();
        let sign: bool = rng.random();
        let mag: f64 = rng.random();
        let tremor: f64 = rng.sample(StandardNormal);

        if onset < jerk.rate_hz * STEP_S {
            let m = sigma * (1.0 - jerk.spread + 2.0 * jerk.spread * mag);
            self.jerks.push(Jerk {
                remaining: jerk.hold_samples,
                offset: if sign { m } else { -m },
            });
        }
        let held: f64 = self.jerks.iter().map(|j| j.offset).sum();
        self.jerks.iter_mut().for_each(|j| j.remaining -= 1);
        self.jerks.retain(|j| j.remaining > 0);
        held + jerk.tremor * sigma * tremor
    }
}

/// A running synthetic operator.
#[derive(Debug, Clone)]
pub struct Driver {
    model: DriverModel,
    arena: Arena,
    rng: ChaCha8Rng,
    pose: Pose,
    noise_lin: NoiseChannel,
    noise_ang: NoiseChannel,
    t_ms: u64,
    warned_at_ms: Option<u64>,
    warning_showing: bool,
}

impl Driver {
    pub fn new(model: DriverModel, arena: Arena) -> Result<Self, DriverError> {
        model.validate()?;
        arena.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            pose: arena.start_pose(),
            noise_lin: NoiseChannel::new(),
            noise_ang: NoiseChannel::new(),
            t_ms: 0,
            warned_at_ms: None,
            warning_showing: false,
            model,
            arena,
        })
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn model(&self) -> &DriverModel {
        &self.model
    }

    /// Whether the operator is currently reacting to a warning.
    pub fn recovering(&self) -> bool {
        let w = &self.model.warning_response;
        let Some(h) = self.warned_at_ms.filter(|_| w.enabled) else {
            return false;
        };
        let start = h + (w.reaction_delay_s * 1000.0).round() as u64;
        let held_until = start + (w.hold_s * 1000.0).round() as u64;
        self.t_ms >= start && (self.warning_showing || self.t_ms < held_until)
    }

    /// Noise multiplier for the next command.
    pub fn multiplier(&self) -> f64 {
        let (seg, into) = self.model.segment_at(self.t_ms as f64 / 1000.0);
        let m = seg.multiplier_at(into);
        if self.recovering() {
            m * self.model.warning_response.recovery_factor
        } else {
            m
        }
    }

    /// Emits the next 20 Hz command given the indication the operator
    /// currently sees.
    pub fn step(&mut self, indication: Indication) -> Result<CommandSample64, DriverError> {
        let showing = indication == Indication::High;
        if showing && !self.warning_showing {
            self.warned_at_ms = Some(self.t_ms);
        }
        self.warning_showing = showing;
        let mult = self.multiplier();
        let (seg, _) = self.model.segment_at(self.t_ms as f64 / 1000.0);
        let speed = seg.speed_scale;
        let c = self.model.controller;

        let track = self.arena.track_error(&self.pose);
        let v = c.cruise_lin * speed;
        let max_ang = c.max_ang * speed;
        let heading_err = wrap_angle(track.heading - self.pose.theta);
        let want_ang = v * track.curvature + c.heading_gain * heading_err - c.offset_gain * track.offset;
        let intended = (v, want_ang.clamp(-max_ang, max_ang));

        let jerk = self.model.jerk;
        let lin = intended.0 + self.noise_lin.sample(&mut self.rng, &jerk, self.model.noise_sigma_lin * mult);
        let ang = intended.1 + self.noise_ang.sample(&mut self.rng, &jerk, self.model.noise_sigma_ang * mult);
        self.pose.step(lin, ang, STEP_S);
        if !self.arena.contains(&self.pose) {
            return Err(ArenaError::LeftArena {
                t_ms: self.t_ms,
                x: self.pose.x,
                y: self.pose.y,
            }
            .into());
        }

        let sample = CommandSample64::new(self.t_ms, lin, ang);
        self.t_ms += STEP_MS;
        Ok(sample)
    }
}

/// Open-loop run: the operator never sees a warning.
pub fn simulate_driver(model: &DriverModel, arena: &Arena, duration_s: f64) -> Result<Vec<CommandSample64>, DriverError> {
    let mut d = Driver::new(model.clone(), arena.clone())?;
    let n = (duration_s * 1000.0 / STEP_MS as f64).round() as usize;
    (0..n).map(|_| d.step(Indication::Normal)).collect()
}
