//! Driver Profile Update.
//!
//! Watches the total-entropy history. Once the last 100 entropies have both a
//! lower mean and a lower standard deviation than the stored thresholds, α is
//! recomputed from the last 100 estimation errors and the thresholds drop to
//! the statistics that beat them. The profile only ever tightens.

use crate::error::Result;
use crate::estimator::ErrorPair;
use crate::profile::{DriverProfile, ErrorHistory};
use crate::scalar::Real;

/// Entropy and error window length.
pub const DPU_WINDOW: usize = 100;

/// Mean and standard deviation an entropy window has to beat. `+∞` in either
/// field means "no prior knowledge".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds<T> {
    pub avg: T,
    pub std: T,
}

impl<T: Real> Thresholds<T> {
    pub fn unbounded() -> Self {
        Self {
            avg: T::infinity(),
            std: T::infinity(),
        }
    }

    /// Whether a window with these statistics triggers an update. Both
    /// comparisons are strict.
    pub fn beaten_by(&self, stats: &Thresholds<T>) -> bool {
        stats.avg < self.avg && stats.std < self.std
    }
}

/// Population mean and standard deviation.
pub fn mean_std<T: Real>(xs: &[T]) -> Option<Thresholds<T>> {
    if xs.is_empty() {
        return None;
    }
    let n = T::from_count(xs.len());
    let mean = xs.iter().fold(T::zero(), |a, &x| a + x) / n;
    let var = xs.iter().fold(T::zero(), |a, &x| a + (x - mean) * (x - mean)) / n;
    Some(Thresholds {
        avg: mean,
        std: var.sqrt(),
    })
}

/// Initial thresholds: statistics of a familiarization-session entropy
/// history, or `+∞` when there is none.
pub fn seed_thresholds<T: Real>(history: Option<&[T]>) -> Thresholds<T> {
    history.and_then(mean_std).unwrap_or_else(Thresholds::unbounded)
}

/// Gate on a window of entropies. Returns the new thresholds if the window
/// beats the old ones.
pub fn evaluate_window<T: Real>(window: &[T], thresholds: &Thresholds<T>) -> Option<Thresholds<T>> {
    let stats = mean_std(window)?;
    thresholds.beaten_by(&stats).then_some(stats)
}

/// A profile replacement produced by the DPU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileUpdate<T> {
    pub t_ms: u64,
    pub profile: DriverProfile<T>,
    pub thresholds: Thresholds<T>,
}

impl<T: Real> ProfileUpdate<T> {
    pub fn revision(&self) -> u32 {
        self.profile.revision
    }
}

#[derive(Debug, Clone)]
pub struct DpuState<T> {
    thresholds: Thresholds<T>,
    entropy_history: Vec<T>,
    /// Entropies recorded since the last accepted update.
    since_update: usize,
    error_history: ErrorHistory<T>,
    revision: u32,
}

impl<T: Real> DpuState<T> {
    /// `revision` is that of the profile currently in force.
    pub fn new(thresholds: Thresholds<T>, revision: u32) -> Self {
        Self {
            thresholds,
            entropy_history: Vec::new(),
            since_update: 0,
            error_history: ErrorHistory::with_capacity(DPU_WINDOW),
            revision,
        }
    }

    pub fn thresholds(&self) -> Thresholds<T> {
        self.thresholds
    }

    pub fn entropy_history(&self) -> &[T] {
        &self.entropy_history
    }

    /// Errors copied in at the last accepted update.
    pub fn error_history(&self) -> &ErrorHistory<T> {
        &self.error_history
    }

    pub fn record_entropy(&mut self, total: T) {
        self.entropy_history.push(total);
        self.since_update += 1;
    }

    /// One evaluation of the update rule against the most recent errors.
    ///
    /// Does nothing until 100 entropies have been recorded since the last
    /// accepted update and `recent_errors` holds a full window.
    pub fn step(&mut self, t_ms: u64, recent_errors: &ErrorHistory<T>) -> Result<Option<ProfileUpdate<T>>> {
        if self.since_update < DPU_WINDOW || recent_errors.len() < DPU_WINDOW {
            return Ok(None);
        }
        let window = &self.entropy_history[self.entropy_history.len() - DPU_WINDOW..];
        let Some(stats) = evaluate_window(window, &self.thresholds) else {
            return Ok(None);
        };
        self.error_history.replace_with(recent_errors);
        let profile = DriverProfile::from_errors(
            &self.error_history.lin(),
            &self.error_history.ang(),
            t_ms,
            self.revision + 1,
        )?;
        self.thresholds = stats;
        self.revision = profile.revision;
        self.since_update = 0;
        Ok(Some(ProfileUpdate {
            t_ms,
            profile,
            thresholds: stats,
        }))
    }
}

/// Convenience for building an error window from a slice.
pub fn error_window<T: Real>(errors: &[ErrorPair<T>]) -> ErrorHistory<T> {
    let mut h = ErrorHistory::with_capacity(DPU_WINDOW);
    for &e in errors {
        h.push(e);
    }
    h
}
