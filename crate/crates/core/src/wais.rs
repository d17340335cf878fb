//! Warning And Indication System: moving average of total entropy against a
//! fixed threshold.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{EngineError, Result};
use crate::scalar::Real;

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaisConfig<T> {
    /// Number of computations averaged.
    pub window: usize,
    /// HIGH when the average strictly exceeds this.
    pub threshold: T,
    /// Once HIGH, the average must fall to `threshold - hysteresis` to clear.
    pub hysteresis: T,
}

impl<T: Real> Default for WaisConfig<T> {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            threshold: T::lit(DEFAULT_THRESHOLD),
            hysteresis: T::zero(),
        }
    }
}

impl<T: Real> WaisConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(EngineError::Config("WAIS window must be at least 1".into()));
        }
        if !(self.threshold > T::zero() && self.threshold < T::one()) {
            return Err(EngineError::Config(format!(
                "WAIS threshold {} must lie in (0, 1)",
                self.threshold
            )));
        }
        if !(self.hysteresis >= T::zero()) || self.hysteresis >= self.threshold {
            return Err(EngineError::Config(format!(
                "WAIS hysteresis {} must lie in [0, threshold)",
                self.hysteresis
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Indication {
    #[default]
    Normal,
    High,
}

impl Indication {
    pub fn as_str(self) -> &'static str {
        match self {
            Indication::Normal => "NORMAL",
            Indication::High => "HIGH",
        }
    }
}

impl fmt::Display for Indication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Emitted exactly when the indication flips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionEvent<T> {
    pub t_ms: u64,
    pub to: Indication,
    pub avg: T,
}

impl<T> TransitionEvent<T> {
    /// The operator hears a ping on escalation only.
    pub fn play_ping(&self) -> bool {
        self.to == Indication::High
    }
}

#[derive(Debug, Clone)]
pub struct IndicationState<T> {
    recent: VecDeque<T>,
    avg: Option<T>,
    status: Indication,
    last_transition_t_ms: Option<u64>,
}

impl<T: Real> Default for IndicationState<T> {
    fn default() -> Self {
        Self {
            recent: VecDeque::new(),
            avg: None,
            status: Indication::Normal,
            last_transition_t_ms: None,
        }
    }
}

impl<T: Real> IndicationState<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current moving average; `None` before the first computation.
    pub fn avg(&self) -> Option<T> {
        self.avg
    }

    pub fn status(&self) -> Indication {
        self.status
    }

    pub fn last_transition_t_ms(&self) -> Option<u64> {
        self.last_transition_t_ms
    }

    /// Feeds one total entropy.
    pub fn step(&mut self, t_ms: u64, total: T, cfg: &WaisConfig<T>) -> Option<TransitionEvent<T>> {
        self.recent.push_back(total);
        while self.recent.len() > cfg.window {
            self.recent.pop_front();
        }
        let avg = warmup_average(self.recent.iter().copied()).expect("window holds the new total");
        self.avg = Some(avg);
        let next = match self.status {
            Indication::Normal if avg > cfg.threshold => Indication::High,
            Indication::High if avg <= cfg.threshold - cfg.hysteresis => Indication::Normal,
            s => s,
        };
        if next == self.status {
            return None;
        }
        self.status = next;
        self.last_transition_t_ms = Some(t_ms);
        Some(TransitionEvent { t_ms, to: next, avg })
    }
}

/// Mean of whatever totals are available (fewer than the window early in a
/// session). `None` for no totals.
pub fn warmup_average<T: Real>(totals: impl IntoIterator<Item = T>) -> Option<T> {
    let (sum, n) = totals
        .into_iter()
        .fold((T::zero(), 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / T::from_count(n))
}
