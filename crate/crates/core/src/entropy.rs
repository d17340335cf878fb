//! Histogramming of estimation errors and base-9 behavioural entropy.

use crate::error::{EngineError, Result};
use crate::estimator::ErrorPair;
use crate::profile::{Boundaries, DriverProfile, BIN_COUNT};
use crate::scalar::Real;

/// Spacing of estimation errors in the filtered stream.
pub const ERROR_INTERVAL_MS: u64 = 150;

/// Default entropy period (0.4 Hz).
pub const DEFAULT_PERIOD_MS: u64 = 2_500;

/// Usable period range: 0.4 Hz down to 0.2 Hz.
pub const MIN_PERIOD_MS: u64 = 2_500;
pub const MAX_PERIOD_MS: u64 = 5_000;

/// Frequency of each bin, `p[0]` being bin 1.
pub type Frequencies<T> = [T; BIN_COUNT];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyConfig<T> {
    /// Time between entropy computations.
    pub period_ms: u64,
    /// Weights of the (linear, angular) entropies in the total.
    pub weights: [T; 2],
}

impl<T: Real> Default for EntropyConfig<T> {
    fn default() -> Self {
        Self {
            period_ms: DEFAULT_PERIOD_MS,
            weights: [T::lit(0.5), T::lit(0.5)],
        }
    }
}

impl<T: Real> EntropyConfig<T> {
    pub fn new(period_ms: u64, weights: [T; 2]) -> Result<Self> {
        let cfg = Self { period_ms, weights };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_PERIOD_MS..=MAX_PERIOD_MS).contains(&self.period_ms) {
            return Err(EngineError::Config(format!(
                "entropy period {} ms outside [{MIN_PERIOD_MS}, {MAX_PERIOD_MS}] ms",
                self.period_ms
            )));
        }
        let [a, b] = self.weights;
        if !(a >= T::zero() && b >= T::zero()) || ((a + b) - T::one()).abs() > T::normalization_tolerance()
        {
            return Err(EngineError::Config(format!(
                "entropy weights ({a}, {b}) must be non-negative and sum to 1"
            )));
        }
        Ok(())
    }

    /// Errors expected per batch, `round(period / 150 ms)`.
    pub fn expected_batch_size(&self) -> usize {
        expected_batch_size(self.period_ms)
    }
}

pub fn expected_batch_size(period_ms: u64) -> usize {
    ((period_ms + ERROR_INTERVAL_MS / 2) / ERROR_INTERVAL_MS) as usize
}

/// Bin frequencies of a batch, or `None` for an empty batch.
pub fn histogram<T: Real>(batch: &[T], boundaries: &Boundaries<T>) -> Option<Frequencies<T>> {
    if batch.is_empty() {
        return None;
    }
    let mut counts = [0usize; BIN_COUNT];
    for &e in batch {
        counts[boundaries.bin_index(e) - 1] += 1;
    }
    let n = T::from_count(batch.len());
    Some(counts.map(|c| T::from_count(c) / n))
}

/// `Σ -p·log9(p)` over the non-empty bins. Lies in `[0, 1]`.
pub fn entropy<T: Real>(p: &Frequencies<T>) -> Result<T> {
    let sum = p.iter().fold(T::zero(), |acc, &x| acc + x);
    if (sum - T::one()).abs() > T::normalization_tolerance() || p.iter().any(|&x| x < T::zero()) {
        return Err(EngineError::NotNormalized(sum.to_string()));
    }
    let ln9 = T::lit(9.0).ln();
    let h = p
        .iter()
        .filter(|&&x| x > T::zero())
        .fold(T::zero(), |acc, &x| acc - x * (x.ln() / ln9));
    // Rounding can leave a uniform vector a hair above 1 or a single bin at -0.
    Ok(h.max(T::zero()).min(T::one()))
}

/// Weighted combination of the per-dimension entropies.
pub fn total_entropy<T: Real>(hp_lin: T, hp_ang: T, weights: [T; 2]) -> T {
    weights[0] * hp_lin + weights[1] * hp_ang
}

/// One entropy evaluation over a batch of errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyComputation<T> {
    pub t_ms: u64,
    pub hp_lin: T,
    pub hp_ang: T,
    pub total: T,
    pub batch_size: usize,
}

/// Entropy of the errors accumulated since the previous tick. An empty batch
/// (idle robot) yields nothing.
pub fn on_tick<T: Real>(
    t_ms: u64,
    batch: &[ErrorPair<T>],
    profile: &DriverProfile<T>,
    config: &EntropyConfig<T>,
) -> Option<EntropyComputation<T>> {
    if batch.is_empty() {
        return None;
    }
    let lin: Vec<T> = batch.iter().map(|e| e.err_lin).collect();
    let ang: Vec<T> = batch.iter().map(|e| e.err_ang).collect();
    let hp = |xs: &[T], b: &Boundaries<T>| {
        let p = histogram(xs, b).expect("non-empty batch");
        entropy(&p).expect("histogram frequencies are normalized")
    };
    let hp_lin = hp(&lin, &profile.boundaries_lin);
    let hp_ang = hp(&ang, &profile.boundaries_ang);
    Some(EntropyComputation {
        t_ms,
        hp_lin,
        hp_ang,
        total: total_entropy(hp_lin, hp_ang, config.weights),
        batch_size: batch.len(),
    })
}
