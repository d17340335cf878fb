//! Command decimation and one-step prediction.
//!
//! Raw operator commands arrive at 20 Hz. They are averaged in disjoint
//! blocks of three (a ~6.67 Hz filtered stream, one sample every 150 ms) and
//! each filtered sample is compared against a second-order prediction built
//! from the three filtered samples before it.

use crate::error::{EngineError, Result};
use crate::scalar::Real;

/// Raw samples averaged into one filtered sample.
pub const BLOCK_LEN: usize = 3;

/// Filtered samples needed before a prediction can be made.
pub const WINDOW_LEN: usize = 3;

/// One operator velocity command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandSample<T> {
    /// Session-relative time in milliseconds.
    pub t_ms: u64,
    /// Linear command velocity, m/s.
    pub lin: T,
    /// Angular command velocity, rad/s.
    pub ang: T,
}

impl<T: Real> CommandSample<T> {
    pub fn new(t_ms: u64, lin: T, ang: T) -> Self {
        Self { t_ms, lin, ang }
    }
}

/// Block average of three consecutive raw commands, stamped with the time of
/// the last raw sample in the block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilteredSample<T> {
    pub t_ms: u64,
    pub lin: T,
    pub ang: T,
}

/// Measured minus predicted, per dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPair<T> {
    pub t_ms: u64,
    pub err_lin: T,
    pub err_ang: T,
}

/// Which second-order expansion the predictor uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TaylorForm {
    /// `x1 + (x1 - x2) + ((x1 - x2) + (x2 - x3))`, summing both first
    /// differences. A ramp of slope `k` leaves a constant error of `-2k`.
    #[default]
    Summed,
    /// `x1 + (x1 - x2) + ((x1 - x2) - (x2 - x3)) / 2`, the textbook expansion
    /// with a halved second difference. Exact for ramps.
    Classical,
}

/// Predicts the next value from three past values ordered oldest to newest.
pub fn taylor_predict<T: Real>(oldest: T, middle: T, newest: T, form: TaylorForm) -> T {
    let d1 = newest - middle;
    let d0 = middle - oldest;
    match form {
        TaylorForm::Summed => newest + d1 + (d1 + d0),
        TaylorForm::Classical => newest + d1 + (d1 - d0) / T::lit(2.0),
    }
}

/// Non-overlapping three-sample averaging filter.
#[derive(Debug, Clone)]
pub struct BlockFilter<T> {
    sum_lin: T,
    sum_ang: T,
    filled: usize,
    last_t_ms: Option<u64>,
}

impl<T: Real> Default for BlockFilter<T> {
    fn default() -> Self {
        Self {
            sum_lin: T::zero(),
            sum_ang: T::zero(),
            filled: 0,
            last_t_ms: None,
        }
    }
}

impl<T: Real> BlockFilter<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Time of the last accepted raw sample.
    pub fn last_t_ms(&self) -> Option<u64> {
        self.last_t_ms
    }

    /// Feeds one raw sample; returns the block average on every third call.
    ///
    /// A sample whose timestamp does not strictly follow the previous one, or
    /// that carries a non-finite value, is rejected and leaves the filter
    /// untouched.
    pub fn ingest(&mut self, s: CommandSample<T>) -> Result<Option<FilteredSample<T>>> {
        if let Some(prev) = self.last_t_ms {
            if s.t_ms <= prev {
                return Err(EngineError::NonMonotonicTimestamp {
                    t_ms: s.t_ms,
                    previous_ms: prev,
                });
            }
        }
        if !s.lin.is_finite() || !s.ang.is_finite() {
            return Err(EngineError::NonFiniteSample { t_ms: s.t_ms });
        }
        self.last_t_ms = Some(s.t_ms);
        self.sum_lin = self.sum_lin + s.lin;
        self.sum_ang = self.sum_ang + s.ang;
        self.filled += 1;
        if self.filled < BLOCK_LEN {
            return Ok(None);
        }
        let n = T::from_count(BLOCK_LEN);
        let out = FilteredSample {
            t_ms: s.t_ms,
            lin: self.sum_lin / n,
            ang: self.sum_ang / n,
        };
        self.sum_lin = T::zero();
        self.sum_ang = T::zero();
        self.filled = 0;
        Ok(Some(out))
    }
}

/// The three most recent filtered samples, oldest first.
#[derive(Debug, Clone, Default)]
pub struct PredictorWindow<T> {
    slots: [Option<FilteredSample<T>>; WINDOW_LEN],
}

impl<T: Real> PredictorWindow<T> {
    pub fn new() -> Self {
        Self {
            slots: [None; WINDOW_LEN],
        }
    }

    /// Builds a full window from three samples ordered oldest to newest.
    pub fn from_samples(samples: [FilteredSample<T>; WINDOW_LEN]) -> Self {
        Self {
            slots: samples.map(Some),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_full(&self) -> bool {
        self.slots[0].is_some()
    }

    pub fn push(&mut self, s: FilteredSample<T>) {
        self.slots.rotate_left(1);
        self.slots[WINDOW_LEN - 1] = Some(s);
    }

    /// Predicted `(lin, ang)` for the next filtered sample, or `None` while
    /// warming up.
    pub fn predict(&self, form: TaylorForm) -> Option<(T, T)> {
        let [Some(a), Some(b), Some(c)] = self.slots else {
            return None;
        };
        Some((
            taylor_predict(a.lin, b.lin, c.lin, form),
            taylor_predict(a.ang, b.ang, c.ang, form),
        ))
    }
}

/// `measured - predicted` for both dimensions.
pub fn estimation_error<T: Real>(measured: &FilteredSample<T>, predicted: (T, T)) -> ErrorPair<T> {
    ErrorPair {
        t_ms: measured.t_ms,
        err_lin: measured.lin - predicted.0,
        err_ang: measured.ang - predicted.1,
    }
}

/// Output of one raw-sample step of the [`Estimator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorStep<T> {
    pub filtered: Option<FilteredSample<T>>,
    pub error: Option<ErrorPair<T>>,
}

/// Raw commands in, estimation errors out.
///
/// Predictions always use measured filtered values, never earlier
/// predictions. The first three filtered samples only fill the window.
#[derive(Debug, Clone)]
pub struct Estimator<T> {
    filter: BlockFilter<T>,
    window: PredictorWindow<T>,
    form: TaylorForm,
}

impl<T: Real> Default for Estimator<T> {
    fn default() -> Self {
        Self::new(TaylorForm::default())
    }
}

impl<T: Real> Estimator<T> {
    pub fn new(form: TaylorForm) -> Self {
        Self {
            filter: BlockFilter::new(),
            window: PredictorWindow::new(),
            form,
        }
    }

    pub fn form(&self) -> TaylorForm {
        self.form
    }

    pub fn last_t_ms(&self) -> Option<u64> {
        self.filter.last_t_ms()
    }

    pub fn ingest(&mut self, s: CommandSample<T>) -> Result<EstimatorStep<T>> {
        let Some(filtered) = self.filter.ingest(s)? else {
            return Ok(EstimatorStep {
                filtered: None,
                error: None,
            });
        };
        let error = self
            .window
            .predict(self.form)
            .map(|p| estimation_error(&filtered, p));
        self.window.push(filtered);
        Ok(EstimatorStep {
            filtered: Some(filtered),
            error,
        })
    }
}
