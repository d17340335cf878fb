//! The operator's driving profile: α per dimension and the bin edges derived
//! from it.

use std::collections::VecDeque;

use crate::error::{EngineError, Result};
use crate::estimator::ErrorPair;
use crate::scalar::Real;

/// Number of histogram bins.
pub const BIN_COUNT: usize = 9;

/// Number of interior bin edges.
pub const BOUNDARY_COUNT: usize = BIN_COUNT - 1;

/// Smallest α a profile may carry. Keeps the bins from collapsing for an
/// operator whose errors are all zero.
pub const ALPHA_FLOOR: f64 = 1e-9;

/// Multiples of α at which the bins are cut.
pub const BOUNDARY_MULTIPLES: [f64; BOUNDARY_COUNT] = [-5.0, -2.5, -1.0, -0.5, 0.5, 1.0, 2.5, 5.0];

/// Minimum errors per dimension for a baseline profile.
pub const MIN_BASELINE_ERRORS: usize = 100;

/// Index of the ceil(0.9·n)-th order statistic (1-based rank), using integer
/// arithmetic only.
pub fn nearest_rank_90(n: usize) -> usize {
    (9 * n).div_ceil(10)
}

/// 90th percentile (nearest rank) of the error magnitudes, floored at
/// [`ALPHA_FLOOR`].
pub fn compute_alpha<T: Real>(errors: &[T]) -> Result<T> {
    if errors.is_empty() {
        return Err(EngineError::EmptyErrors);
    }
    let mut mags: Vec<T> = errors.iter().map(|e| e.abs()).collect();
    let k = nearest_rank_90(mags.len()) - 1;
    let (_, kth, _) = mags.select_nth_unstable_by(k, |a, b| a.partial_cmp(b).expect("finite errors"));
    Ok(kth.max(T::lit(ALPHA_FLOOR)))
}

/// The eight ascending edges `[-5α, -2.5α, -α, -0.5α, 0.5α, α, 2.5α, 5α]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundaries<T>([T; BOUNDARY_COUNT]);

impl<T: Real> Boundaries<T> {
    pub fn from_alpha(alpha: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(EngineError::NonPositiveAlpha(alpha.to_string()));
        }
        Ok(Self(BOUNDARY_MULTIPLES.map(|m| T::lit(m) * alpha)))
    }

    pub fn as_array(&self) -> &[T; BOUNDARY_COUNT] {
        &self.0
    }

    /// 1-based bin of `error`. Bins are `[b(i-1), b(i))` with open outer tails,
    /// so a value sitting exactly on an edge belongs to the bin above it.
    pub fn bin_index(&self, error: T) -> usize {
        bin_index(error, &self.0)
    }
}

/// 1-based bin of `error` against arbitrary ascending edges.
pub fn bin_index<T: Real>(error: T, boundaries: &[T; BOUNDARY_COUNT]) -> usize {
    1 + boundaries.partition_point(|&b| b <= error)
}

/// Per-dimension α and bins. Immutable once built; updates replace the whole
/// value with a higher revision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverProfile<T> {
    pub alpha_lin: T,
    pub alpha_ang: T,
    pub boundaries_lin: Boundaries<T>,
    pub boundaries_ang: Boundaries<T>,
    pub created_at: u64,
    pub revision: u32,
}

impl<T: Real> DriverProfile<T> {
    pub fn new(alpha_lin: T, alpha_ang: T, created_at: u64, revision: u32) -> Result<Self> {
        Ok(Self {
            boundaries_lin: Boundaries::from_alpha(alpha_lin)?,
            boundaries_ang: Boundaries::from_alpha(alpha_ang)?,
            alpha_lin,
            alpha_ang,
            created_at,
            revision,
        })
    }

    /// Profile computed from per-dimension error samples.
    pub fn from_errors(lin: &[T], ang: &[T], created_at: u64, revision: u32) -> Result<Self> {
        Self::new(compute_alpha(lin)?, compute_alpha(ang)?, created_at, revision)
    }
}

/// Capacity-bounded record of recent error pairs, oldest first.
#[derive(Debug, Clone)]
pub struct ErrorHistory<T> {
    items: VecDeque<ErrorPair<T>>,
    capacity: usize,
}

impl<T: Real> ErrorHistory<T> {
    pub fn with_capacity(capacity: usize) -> Self {
        assert!(capacity > 0, "error history capacity must be positive");
        Self {
            items: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() == self.capacity
    }

    pub fn push(&mut self, e: ErrorPair<T>) {
        debug_assert!(self.items.back().is_none_or(|last| last.t_ms <= e.t_ms));
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(e);
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &ErrorPair<T>> {
        self.items.iter()
    }

    pub fn lin(&self) -> Vec<T> {
        self.items.iter().map(|e| e.err_lin).collect()
    }

    pub fn ang(&self) -> Vec<T> {
        self.items.iter().map(|e| e.err_ang).collect()
    }

    pub fn replace_with(&mut self, other: &ErrorHistory<T>) {
        self.items.clear();
        let skip = other.len().saturating_sub(self.capacity);
        self.items.extend(other.items.iter().skip(skip).copied());
    }
}

/// Checks that baseline errors are plentiful and cover the requested span.
///
/// `covered_ms` is the span of raw command time the errors were drawn from.
pub fn check_baseline_coverage<T: Real>(
    errors: &[ErrorPair<T>],
    covered_ms: u64,
    required_ms: u64,
) -> Result<()> {
    let n = errors.len();
    if n < MIN_BASELINE_ERRORS || covered_ms < required_ms {
        return Err(EngineError::InsufficientBaseline {
            errors_lin: n,
            errors_ang: n,
            min_errors: MIN_BASELINE_ERRORS,
            covered_ms,
            required_ms,
        });
    }
    Ok(())
}

/// Baseline profile (revision 0) from a trial-run error stream.
pub fn build_baseline<T: Real>(
    errors: &[ErrorPair<T>],
    covered_ms: u64,
    required_ms: u64,
) -> Result<DriverProfile<T>> {
    check_baseline_coverage(errors, covered_ms, required_ms)?;
    let lin: Vec<T> = errors.iter().map(|e| e.err_lin).collect();
    let ang: Vec<T> = errors.iter().map(|e| e.err_ang).collect();
    let created_at = errors.last().map_or(0, |e| e.t_ms);
    DriverProfile::from_errors(&lin, &ang, created_at, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent percentile oracle: full sort, then pick the smallest value
    /// that has at least 90% of the sample at or below it.
    fn oracle_p90(errors: &[f64]) -> f64 {
        let mut m: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
        m.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = m.len() as f64;
        *m.iter()
            .find(|&&v| m.iter().filter(|&&w| w <= v).count() as f64 >= 0.9 * n)
            .unwrap()
    }

    #[test]
    fn rank_arithmetic() {
        assert_eq!(nearest_rank_90(1), 1);
        assert_eq!(nearest_rank_90(4), 4);
        assert_eq!(nearest_rank_90(10), 9);
        assert_eq!(nearest_rank_90(11), 10);
        assert_eq!(nearest_rank_90(100), 90);
    }

    #[test]
    fn alpha_of_one_to_hundred() {
        let errs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(oracle_p90(&errs), 90.0);
        assert_eq!(compute_alpha(&errs).unwrap(), 90.0);
        let neg: Vec<f64> = errs.iter().map(|e| -e).collect();
        assert_eq!(compute_alpha(&neg).unwrap(), 90.0);
    }

    #[test]
    fn alpha_of_symmetric_four() {
        let errs = [-2.0, -1.0, 1.0, 2.0];
        assert_eq!(oracle_p90(&errs), 2.0);
        assert_eq!(compute_alpha(&errs).unwrap(), 2.0);
    }

    #[test]
    fn alpha_floor_and_empty() {
        assert_eq!(compute_alpha(&[0.0f64; 10]).unwrap(), ALPHA_FLOOR);
        assert_eq!(compute_alpha::<f64>(&[]), Err(EngineError::EmptyErrors));
    }

    #[test]
    fn boundary_scaling() {
        assert_eq!(
            Boundaries::from_alpha(1.0).unwrap().as_array(),
            &[-5.0, -2.5, -1.0, -0.5, 0.5, 1.0, 2.5, 5.0]
        );
        assert_eq!(
            Boundaries::from_alpha(2.0).unwrap().as_array(),
            &[-10.0, -5.0, -2.0, -1.0, 1.0, 2.0, 5.0, 10.0]
        );
        assert_eq!(
            Boundaries::from_alpha(0.5).unwrap().as_array(),
            &[-2.5, -1.25, -0.5, -0.25, 0.25, 0.5, 1.25, 2.5]
        );
        assert!(Boundaries::from_alpha(0.0f64).is_err());
        assert!(Boundaries::from_alpha(-1.0f64).is_err());
        assert!(Boundaries::from_alpha(f64::NAN).is_err());
    }

    #[test]
    fn bin_lookup() {
        let b = Boundaries::from_alpha(1.0).unwrap();
        assert_eq!(b.bin_index(0.0), 5);
        assert_eq!(b.bin_index(3.0), 8);
        assert_eq!(b.bin_index(-6.0), 1);
        assert_eq!(b.bin_index(6.0), 9);
        // Left-closed edges.
        assert_eq!(b.bin_index(0.5), 6);
        assert_eq!(b.bin_index(-0.5), 5);
        assert_eq!(b.bin_index(-5.0), 2);
        assert_eq!(b.bin_index(5.0), 9);
    }

    #[test]
    fn history_is_bounded() {
        let mut h = ErrorHistory::with_capacity(3);
        for t in 0..5u64 {
            h.push(ErrorPair {
                t_ms: t,
                err_lin: t as f64,
                err_ang: 0.0,
            });
        }
        assert!(h.is_full());
        assert_eq!(h.lin(), vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn baseline_requires_data() {
        let errs: Vec<ErrorPair<f64>> = (0..99)
            .map(|i| ErrorPair {
                t_ms: i * 150,
                err_lin: 0.1,
                err_ang: 0.1,
            })
            .collect();
        assert!(matches!(
            build_baseline(&errs, 600_000, 600_000),
            Err(EngineError::InsufficientBaseline { errors_lin: 99, .. })
        ));
    }

    #[test]
    fn baseline_requires_coverage() {
        let errs: Vec<ErrorPair<f64>> = (0..197)
            .map(|i| ErrorPair {
                t_ms: i * 150,
                err_lin: 0.1,
                err_ang: 0.1,
            })
            .collect();
        assert!(matches!(
            build_baseline(&errs, 30_000, 600_000),
            Err(EngineError::InsufficientBaseline { covered_ms: 30_000, .. })
        ));
        let p = build_baseline(&errs, 30_000, 30_000).unwrap();
        assert_eq!(p.revision, 0);
        assert_eq!(p.alpha_lin, 0.1);
    }
}
