use thiserror::Error;

/// Faults raised by the workload estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("stream integrity fault: sample at t={t_ms} ms does not follow t={previous_ms} ms")]
    NonMonotonicTimestamp { t_ms: u64, previous_ms: u64 },

    #[error("non-finite command value at t={t_ms} ms")]
    NonFiniteSample { t_ms: u64 },

    #[error("profile construction fault: no estimation errors")]
    EmptyErrors,

    #[error("bin boundaries require a positive alpha, got {0}")]
    NonPositiveAlpha(String),

    #[error("frequency vector is not normalized (sum = {0})")]
    NotNormalized(String),

    #[error(
        "insufficient baseline data: {errors_lin} linear / {errors_ang} angular errors \
         (need {min_errors}), {covered_ms} ms covered (need {required_ms} ms)"
    )]
    InsufficientBaseline {
        errors_lin: usize,
        errors_ang: usize,
        min_errors: usize,
        covered_ms: u64,
        required_ms: u64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = EngineError> = core::result::Result<T, E>;
