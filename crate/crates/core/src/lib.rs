//! Operator workload estimation from teleoperation velocity commands.
//!
//! Linear and angular commands are decimated to ~6.67 Hz, predicted one step
//! ahead with a second-order expansion, and the prediction errors are
//! histogrammed against bins scaled by the operator's α (90th percentile of
//! error magnitude). The base-9 entropy of that histogram tracks how
//! unpredictable, and so how loaded, the operator is. The DPU tightens α as
//! the operator improves; WAIS raises a warning when the smoothed entropy
//! stays high.
//!
//! Every stage is generic over [`Real`] (`f32` or `f64`). The `*64` aliases
//! below fix the scalar to `f64`, which is what the harness uses.

pub mod dpu;
pub mod entropy;
pub mod error;
pub mod estimator;
pub mod pipeline;
pub mod profile;
pub mod scalar;
pub mod wais;

pub use dpu::{DpuState, ProfileUpdate, Thresholds};
pub use entropy::{EntropyComputation, EntropyConfig};
pub use error::{EngineError, Result};
pub use estimator::{CommandSample, ErrorPair, Estimator, FilteredSample, TaylorForm};
pub use pipeline::{Baseline, DefaultAlphas, EntropyRecord, Pipeline, PipelineConfig, PipelineEvent};
pub use profile::{Boundaries, DriverProfile};
pub use scalar::Real;
pub use wais::{Indication, IndicationState, TransitionEvent, WaisConfig};

pub type CommandSample64 = CommandSample<f64>;
pub type ErrorPair64 = ErrorPair<f64>;
pub type DriverProfile64 = DriverProfile<f64>;
pub type EntropyComputation64 = EntropyComputation<f64>;
pub type Thresholds64 = Thresholds<f64>;
pub type ProfileUpdate64 = ProfileUpdate<f64>;
pub type PipelineConfig64 = PipelineConfig<f64>;
pub type Pipeline64 = Pipeline<f64>;
pub type PipelineEvent64 = PipelineEvent<f64>;
pub type EntropyRecord64 = EntropyRecord<f64>;
pub type Baseline64 = Baseline<f64>;

pub type Pipeline32 = Pipeline<f32>;
