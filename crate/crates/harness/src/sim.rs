//! Closed-loop runs: the operator sees the pipeline's indication before each
//! command.

use teleop_entropy::{CommandSample64, EngineError, Pipeline64, PipelineEvent64};
use thiserror::Error;

use crate::arena::Arena;
use crate::driver::{Driver, DriverError, DriverModel};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Default)]
pub struct ClosedLoopRun {
    pub log: Vec<CommandSample64>,
    pub events: Vec<PipelineEvent64>,
}

/// Drives `pipeline` with a synthetic operator for `duration_s`.
pub fn run_closed_loop(
    model: &DriverModel,
    arena: &Arena,
    pipeline: &mut Pipeline64,
    duration_s: f64,
) -> Result<ClosedLoopRun, SimError> {
    let mut driver = Driver::new(model.clone(), arena.clone())?;
    let n = (duration_s * 20.0).round() as usize;
    let mut run = ClosedLoopRun {
        log: Vec::with_capacity(n),
        events: Vec::new(),
    };
    for _ in 0..n {
        let s = driver.step(pipeline.indication())?;
        pipeline.push_into(s, &mut run.events)?;
        run.log.push(s);
    }
    Ok(run)
}
