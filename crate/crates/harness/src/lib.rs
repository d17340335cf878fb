//! Harness around the entropy engine: synthetic operators in a 2D arena,
//! log replay, traces, the session service and the experiments that check
//! the engine's behavioural properties.

pub mod arena;
pub mod config;
pub mod driver;
pub mod experiments;
pub mod profile_file;
pub mod report;
pub mod server;
pub mod session;
pub mod sim;
pub mod telemetry;
pub mod trace;
pub mod wire;
