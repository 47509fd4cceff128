//! File formats, experiment configuration and reporting around `aznn-core`.

pub mod clock;
pub mod config;
pub mod experiment;
pub mod matrix_io;
pub mod output;
pub mod report;

pub use clock::StdClock;
pub use config::{ConfigError, Problem, TimeVaryingConfig};
pub use experiment::{run_time_varying, TimeVaryingResult};
