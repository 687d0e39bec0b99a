//! Configuration, file formats and run orchestration for the `dtap`
//! simulator. The simulation itself lives in `dtap-core`.

pub mod config;
pub mod output;
pub mod runner;
pub mod summary;

pub use config::{load_config, Overrides, Preset, RunConfig};
pub use runner::{run, simulate, sweep, RunError, RunOutcome, SweepSpec};
pub use summary::RunSummary;
