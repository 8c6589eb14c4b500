//! Experiment harness for MVHL recovery: configuration, seeded sweeps,
//! instance files, CSV/SVG output and the `mvhl` command line.

pub mod config;
pub mod error;
pub mod experiments;
pub mod instance;
pub mod records;
pub mod svg;

pub use config::{ExperimentConfig, ExperimentKind, PartialConfig};
pub use error::{HarnessError, Result};
