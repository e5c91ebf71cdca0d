//! Benchmark harness for the SALE mini-app: configuration, run
//! orchestration over in-process or multi-process ranks, oracle
//! verification, CSV reports and scaling suites.

pub mod config;
pub mod report;
pub mod run;
pub mod scaling;
pub mod verify;
pub mod worker;

pub use config::{Backend, ConfigError, RunConfig};
pub use report::{emit_report, RunReport, CSV_HEADER};
pub use run::{run_simulation, RunError};
pub use scaling::{run_scaling_suite, ScalingReport};

/// Exit code when a verified run misses its oracle tolerance.
pub const EXIT_VERIFY_FAILED: i32 = 4;
