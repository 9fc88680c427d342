//! Configuration, experiment orchestration, run records and report emission.

pub mod config;
pub mod record;
pub mod report;
pub mod run;

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use record::{Row, RunRecord};
pub use report::{emit_report, render_svgs, render_table, Format};
pub use run::run_experiment;
