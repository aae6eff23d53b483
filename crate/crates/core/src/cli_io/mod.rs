//! Configuration, experiment orchestration, and portable output.

pub mod config;
pub mod dump;
pub mod experiments;
pub mod pgm;
pub mod report;

pub use config::{parse_config, ExperimentConfig, ExperimentTag};
pub use dump::{read_dump, write_dump, FieldDump};
pub use pgm::{render_heatmap, RenderMode};
pub use report::{fmt_f64, Summary};

use crate::error::Result;

/// Run one experiment end-to-end, writing all artifacts under the configured
/// output directory. Returns the summary that was written.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Summary> {
    experiments::run(cfg)
}
