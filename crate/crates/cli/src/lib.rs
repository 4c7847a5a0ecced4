//! Experiment harness for the EFD model: configuration, dispatch and
//! reproducible CSV / JSON output.

pub mod config;
pub mod output;
pub mod run;

use efd_core::EfdError;

pub use config::{parse_config, Command, ExperimentConfig, Format};
pub use run::{run_experiment, Outcome, OUTPUT_DIR_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] EfdError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Model(_) => EXIT_CONFIG,
            CliError::Io(_) | CliError::Csv(_) => EXIT_IO,
        }
    }
}
