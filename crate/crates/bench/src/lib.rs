//! Batch front end for the `ehrelay` policies: single solves, parameter
//! sweeps across policies, CSV output and TOML configuration.

pub mod config;
pub mod sweep;
pub mod table;

pub use config::{parse_values, FileConfig};
pub use sweep::{run_single, run_sweep, Axis, SweepSpec};
pub use table::{emit_csv, parse_csv, write_csv_file, SweepRow, CSV_HEADER};

use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] ehrelay::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;
