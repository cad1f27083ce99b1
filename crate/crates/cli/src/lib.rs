//! Command-line front end of the `blackstock` simulator.
//!
//! Every subcommand reads one JSON configuration file and writes its
//! results into an output directory. Exit codes:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success                                   |
//! | 1    | configuration, input or output error      |
//! | 2    | the simulated run diverged                |
//! | 3    | an experiment precondition does not hold  |

// Validation is written as `!(a < b)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod output;

pub use commands::{execute, Command, Outcome, RunOptions};
pub use config::{load_config, parse_config, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] blackstock::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(blackstock::Error::Precondition(_)) => EXIT_PRECONDITION,
            _ => EXIT_ERROR,
        }
    }
}
