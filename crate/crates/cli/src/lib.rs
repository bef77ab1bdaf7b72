//! Command-line driver: configuration files, trace output, bound reports,
//! the verification suite and plot data.

pub mod config;
pub mod plot;
pub mod run;
pub mod verify;

use std::path::{Path, PathBuf};

pub use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed trace file {path}: {message}")]
    Trace { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] arsearch::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Attributes a library validation error to a key of config block
    /// `block`.
    pub fn invalid(block: &str, error: arsearch::Error) -> Self {
        match &error {
            arsearch::Error::ParameterOutOfRange { name, .. } => {
                let key = match *name {
                    "mix_weight" => "m",
                    other => other,
                };
                CliError::Config {
                    path: format!("{block}.{key}"),
                    message: error.to_string(),
                }
            }
            arsearch::Error::NonPositiveBettering(_) => CliError::Config {
                path: format!("{block}.bettering"),
                message: error.to_string(),
            },
            arsearch::Error::NonPositiveReplicationCount => CliError::Config {
                path: format!("{block}.replications"),
                message: error.to_string(),
            },
            _ => CliError::Config {
                path: block.into(),
                message: error.to_string(),
            },
        }
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
