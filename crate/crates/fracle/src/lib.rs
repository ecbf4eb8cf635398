//! Command-line front end for `fracle-core`: configuration, persistence and
//! the figure-data exports.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod formats;

use fracle_core::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_TRIVIAL: u8 = 3;
pub const EXIT_FAILED: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Trivial(String),
    #[error("{0}")]
    NotConverged(String),
    /// A diagnostic ran to completion and reported a failed check.
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Invalid(_) => EXIT_INVALID,
            Self::Trivial(_) => EXIT_TRIVIAL,
            Self::NotConverged(_) | Self::CheckFailed(_) => EXIT_FAILED,
        }
    }

    pub(crate) fn model(context: &str, e: Error) -> Self {
        match e {
            Error::EigenNonConvergence(_) | Error::QuadratureNonConvergent { .. } => {
                Self::NotConverged(format!("{context}: {e}"))
            }
            _ => Self::Invalid(format!("{context}: {e}")),
        }
    }
}

pub use cli::run;
