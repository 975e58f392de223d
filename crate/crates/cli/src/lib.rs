//! Command-line driver: configuration, the identity sweep and report output.

// negated comparisons are used so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod report;
pub mod runner;

/// Errors that stop a run before a report is written.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Exit status when identities fail but the report was written.
pub const EXIT_IDENTITY_FAILURE: i32 = 1;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}
