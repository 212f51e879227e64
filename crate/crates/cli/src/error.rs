// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt::Display;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("{0}")]
    Divergence(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn validation(field: &str, reason: impl Display) -> Self {
        CliError::Validation(format!("{field}: {reason}"))
    }

    pub fn validation_owned(field: String, reason: String) -> Self {
        CliError::Validation(format!("{field}: {reason}"))
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 1 validation, 2 divergence, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Divergence(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

impl From<qlyap::Error> for CliError {
    fn from(e: qlyap::Error) -> Self {
        match e {
            qlyap::Error::Diverged { .. } => CliError::Divergence(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}
