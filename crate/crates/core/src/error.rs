// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "GKS matrix is not Hermitian: entries ({i},{j}) and ({j},{i}) differ by {deviation:e}"
    )]
    NonHermitian { i: usize, j: usize, deviation: f64 },

    #[error("matrix is not unitary: |U^dagger U - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown model kind `{0}`")]
    UnknownModelKind(String),

    #[error("control law evaluated at t = {t} with no previous output")]
    MissingPrevious { t: f64 },

    #[error("run diverged at t = {t}")]
    Diverged { t: f64 },

    #[error("trajectory is empty")]
    EmptyTrajectory,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
