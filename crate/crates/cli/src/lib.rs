// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

//! Config-driven experiment runner for `qlyap`.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

pub use commands::{cmd_compare, cmd_free_evolution, cmd_robustness, cmd_run, dispatch, Report};
pub use config::{Experiment, ExperimentConfig};
pub use error::CliError;

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "QLYAP_OUT_DIR";

/// `--out`, then `$QLYAP_OUT_DIR`, then `[output].dir`.
pub fn resolve_out_dir(flag: Option<&Path>, env: Option<&str>, cfg: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| env.filter(|s| !s.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

/// Loads `config` and runs `experiment`.
pub fn run_experiment(
    experiment: Experiment,
    config: &Path,
    out: Option<&Path>,
) -> Result<Report, CliError> {
    let cfg = ExperimentConfig::load(config)?;
    let env = std::env::var(OUT_DIR_ENV).ok();
    let dir = resolve_out_dir(out, env.as_deref(), &cfg);
    dispatch(experiment, &cfg, &dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_dir_precedence() {
        let mut cfg = ExperimentConfig::from_toml("").unwrap();
        cfg.output.dir = "from-config".into();
        assert_eq!(
            resolve_out_dir(Some(Path::new("flag")), Some("env"), &cfg),
            PathBuf::from("flag")
        );
        assert_eq!(
            resolve_out_dir(None, Some("env"), &cfg),
            PathBuf::from("env")
        );
        assert_eq!(
            resolve_out_dir(None, Some(""), &cfg),
            PathBuf::from("from-config")
        );
        assert_eq!(
            resolve_out_dir(None, None, &cfg),
            PathBuf::from("from-config")
        );
    }
}
