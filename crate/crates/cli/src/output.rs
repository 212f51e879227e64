// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

//! CSV and summary writers.
//!
//! Floats are written with `f64`'s `Display`, which is the shortest decimal
//! that parses back to the same value, so every CSV round-trips exactly.

use std::fs;
use std::path::Path;

use qlyap::{RunSummary, Stage, Trajectory};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Trajectory column order.
pub const TRAJECTORY_COLUMNS: [&str; 29] = [
    "t",
    "u11",
    "u12",
    "u13",
    "u21",
    "u22",
    "u23",
    "u31",
    "u32",
    "u33",
    "fd_x",
    "fd_y",
    "fd_z",
    "fa_x",
    "fa_y",
    "fa_z",
    "v",
    "v_dis",
    "d",
    "fidelity",
    "purity",
    "guard_x",
    "guard_y",
    "guard_z",
    "kick",
    "stage",
    "decay_rate",
    "s_b",
    "mercator_ok",
];

pub fn fmt_f64(x: f64) -> String {
    x.to_string()
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes a header and rows of pre-formatted cells.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One row per recorded sample, in [`TRAJECTORY_COLUMNS`] order. Guard
/// columns hold 0 (none), 1 (held) or 2 (saturated); `stage` is 0 during
/// preparation and 1 during preservation; `decay_rate` is `d(t)` for a
/// non-Markovian bath.
pub fn trajectory_rows(traj: &Trajectory) -> Vec<Vec<String>> {
    traj.samples
        .iter()
        .map(|s| {
            let mut row = Vec::with_capacity(TRAJECTORY_COLUMNS.len());
            row.push(fmt_f64(s.t));
            // Row-major.
            for i in 0..3 {
                for j in 0..3 {
                    row.push(fmt_f64(s.u.0[(i, j)]));
                }
            }
            row.extend(s.f_designed.iter().map(|&x| fmt_f64(x)));
            row.extend(s.f_applied.iter().map(|&x| fmt_f64(x)));
            for x in [s.v, s.v_dis, s.d, s.fidelity, s.purity] {
                row.push(fmt_f64(x));
            }
            row.extend(s.guards.iter().map(|g| g.code().to_string()));
            row.push(u8::from(s.kick).to_string());
            row.push(u8::from(s.stage == Stage::Preservation).to_string());
            row.push(fmt_f64(s.decay_rate));
            row.push(fmt_f64(s.s.b));
            row.push(u8::from(s.mercator_ok).to_string());
            row
        })
        .collect()
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    write_csv(path, &TRAJECTORY_COLUMNS, trajectory_rows(traj))
}

/// Header and numeric rows of a CSV; empty cells read as NaN.
pub fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = rec
            .iter()
            .map(|c| {
                if c.is_empty() {
                    Ok(f64::NAN)
                } else {
                    c.parse::<f64>()
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| {
                CliError::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::InvalidData, e),
                )
            })?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Serializable mirror of [`RunSummary`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRecord {
    pub d_min: f64,
    pub t_at_d_min: f64,
    pub f_max: f64,
    pub t_at_f_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_to_valid: Option<f64>,
    pub preservation_peaks: usize,
    pub valid_held: bool,
    pub d_final: f64,
    pub fidelity_above_one: bool,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub switch_time: Option<f64>,
}

impl SummaryRecord {
    pub fn new(s: &RunSummary, switch_time: Option<f64>) -> Self {
        SummaryRecord {
            d_min: s.d_min,
            t_at_d_min: s.t_at_d_min,
            f_max: s.f_max,
            t_at_f_max: s.t_at_f_max,
            time_to_valid: s.time_to_valid,
            preservation_peaks: s.preservation_peaks,
            valid_held: s.valid_held,
            d_final: s.d_final,
            fidelity_above_one: s.fidelity_above_one,
            samples: s.samples,
            switch_time,
        }
    }
}

/// Writes a TOML report with `body` under `[section]` and the
/// fully-resolved config under `[config]`.
pub fn write_report<T: Serialize>(
    path: &Path,
    section: &str,
    body: &T,
    config: &ExperimentConfig,
) -> Result<(), CliError> {
    let mut doc = toml::Table::new();
    doc.insert(
        section.to_string(),
        toml::Value::try_from(body).expect("report serializes"),
    );
    doc.insert(
        "config".to_string(),
        toml::Value::try_from(config).expect("config serializes"),
    );
    write_text(path, &toml::to_string(&doc).expect("report serializes"))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
