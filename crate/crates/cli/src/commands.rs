// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

//! The four experiments. Each takes a loaded config and an output directory,
//! writes its artifacts there, and returns what it wrote for the caller to
//! print.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qlyap::{
    robustness_sweep, run_closed_loop, run_free_evolution, summarize, ModelKind,
    RobustnessSweepResult, Trajectory,
};
use serde::Serialize;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::CliError;
use crate::output::{
    ensure_dir, fmt_f64, fmt_opt, write_csv, write_report, write_trajectory, SummaryRecord,
};

/// What a command produced.
#[derive(Debug)]
pub struct Report {
    pub files: Vec<PathBuf>,
    /// Human-readable digest for the terminal.
    pub text: String,
}

pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<Report, CliError> {
    cfg.check_for(Experiment::Run)?;
    let model = cfg.model.build()?;
    let law = cfg.single_law()?.build()?;
    let target = cfg.target.build()?;
    let sim = cfg.sim.build()?;

    let traj = run_closed_loop(&model, &law, &target, &sim, None)?;
    let summary = SummaryRecord::new(&summarize(&traj)?, traj.meta.switch_time);

    ensure_dir(out)?;
    let traj_path = out.join("trajectory.csv");
    let summary_path = out.join("summary.toml");
    write_trajectory(&traj_path, &traj)?;
    write_report(&summary_path, "summary", &summary, cfg)?;

    let mut text = String::new();
    writeln!(
        text,
        "{} / {}: {}",
        model.kind,
        law.family,
        describe(&summary)
    )
    .unwrap();
    Ok(Report {
        files: vec![traj_path, summary_path],
        text,
    })
}

fn describe(s: &SummaryRecord) -> String {
    format!(
        "d_min = {:e} at t = {}, f_max = {}, valid_held = {}, peaks = {}",
        s.d_min, s.t_at_d_min, s.f_max, s.valid_held, s.preservation_peaks
    )
}

#[derive(Debug, Serialize)]
struct CompareReport {
    /// Law names, best first.
    ranking: Vec<String>,
    laws: toml::Table,
}

/// Ranking key: smaller `d_min`, then earlier `time_to_valid` (never valid
/// sorts last), then config order.
fn rank(results: &[(String, Option<SummaryRecord>)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..results.len())
        .filter(|&i| results[i].1.is_some())
        .collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (
            results[a].1.as_ref().unwrap(),
            results[b].1.as_ref().unwrap(),
        );
        sa.d_min
            .total_cmp(&sb.d_min)
            .then(
                sa.time_to_valid
                    .unwrap_or(f64::INFINITY)
                    .total_cmp(&sb.time_to_valid.unwrap_or(f64::INFINITY)),
            )
            .then(a.cmp(&b))
    });
    order
}

pub fn cmd_compare(cfg: &ExperimentConfig, out: &Path) -> Result<Report, CliError> {
    cfg.check_for(Experiment::Compare)?;
    if cfg.laws.len() < 2 {
        return Err(CliError::validation(
            "laws",
            "compare needs at least two [[laws]] entries",
        ));
    }
    let names: Vec<String> = cfg.laws.iter().map(|l| l.label()).collect();
    let mut seen = BTreeSet::new();
    for n in &names {
        if !seen.insert(n.as_str()) {
            return Err(CliError::validation_owned(
                "laws.name".into(),
                format!("duplicate law name `{n}`"),
            ));
        }
        if n.is_empty() || n.contains([',', '/', '\\', '"']) {
            return Err(CliError::validation_owned(
                "laws.name".into(),
                format!("`{n}` is not usable as a file or column name"),
            ));
        }
    }
    let model = cfg.model.build()?;
    let target = cfg.target.build()?;
    let sim = cfg.sim.build()?;
    // Build every law before running any, so a config error stops early.
    let laws = cfg
        .laws
        .iter()
        .map(|l| l.build())
        .collect::<Result<Vec<_>, _>>()?;

    ensure_dir(out)?;
    let mut files = Vec::new();
    let mut text = String::new();
    let mut trajs: Vec<Option<Trajectory>> = Vec::new();
    let mut results = Vec::new();
    for (name, law) in names.iter().zip(&laws) {
        match run_closed_loop(&model, law, &target, &sim, None)
            .and_then(|t| Ok((summarize(&t)?, t)))
        {
            Ok((s, traj)) => {
                let path = out.join(format!("trajectory_{name}.csv"));
                write_trajectory(&path, &traj)?;
                files.push(path);
                let rec = SummaryRecord::new(&s, traj.meta.switch_time);
                writeln!(text, "{name}: {}", describe(&rec)).unwrap();
                results.push((name.clone(), Some(rec)));
                trajs.push(Some(traj));
            }
            Err(e) => {
                writeln!(text, "{name}: failed: {e}").unwrap();
                results.push((name.clone(), None));
                trajs.push(None);
            }
        }
    }
    if trajs.iter().all(Option::is_none) {
        return Err(CliError::Divergence("every law failed".into()));
    }

    // Joint table: all laws share the sim settings, hence the time grid.
    let grid = trajs.iter().flatten().next().unwrap();
    let mut header = vec!["t".to_string()];
    for n in &names {
        header.push(format!("d_{n}"));
        header.push(format!("f_{n}"));
    }
    let rows = grid.samples.iter().enumerate().map(|(k, s)| {
        let mut row = vec![fmt_f64(s.t)];
        for t in &trajs {
            let smp = t.as_ref().map(|t| &t.samples[k]);
            row.push(fmt_opt(smp.map(|s| s.d)));
            row.push(fmt_opt(smp.map(|s| s.fidelity)));
        }
        row
    });
    let path = out.join("comparison.csv");
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&path, &header_ref, rows)?;
    files.push(path);

    let order = rank(&results);
    let ranking_rows = order.iter().enumerate().map(|(r, &i)| {
        let (name, s) = &results[i];
        let s = s.as_ref().unwrap();
        vec![
            (r + 1).to_string(),
            name.clone(),
            fmt_f64(s.d_min),
            fmt_opt(s.time_to_valid),
            fmt_f64(s.f_max),
            s.preservation_peaks.to_string(),
        ]
    });
    let failed = results.iter().filter(|r| r.1.is_none()).map(|(n, _)| {
        vec![
            String::new(),
            n.clone(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ]
    });
    let path = out.join("ranking.csv");
    write_csv(
        &path,
        &[
            "rank",
            "law",
            "d_min",
            "time_to_valid",
            "f_max",
            "preservation_peaks",
        ],
        ranking_rows.chain(failed),
    )?;
    files.push(path);

    let mut laws_table = toml::Table::new();
    for (name, s) in &results {
        if let Some(s) = s {
            laws_table.insert(
                name.clone(),
                toml::Value::try_from(s).expect("summary serializes"),
            );
        }
    }
    let report = CompareReport {
        ranking: order.iter().map(|&i| results[i].0.clone()).collect(),
        laws: laws_table,
    };
    let path = out.join("summary.toml");
    write_report(&path, "compare", &report, cfg)?;
    files.push(path);
    writeln!(text, "ranking: {}", report.ranking.join(" > ")).unwrap();
    Ok(Report { files, text })
}

pub fn cmd_free_evolution(cfg: &ExperimentConfig, out: &Path) -> Result<Report, CliError> {
    cfg.check_for(Experiment::FreeEvolution)?;
    let kinds: Vec<ModelKind> = match &cfg.free_evolution {
        Some(fe) if !fe.kinds.is_empty() => fe.kinds.clone(),
        Some(_) => {
            return Err(CliError::validation(
                "free_evolution.kinds",
                "must not be empty",
            ))
        }
        None => vec![cfg.model.kind],
    };
    let sim = cfg.sim.build()?;
    let mut cols = Vec::new();
    for &kind in &kinds {
        let model = cfg.model.build_kind(kind)?;
        cols.push(run_free_evolution(&model, &sim)?);
    }

    ensure_dir(out)?;
    let mut header = vec!["t".to_string()];
    header.extend(kinds.iter().map(|k| format!("p_{k}")));
    let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..cols[0].samples.len()).map(|k| {
        let mut row = vec![fmt_f64(cols[0].samples[k].t)];
        row.extend(cols.iter().map(|c| fmt_f64(c.samples[k].purity)));
        row
    });
    let path = out.join("purity.csv");
    write_csv(&path, &header_ref, rows)?;

    let mut text = String::new();
    for (kind, c) in kinds.iter().zip(&cols) {
        let last = c.last().expect("runs record t = 0");
        writeln!(text, "{kind}: P({}) = {}", last.t, last.purity).unwrap();
    }
    Ok(Report {
        files: vec![path],
        text,
    })
}

#[derive(Debug, Serialize)]
struct AxisRecord {
    axis: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_d_min: Option<f64>,
    failures: usize,
}

#[derive(Debug, Serialize)]
struct RobustnessReport {
    /// Axes by mean `d_min`, most robust first.
    ranking: Vec<String>,
    axes: Vec<AxisRecord>,
}

pub fn cmd_robustness(cfg: &ExperimentConfig, out: &Path) -> Result<Report, CliError> {
    cfg.check_for(Experiment::Robustness)?;
    let rb = cfg
        .robustness
        .as_ref()
        .ok_or_else(|| CliError::validation("robustness", "a [robustness] table is required"))?;
    let lambdas = rb.grid()?;
    let model = cfg.model.build()?;
    let law = cfg.single_law()?.build()?;
    let target = cfg.target.build()?;
    let sim = cfg.sim.build()?;

    let sweeps = rb
        .axes
        .iter()
        .map(|&axis| robustness_sweep(&model, &law, &target, &sim, axis, &lambdas))
        .collect::<Result<Vec<RobustnessSweepResult>, _>>()?;
    if sweeps.iter().all(|s| s.failures() == s.lambdas.len()) {
        return Err(CliError::Divergence("every robustness point failed".into()));
    }

    ensure_dir(out)?;
    let rows = sweeps.iter().flat_map(|s| {
        (0..s.lambdas.len()).map(move |i| {
            vec![
                s.axis.to_string(),
                fmt_f64(s.lambdas[i]),
                fmt_opt(s.d_min[i]),
                fmt_opt(s.f_max[i]),
            ]
        })
    });
    let csv_path = out.join("robustness.csv");
    write_csv(&csv_path, &["axis", "lambda", "d_min", "f_max"], rows)?;

    let mut order: Vec<usize> = (0..sweeps.len()).collect();
    order.sort_by(|&a, &b| {
        let key = |i: usize| sweeps[i].mean_d_min().unwrap_or(f64::INFINITY);
        key(a).total_cmp(&key(b)).then(a.cmp(&b))
    });
    let ranking_rows = order.iter().enumerate().map(|(r, &i)| {
        let s = &sweeps[i];
        vec![
            (r + 1).to_string(),
            s.axis.to_string(),
            fmt_opt(s.mean_d_min()),
            s.failures().to_string(),
        ]
    });
    let rank_path = out.join("ranking.csv");
    write_csv(
        &rank_path,
        &["rank", "axis", "mean_d_min", "failures"],
        ranking_rows,
    )?;

    let report = RobustnessReport {
        ranking: order.iter().map(|&i| sweeps[i].axis.to_string()).collect(),
        axes: sweeps
            .iter()
            .map(|s| AxisRecord {
                axis: s.axis.to_string(),
                mean_d_min: s.mean_d_min(),
                failures: s.failures(),
            })
            .collect(),
    };
    let summary_path = out.join("summary.toml");
    write_report(&summary_path, "robustness", &report, cfg)?;

    let mut text = String::new();
    for a in &report.axes {
        writeln!(
            text,
            "axis {}: mean d_min = {}, failures = {}",
            a.axis,
            fmt_opt(a.mean_d_min),
            a.failures
        )
        .unwrap();
    }
    writeln!(text, "ranking: {}", report.ranking.join(" < ")).unwrap();
    Ok(Report {
        files: vec![csv_path, rank_path, summary_path],
        text,
    })
}

pub fn dispatch(
    experiment: Experiment,
    cfg: &ExperimentConfig,
    out: &Path,
) -> Result<Report, CliError> {
    match experiment {
        Experiment::Run => cmd_run(cfg, out),
        Experiment::Compare => cmd_compare(cfg, out),
        Experiment::FreeEvolution => cmd_free_evolution(cfg, out),
        Experiment::Robustness => cmd_robustness(cfg, out),
    }
}
