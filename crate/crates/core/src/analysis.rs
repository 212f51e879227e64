// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

//! Performance indexes, run summaries and robustness sweeps.

use rayon::prelude::*;

use crate::control::ControlLaw;
use crate::error::{Error, Result};
use crate::models::{BlochOperator, SystemModel};
use crate::sim::{run_closed_loop, PerturbationAxis, PerturbationSpec, SimConfig, Trajectory};

/// A prepared operator counts as valid when `D` is strictly below this.
pub const VALIDITY_THRESHOLD: f64 = 1e-4;

const N: f64 = 3.0;

/// `D = ‖u − u_f‖²_F`
pub fn distance(u: &BlochOperator, u_f: &BlochOperator) -> f64 {
    (u.0 - u_f.0).norm_squared()
}

/// `F = (tr(u uᵀ) + tr(u_fᵀ u)²) / (N (N + 1))`
pub fn fidelity(u: &BlochOperator, u_f: &BlochOperator) -> f64 {
    let overlap = (u_f.0.transpose() * u.0).trace();
    (u.0.norm_squared() + overlap * overlap) / (N * (N + 1.0))
}

pub fn is_valid(d: f64) -> bool {
    d < VALIDITY_THRESHOLD
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub d_min: f64,
    pub t_at_d_min: f64,
    pub f_max: f64,
    pub t_at_f_max: f64,
    /// First time with `D` below the validity threshold.
    pub time_to_valid: Option<f64>,
    /// Strict local maxima of `D` above the threshold after `d_min`.
    pub preservation_peaks: usize,
    /// `D` stayed valid from `time_to_valid` to the end.
    pub valid_held: bool,
    pub d_final: f64,
    /// Some recorded fidelity exceeded one (an expanding, unphysical `U`).
    pub fidelity_above_one: bool,
    pub samples: usize,
}

/// Summary of a recorded trajectory.
pub fn summarize(traj: &Trajectory) -> Result<RunSummary> {
    let t: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    let d: Vec<f64> = traj.samples.iter().map(|s| s.d).collect();
    let f: Vec<f64> = traj.samples.iter().map(|s| s.fidelity).collect();
    summarize_series(&t, &d, &f)
}

/// Summary of parallel `(t, D, F)` series.
pub fn summarize_series(t: &[f64], d: &[f64], f: &[f64]) -> Result<RunSummary> {
    if t.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if d.len() != t.len() || f.len() != t.len() {
        return Err(Error::invalid(
            "series",
            "time, distance and fidelity lengths differ",
        ));
    }
    let i_min = argbest(d, |a, b| a < b);
    let i_fmax = argbest(f, |a, b| a > b);
    let first_valid = d.iter().position(|&x| is_valid(x));
    let valid_held = first_valid.is_some_and(|i| d[i..].iter().all(|&x| is_valid(x)));
    let preservation_peaks = (i_min + 1..d.len().saturating_sub(1))
        .filter(|&i| d[i] > d[i - 1] && d[i] > d[i + 1] && d[i] > VALIDITY_THRESHOLD)
        .count();
    Ok(RunSummary {
        d_min: d[i_min],
        t_at_d_min: t[i_min],
        f_max: f[i_fmax],
        t_at_f_max: t[i_fmax],
        time_to_valid: first_valid.map(|i| t[i]),
        preservation_peaks,
        valid_held,
        d_final: d[d.len() - 1],
        fidelity_above_one: f.iter().any(|&x| x > 1.0 + 1e-9),
        samples: t.len(),
    })
}

/// Index of the first element no other element beats.
fn argbest(xs: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if better(x, xs[best]) {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessSweepResult {
    pub axis: PerturbationAxis,
    pub lambdas: Vec<f64>,
    /// `None` where the run diverged.
    pub d_min: Vec<Option<f64>>,
    pub f_max: Vec<Option<f64>>,
}

impl RobustnessSweepResult {
    /// Mean `d_min` over the points that completed.
    pub fn mean_d_min(&self) -> Option<f64> {
        let ok: Vec<f64> = self.d_min.iter().flatten().copied().collect();
        (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64)
    }

    pub fn failures(&self) -> usize {
        self.d_min.iter().filter(|d| d.is_none()).count()
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn lambda_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// 41 points on `[−100, 100]`.
pub fn default_lambda_grid() -> Vec<f64> {
    lambda_grid(-100.0, 100.0, 41)
}

/// One closed-loop run per `λ` on `axis`, in parallel. Results keep the order
/// of `lambdas` whatever the number of workers.
pub fn robustness_sweep(
    model: &SystemModel,
    law: &ControlLaw,
    target: &BlochOperator,
    cfg: &SimConfig,
    axis: PerturbationAxis,
    lambdas: &[f64],
) -> Result<RobustnessSweepResult> {
    if lambdas.is_empty() {
        return Err(Error::invalid("lambdas", "grid must not be empty"));
    }
    cfg.validate()?;
    law.validate()?;
    let points: Vec<Option<(f64, f64)>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let pert = PerturbationSpec { axis, lambda };
            run_closed_loop(model, law, target, cfg, Some(&pert))
                .and_then(|traj| summarize(&traj))
                .ok()
                .map(|s| (s.d_min, s.f_max))
        })
        .collect();
    Ok(RobustnessSweepResult {
        axis,
        lambdas: lambdas.to_vec(),
        d_min: points.iter().map(|p| p.map(|x| x.0)).collect(),
        f_max: points.iter().map(|p| p.map(|x| x.1)).collect(),
    })
}
