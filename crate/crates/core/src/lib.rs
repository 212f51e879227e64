// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

//! Lyapunov feedback preparation of single-qubit gates in open two-level
//! systems, simulated in the real Bloch operator picture.

pub mod analysis;
pub mod control;
pub mod error;
pub mod lyapunov;
pub mod models;
pub mod sim;

pub use analysis::{
    default_lambda_grid, distance, fidelity, is_valid, lambda_grid, robustness_sweep, summarize,
    summarize_series, RobustnessSweepResult, RunSummary, VALIDITY_THRESHOLD,
};
pub use control::{
    combined_should_switch, evaluate, ControlLaw, ControlOutput, FeedbackGains, GuardEvent, Guards,
    Kick, KickHold, LawFamily, SValues, Stage, SwitchRule,
};
pub use error::{Error, Result};
pub use lyapunov::{compute_context, s_dis_functional, s_functional, LyapunovContext};
pub use models::{
    attenuation_d, gates, gks_to_b, make_model, operator_purity, unitary_to_bloch_operator,
    BlochOperator, BlochState, CMat2, CMat3, GksMatrix, Mat3, ModelKind, NonMarkovianParams,
    RateFn, SystemModel, Vec3, AX, AY, AZ, GENERATORS,
};
pub use sim::{
    rk4_step, run_closed_loop, run_free_evolution, PerturbationAxis, PerturbationSpec, Sample,
    SimConfig, Trajectory, TrajectoryMeta,
};
