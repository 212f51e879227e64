// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

//! Fixed-step propagation of `U̇ = (A(t) + B(t)) U` in closed loop.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{distance, fidelity};
use crate::control::{
    combined_should_switch, evaluate, ControlLaw, ControlOutput, GuardEvent, LawFamily, SValues,
    Stage,
};
use crate::error::{Error, Result};
use crate::lyapunov::compute_context;
use crate::models::{
    control_generator, operator_purity, BlochOperator, Mat3, ModelKind, SystemModel, Vec3,
};

/// Entries beyond this magnitude abort a run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub u0: BlochOperator,
    pub record_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-5,
            t_end: 5.0,
            u0: BlochOperator::identity(),
            record_stride: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be finite and > 0"));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end", "must be finite and >= dt"));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride", "must be >= 1"));
        }
        if !self.u0.is_finite() {
            return Err(Error::invalid("u0", "must be finite"));
        }
        Ok(())
    }

    /// Number of integrator steps.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PerturbationAxis {
    I,
    X,
    Y,
    Z,
}

impl PerturbationAxis {
    pub const ALL: [PerturbationAxis; 4] = [
        PerturbationAxis::I,
        PerturbationAxis::X,
        PerturbationAxis::Y,
        PerturbationAxis::Z,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PerturbationAxis::I => "i",
            PerturbationAxis::X => "x",
            PerturbationAxis::Y => "y",
            PerturbationAxis::Z => "z",
        }
    }
}

impl fmt::Display for PerturbationAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PerturbationAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" => Ok(PerturbationAxis::I),
            "x" => Ok(PerturbationAxis::X),
            "y" => Ok(PerturbationAxis::Y),
            "z" => Ok(PerturbationAxis::Z),
            _ => Err(Error::invalid(
                "axis",
                format!("expected one of i, x, y, z; got `{s}`"),
            )),
        }
    }
}

/// A constant Hamiltonian offset `λσ`. The identity component commutes with
/// every state and has no effect; a Pauli component biases one control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub axis: PerturbationAxis,
    pub lambda: f64,
}

impl PerturbationSpec {
    pub fn bias(&self) -> Vec3 {
        match self.axis {
            PerturbationAxis::I => Vec3::zeros(),
            PerturbationAxis::X => Vec3::new(self.lambda, 0.0, 0.0),
            PerturbationAxis::Y => Vec3::new(0.0, self.lambda, 0.0),
            PerturbationAxis::Z => Vec3::new(0.0, 0.0, self.lambda),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub u: BlochOperator,
    pub f_designed: Vec3,
    pub f_applied: Vec3,
    pub v: f64,
    pub v_dis: f64,
    pub d: f64,
    pub fidelity: f64,
    pub purity: f64,
    pub guards: [GuardEvent; 3],
    pub kick: bool,
    pub stage: Stage,
    pub s: SValues,
    /// Decay rate of the model at `t` (`d(t)` for a non-Markovian bath).
    pub decay_rate: f64,
    /// Whether `ρ(W − I) < 1`.
    pub mercator_ok: bool,
}

impl Sample {
    pub fn any_guard(&self) -> bool {
        self.guards.iter().any(GuardEvent::fired)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub model: ModelKind,
    pub law: Option<LawFamily>,
    pub perturbation: Option<PerturbationSpec>,
    pub config: SimConfig,
    pub target: BlochOperator,
    /// Time a combined law switched to preservation.
    pub switch_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn distances(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.d).collect()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }
}

/// One classical Runge–Kutta step of `U̇ = G U` with `G` held constant.
pub fn rk4_step(u: &BlochOperator, generator: &Mat3, dt: f64) -> BlochOperator {
    let g = generator;
    let u = &u.0;
    let k1 = g * u;
    let k2 = g * (u + k1 * (dt / 2.0));
    let k3 = g * (u + k2 * (dt / 2.0));
    let k4 = g * (u + k3 * dt);
    BlochOperator(u + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

fn check_finite(u: &BlochOperator, t: f64) -> Result<()> {
    if u.0
        .iter()
        .all(|x| x.is_finite() && x.abs() <= DIVERGENCE_LIMIT)
    {
        Ok(())
    } else {
        Err(Error::Diverged { t })
    }
}

/// Advances `u` over `[t, t + h]` with the controls `f` held.
fn advance(model: &SystemModel, u: &BlochOperator, t: f64, h: f64, f: &Vec3) -> BlochOperator {
    let g = control_generator(f) + model.dissipation(t + h / 2.0);
    rk4_step(u, &g, h)
}

fn record(
    u: &BlochOperator,
    target: &BlochOperator,
    model: &SystemModel,
    t: f64,
    out: &ControlOutput,
    applied: Vec3,
) -> Sample {
    let ctx = compute_context(u, target);
    Sample {
        t,
        u: *u,
        f_designed: out.f,
        f_applied: applied,
        v: ctx.v,
        v_dis: ctx.v_dis,
        d: distance(u, target),
        fidelity: fidelity(u, target),
        purity: operator_purity(u),
        guards: out.guards,
        kick: out.kick,
        stage: out.stage,
        s: out.s,
        decay_rate: model.decay_rate(t),
        mercator_ok: ctx.mercator_converges(),
    }
}

/// Runs `law` on `model` from `cfg.u0` towards `target`.
///
/// The controller works from the nominal model; a perturbation only biases
/// the controls the plant receives. Controls are recomputed once per step and
/// held across it. A kick that ends inside a step is cut there exactly and the
/// remainder of the step runs on feedback.
pub fn run_closed_loop(
    model: &SystemModel,
    law: &ControlLaw,
    target: &BlochOperator,
    cfg: &SimConfig,
    pert: Option<&PerturbationSpec>,
) -> Result<Trajectory> {
    cfg.validate()?;
    law.validate()?;
    let bias = pert.map(PerturbationSpec::bias).unwrap_or_else(Vec3::zeros);
    let n = cfg.steps();
    let dt = cfg.dt;
    let kick_end = law.kick.duration();

    let mut u = cfg.u0;
    let mut prev: Option<ControlOutput> = None;
    let mut d_hist = [f64::NAN; 2];
    let mut switch_time = None;
    let mut samples = Vec::with_capacity(n / cfg.record_stride + 1);

    for k in 0..=n {
        let t = k as f64 * dt;
        let ctx = compute_context(&u, target);

        d_hist = [d_hist[1], ctx.v_dis];
        if let (Some(p), Some(rule)) = (prev.as_mut(), law.switch_rule.as_ref()) {
            let hist: &[f64] = if k >= 1 { &d_hist } else { &d_hist[1..] };
            if p.stage == Stage::Preparation && !p.kick && combined_should_switch(rule, t, hist) {
                p.stage = Stage::Preservation;
                switch_time = Some(t);
            }
        }

        let out = evaluate(law, &ctx, model, t, prev.as_ref())?;
        let applied = out.f + bias;
        if k % cfg.record_stride == 0 {
            samples.push(record(&u, target, model, t, &out, applied));
        }
        if k == n {
            break;
        }

        match kick_end {
            Some(end) if out.kick && end < t + dt => {
                // Finish the kick, then spend the rest of the step on feedback.
                let h1 = (end - t).max(0.0);
                if h1 > 0.0 {
                    u = advance(model, &u, t, h1, &applied);
                }
                let mid = compute_context(&u, target);
                let fb = evaluate(law, &mid, model, end, Some(&out))?;
                u = advance(model, &u, end, dt - h1, &(fb.f + bias));
                prev = Some(fb);
            }
            _ => {
                u = advance(model, &u, t, dt, &applied);
                prev = Some(out);
            }
        }
        check_finite(&u, t + dt)?;
    }

    Ok(Trajectory {
        samples,
        meta: TrajectoryMeta {
            model: model.kind,
            law: Some(law.family),
            perturbation: pert.copied(),
            config: *cfg,
            target: *target,
            switch_time,
        },
    })
}

/// Uncontrolled evolution from `cfg.u0`; distance and fidelity are measured
/// against the identity.
pub fn run_free_evolution(model: &SystemModel, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let target = BlochOperator::identity();
    let zero = ControlOutput {
        f: Vec3::zeros(),
        guards: [GuardEvent::None; 3],
        s: SValues::default(),
        kick: false,
        stage: Stage::Preparation,
    };
    let n = cfg.steps();
    let mut u = cfg.u0;
    let mut samples = Vec::with_capacity(n / cfg.record_stride + 1);
    for k in 0..=n {
        let t = k as f64 * cfg.dt;
        if k % cfg.record_stride == 0 {
            samples.push(record(&u, &target, model, t, &zero, Vec3::zeros()));
        }
        if k == n {
            break;
        }
        u = rk4_step(&u, &model.dissipation(t + cfg.dt / 2.0), cfg.dt);
        check_finite(&u, t + cfg.dt)?;
    }
    Ok(Trajectory {
        samples,
        meta: TrajectoryMeta {
            model: model.kind,
            law: None,
            perturbation: None,
            config: *cfg,
            target,
            switch_time: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{Guards, Kick, KickHold};
    use crate::models::{make_model, AZ};
    use approx::assert_abs_diff_eq;

    fn diag(a: f64, b: f64, c: f64) -> Mat3 {
        Mat3::from_diagonal(&Vec3::new(a, b, c))
    }

    #[test]
    fn rk4_examples() {
        let u = BlochOperator::identity();
        assert_eq!(rk4_step(&u, &Mat3::zeros(), 0.1), u);

        let r = rk4_step(&u, &AZ, 0.01).0;
        assert_abs_diff_eq!(r[(0, 0)], 0.01f64.cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(r[(1, 0)], 0.01f64.sin(), epsilon = 1e-12);

        let r = rk4_step(&u, &diag(-0.1, -0.1, -0.2), 0.01).0;
        assert_abs_diff_eq!(
            r,
            diag((-0.001f64).exp(), (-0.001f64).exp(), (-0.002f64).exp()),
            epsilon = 1e-12
        );
    }

    #[test]
    fn idle_closed_system_stays_put() {
        let law = ControlLaw::law_x(
            0.0,
            0.0,
            Kick::new([0.0; 3], KickHold::OneStep),
            Guards::default(),
        )
        .unwrap();
        let cfg = SimConfig {
            dt: 1e-3,
            t_end: 0.5,
            ..Default::default()
        };
        let target = BlochOperator(diag(1.0, -1.0, -1.0));
        let traj = run_closed_loop(&SystemModel::closed(), &law, &target, &cfg, None).unwrap();
        assert_eq!(traj.samples.len(), 501);
        assert!(traj
            .samples
            .iter()
            .all(|s| s.u == BlochOperator::identity()));
    }

    #[test]
    fn free_evolution_purity_closed_forms() {
        let cfg = SimConfig {
            dt: 1e-3,
            t_end: 2.0,
            record_stride: 100,
            ..Default::default()
        };
        let pd = make_model(ModelKind::PhaseDamping, 0.1, None).unwrap();
        let ad = make_model(ModelKind::AmplitudeDamping, 0.1, None).unwrap();
        let tp = run_free_evolution(&pd, &cfg).unwrap();
        let ta = run_free_evolution(&ad, &cfg).unwrap();
        for (p, a) in tp.samples.iter().zip(&ta.samples) {
            let t = p.t;
            assert_abs_diff_eq!(p.purity, 1.0 + 2.0 * (-0.2 * t).exp(), epsilon = 1e-10);
            assert_abs_diff_eq!(
                a.purity,
                2.0 * (-0.2 * t).exp() + (-0.4 * t).exp(),
                epsilon = 1e-10
            );
        }
        let tc = run_free_evolution(&SystemModel::closed(), &cfg).unwrap();
        assert!(tc.samples.iter().all(|s| s.purity == 3.0));
    }

    #[test]
    fn stride_and_uniform_times() {
        let cfg = SimConfig {
            dt: 1e-3,
            t_end: 0.1,
            record_stride: 7,
            ..Default::default()
        };
        let traj = run_free_evolution(&SystemModel::closed(), &cfg).unwrap();
        assert_eq!(traj.samples[0].u, BlochOperator::identity());
        for (i, s) in traj.samples.iter().enumerate() {
            assert_eq!(s.t, (i * 7) as f64 * 1e-3);
        }
    }

    #[test]
    fn divergence_reported_with_time() {
        let model = SystemModel::with_rate(
            ModelKind::Custom,
            Mat3::identity() * 1e3,
            crate::models::RateFn::Constant(1.0),
        )
        .unwrap();
        let cfg = SimConfig {
            dt: 1e-2,
            t_end: 1.0,
            ..Default::default()
        };
        match run_free_evolution(&model, &cfg) {
            Err(Error::Diverged { t }) => assert!(t > 0.0 && t <= 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = SimConfig {
            dt: 0.0,
            ..Default::default()
        };
        assert!(run_free_evolution(&SystemModel::closed(), &bad).is_err());
        let bad = SimConfig {
            record_stride: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn half_turn_kick_lands_on_target_in_closed_system() {
        // A pure-x kick of half a turn maps I onto diag(1, −1, −1) exactly.
        let law = ControlLaw::law_x(
            0.0,
            0.0,
            Kick::new([7.0, 0.0, 0.0], KickHold::HalfTurn),
            Guards::default(),
        )
        .unwrap();
        let tau = std::f64::consts::PI / 7.0;
        let cfg = SimConfig {
            dt: tau / 100.0,
            t_end: tau,
            ..Default::default()
        };
        let target = BlochOperator(diag(1.0, -1.0, -1.0));
        let traj = run_closed_loop(&SystemModel::closed(), &law, &target, &cfg, None).unwrap();
        assert!(traj.last().unwrap().d < 1e-12);
    }
}
