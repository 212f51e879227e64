// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

//! Feedback laws built from the `S(·)` coefficients.
//!
//! Every family is an instance of one per-axis template,
//!
//! ```text
//! f_j = −k_j · S(A_j) − h_j · S(B) / S(A_j),
//! ```
//!
//! where the `h` weights decide which axes carry a share of the dissipation
//! offset. With `Σ h_j = 1` the offsets cancel `S(B)` exactly and
//! `V̇ = −Σ k_j S(A_j)² ≤ 0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lyapunov::LyapunovContext;
use crate::models::{SystemModel, Vec3};

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LawFamily {
    /// Offset on x, gains on y and z.
    LawX,
    /// Offset shared by all three axes.
    Distributed,
    /// Offset on y, gains on x and z.
    LawY,
    /// Distributed for preparation, then LawX for preservation.
    Combined,
    /// LawX shape on the plain distance functional.
    BaselineDis,
}

impl LawFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            LawFamily::LawX => "law-x",
            LawFamily::Distributed => "distributed",
            LawFamily::LawY => "law-y",
            LawFamily::Combined => "combined",
            LawFamily::BaselineDis => "baseline-dis",
        }
    }
}

impl fmt::Display for LawFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LawFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "law-x" => Ok(LawFamily::LawX),
            "distributed" => Ok(LawFamily::Distributed),
            "law-y" => Ok(LawFamily::LawY),
            "combined" => Ok(LawFamily::Combined),
            "baseline-dis" => Ok(LawFamily::BaselineDis),
            _ => Err(Error::invalid(
                "family",
                format!("unknown law family `{s}`"),
            )),
        }
    }
}

/// Per-axis gains `k` and offset weights `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackGains {
    pub k: [f64; 3],
    pub h: [f64; 3],
}

impl FeedbackGains {
    pub fn law_x(k_y: f64, k_z: f64) -> Self {
        FeedbackGains {
            k: [0.0, k_y, k_z],
            h: [1.0, 0.0, 0.0],
        }
    }

    pub fn law_y(k_x: f64, k_z: f64) -> Self {
        FeedbackGains {
            k: [k_x, 0.0, k_z],
            h: [0.0, 1.0, 0.0],
        }
    }

    pub fn distributed(k: [f64; 3], h: [f64; 3]) -> Self {
        FeedbackGains { k, h }
    }

    fn validate(&self, weights_must_sum_to_one: bool) -> Result<()> {
        if self.k.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
            return Err(Error::invalid(
                "gains",
                format!("must be finite and >= 0, got {:?}", self.k),
            ));
        }
        if self.h.iter().any(|h| !h.is_finite()) {
            return Err(Error::invalid("weights", "must be finite"));
        }
        let sum: f64 = self.h.iter().sum();
        if weights_must_sum_to_one && (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid(
                "weights",
                format!("must sum to 1, got {sum}"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Guards {
    /// Amplitude bound on every control.
    pub f_max: f64,
    /// Smallest `|S(A_j)|` an offset axis will divide by.
    pub eps_den: f64,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            f_max: 5000.0,
            eps_den: 1e-6,
        }
    }
}

impl Guards {
    fn validate(&self) -> Result<()> {
        if self.f_max.is_nan() || self.f_max <= 0.0 {
            return Err(Error::invalid("f_max", "must be > 0"));
        }
        if self.eps_den.is_nan() || self.eps_den <= 0.0 {
            return Err(Error::invalid("eps_den", "must be > 0"));
        }
        Ok(())
    }
}

/// How long the initial control values stay on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "duration")]
pub enum KickHold {
    /// Only the first integrator step.
    OneStep,
    /// A fixed time span.
    Duration(f64),
    /// `π / ‖f(0)‖`: half a turn about the kick axis.
    HalfTurn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kick {
    pub values: [f64; 3],
    pub hold: KickHold,
}

impl Kick {
    pub fn new(values: [f64; 3], hold: KickHold) -> Self {
        Kick { values, hold }
    }

    /// Kick duration, or `None` for the one-step kick whose length is the
    /// integrator step.
    pub fn duration(&self) -> Option<f64> {
        match self.hold {
            KickHold::OneStep => None,
            KickHold::Duration(d) => Some(d),
            KickHold::HalfTurn => {
                let n = Vec3::from(self.values).norm();
                Some(if n > 0.0 { PI / n } else { 0.0 })
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("kick", "must be finite"));
        }
        if let KickHold::Duration(d) = self.hold {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::invalid("kick.duration", "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

/// When a combined law hands over from preparation to preservation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
pub enum SwitchRule {
    /// First local minimum of `D` that lies below the threshold.
    LocalMinBelow(f64),
    /// Fixed switch time.
    AtTime(f64),
}

impl Default for SwitchRule {
    fn default() -> Self {
        SwitchRule::LocalMinBelow(crate::analysis::VALIDITY_THRESHOLD)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Stage {
    #[default]
    Preparation,
    Preservation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlLaw {
    pub family: LawFamily,
    pub gains: FeedbackGains,
    /// LawX gains used by a combined law after the switch.
    pub preservation: Option<FeedbackGains>,
    pub guards: Guards,
    pub kick: Kick,
    pub switch_rule: Option<SwitchRule>,
}

impl ControlLaw {
    pub fn law_x(k_y: f64, k_z: f64, kick: Kick, guards: Guards) -> Result<Self> {
        Self::single(
            LawFamily::LawX,
            FeedbackGains::law_x(k_y, k_z),
            kick,
            guards,
        )
    }

    pub fn law_y(k_x: f64, k_z: f64, kick: Kick, guards: Guards) -> Result<Self> {
        Self::single(
            LawFamily::LawY,
            FeedbackGains::law_y(k_x, k_z),
            kick,
            guards,
        )
    }

    pub fn distributed(k: [f64; 3], h: [f64; 3], kick: Kick, guards: Guards) -> Result<Self> {
        Self::single(
            LawFamily::Distributed,
            FeedbackGains::distributed(k, h),
            kick,
            guards,
        )
    }

    pub fn baseline_dis(k_y: f64, k_z: f64, kick: Kick, guards: Guards) -> Result<Self> {
        Self::single(
            LawFamily::BaselineDis,
            FeedbackGains::law_x(k_y, k_z),
            kick,
            guards,
        )
    }

    pub fn combined(
        preparation: FeedbackGains,
        preservation: FeedbackGains,
        kick: Kick,
        guards: Guards,
        rule: SwitchRule,
    ) -> Result<Self> {
        let law = ControlLaw {
            family: LawFamily::Combined,
            gains: preparation,
            preservation: Some(preservation),
            guards,
            kick,
            switch_rule: Some(rule),
        };
        law.validate()?;
        Ok(law)
    }

    fn single(family: LawFamily, gains: FeedbackGains, kick: Kick, guards: Guards) -> Result<Self> {
        let law = ControlLaw {
            family,
            gains,
            preservation: None,
            guards,
            kick,
            switch_rule: None,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        self.guards.validate()?;
        self.kick.validate()?;
        self.gains.validate(true)?;
        if self.family == LawFamily::Combined {
            self.preservation
                .ok_or_else(|| Error::invalid("preservation", "required for a combined law"))?
                .validate(true)?;
            if self.switch_rule.is_none() {
                return Err(Error::invalid("switch_rule", "required for a combined law"));
            }
        }
        Ok(())
    }

    /// Gains in force during `stage`.
    pub fn stage_gains(&self, stage: Stage) -> &FeedbackGains {
        match (stage, &self.preservation) {
            (Stage::Preservation, Some(g)) => g,
            _ => &self.gains,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GuardEvent {
    #[default]
    None,
    /// Previous value reused.
    Held,
    /// Clamped to `±f_max`.
    Saturated,
}

impl GuardEvent {
    pub fn code(&self) -> u8 {
        match self {
            GuardEvent::None => 0,
            GuardEvent::Held => 1,
            GuardEvent::Saturated => 2,
        }
    }

    pub fn fired(&self) -> bool {
        *self != GuardEvent::None
    }
}

/// `S(A_x), S(A_y), S(A_z), S(B)` of the functional the law descends.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SValues {
    pub generators: [f64; 3],
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub f: Vec3,
    pub guards: [GuardEvent; 3],
    pub s: SValues,
    pub kick: bool,
    pub stage: Stage,
}

impl ControlOutput {
    pub fn any_guard(&self) -> bool {
        self.guards.iter().any(GuardEvent::fired)
    }
}

/// Output of `law` at time `t`.
///
/// With no previous output the kick values are returned as-is; that is only
/// legal at `t = 0`. A combined law reads its stage from `prev`.
pub fn evaluate(
    law: &ControlLaw,
    ctx: &LyapunovContext,
    model: &SystemModel,
    t: f64,
    prev: Option<&ControlOutput>,
) -> Result<ControlOutput> {
    let Some(prev) = prev else {
        if t > 0.0 {
            return Err(Error::MissingPrevious { t });
        }
        return Ok(kick_output(law));
    };
    if law.kick.duration().is_some_and(|d| t < d) {
        return Ok(ControlOutput {
            stage: prev.stage,
            ..kick_output(law)
        });
    }

    let b = model.dissipation(t);
    let s = match law.family {
        LawFamily::BaselineDis => SValues {
            generators: ctx.s_dis_generators(),
            b: ctx.s_dis(&b),
        },
        _ => SValues {
            generators: ctx.s_generators(),
            b: ctx.s(&b),
        },
    };
    let gains = law.stage_gains(prev.stage);
    let mut f = Vec3::zeros();
    let mut guards = [GuardEvent::None; 3];
    for j in 0..3 {
        let (value, event) =
            axis_control(gains.k[j], gains.h[j], s.generators[j], s.b, &law.guards);
        f[j] = match event {
            GuardEvent::Held => prev.f[j],
            _ => value,
        };
        guards[j] = event;
    }
    Ok(ControlOutput {
        f,
        guards,
        s,
        kick: false,
        stage: prev.stage,
    })
}

fn kick_output(law: &ControlLaw) -> ControlOutput {
    ControlOutput {
        f: Vec3::from(law.kick.values),
        guards: [GuardEvent::None; 3],
        s: SValues::default(),
        kick: true,
        stage: Stage::Preparation,
    }
}

/// One axis of the template. An axis carrying an offset holds its previous
/// value when the division is ill-conditioned or the result is too large; a
/// gain-only axis is saturated instead, which keeps the sign of `−k S` and so
/// its contribution to descent.
fn axis_control(k: f64, h: f64, s: f64, s_b: f64, guards: &Guards) -> (f64, GuardEvent) {
    let has_offset = h != 0.0;
    if has_offset && s.abs() < guards.eps_den {
        return (0.0, GuardEvent::Held);
    }
    let mut f = -k * s;
    if has_offset {
        f -= h * s_b / s;
    }
    if f.is_finite() && f.abs() <= guards.f_max {
        (f, GuardEvent::None)
    } else if has_offset || !f.is_finite() {
        (0.0, GuardEvent::Held)
    } else {
        (guards.f_max.copysign(f), GuardEvent::Saturated)
    }
}

/// Whether a combined law should hand over to preservation, given the
/// distance history so far (most recent last) at time `t`.
pub fn combined_should_switch(rule: &SwitchRule, t: f64, d_history: &[f64]) -> bool {
    match *rule {
        SwitchRule::AtTime(ts) => t >= ts,
        SwitchRule::LocalMinBelow(threshold) => match d_history {
            [.., before, last] => *before < threshold && last > before,
            _ => false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::compute_context;
    use crate::models::{make_model, BlochOperator, Mat3, ModelKind};

    fn kick() -> Kick {
        Kick::new([99.0, 20.0, 30.0], KickHold::OneStep)
    }

    fn not_target() -> BlochOperator {
        BlochOperator(Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0)))
    }

    fn rot(axis: Vec3, angle: f64) -> BlochOperator {
        BlochOperator(
            nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
                .into_inner(),
        )
    }

    #[test]
    fn kick_at_time_zero() {
        let pd = make_model(ModelKind::PhaseDamping, 0.1, None).unwrap();
        let ctx = compute_context(&BlochOperator::identity(), &not_target());
        for law in [
            ControlLaw::law_x(400.0, 400.0, kick(), Guards::default()).unwrap(),
            ControlLaw::law_y(400.0, 400.0, kick(), Guards::default()).unwrap(),
            ControlLaw::distributed(
                [398.0, 233.0, 59.0],
                [0.21, 0.0, 0.79],
                kick(),
                Guards::default(),
            )
            .unwrap(),
        ] {
            let out = evaluate(&law, &ctx, &pd, 0.0, None).unwrap();
            assert_eq!(out.f, Vec3::new(99.0, 20.0, 30.0));
            assert!(out.kick);
        }
    }

    #[test]
    fn missing_previous_is_an_error() {
        let law = ControlLaw::law_x(400.0, 400.0, kick(), Guards::default()).unwrap();
        let ctx = compute_context(&BlochOperator::identity(), &not_target());
        let err = evaluate(&law, &ctx, &SystemModel::closed(), 0.5, None).unwrap_err();
        assert_eq!(err, Error::MissingPrevious { t: 0.5 });
    }

    #[test]
    fn target_equilibrium_holds_previous() {
        let law = ControlLaw::law_x(400.0, 400.0, kick(), Guards::default()).unwrap();
        let ad = make_model(ModelKind::AmplitudeDamping, 0.1, None).unwrap();
        let ctx = compute_context(&not_target(), &not_target());
        let prev = ControlOutput {
            f: Vec3::new(1.5, -2.0, 3.0),
            guards: Default::default(),
            s: Default::default(),
            kick: false,
            stage: Stage::Preparation,
        };
        let out = evaluate(&law, &ctx, &ad, 0.1, Some(&prev)).unwrap();
        assert_eq!(out.guards[0], GuardEvent::Held);
        assert_eq!(out.f[0], 1.5);
        // Gain-only axes have nothing to hold: −k·0 = 0 is a regular value.
        assert_eq!((out.f[1], out.f[2]), (0.0, 0.0));
    }

    #[test]
    fn closed_system_law_x_has_no_offset() {
        let law = ControlLaw::law_x(400.0, 400.0, kick(), Guards::default()).unwrap();
        let u = rot(Vec3::new(0.3, 1.0, 0.2), 0.4);
        let ctx = compute_context(&u, &not_target());
        assert!(ctx.s_generators()[0].abs() > 1e-3);
        let prev = kick_output(&law);
        let out = evaluate(&law, &ctx, &SystemModel::closed(), 0.01, Some(&prev)).unwrap();
        assert_eq!(out.f[0], 0.0);
    }

    #[test]
    fn law_x_is_a_special_distributed_law() {
        let pd = make_model(ModelKind::PhaseDamping, 0.1, None).unwrap();
        let x = ControlLaw::law_x(400.0, 250.0, kick(), Guards::default()).unwrap();
        let d = ControlLaw::distributed(
            [0.0, 400.0, 250.0],
            [1.0, 0.0, 0.0],
            kick(),
            Guards::default(),
        )
        .unwrap();
        let prev = kick_output(&x);
        for (axis, angle) in [
            (Vec3::new(1.0, 0.1, 0.2), 2.0),
            (Vec3::new(0.2, 1.0, 0.5), 1.0),
        ] {
            let ctx = compute_context(&rot(axis, angle), &not_target());
            let a = evaluate(&x, &ctx, &pd, 0.3, Some(&prev)).unwrap();
            let b = evaluate(&d, &ctx, &pd, 0.3, Some(&prev)).unwrap();
            assert_eq!(a.f, b.f);
        }
    }

    #[test]
    fn unguarded_output_descends() {
        let ad = make_model(ModelKind::AmplitudeDamping, 0.1, None).unwrap();
        let laws = [
            ControlLaw::law_x(
                400.0,
                400.0,
                kick(),
                Guards {
                    f_max: 1e9,
                    eps_den: 1e-6,
                },
            )
            .unwrap(),
            ControlLaw::law_y(
                400.0,
                400.0,
                kick(),
                Guards {
                    f_max: 1e9,
                    eps_den: 1e-6,
                },
            )
            .unwrap(),
            ControlLaw::distributed(
                [61.0, 116.0, 397.0],
                [0.35, 0.31, 0.34],
                kick(),
                Guards {
                    f_max: 1e9,
                    eps_den: 1e-6,
                },
            )
            .unwrap(),
        ];
        let ctx = compute_context(&rot(Vec3::new(0.7, 0.4, -0.3), 2.5), &not_target());
        for law in laws {
            let prev = kick_output(&law);
            let out = evaluate(&law, &ctx, &ad, 1.0, Some(&prev)).unwrap();
            assert!(!out.any_guard());
            let vdot = out
                .f
                .iter()
                .zip(out.s.generators)
                .map(|(f, s)| f * s)
                .sum::<f64>()
                + out.s.b;
            let expected: f64 = -(0..3)
                .map(|j| law.gains.k[j] * out.s.generators[j].powi(2))
                .sum::<f64>();
            assert!((vdot - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
            assert!(vdot <= 0.0);
        }
    }

    #[test]
    fn gain_axis_saturates_with_sign() {
        let g = Guards {
            f_max: 10.0,
            eps_den: 1e-6,
        };
        assert_eq!(
            axis_control(400.0, 0.0, 1.0, 0.0, &g),
            (-10.0, GuardEvent::Saturated)
        );
        assert_eq!(
            axis_control(400.0, 0.0, -1.0, 0.0, &g),
            (10.0, GuardEvent::Saturated)
        );
        assert_eq!(axis_control(0.0, 1.0, 1e-3, 1.0, &g).1, GuardEvent::Held);
        assert_eq!(axis_control(0.0, 1.0, 1e-7, 0.0, &g).1, GuardEvent::Held);
        assert_eq!(
            axis_control(0.0, 1.0, 0.5, 1.0, &g),
            (-2.0, GuardEvent::None)
        );
    }

    #[test]
    fn weights_must_sum_to_one() {
        assert!(
            ControlLaw::distributed([1.0; 3], [0.5, 0.5, 0.1], kick(), Guards::default()).is_err()
        );
        assert!(ControlLaw::law_x(-1.0, 1.0, kick(), Guards::default()).is_err());
        assert!(ControlLaw::law_x(
            1.0,
            1.0,
            kick(),
            Guards {
                f_max: 0.0,
                eps_den: 1e-6
            }
        )
        .is_err());
    }

    #[test]
    fn half_turn_duration() {
        let k = Kick::new([3.0, 0.0, 4.0], KickHold::HalfTurn);
        assert_eq!(k.duration(), Some(PI / 5.0));
        assert_eq!(kick().duration(), None);
    }

    #[test]
    fn switch_rule_examples() {
        let rule = SwitchRule::default();
        assert!(combined_should_switch(
            &rule,
            1.0,
            &[3e-5, 2e-5, 1e-5, 2e-5]
        ));
        assert!(!combined_should_switch(&rule, 1.0, &[3e-5, 2e-5, 1e-5]));
        assert!(!combined_should_switch(&rule, 1.0, &[8.0, 2e-4, 3e-4]));
        assert!(!combined_should_switch(&rule, 0.0, &[8.0]));
        assert!(!combined_should_switch(&rule, 0.0, &[]));
        assert!(combined_should_switch(&SwitchRule::AtTime(0.5), 0.5, &[]));
    }
}
