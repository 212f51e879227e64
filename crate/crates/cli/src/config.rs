// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration files.
//!
//! A config is a TOML document; every table rejects keys it does not know.
//! Loading fills in defaults, so [`ExperimentConfig::to_toml`] echoes the
//! fully-resolved settings that produced a run.

use std::path::Path;

use num_complex::Complex64;
use qlyap::{
    gates, make_model, unitary_to_bloch_operator, BlochOperator, CMat2, CMat3, ControlLaw,
    FeedbackGains, GksMatrix, Guards, Kick, KickHold, LawFamily, Mat3, ModelKind,
    NonMarkovianParams, PerturbationAxis, SimConfig, SwitchRule, SystemModel,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Run,
    Compare,
    FreeEvolution,
    Robustness,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Run => "run",
            Experiment::Compare => "compare",
            Experiment::FreeEvolution => "free-evolution",
            Experiment::Robustness => "robustness",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub model: ModelConfig,
    /// Single law for `run` and `robustness`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<LawConfig>,
    /// Named laws for `compare`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub laws: Vec<LawConfig>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub target: TargetConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_evolution: Option<FreeEvolutionConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_kind")]
    pub kind: ModelKind,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nm: Option<NonMarkovianParams>,
    /// Coupling matrix of a custom model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gks: Option<ComplexMatrix3>,
}

fn default_kind() -> ModelKind {
    ModelKind::Closed
}

fn default_gamma() -> f64 {
    0.1
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: default_kind(),
            gamma: default_gamma(),
            nm: None,
            gks: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexMatrix3 {
    pub re: [[f64; 3]; 3],
    #[serde(default)]
    pub im: [[f64; 3]; 3],
}

impl ModelConfig {
    fn resolve(&mut self) {
        if self.kind == ModelKind::NonMarkovian && self.nm.is_none() {
            self.nm = Some(NonMarkovianParams::default());
        }
    }

    pub fn build(&self) -> Result<SystemModel, CliError> {
        self.build_kind(self.kind)
    }

    /// The model with this block's parameters but another kind.
    pub fn build_kind(&self, kind: ModelKind) -> Result<SystemModel, CliError> {
        match kind {
            ModelKind::Custom => {
                let g = self.gks.as_ref().ok_or_else(|| {
                    CliError::validation("model.gks", "required for a custom model")
                })?;
                let m = CMat3::from_fn(|i, j| Complex64::new(g.re[i][j], g.im[i][j]));
                let gks = GksMatrix::new(m).map_err(|e| CliError::validation("model.gks", e))?;
                if !gks.is_positive_semidefinite() {
                    eprintln!("warning: model.gks is not positive semi-definite");
                }
                Ok(SystemModel::custom(&gks))
            }
            ModelKind::NonMarkovian => {
                let nm = self.nm.unwrap_or_default();
                make_model(kind, self.gamma, Some(nm)).map_err(|e| CliError::validation("model", e))
            }
            _ => make_model(kind, self.gamma, None).map_err(|e| CliError::validation("model", e)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KickHoldName {
    OneStep,
    HalfTurn,
    Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    /// Label used in comparison outputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub family: LawFamily,
    /// LawX and BaselineDis gains (also the preservation stage of Combined).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_z: Option<f64>,
    /// Distributed gains `[k_nx, k_ny, k_nz]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_n: Option<[f64; 3]>,
    /// Distributed offset weights `[h_nx, h_ny, h_nz]`, summing to one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_n: Option<[f64; 3]>,
    /// LawY gains.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_yx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_yz: Option<f64>,
    #[serde(default)]
    pub kick: [f64; 3],
    #[serde(default = "default_hold")]
    pub kick_hold: KickHoldName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kick_duration: Option<f64>,
    #[serde(default = "default_f_max")]
    pub f_max: f64,
    #[serde(default = "default_eps_den")]
    pub eps_den: f64,
    /// Combined only: hand over at this time instead of at the first local
    /// minimum of `D` below `switch_threshold`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_threshold: Option<f64>,
}

fn default_hold() -> KickHoldName {
    KickHoldName::OneStep
}

fn default_f_max() -> f64 {
    Guards::default().f_max
}

fn default_eps_den() -> f64 {
    Guards::default().eps_den
}

fn need(value: Option<f64>, field: &'static str, family: LawFamily) -> Result<f64, CliError> {
    value.ok_or_else(|| CliError::validation(field, format!("required for family `{family}`")))
}

fn need3(
    value: Option<[f64; 3]>,
    field: &'static str,
    family: LawFamily,
) -> Result<[f64; 3], CliError> {
    value.ok_or_else(|| CliError::validation(field, format!("required for family `{family}`")))
}

impl LawConfig {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.family.to_string())
    }

    fn resolve(&mut self) {
        if self.family == LawFamily::Combined
            && self.switch_time.is_none()
            && self.switch_threshold.is_none()
        {
            self.switch_threshold = Some(qlyap::VALIDITY_THRESHOLD);
        }
    }

    /// Rejects gain fields that the family does not use.
    fn check_fields(&self) -> Result<(), CliError> {
        let f = self.family;
        let allowed: &[&str] = match f {
            LawFamily::LawX | LawFamily::BaselineDis => &["k_y", "k_z"],
            LawFamily::Distributed => &["k_n", "h_n"],
            LawFamily::LawY => &["k_yx", "k_yz"],
            LawFamily::Combined => &[
                "k_y",
                "k_z",
                "k_n",
                "h_n",
                "switch_time",
                "switch_threshold",
            ],
        };
        let present = [
            ("k_y", self.k_y.is_some()),
            ("k_z", self.k_z.is_some()),
            ("k_n", self.k_n.is_some()),
            ("h_n", self.h_n.is_some()),
            ("k_yx", self.k_yx.is_some()),
            ("k_yz", self.k_yz.is_some()),
            ("switch_time", self.switch_time.is_some()),
            ("switch_threshold", self.switch_threshold.is_some()),
        ];
        for (name, is_set) in present {
            if is_set && !allowed.contains(&name) {
                return Err(CliError::validation_owned(
                    format!("law.{name}"),
                    format!("not used by family `{f}`"),
                ));
            }
        }
        if self.family == LawFamily::Combined
            && self.switch_time.is_some()
            && self.switch_threshold.is_some()
        {
            return Err(CliError::validation(
                "law.switch_time",
                "give either switch_time or switch_threshold",
            ));
        }
        if self.kick_duration.is_some() != (self.kick_hold == KickHoldName::Duration) {
            return Err(CliError::validation(
                "law.kick_duration",
                "required exactly when kick_hold = \"duration\"",
            ));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<ControlLaw, CliError> {
        self.check_fields()?;
        let f = self.family;
        let guards = Guards {
            f_max: self.f_max,
            eps_den: self.eps_den,
        };
        let hold = match self.kick_hold {
            KickHoldName::OneStep => KickHold::OneStep,
            KickHoldName::HalfTurn => KickHold::HalfTurn,
            KickHoldName::Duration => KickHold::Duration(self.kick_duration.unwrap_or_default()),
        };
        let kick = Kick::new(self.kick, hold);
        let law = match f {
            LawFamily::LawX => ControlLaw::law_x(
                need(self.k_y, "law.k_y", f)?,
                need(self.k_z, "law.k_z", f)?,
                kick,
                guards,
            ),
            LawFamily::BaselineDis => ControlLaw::baseline_dis(
                need(self.k_y, "law.k_y", f)?,
                need(self.k_z, "law.k_z", f)?,
                kick,
                guards,
            ),
            LawFamily::LawY => ControlLaw::law_y(
                need(self.k_yx, "law.k_yx", f)?,
                need(self.k_yz, "law.k_yz", f)?,
                kick,
                guards,
            ),
            LawFamily::Distributed => ControlLaw::distributed(
                need3(self.k_n, "law.k_n", f)?,
                need3(self.h_n, "law.h_n", f)?,
                kick,
                guards,
            ),
            LawFamily::Combined => {
                let prep = FeedbackGains::distributed(
                    need3(self.k_n, "law.k_n", f)?,
                    need3(self.h_n, "law.h_n", f)?,
                );
                let keep = FeedbackGains::law_x(
                    need(self.k_y, "law.k_y", f)?,
                    need(self.k_z, "law.k_z", f)?,
                );
                let rule = match (self.switch_time, self.switch_threshold) {
                    (Some(t), _) => SwitchRule::AtTime(t),
                    (None, Some(th)) => SwitchRule::LocalMinBelow(th),
                    (None, None) => SwitchRule::default(),
                };
                ControlLaw::combined(prep, keep, kick, guards, rule)
            }
        };
        law.map_err(|e| CliError::validation("law", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    /// Initial operator, row-major; the identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<[[f64; 3]; 3]>,
}

fn default_dt() -> f64 {
    SimConfig::default().dt
}

fn default_t_end() -> f64 {
    SimConfig::default().t_end
}

fn default_stride() -> usize {
    1
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt: default_dt(),
            t_end: default_t_end(),
            record_stride: default_stride(),
            u0: None,
        }
    }
}

impl SimSection {
    pub fn build(&self) -> Result<SimConfig, CliError> {
        let u0 = match self.u0 {
            Some(rows) => BlochOperator(Mat3::from_fn(|i, j| rows[i][j])),
            None => BlochOperator::identity(),
        };
        let cfg = SimConfig {
            dt: self.dt,
            t_end: self.t_end,
            u0,
            record_stride: self.record_stride,
        };
        cfg.validate().map_err(|e| CliError::validation("sim", e))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateName {
    Not,
    Hadamard,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateName>,
    /// Explicit 2×2 unitary, real and imaginary parts row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re: Option<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<[[f64; 2]; 2]>,
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig {
            gate: Some(GateName::Not),
            re: None,
            im: None,
        }
    }
}

impl TargetConfig {
    pub fn unitary(&self) -> Result<CMat2, CliError> {
        let explicit = self.re.is_some() || self.im.is_some();
        match (self.gate, self.re) {
            (Some(_), _) if explicit => Err(CliError::validation(
                "target",
                "give either `gate` or explicit `re`/`im` entries",
            )),
            (Some(GateName::Not), _) => Ok(gates::not()),
            (Some(GateName::Hadamard), _) => Ok(gates::hadamard()),
            (Some(GateName::Identity), _) => Ok(gates::identity()),
            (None, Some(re)) => {
                let im = self.im.unwrap_or_default();
                Ok(CMat2::from_fn(|i, j| Complex64::new(re[i][j], im[i][j])))
            }
            (None, None) => Err(CliError::validation("target.re", "missing `gate` or `re`")),
        }
    }

    pub fn build(&self) -> Result<BlochOperator, CliError> {
        unitary_to_bloch_operator(&self.unitary()?).map_err(|e| CliError::validation("target", e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessConfig {
    #[serde(default = "default_axes")]
    pub axes: Vec<PerturbationAxis>,
    #[serde(default = "default_lambda_min")]
    pub lambda_min: f64,
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_axes() -> Vec<PerturbationAxis> {
    PerturbationAxis::ALL.to_vec()
}

fn default_lambda_min() -> f64 {
    -100.0
}

fn default_lambda_max() -> f64 {
    100.0
}

fn default_points() -> usize {
    41
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig {
            axes: default_axes(),
            lambda_min: default_lambda_min(),
            lambda_max: default_lambda_max(),
            points: default_points(),
        }
    }
}

impl RobustnessConfig {
    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        if self.points == 0 {
            return Err(CliError::validation("robustness.points", "must be >= 1"));
        }
        if self.lambda_min.is_nan() || self.lambda_max.is_nan() || self.lambda_min > self.lambda_max
        {
            return Err(CliError::validation(
                "robustness.lambda_min",
                "must not exceed lambda_max",
            ));
        }
        if self.axes.is_empty() {
            return Err(CliError::validation("robustness.axes", "must not be empty"));
        }
        Ok(qlyap::lambda_grid(
            self.lambda_min,
            self.lambda_max,
            self.points,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeEvolutionConfig {
    pub kinds: Vec<ModelKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: String,
}

fn default_out_dir() -> String {
    "out".to_string()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_out_dir(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| CliError::Validation(format!("config: {}", e.message().trim())))?;
        cfg.model.resolve();
        if let Some(law) = cfg.law.as_mut() {
            law.resolve();
        }
        cfg.laws.iter_mut().for_each(LawConfig::resolve);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Checks the config is usable for `experiment`.
    pub fn check_for(&self, experiment: Experiment) -> Result<(), CliError> {
        if let Some(declared) = self.experiment {
            if declared != experiment {
                return Err(CliError::validation_owned(
                    "experiment".to_string(),
                    format!(
                        "config is for `{}`, not `{}`",
                        declared.as_str(),
                        experiment.as_str()
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn single_law(&self) -> Result<&LawConfig, CliError> {
        self.law
            .as_ref()
            .ok_or_else(|| CliError::validation("law", "a [law] table is required"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
