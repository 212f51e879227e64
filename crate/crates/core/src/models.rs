// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

//! Open two-level system models in the Bloch operator picture.
//!
//! A qubit density matrix `ρ = ½(I + r·σ)` evolves as `ṙ = (A(t) + B(t)) r`,
//! where `A(t) = f_x A_x + f_y A_y + f_z A_z` carries the controls and the
//! real symmetric `B(t)` carries the dissipation. The same generator drives the
//! evolution operator, `U̇ = (A + B) U`, which is what gets steered onto a gate.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;
pub type CMat2 = Matrix2<Complex64>;
pub type CMat3 = Matrix3<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;

/// Generator of rotations about x in the Bloch picture.
pub const AX: Mat3 = Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
/// Generator of rotations about y.
pub const AY: Mat3 = Mat3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0);
/// Generator of rotations about z.
pub const AZ: Mat3 = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);

/// The three control generators, indexed by axis.
pub const GENERATORS: [Mat3; 3] = [AX, AY, AZ];

/// Unitary part of the Bloch generator for control amplitudes `f`.
pub fn control_generator(f: &Vec3) -> Mat3 {
    AX * f[0] + AY * f[1] + AZ * f[2]
}

/// Hermitian positive semi-definite coupling matrix of the dissipator.
#[derive(Debug, Clone, PartialEq)]
pub struct GksMatrix(CMat3);

impl GksMatrix {
    /// Wraps `entries`, rejecting matrices that are not Hermitian.
    pub fn new(entries: CMat3) -> Result<Self> {
        check_hermitian(&entries)?;
        Ok(GksMatrix(entries))
    }

    pub fn zero() -> Self {
        GksMatrix(CMat3::zeros())
    }

    /// `γ · diag(0, 0, 1)`
    pub fn phase_damping(gamma: f64) -> Self {
        let mut m = CMat3::zeros();
        m[(2, 2)] = Complex64::new(gamma, 0.0);
        GksMatrix(m)
    }

    /// `γ · [[1, i, 0], [-i, 1, 0], [0, 0, 0]]`
    pub fn amplitude_damping(gamma: f64) -> Self {
        let one = Complex64::new(gamma, 0.0);
        let i = Complex64::new(0.0, gamma);
        let zero = Complex64::new(0.0, 0.0);
        GksMatrix(CMat3::new(one, i, zero, -i, one, zero, zero, zero, zero))
    }

    pub fn entries(&self) -> &CMat3 {
        &self.0
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let eig = self.0.symmetric_eigenvalues();
        let mut ev = [eig[0], eig[1], eig[2]];
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    /// True when the smallest eigenvalue is no lower than `-1e-12`.
    pub fn is_positive_semidefinite(&self) -> bool {
        self.eigenvalues()[2] >= -HERMITIAN_TOL
    }

    pub fn dissipation_matrix(&self) -> Mat3 {
        dissipation_from_entries(&self.0)
    }
}

fn check_hermitian(m: &CMat3) -> Result<()> {
    for i in 0..3 {
        for j in i..3 {
            let deviation = (m[(i, j)] - m[(j, i)].conj()).norm();
            if deviation > HERMITIAN_TOL {
                return Err(Error::NonHermitian { i, j, deviation });
            }
        }
    }
    Ok(())
}

fn dissipation_from_entries(g: &CMat3) -> Mat3 {
    let re = g.map(|z| z.re);
    let trace = re.trace();
    (re + re.transpose()) * 0.5 - Mat3::identity() * trace
}

/// Dissipation matrix `B = (Γ + Γᵀ)/2 − tr(Γ)·I` of a GKS matrix.
///
/// Only the real parts survive the symmetrization of a Hermitian `Γ`.
pub fn gks_to_b(gamma: &CMat3) -> Result<Mat3> {
    check_hermitian(gamma)?;
    Ok(dissipation_from_entries(gamma))
}

/// Bath parameters of the non-Markovian attenuation coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonMarkovianParams {
    /// Coupling strength `α²`.
    pub alpha_sq: f64,
    /// Bath temperature, used as a bare multiplier.
    pub kt: f64,
    /// Cutoff ratio `β = ω_z / ω₀`.
    pub beta: f64,
    /// System oscillator frequency `ω₀`.
    pub omega0: f64,
    /// Divisor of the sine term. Defaults to `beta` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sine_ratio: Option<f64>,
}

impl Default for NonMarkovianParams {
    fn default() -> Self {
        NonMarkovianParams {
            alpha_sq: 0.01,
            kt: 300.0,
            beta: 0.00168,
            omega0: 50.0,
            sine_ratio: None,
        }
    }
}

impl NonMarkovianParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("alpha_sq", self.alpha_sq),
            ("kt", self.kt),
            ("beta", self.beta),
            ("omega0", self.omega0),
        ] {
            if !value.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if self.beta <= 0.0 {
            return Err(Error::invalid("beta", "must be positive"));
        }
        if let Some(r) = self.sine_ratio {
            if r == 0.0 || !r.is_finite() {
                return Err(Error::invalid("sine_ratio", "must be finite and non-zero"));
            }
        }
        Ok(())
    }

    /// Long-time limit `α² kT β² / (1 + β²)`.
    pub fn asymptote(&self) -> f64 {
        let b2 = self.beta * self.beta;
        self.alpha_sq * self.kt * b2 / (1.0 + b2)
    }
}

/// Attenuation coefficient `d(t)` of the non-Markovian bath. Negative values
/// mean information flows back from the environment.
pub fn attenuation_d(t: f64, p: &NonMarkovianParams) -> f64 {
    let r = p.sine_ratio.unwrap_or(p.beta);
    let wt = p.omega0 * t;
    let envelope = (-p.beta * wt).exp();
    p.asymptote() * (1.0 - envelope * (wt.cos() - wt.sin() / r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Closed,
    #[serde(rename = "pd")]
    PhaseDamping,
    #[serde(rename = "ad")]
    AmplitudeDamping,
    NonMarkovian,
    Custom,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Closed => "closed",
            ModelKind::PhaseDamping => "pd",
            ModelKind::AmplitudeDamping => "ad",
            ModelKind::NonMarkovian => "non-markovian",
            ModelKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "closed" => Ok(ModelKind::Closed),
            "pd" | "phase-damping" => Ok(ModelKind::PhaseDamping),
            "ad" | "amplitude-damping" => Ok(ModelKind::AmplitudeDamping),
            "non-markovian" | "nm" => Ok(ModelKind::NonMarkovian),
            "custom" => Ok(ModelKind::Custom),
            _ => Err(Error::UnknownModelKind(s.to_string())),
        }
    }
}

/// Scalar multiplier applied to the dissipation template.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateFn {
    Constant(f64),
    /// `2 d(t)`
    TwiceAttenuation(NonMarkovianParams),
}

impl RateFn {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            RateFn::Constant(c) => *c,
            RateFn::TwiceAttenuation(p) => 2.0 * attenuation_d(t, p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub kind: ModelKind,
    pub gamma: f64,
    b_template: Mat3,
    rate: RateFn,
}

/// Dissipation template of the non-Markovian model, `B_NM(t) = 2 d(t) · B̃`.
pub fn non_markovian_template() -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(-1.0, -1.0, -2.0))
}

/// Builds one of the named models. `gamma` is ignored for the closed and
/// non-Markovian kinds; `nm` is required for the non-Markovian kind.
pub fn make_model(
    kind: ModelKind,
    gamma: f64,
    nm: Option<NonMarkovianParams>,
) -> Result<SystemModel> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(
            "gamma",
            format!("must be finite and >= 0, got {gamma}"),
        ));
    }
    let (b_template, rate) = match kind {
        ModelKind::Closed => (Mat3::zeros(), RateFn::Constant(1.0)),
        ModelKind::PhaseDamping => (
            GksMatrix::phase_damping(gamma).dissipation_matrix(),
            RateFn::Constant(1.0),
        ),
        ModelKind::AmplitudeDamping => (
            GksMatrix::amplitude_damping(gamma).dissipation_matrix(),
            RateFn::Constant(1.0),
        ),
        ModelKind::NonMarkovian => {
            let p = nm.ok_or_else(|| {
                Error::invalid("nm_params", "required for the non-Markovian model")
            })?;
            p.validate()?;
            (non_markovian_template(), RateFn::TwiceAttenuation(p))
        }
        ModelKind::Custom => {
            return Err(Error::invalid(
                "kind",
                "custom models are built from a GKS matrix with SystemModel::custom",
            ))
        }
    };
    Ok(SystemModel {
        kind,
        gamma,
        b_template,
        rate,
    })
}

impl SystemModel {
    pub fn closed() -> Self {
        SystemModel {
            kind: ModelKind::Closed,
            gamma: 0.0,
            b_template: Mat3::zeros(),
            rate: RateFn::Constant(1.0),
        }
    }

    /// Markovian model with an arbitrary coupling matrix.
    pub fn custom(gks: &GksMatrix) -> Self {
        SystemModel {
            kind: ModelKind::Custom,
            gamma: 0.0,
            b_template: gks.dissipation_matrix(),
            rate: RateFn::Constant(1.0),
        }
    }

    /// Custom template with a time-dependent multiplier.
    pub fn with_rate(kind: ModelKind, b_template: Mat3, rate: RateFn) -> Result<Self> {
        if (b_template - b_template.transpose()).abs().max() > 0.0 {
            return Err(Error::invalid("b_template", "must be symmetric"));
        }
        Ok(SystemModel {
            kind,
            gamma: 0.0,
            b_template,
            rate,
        })
    }

    pub fn b_template(&self) -> &Mat3 {
        &self.b_template
    }

    pub fn rate_fn(&self) -> &RateFn {
        &self.rate
    }

    /// `B(t) = rate(t) · B̃`
    pub fn dissipation(&self, t: f64) -> Mat3 {
        self.b_template * self.rate.at(t)
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self.rate, RateFn::TwiceAttenuation(_))
    }

    /// Scalar decay rate at `t`: `d(t)` for the non-Markovian bath, `γ` for
    /// the constant-rate damping models and zero for a closed system.
    pub fn decay_rate(&self, t: f64) -> f64 {
        match (&self.kind, &self.rate) {
            (ModelKind::Closed, _) => 0.0,
            (_, RateFn::TwiceAttenuation(p)) => attenuation_d(t, p),
            (_, RateFn::Constant(c)) => match self.kind {
                ModelKind::PhaseDamping | ModelKind::AmplitudeDamping => self.gamma,
                _ => *c,
            },
        }
    }
}

/// Real 3×3 evolution operator acting on Bloch vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochOperator(pub Mat3);

impl BlochOperator {
    pub fn identity() -> Self {
        BlochOperator(Mat3::identity())
    }

    pub fn zero() -> Self {
        BlochOperator(Mat3::zeros())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn apply(&self, state: &BlochState) -> BlochState {
        BlochState(self.0 * state.0)
    }

    /// `‖UᵀU − I‖_F`
    pub fn orthogonality_defect(&self) -> f64 {
        (self.0.transpose() * self.0 - Mat3::identity()).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl From<Mat3> for BlochOperator {
    fn from(m: Mat3) -> Self {
        BlochOperator(m)
    }
}

/// Bloch vector `(r_x, r_y, r_z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState(pub Vec3);

impl BlochState {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BlochState(Vec3::new(x, y, z))
    }

    pub fn is_physical(&self) -> bool {
        self.0.norm() <= 1.0 + 1e-9
    }
}

fn unitarity_defect(u: &CMat2) -> f64 {
    (u.adjoint() * u - CMat2::identity()).norm()
}

/// Bloch-picture image of a 2×2 unitary gate.
///
/// Entry `(i, j)` equals `½ tr(σ_i u σ_j u†)`; the result is a proper rotation
/// and does not depend on the global phase of `u`.
pub fn unitary_to_bloch_operator(u: &CMat2) -> Result<BlochOperator> {
    let deviation = unitarity_defect(u);
    if deviation > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation });
    }
    let (u1, u2, u3, u4) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
    let i = Complex64::i();
    let half = 0.5;
    let m = [
        [
            (u1 * u4.conj() + u1.conj() * u4 + u2 * u3.conj() + u2.conj() * u3) * half,
            i * (u1.conj() * u4 - u1 * u4.conj() + u2 * u3.conj() - u2.conj() * u3) * half,
            u1 * u3.conj() + u1.conj() * u3,
        ],
        [
            i * (u1 * u4.conj() - u1.conj() * u4 + u2 * u3.conj() - u2.conj() * u3) * half,
            (u1.conj() * u4 + u1 * u4.conj() - u2 * u3.conj() - u2.conj() * u3) * half,
            i * (u1 * u3.conj() - u1.conj() * u3),
        ],
        [
            u1 * u2.conj() + u1.conj() * u2,
            i * (u1.conj() * u2 - u1 * u2.conj()),
            u1 * u1.conj() - u2 * u2.conj(),
        ],
    ];
    Ok(BlochOperator(Mat3::from_fn(|r, c| m[r][c].re)))
}

/// Sum of squares of the nine entries.
pub fn operator_purity(u: &BlochOperator) -> f64 {
    u.0.norm_squared()
}

/// Named single-qubit gates.
pub mod gates {
    use super::{CMat2, Complex64};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    pub fn identity() -> CMat2 {
        CMat2::identity()
    }

    pub fn not() -> CMat2 {
        CMat2::new(c(0.0), c(1.0), c(1.0), c(0.0))
    }

    pub fn hadamard() -> CMat2 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMat2::new(c(s), c(s), c(s), c(-s))
    }
}
