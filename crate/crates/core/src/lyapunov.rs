// Copyright 2026 The qlyap Authors
// SPDX-License-Identifier: Apache-2.0

//! Lyapunov functionals for steering `U` onto a target `U_f`.
//!
//! With `W = U_fᵀU`, the truncated logarithm `L = (W − I) − ½(W − I)²` gives
//! `V = tr(LᵀL)`, and `V_dis = ‖U − U_f‖²_F` is the plain distance. Along
//! `U̇ = X U`, both derivatives are linear in `X`; [`s_functional`] and
//! [`s_dis_functional`] return those coefficients.

use nalgebra::Schur;

use crate::models::{BlochOperator, Mat3, GENERATORS};

/// Everything the control laws need about the current operator.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovContext {
    pub target: BlochOperator,
    pub w: Mat3,
    pub l: Mat3,
    pub v: f64,
    pub v_dis: f64,
    grad: Mat3,
    grad_dis: Mat3,
}

pub fn compute_context(u: &BlochOperator, u_f: &BlochOperator) -> LyapunovContext {
    let (u, uf) = (&u.0, &u_f.0);
    let w = uf.transpose() * u;
    let m = w - Mat3::identity();
    let l = m - m * m * 0.5;
    let v = l.norm_squared();
    let v_dis = (u - uf).norm_squared();

    // V̇ = 2 Σ X ∘ grad and V̇_dis = 2 Σ X ∘ grad_dis, after cycling the traces.
    let wt = w.transpose();
    let g = l * 2.0 - (wt * l + l * wt) * 0.5;
    let grad = uf * g * u.transpose();
    let grad_dis = uf * m * u.transpose();

    LyapunovContext {
        target: *u_f,
        w,
        l,
        v,
        v_dis,
        grad,
        grad_dis,
    }
}

impl LyapunovContext {
    /// `S(X)` from the cached gradient.
    pub fn s(&self, x: &Mat3) -> f64 {
        2.0 * x.component_mul(&self.grad).sum()
    }

    pub fn s_dis(&self, x: &Mat3) -> f64 {
        2.0 * x.component_mul(&self.grad_dis).sum()
    }

    /// `[S(A_x), S(A_y), S(A_z)]`
    pub fn s_generators(&self) -> [f64; 3] {
        GENERATORS.map(|a| self.s(&a))
    }

    pub fn s_dis_generators(&self) -> [f64; 3] {
        GENERATORS.map(|a| self.s_dis(&a))
    }

    /// Spectral radius of `W − I`. The two-term truncation of `log W` is a
    /// faithful proxy only while this stays below one.
    pub fn mercator_radius(&self) -> f64 {
        let m = self.w - Mat3::identity();
        if m.iter().all(|x| *x == 0.0) {
            return 0.0;
        }
        // The Frobenius norm bounds the radius should the QR sweep stall.
        match Schur::try_new(m, f64::EPSILON, 10_000) {
            Some(schur) => schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max),
            None => m.norm(),
        }
    }

    pub fn mercator_converges(&self) -> bool {
        self.mercator_radius() < 1.0
    }
}

/// Coefficient of `X` in `V̇` along `U̇ = X U`:
/// `2 tr((−½ UᵀXᵀU_f Wᵀ − ½ WᵀUᵀXᵀU_f + 2 UᵀXᵀU_f) L)`.
pub fn s_functional(ctx: &LyapunovContext, u: &BlochOperator, x: &Mat3) -> f64 {
    let p = u.0.transpose() * x.transpose() * ctx.target.0;
    let wt = ctx.w.transpose();
    let m = p * wt * -0.5 - wt * p * 0.5 + p * 2.0;
    2.0 * (m * ctx.l).trace()
}

/// Coefficient of `X` in `V̇_dis`: `2 tr((W − I)ᵀ U_fᵀ X U)`.
pub fn s_dis_functional(ctx: &LyapunovContext, u: &BlochOperator, x: &Mat3) -> f64 {
    let m = ctx.w - Mat3::identity();
    2.0 * (m.transpose() * ctx.target.0.transpose() * x * u.0).trace()
}
