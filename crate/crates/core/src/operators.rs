//! Discrete operators: the stencil operator `L_h`, the membrane residual
//! `F^i` and the parabolic residual `S`, plus the explicit CFL check.
//!
//! Sign convention: `L_h u_i = Σ_j (u_i − u_{i_j}) / h²`, so `L_h ≈ −Δ` on
//! smooth functions. Residuals on boundary nodes are defined as zero.

use serde::{Deserialize, Serialize};

use crate::grid::{GridFunction, GridSpec};
use crate::problem::CoefficientField;

/// Mesh parameters of a time-dependent scheme. `c = dt / dx²` is the
/// diffusion number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub dx: f64,
    pub dt: f64,
    pub k: usize,
}

impl SchemeParams {
    pub fn new(dx: f64, dt: f64, k: usize) -> Self {
        Self { dx, dt, k }
    }

    pub fn c(&self) -> f64 {
        self.dt / (self.dx * self.dx)
    }
}

/// Outcome of [`cfl_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CflVerdict {
    pub passes: bool,
    /// `dt / dx²`
    pub ratio: f64,
    /// `1 / K`
    pub bound: f64,
}

/// Explicit stability condition `dt / dx² ≤ 1 / K`, compared exactly as
/// `K · dt / dx² ≤ 1`.
pub fn cfl_check(params: &SchemeParams) -> CflVerdict {
    let ratio = params.c();
    CflVerdict {
        passes: ratio * params.k as f64 <= 1.0,
        ratio,
        bound: 1.0 / params.k as f64,
    }
}

/// Per-node residual values; zero on boundary nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualField {
    values: Vec<f64>,
}

impl ResidualField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `Σ_j u_{i_j}` over the neighbors of the interior node at `slot`.
#[inline]
pub fn neighbor_sum(grid: &GridSpec, u: &[f64], slot: usize) -> f64 {
    grid.slot_neighbors(slot).iter().map(|&j| u[j]).sum()
}

/// Unscaled stencil `Σ_j (u_i − u_{i_j})` at the interior node at `slot`.
#[inline]
pub fn stencil_difference(grid: &GridSpec, u: &[f64], slot: usize) -> f64 {
    let i = grid.interior()[slot];
    grid.slot_neighbors(slot).iter().map(|&j| u[i] - u[j]).sum()
}

/// `L_h u` on interior nodes, zero on the boundary.
pub fn lh_apply(grid: &GridSpec, u: &GridFunction) -> GridFunction {
    assert_eq!(u.len(), grid.len(), "grid function does not match grid");
    let h2 = grid.dx() * grid.dx();
    let us = u.as_slice();
    let mut out = vec![0.0; grid.len()];
    for (slot, &i) in grid.interior().iter().enumerate() {
        out[i] = stencil_difference(grid, us, slot) / h2;
    }
    GridFunction::from_raw(out)
}

/// `min(lh + λ⁺, max(lh − λ⁻, u_i))` for a given value of `L_h u_i`.
#[inline]
pub fn membrane_residual_at(lh: f64, u_i: f64, lambda_plus: f64, lambda_minus: f64) -> f64 {
    (lh + lambda_plus).min((lh - lambda_minus).max(u_i))
}

/// The membrane scheme written as a function of the node value and the
/// differences `u_i − u_{i_j}`. Nondecreasing in every argument.
pub fn membrane_scheme(u_i: f64, differences: &[f64], dx: f64, lambda_plus: f64, lambda_minus: f64) -> f64 {
    let lh = differences.iter().sum::<f64>() / (dx * dx);
    membrane_residual_at(lh, u_i, lambda_plus, lambda_minus)
}

/// The membrane residual `F^i[u]` at every interior node.
pub fn elliptic_residual(
    grid: &GridSpec,
    u: &GridFunction,
    lambda_plus: &CoefficientField,
    lambda_minus: &CoefficientField,
) -> ResidualField {
    assert_eq!(u.len(), grid.len(), "grid function does not match grid");
    let h2 = grid.dx() * grid.dx();
    let us = u.as_slice();
    let mut values = vec![0.0; grid.len()];
    for (slot, &i) in grid.interior().iter().enumerate() {
        let lh = stencil_difference(grid, us, slot) / h2;
        values[i] = membrane_residual_at(lh, us[i], lambda_plus.at(i), lambda_minus.at(i));
    }
    ResidualField { values }
}

/// `min(S̃ + dt·λ⁺, max(S̃ − dt·λ⁻, dt·u_new))` for a given `S̃`.
#[inline]
pub fn parabolic_residual_at(s_tilde: f64, dt: f64, u_new: f64, lambda_plus: f64, lambda_minus: f64) -> f64 {
    (s_tilde + dt * lambda_plus).min((s_tilde - dt * lambda_minus).max(dt * u_new))
}

/// The explicit parabolic residual with
/// `S̃ = u_new − u_old + c · Σ_q (u_old_j − u_old_{j_q})`.
/// A valid explicit step makes it vanish at every interior node.
pub fn parabolic_residual(
    grid: &GridSpec,
    params: &SchemeParams,
    u_old: &GridFunction,
    u_new: &GridFunction,
    lambda_plus: &CoefficientField,
    lambda_minus: &CoefficientField,
) -> ResidualField {
    time_residual(grid, params, u_old, u_new, lambda_plus, lambda_minus, u_old)
}

/// The backward-Euler counterpart of [`parabolic_residual`]: the stencil is
/// applied to `u_new` instead of `u_old`.
pub fn backward_euler_residual(
    grid: &GridSpec,
    params: &SchemeParams,
    u_old: &GridFunction,
    u_new: &GridFunction,
    lambda_plus: &CoefficientField,
    lambda_minus: &CoefficientField,
) -> ResidualField {
    time_residual(grid, params, u_old, u_new, lambda_plus, lambda_minus, u_new)
}

fn time_residual(
    grid: &GridSpec,
    params: &SchemeParams,
    u_old: &GridFunction,
    u_new: &GridFunction,
    lambda_plus: &CoefficientField,
    lambda_minus: &CoefficientField,
    stencil_level: &GridFunction,
) -> ResidualField {
    assert_eq!(u_old.len(), grid.len(), "grid function does not match grid");
    assert_eq!(u_new.len(), grid.len(), "grid function does not match grid");
    let c = params.c();
    let (old, new, lev) = (u_old.as_slice(), u_new.as_slice(), stencil_level.as_slice());
    let mut values = vec![0.0; grid.len()];
    for (slot, &j) in grid.interior().iter().enumerate() {
        let s_tilde = new[j] - old[j] + c * stencil_difference(grid, lev, slot);
        values[j] = parabolic_residual_at(s_tilde, params.dt, new[j], lambda_plus.at(j), lambda_minus.at(j));
    }
    ResidualField { values }
}
