//! Time marching for the two-phase parabolic obstacle-like problem.
//!
//! Explicit mode is the two-step projected method
//!
//! ```text
//! a        = u^m − c·L u^m
//! u^{m+½}  = min(a + Δt·λ⁻, 0)
//! u^{m+1}  = max(a − Δt·λ⁺, u^{m+½})
//! ```
//!
//! which makes the explicit min-max residual vanish identically and is
//! monotone under `c·K ≤ 1`. Implicit mode replaces `L u^m` by `L u^{m+1}`
//! (backward Euler) and solves each step by projected Gauss-Seidel with the
//! pointwise update
//!
//! ```text
//! b   = (u^m_j + c·S_j) / (1 + cK)
//! u_j = max(b − Δt·λ⁺/(1 + cK), min(b + Δt·λ⁻/(1 + cK), 0))
//! ```
//!
//! which is monotone for every `c`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::elliptic::{EllipticSolveReport, PgsConfig};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::operators::{
    backward_euler_residual, cfl_check, neighbor_sum, parabolic_residual, stencil_difference, SchemeParams,
};
use crate::problem::{CoefficientField, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepMode {
    Explicit,
    Implicit,
}

impl fmt::Display for StepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepMode::Explicit => "explicit",
            StepMode::Implicit => "implicit",
        })
    }
}

impl FromStr for StepMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "explicit" => Ok(StepMode::Explicit),
            "implicit" => Ok(StepMode::Implicit),
            other => Err(format!("unknown mode `{other}` (expected explicit or implicit)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub mode: StepMode,
    /// Fraction of the CFL bound used when a time step is chosen
    /// automatically.
    pub cfl_safety: f64,
    /// Record every `n`-th level; `None` means `max(1, M / 100)`.
    pub snapshot_stride: Option<usize>,
    /// Inner projected Gauss-Seidel tolerances (implicit mode).
    pub inner: PgsConfig,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            mode: StepMode::Implicit,
            cfl_safety: 0.9,
            snapshot_stride: None,
            inner: PgsConfig::default(),
        }
    }
}

impl StepperConfig {
    pub fn explicit() -> Self {
        Self {
            mode: StepMode::Explicit,
            ..Self::default()
        }
    }

    pub fn implicit() -> Self {
        Self::default()
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = Some(stride);
        self
    }
}

/// One recorded time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Time level index `m`.
    pub step: usize,
    pub t: f64,
    pub u: GridFunction,
    /// Level `m − 1`, kept so the discrete time derivative at this snapshot
    /// can be reconstructed. `None` at `t = 0`.
    pub previous: Option<GridFunction>,
}

/// Per-step diagnostics for the step from level `step − 1` to `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    /// `‖(u^{m+1} − u^m) / Δt‖∞`
    pub rate_sup: f64,
    /// Sup norm of the scheme residual after the step.
    pub residual_sup: f64,
    /// Inner sweeps (implicit mode; zero for explicit steps).
    pub inner_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionTrace {
    pub mode: StepMode,
    pub params: SchemeParams,
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl SolutionTrace {
    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("a trace always holds the initial level")
    }
}

fn check_len(grid: &GridSpec, u: &GridFunction) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            found: u.len(),
        });
    }
    Ok(())
}

fn copy_boundary(grid: &GridSpec, from: &GridFunction, to: &mut GridFunction) {
    for node in grid.boundary_nodes() {
        to[node] = from[node];
    }
}

/// One step of the explicit two-step projected method. Boundary entries of
/// the result are taken from `next_boundary`.
pub fn explicit_step(
    grid: &GridSpec,
    params: &SchemeParams,
    u_m: &GridFunction,
    lambda_plus: &CoefficientField,
    lambda_minus: &CoefficientField,
    next_boundary: &GridFunction,
) -> Result<GridFunction> {
    let verdict = cfl_check(params);
    if !verdict.passes {
        return Err(Error::CflViolation {
            ratio: verdict.ratio,
            bound: verdict.bound,
            k: params.k,
        });
    }
    check_len(grid, u_m)?;
    check_len(grid, next_boundary)?;
    let c = params.c();
    let dt = params.dt;
    let old = u_m.as_slice();
    let mut next = u_m.clone();
    copy_boundary(grid, next_boundary, &mut next);
    for (slot, &j) in grid.interior().iter().enumerate() {
        let a = old[j] - c * stencil_difference(grid, old, slot);
        if !a.is_finite() {
            return Err(Error::NonFinite {
                node: j,
                context: "explicit step".into(),
            });
        }
        let half = (a + dt * lambda_minus.at(j)).min(0.0);
        next[j] = (a - dt * lambda_plus.at(j)).max(half);
    }
    Ok(next)
}

/// One backward-Euler step solved by projected Gauss-Seidel, started from
/// `u_m`. Failure to meet the inner tolerances is an error: the scheme is
/// monotone, so a stall points at bad input rather than a modelling issue.
pub fn implicit_step(
    grid: &GridSpec,
    params: &SchemeParams,
    u_m: &GridFunction,
    lambda_plus: &CoefficientField,
    lambda_minus: &CoefficientField,
    next_boundary: &GridFunction,
    inner: &PgsConfig,
) -> Result<(GridFunction, EllipticSolveReport)> {
    check_len(grid, u_m)?;
    check_len(grid, next_boundary)?;
    let c = params.c();
    let diag = 1.0 + c * params.k as f64;
    let dt = params.dt;
    let old = u_m.as_slice();
    let mut u = u_m.clone();
    copy_boundary(grid, next_boundary, &mut u);

    let max_iterations = inner.max_iterations_for(grid);
    let mut iterations = 0;
    let mut update = f64::INFINITY;
    let mut residual = f64::INFINITY;
    while iterations < max_iterations {
        let us = u.as_mut_slice();
        update = 0.0;
        for (slot, &j) in grid.interior().iter().enumerate() {
            let s = neighbor_sum(grid, us, slot);
            let b = (old[j] + c * s) / diag;
            if !b.is_finite() {
                return Err(Error::NonFinite {
                    node: j,
                    context: "implicit step".into(),
                });
            }
            let next = (b - dt * lambda_plus.at(j) / diag).max((b + dt * lambda_minus.at(j) / diag).min(0.0));
            update = update.max((next - us[j]).abs());
            us[j] = next;
        }
        iterations += 1;
        if update <= inner.tol_update {
            residual = backward_euler_residual(grid, params, u_m, &u, lambda_plus, lambda_minus).sup_norm();
            if residual <= inner.tol_residual {
                return Ok((
                    u,
                    EllipticSolveReport {
                        iterations,
                        final_update_norm: update,
                        final_residual_norm: residual,
                        converged: true,
                    },
                ));
            }
        }
    }
    if residual.is_infinite() {
        residual = backward_euler_residual(grid, params, u_m, &u, lambda_plus, lambda_minus).sup_norm();
    }
    Err(Error::InnerNotConverged {
        iterations,
        update,
        residual,
    })
}

/// Marches the problem over its time grid, recording snapshots every
/// `snapshot_stride` levels (plus the first and last) and diagnostics for
/// every step.
pub fn solve_parabolic(problem: &ProblemSpec, config: &StepperConfig) -> Result<SolutionTrace> {
    let time = *problem
        .time()
        .ok_or_else(|| Error::InvalidProblem("parabolic solve needs a time grid".into()))?;
    let grid = problem.grid();
    let params = SchemeParams::new(grid.dx(), time.dt(), grid.k());
    if config.mode == StepMode::Explicit {
        let verdict = cfl_check(&params);
        if !verdict.passes {
            return Err(Error::CflViolation {
                ratio: verdict.ratio,
                bound: verdict.bound,
                k: params.k,
            });
        }
    }
    let steps = time.steps();
    let stride = config.snapshot_stride.unwrap_or((steps / 100).max(1)).max(1);
    let (lp, lm) = (problem.lambda_plus(), problem.lambda_minus());

    let mut u = problem.initial_level()?;
    let mut snapshots = vec![Snapshot {
        step: 0,
        t: 0.0,
        u: u.clone(),
        previous: None,
    }];
    let mut diagnostics = Vec::with_capacity(steps);
    for m in 0..steps {
        let t_next = time.time(m + 1);
        let boundary = problem.boundary_values(t_next)?;
        let (next, residual_sup, inner_iterations) = match config.mode {
            StepMode::Explicit => {
                let next = explicit_step(grid, &params, &u, lp, lm, &boundary)?;
                let r = parabolic_residual(grid, &params, &u, &next, lp, lm).sup_norm();
                (next, r, 0)
            }
            StepMode::Implicit => {
                let (next, report) = implicit_step(grid, &params, &u, lp, lm, &boundary, &config.inner)?;
                (next, report.final_residual_norm, report.iterations)
            }
        };
        diagnostics.push(StepDiagnostics {
            step: m + 1,
            t: t_next,
            rate_sup: next.max_abs_diff(&u) / params.dt,
            residual_sup,
            inner_iterations,
        });
        if (m + 1) % stride == 0 || m + 1 == steps {
            snapshots.push(Snapshot {
                step: m + 1,
                t: t_next,
                u: next.clone(),
                previous: Some(u),
            });
        }
        u = next;
    }
    Ok(SolutionTrace {
        mode: config.mode,
        params,
        snapshots,
        diagnostics,
    })
}
