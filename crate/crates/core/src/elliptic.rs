//! Projected Gauss-Seidel for the discrete two-phase membrane problem
//! `F^i[u] = 0`.
//!
//! With the neighbors of node `i` frozen at sum `S_i`, `F^i` is strictly
//! increasing in `u_i` and has the unique root
//!
//! ```text
//! u_i = max((S_i − h²λ⁺_i) / K, min((S_i + h²λ⁻_i) / K, 0))
//! ```
//!
//! A sweep applies this update to every interior node in grid order using
//! the freshest neighbor values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::operators::{elliptic_residual, neighbor_sum};
use crate::problem::{CoefficientField, ProblemSpec};
use crate::GridSpec;

/// Sweep budget per grid node when no explicit cap is configured.
pub const DEFAULT_SWEEPS_PER_NODE: usize = 1000;

/// Stopping rule shared by the elliptic solver and the implicit time step.
/// Iteration stops once the sup-norm change of a sweep is at most
/// `tol_update` and the sup-norm residual is at most `tol_residual`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgsConfig {
    pub tol_update: f64,
    pub tol_residual: f64,
    /// Sweep cap; `None` means `DEFAULT_SWEEPS_PER_NODE` times the node count.
    pub max_iterations: Option<usize>,
}

impl Default for PgsConfig {
    fn default() -> Self {
        Self {
            tol_update: 1e-10,
            tol_residual: 1e-8,
            max_iterations: None,
        }
    }
}

impl PgsConfig {
    pub fn max_iterations_for(&self, grid: &GridSpec) -> usize {
        self.max_iterations
            .unwrap_or(DEFAULT_SWEEPS_PER_NODE * grid.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticSolveReport {
    pub iterations: usize,
    /// Sup-norm change of the last sweep.
    pub final_update_norm: f64,
    /// Sup norm of the residual at the returned iterate.
    pub final_residual_norm: f64,
    pub converged: bool,
}

/// Exact pointwise solve of `F^i = 0` with the neighbor sum held fixed.
#[inline]
pub fn pgs_update(neighbor_sum: f64, lambda_plus: f64, lambda_minus: f64, dx: f64, k: usize) -> f64 {
    let h2 = dx * dx;
    let k = k as f64;
    ((neighbor_sum - h2 * lambda_plus) / k).max(((neighbor_sum + h2 * lambda_minus) / k).min(0.0))
}

/// One lexicographic sweep over the interior. Returns the sup-norm change.
pub fn pgs_sweep(
    grid: &GridSpec,
    u: &mut GridFunction,
    lambda_plus: &CoefficientField,
    lambda_minus: &CoefficientField,
) -> Result<f64> {
    let (dx, k) = (grid.dx(), grid.k());
    let us = u.as_mut_slice();
    let mut change = 0.0_f64;
    for (slot, &i) in grid.interior().iter().enumerate() {
        let s = neighbor_sum(grid, us, slot);
        // min/max swallow NaN, so check the linear part before projecting
        if !s.is_finite() {
            return Err(Error::NonFinite {
                node: i,
                context: "projected Gauss-Seidel sweep".into(),
            });
        }
        let next = pgs_update(s, lambda_plus.at(i), lambda_minus.at(i), dx, k);
        change = change.max((next - us[i]).abs());
        us[i] = next;
    }
    Ok(change)
}

/// Deterministic starting iterate: boundary data imposed, interior linearly
/// interpolated between the two endpoints in 1D and zero in 2D.
pub fn initial_guess(problem: &ProblemSpec) -> Result<GridFunction> {
    let grid = problem.grid();
    let mut u = problem.boundary_values(0.0)?;
    if grid.dim() == 1 {
        let last = grid.len() - 1;
        let (left, right) = (u[0], u[last]);
        for &i in grid.interior() {
            let theta = i as f64 / last as f64;
            u[i] = left + theta * (right - left);
        }
    }
    Ok(u)
}

/// Solves the membrane problem from [`initial_guess`].
pub fn solve_elliptic(problem: &ProblemSpec, config: &PgsConfig) -> Result<(GridFunction, EllipticSolveReport)> {
    solve_elliptic_from(problem, initial_guess(problem)?, config)
}

/// Solves the membrane problem from a caller-supplied start. Boundary
/// entries of `start` are overwritten with the Dirichlet data.
///
/// Running out of sweeps is not an error: the report has `converged = false`.
pub fn solve_elliptic_from(
    problem: &ProblemSpec,
    mut start: GridFunction,
    config: &PgsConfig,
) -> Result<(GridFunction, EllipticSolveReport)> {
    let grid = problem.grid();
    if start.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            found: start.len(),
        });
    }
    problem.apply_boundary(0.0, &mut start)?;
    let (lp, lm) = (problem.lambda_plus(), problem.lambda_minus());
    let max_iterations = config.max_iterations_for(grid);

    let mut u = start;
    let mut update = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iterations {
        update = pgs_sweep(grid, &mut u, lp, lm)?;
        iterations += 1;
        if update <= config.tol_update {
            residual = elliptic_residual(grid, &u, lp, lm).sup_norm();
            if residual <= config.tol_residual {
                break;
            }
        }
    }
    if residual.is_infinite() || iterations == max_iterations {
        residual = elliptic_residual(grid, &u, lp, lm).sup_norm();
    }
    let converged = update <= config.tol_update && residual <= config.tol_residual;
    log::debug!("elliptic PGS: {iterations} sweeps, update {update:e}, residual {residual:e}");
    Ok((
        u,
        EllipticSolveReport {
            iterations,
            final_update_norm: update,
            final_residual_norm: residual,
            converged,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::membrane_residual_at;

    #[test]
    fn pointwise_update_hand_values() {
        assert_eq!(pgs_update(0.0, 1.0, 2.0, 0.3, 2), 0.0);
        assert_eq!(pgs_update(10.0, 2.0, 2.0, 1.0, 2), 4.0);
        assert_eq!(pgs_update(-10.0, 2.0, 2.0, 1.0, 2), -4.0);
        // reduction: plain Gauss-Seidel for the Laplace equation
        assert_eq!(pgs_update(3.0, 0.0, 0.0, 0.1, 4), 0.75);
        assert_eq!(pgs_update(-3.0, 0.0, 0.0, 0.1, 2), -1.5);
    }

    #[test]
    fn pointwise_update_zeroes_the_residual() {
        for &(s, lp, lm, dx, k) in &[
            (10.0, 2.0, 2.0, 1.0, 2usize),
            (-10.0, 2.0, 2.0, 1.0, 2),
            (0.01, 3.0, 1.0, 0.1, 4),
            (-0.003, 0.6, 0.6, 0.05, 2),
        ] {
            let u = pgs_update(s, lp, lm, dx, k);
            let lh = (k as f64 * u - s) / (dx * dx);
            assert!(membrane_residual_at(lh, u, lp, lm).abs() < 1e-12, "s = {s}");
        }
    }

    fn line_problem(nodes: usize, left: f64, right: f64, lp: f64, lm: f64) -> ProblemSpec {
        ProblemSpec::builder(GridSpec::line(0.0, 1.0, nodes).unwrap())
            .lambda_plus(lp)
            .lambda_minus(lm)
            .steady_boundary(move |p| if p.x < 0.5 { left } else { right })
            .build()
            .unwrap()
    }

    #[test]
    fn zero_boundary_converges_in_one_sweep() {
        let p = ProblemSpec::builder(GridSpec::square(0.0, 1.0, 7).unwrap())
            .lambda_plus(2.0)
            .lambda_minus(0.5)
            .steady_boundary(|_| 0.0)
            .build()
            .unwrap();
        let (u, report) = solve_elliptic(&p, &PgsConfig::default()).unwrap();
        assert_eq!(u.sup_norm(), 0.0);
        assert_eq!(report.iterations, 1);
        assert!(report.converged);
    }

    #[test]
    fn single_interior_unknown() {
        let p = line_problem(3, -1.0, 1.0, 1.0, 1.0);
        let (u, report) = solve_elliptic(&p, &PgsConfig::default()).unwrap();
        assert_eq!(u.as_slice(), &[-1.0, 0.0, 1.0]);
        assert!(report.converged);
    }

    #[test]
    fn sweep_cap_reports_non_convergence() {
        let p = line_problem(41, -8.0, 8.0, 3.0, 1.0);
        let cfg = PgsConfig {
            max_iterations: Some(1),
            ..PgsConfig::default()
        };
        let (_, report) = solve_elliptic(&p, &cfg).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 1);
        assert!(report.final_residual_norm.is_finite());
    }

    #[test]
    fn converged_solution_has_small_residual() {
        let p = line_problem(51, -8.0, 8.0, 3.0, 1.0);
        let cfg = PgsConfig::default();
        let (u, report) = solve_elliptic(&p, &cfg).unwrap();
        assert!(report.converged, "{report:?}");
        let r = elliptic_residual(p.grid(), &u, p.lambda_plus(), p.lambda_minus());
        assert!(r.sup_norm() <= cfg.tol_residual);
        assert!(u[1] < 0.0 && u[49] > 0.0);
    }

    #[test]
    fn non_finite_start_is_a_hard_error() {
        let p = line_problem(5, -1.0, 1.0, 1.0, 1.0);
        let mut start = GridFunction::zeros(p.grid());
        start.as_mut_slice()[2] = f64::NAN;
        // node 1 reads the NaN neighbor in the first sweep
        assert!(matches!(
            solve_elliptic_from(&p, start, &PgsConfig::default()),
            Err(Error::NonFinite { .. })
        ));
    }
}
