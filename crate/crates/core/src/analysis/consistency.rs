//! Observed consistency order of the discrete residuals on smooth probes.
//!
//! For a probe `φ` the membrane scheme is compared against
//! `F[φ] = min(−Δφ + λ⁺, max(−Δφ − λ⁻, φ))` and the parabolic residual
//! divided by `Δt` against `G[φ] = min(φ_t − Δφ + λ⁺, max(φ_t − Δφ − λ⁻, φ))`
//! at a fixed grid point, over a sequence of refinements of `[0, 1]^dim`.

use serde::{Deserialize, Serialize};

use super::probe::SmoothProbe;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, Point};
use crate::operators::{elliptic_residual, lh_apply, parabolic_residual, SchemeParams};
use crate::problem::CoefficientField;

/// Errors at or below this (relative to `1 + |F|`) count as exact.
pub const EXACTNESS_THRESHOLD: f64 = 1e-9;
/// Minimum ratio between the branch gap and the largest observed operator
/// error for a probe point to be accepted.
pub const BRANCH_GAP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OperatorKind {
    Elliptic,
    /// Parabolic residual with `Δt = c·Δx²` at every level.
    Parabolic { c: f64 },
}

/// Where and how to probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyProbe {
    pub probe: SmoothProbe,
    pub kind: OperatorKind,
    /// Evaluation time (the new level for parabolic probes).
    pub t: f64,
    pub point: Point,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    /// Refinement parameter per level: `Δx` (elliptic) or `Δt` (parabolic).
    pub spacings: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log spacing`; `None` when
    /// every error is at roundoff level.
    pub slope: Option<f64>,
    /// Root-mean-square residual of the log-log fit.
    pub fit_residual: f64,
    pub exact: bool,
    /// Value of the continuous operator at the probe point.
    pub continuous_value: f64,
}

/// Least-squares line through `(ln h, ln e)`. Returns `(slope, rms residual)`.
pub fn fit_order(spacings: &[f64], errors: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (slope, (ss / n).sqrt())
}

/// The three arguments `(A, B, C)` of `min(A, max(B, C))`.
fn branch_args(op: f64, phi: f64, lp: f64, lm: f64) -> (f64, f64, f64) {
    (op + lp, op - lm, phi)
}

fn min_max((a, b, c): (f64, f64, f64)) -> f64 {
    a.min(b.max(c))
}

/// Smallest gap between the active argument and a competitor that could
/// take over under a small perturbation of the operator value.
fn branch_gap((a, b, c): (f64, f64, f64)) -> f64 {
    let m = b.max(c);
    let outer = (a - m).abs();
    if m < a {
        outer.min((b - c).abs())
    } else {
        outer
    }
}

/// Estimates the observed order of the residual error over grids with
/// `intervals[l]` subintervals per axis on `[0, 1]^dim`. The probe point must
/// be an interior node of every level.
pub fn consistency_order(setup: &ConsistencyProbe, intervals: &[usize]) -> Result<OrderEstimate> {
    if intervals.len() < 3 {
        return Err(Error::Analysis(format!(
            "an order estimate needs at least 3 grid levels, got {}",
            intervals.len()
        )));
    }
    let probe = setup.probe;
    let (lp, lm) = (setup.lambda_plus, setup.lambda_minus);
    let (t, p) = (setup.t, setup.point);
    let op = match setup.kind {
        OperatorKind::Elliptic => -probe.laplacian(t, p),
        OperatorKind::Parabolic { .. } => probe.time_derivative(t, p) - probe.laplacian(t, p),
    };
    let args = branch_args(op, probe.value(t, p), lp, lm);
    let exact_value = min_max(args);

    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    let mut op_error = 0.0_f64;
    for &n in intervals {
        let grid = if probe.dim() == 1 {
            GridSpec::line(0.0, 1.0, n + 1)?
        } else {
            GridSpec::square(0.0, 1.0, n + 1)?
        };
        let node = locate(&grid, p, n)?;
        let lam_p = CoefficientField::constant(&grid, lp);
        let lam_m = CoefficientField::constant(&grid, lm);
        let (discrete, discrete_op, spacing) = match setup.kind {
            OperatorKind::Elliptic => {
                let u = GridFunction::from_fn(&grid, |q| probe.value(t, q))?;
                let r = elliptic_residual(&grid, &u, &lam_p, &lam_m).at(node);
                (r, lh_apply(&grid, &u)[node], grid.dx())
            }
            OperatorKind::Parabolic { c } => {
                let dt = c * grid.dx() * grid.dx();
                let params = SchemeParams::new(grid.dx(), dt, grid.k());
                let old = GridFunction::from_fn(&grid, |q| probe.value(t - dt, q))?;
                let new = GridFunction::from_fn(&grid, |q| probe.value(t, q))?;
                let r = parabolic_residual(&grid, &params, &old, &new, &lam_p, &lam_m).at(node) / dt;
                let rate = (new[node] - old[node]) / dt;
                (r, rate + lh_apply(&grid, &old)[node], dt)
            }
        };
        op_error = op_error.max((discrete_op - op).abs());
        spacings.push(spacing);
        errors.push((discrete - exact_value).abs());
    }

    let floor = EXACTNESS_THRESHOLD * (1.0 + exact_value.abs());
    let exact = errors.iter().all(|&e| e <= floor) && op_error <= floor;
    if !exact {
        let gap = branch_gap(args);
        if gap < BRANCH_GAP_FACTOR * op_error {
            return Err(Error::Analysis(format!(
                "probe {probe} at {p:?} sits too close to a branch tie: gap {gap:e} vs operator error {op_error:e}"
            )));
        }
    }
    let (slope, fit_residual) = if exact {
        (None, 0.0)
    } else {
        let (s, r) = fit_order(&spacings, &errors);
        (Some(s), r)
    };
    Ok(OrderEstimate {
        spacings,
        errors,
        slope,
        fit_residual,
        exact,
        continuous_value: exact_value,
    })
}

fn locate(grid: &GridSpec, p: Point, n: usize) -> Result<usize> {
    let index = |v: f64| {
        let s = v * n as f64;
        let r = s.round();
        ((s - r).abs() < 1e-9).then_some(r as usize)
    };
    let ix = index(p.x);
    let iy = if grid.dim() == 2 { index(p.y) } else { Some(0) };
    let node = match (ix, iy) {
        (Some(ix), Some(iy)) => grid.node_at([ix, iy]),
        _ => None,
    };
    match node {
        Some(node) if !grid.is_boundary(node) => Ok(node),
        _ => Err(Error::Analysis(format!(
            "probe point {p:?} is not an interior node of the grid with {n} subintervals"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fit_recovers_power_laws() {
        let h = [0.1, 0.05, 0.025, 0.0125];
        let e: Vec<f64> = h.iter().map(|h| 3.0 * h * h).collect();
        let (slope, res) = fit_order(&h, &e);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!(res < 1e-12);
    }

    #[test]
    fn quadratic_elliptic_probe_is_exact() {
        let est = consistency_order(
            &ConsistencyProbe {
                probe: SmoothProbe::Quadratic,
                kind: OperatorKind::Elliptic,
                t: 0.0,
                point: Point::on_line(0.5),
                lambda_plus: 1.0,
                lambda_minus: 1.0,
            },
            &[4, 8, 16, 32],
        )
        .unwrap();
        assert!(est.exact);
        assert!(est.slope.is_none());
        // −Δφ = −2: min(−1, max(−3, 0.25)) = −1
        assert_eq!(est.continuous_value, -1.0);
    }

    #[test]
    fn sin_elliptic_probe_is_second_order() {
        let est = consistency_order(
            &ConsistencyProbe {
                probe: SmoothProbe::SinPi,
                kind: OperatorKind::Elliptic,
                t: 0.0,
                point: Point::on_line(0.5),
                lambda_plus: 1.0,
                lambda_minus: 1.0,
            },
            &[8, 16, 32, 64],
        )
        .unwrap();
        assert!((est.continuous_value - (PI * PI - 1.0)).abs() < 1e-12);
        let slope = est.slope.unwrap();
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn linear_parabolic_probe_is_exact() {
        // φ = t + x at (t, x) = (1.5, 0.5): G = min(2, max(0, 2)) = 2
        let est = consistency_order(
            &ConsistencyProbe {
                probe: SmoothProbe::LinearTime,
                kind: OperatorKind::Parabolic { c: 0.4 },
                t: 1.5,
                point: Point::on_line(0.5),
                lambda_plus: 1.0,
                lambda_minus: 1.0,
            },
            &[4, 8, 16],
        )
        .unwrap();
        assert_eq!(est.continuous_value, 2.0);
        assert!(est.exact);
        assert!(est.errors.iter().all(|&e| e < 1e-9));
    }

    #[test]
    fn too_few_levels_rejected() {
        let setup = ConsistencyProbe {
            probe: SmoothProbe::SinPi,
            kind: OperatorKind::Elliptic,
            t: 0.0,
            point: Point::on_line(0.5),
            lambda_plus: 1.0,
            lambda_minus: 1.0,
        };
        assert!(consistency_order(&setup, &[8, 16]).is_err());
    }

    #[test]
    fn branch_tie_rejected() {
        // −Δφ = π² at x = 0.5; with λ⁻ = π² − 1 the max branch ties with φ = 1
        let setup = ConsistencyProbe {
            probe: SmoothProbe::SinPi,
            kind: OperatorKind::Elliptic,
            t: 0.0,
            point: Point::on_line(0.5),
            lambda_plus: 1.0,
            lambda_minus: PI * PI - 1.0,
        };
        let err = consistency_order(&setup, &[8, 16, 32]).unwrap_err();
        assert!(err.to_string().contains("branch tie"), "{err}");
    }

    #[test]
    fn off_grid_point_rejected() {
        let setup = ConsistencyProbe {
            probe: SmoothProbe::SinPi,
            kind: OperatorKind::Elliptic,
            t: 0.0,
            point: Point::on_line(0.3),
            lambda_plus: 1.0,
            lambda_minus: 1.0,
        };
        assert!(consistency_order(&setup, &[8, 16, 32]).is_err());
    }
}
