//! Pointwise check of the residual band `−λ⁺ ≤ op ≤ λ⁻` at interior nodes,
//! where `op` is `L_h u` for elliptic solutions and the discrete
//! `u_t + L_h u` for parabolic snapshots.

use serde::{Deserialize, Serialize};

use crate::grid::{GridFunction, GridSpec};
use crate::operators::lh_apply;
use crate::parabolic::{Snapshot, StepMode};
use crate::problem::CoefficientField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub checked: usize,
    /// Interior nodes outside the band by more than the tolerance.
    pub failures: Vec<usize>,
    /// Largest excursion outside the band (zero when inside everywhere).
    pub max_violation: f64,
}

impl BandReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }
}

fn band(grid: &GridSpec, op: &[f64], lambda_plus: &CoefficientField, lambda_minus: &CoefficientField, tol: f64) -> BandReport {
    let mut failures = Vec::new();
    let mut max_violation = 0.0_f64;
    for &i in grid.interior() {
        let below = -(op[i] + lambda_plus.at(i));
        let above = op[i] - lambda_minus.at(i);
        let excess = below.max(above);
        // NaN must count as a failure
        if excess.is_nan() || excess > tol {
            failures.push(i);
        }
        max_violation = max_violation.max(excess).max(0.0);
        if excess.is_nan() {
            max_violation = f64::NAN;
        }
    }
    BandReport {
        checked: grid.interior_count(),
        failures,
        max_violation,
    }
}

/// Band check for an elliptic solution.
pub fn residual_band_check(
    grid: &GridSpec,
    u: &GridFunction,
    lambda_plus: &CoefficientField,
    lambda_minus: &CoefficientField,
    tol: f64,
) -> BandReport {
    band(grid, lh_apply(grid, u).as_slice(), lambda_plus, lambda_minus, tol)
}

/// Band check for a parabolic snapshot with `op = (u − u_prev)/Δt + L_h w`,
/// `w` being the previous level (explicit) or the snapshot itself
/// (implicit). The initial snapshot has no time derivative and passes
/// vacuously.
pub fn snapshot_band_check(
    grid: &GridSpec,
    snapshot: &Snapshot,
    dt: f64,
    mode: StepMode,
    lambda_plus: &CoefficientField,
    lambda_minus: &CoefficientField,
    tol: f64,
) -> BandReport {
    let Some(prev) = &snapshot.previous else {
        return BandReport {
            checked: 0,
            failures: Vec::new(),
            max_violation: 0.0,
        };
    };
    let stencil_level = match mode {
        StepMode::Explicit => prev,
        StepMode::Implicit => &snapshot.u,
    };
    let mut op = lh_apply(grid, stencil_level).into_values();
    for (o, (u, p)) in op.iter_mut().zip(snapshot.u.as_slice().iter().zip(prev.as_slice())) {
        *o += (u - p) / dt;
    }
    band(grid, &op, lambda_plus, lambda_minus, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_passes() {
        let g = GridSpec::square(0.0, 1.0, 5).unwrap();
        let lam = CoefficientField::constant(&g, 0.5);
        let r = residual_band_check(&g, &GridFunction::zeros(&g), &lam, &lam, 0.0);
        assert!(r.passes());
        assert_eq!(r.checked, 9);
    }

    #[test]
    fn spike_fails_at_the_spike() {
        let g = GridSpec::line(0.0, 1.0, 11).unwrap();
        let mut u = GridFunction::zeros(&g);
        u[5] = 1.0;
        let lam = CoefficientField::constant(&g, 1.0);
        let r = residual_band_check(&g, &u, &lam, &lam, 1e-8);
        // L_h u = 200 at the spike and −100 beside it
        assert_eq!(r.failures, vec![4, 5, 6]);
        assert!((r.max_violation - 199.0).abs() < 1e-9);
    }

    #[test]
    fn nan_fails() {
        let g = GridSpec::line(0.0, 1.0, 5).unwrap();
        let lam = CoefficientField::constant(&g, 1.0);
        let op = vec![0.0, f64::NAN, 0.0, 0.0, 0.0];
        let r = band(&g, &op, &lam, &lam, 1.0);
        assert_eq!(r.failures, vec![1]);
    }
}
