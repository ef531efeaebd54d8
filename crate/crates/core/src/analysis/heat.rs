//! Convergence studies on the heat-equation reduction `λ± = 0`,
//! `g = sin(πx)`, zero boundary on `[0, 1]`.
//!
//! Space refinement compares against `e^{−π²T} sin(πx)`. Time refinement at
//! fixed `Δx` compares against the exact semi-discrete solution
//! `e^{−μT} sin(πx)` with `μ = 4 sin²(πΔx/2)/Δx²`, so the spatial error does
//! not pollute the time order.

use std::f64::consts::PI;

use super::consistency::{fit_order, OrderEstimate};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, TimeGrid};
use crate::parabolic::{solve_parabolic, StepMode, StepperConfig};
use crate::problem::ProblemSpec;

fn heat_problem(intervals: usize, steps: usize, horizon: f64) -> Result<ProblemSpec> {
    ProblemSpec::builder(GridSpec::line(0.0, 1.0, intervals + 1)?)
        .time(TimeGrid::new(horizon, steps)?)
        .lambda_plus(0.0)
        .lambda_minus(0.0)
        .initial(|p| (PI * p.x).sin())
        .steady_boundary(|_| 0.0)
        .allow_degenerate(true)
        .build()
}

fn estimate(spacings: Vec<f64>, errors: Vec<f64>) -> Result<OrderEstimate> {
    if spacings.len() < 3 {
        return Err(Error::Analysis(format!(
            "an order estimate needs at least 3 grid levels, got {}",
            spacings.len()
        )));
    }
    let (slope, fit_residual) = fit_order(&spacings, &errors);
    Ok(OrderEstimate {
        spacings,
        errors,
        slope: Some(slope),
        fit_residual,
        exact: false,
        continuous_value: 0.0,
    })
}

fn final_error(problem: &ProblemSpec, config: &StepperConfig, rate: f64) -> Result<f64> {
    let trace = solve_parabolic(problem, config)?;
    let horizon = problem.time().map_or(0.0, |t| t.horizon());
    let exact = GridFunction::from_fn(problem.grid(), |p| (-rate * horizon).exp() * (PI * p.x).sin())?;
    Ok(trace.final_snapshot().u.max_abs_diff(&exact))
}

/// Refines `Δx` over `levels` (subinterval counts) with `Δt = c·Δx²`
/// (rounded to a whole number of steps). Spacings are `Δx`.
pub fn heat_space_study(levels: &[usize], c: f64, horizon: f64, config: &StepperConfig) -> Result<OrderEstimate> {
    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    for &n in levels {
        let dx = 1.0 / n as f64;
        let steps = ((horizon / (c * dx * dx)).round() as usize).max(1);
        let problem = heat_problem(n, steps, horizon)?;
        spacings.push(dx);
        errors.push(final_error(&problem, config, PI * PI)?);
    }
    estimate(spacings, errors)
}

/// Refines `Δt` over `steps` at a fixed number of subintervals. Spacings are
/// `Δt`.
pub fn heat_time_study(intervals: usize, steps: &[usize], horizon: f64, config: &StepperConfig) -> Result<OrderEstimate> {
    let dx = 1.0 / intervals as f64;
    let mu = 4.0 * (PI * dx / 2.0).sin().powi(2) / (dx * dx);
    let mut spacings = Vec::new();
    let mut errors = Vec::new();
    for &m in steps {
        let problem = heat_problem(intervals, m, horizon)?;
        spacings.push(horizon / m as f64);
        errors.push(final_error(&problem, config, mu)?);
    }
    estimate(spacings, errors)
}

/// Default stepper for a study in `mode`.
pub fn study_stepper(mode: StepMode) -> StepperConfig {
    StepperConfig {
        mode,
        snapshot_stride: Some(usize::MAX),
        ..StepperConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_space_order_is_two() {
        let est = heat_space_study(&[10, 20, 40], 0.4, 0.1, &study_stepper(StepMode::Explicit)).unwrap();
        let slope = est.slope.unwrap();
        assert!((slope - 2.0).abs() < 0.2, "{est:?}");
    }

    #[test]
    fn implicit_time_order_is_one() {
        let est = heat_time_study(50, &[10, 20, 40], 0.1, &study_stepper(StepMode::Implicit)).unwrap();
        let slope = est.slope.unwrap();
        assert!((slope - 1.0).abs() < 0.15, "{est:?}");
    }

    #[test]
    fn too_few_levels() {
        assert!(heat_space_study(&[10, 20], 0.4, 0.1, &study_stepper(StepMode::Explicit)).is_err());
    }
}
