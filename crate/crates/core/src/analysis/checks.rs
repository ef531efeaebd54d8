//! Randomized trial drivers shared by the test suites and the `verify`
//! command. Each driver is deterministic in its seed and returns a
//! [`CheckReport`] listing the seeds of failing trials.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::band::{residual_band_check, snapshot_band_check};
use super::fuzz::{trial_seed, VALUE_RANGE};
use super::oracle::{brute_force_elliptic, ORACLE_MAX_INTERIOR};
use super::signs::{classify_signs, default_sign_tolerance, SignClass};
use crate::elliptic::{solve_elliptic, PgsConfig};
use crate::error::Result;
use crate::grid::{GridFunction, GridSpec, Point, TimeGrid};
use crate::operators::{parabolic_residual, SchemeParams};
use crate::parabolic::{explicit_step, solve_parabolic, StepMode, StepperConfig};
use crate::problem::{BuiltinCase, Coefficient, CoefficientField, ProblemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub trials: usize,
    /// Seeds of the failing trials, replayable through the driver's
    /// single-trial function.
    pub failing_seeds: Vec<u64>,
    /// Largest error observed, in the check's own units.
    pub max_error: f64,
}

impl CheckReport {
    fn new(name: impl Into<String>, trials: usize) -> Self {
        Self {
            name: name.into(),
            trials,
            failing_seeds: Vec::new(),
            max_error: 0.0,
        }
    }

    fn record(&mut self, seed: u64, error: f64, ok: bool) {
        if error.is_nan() {
            self.max_error = f64::NAN;
        } else if !self.max_error.is_nan() {
            self.max_error = self.max_error.max(error);
        }
        if !ok {
            self.failing_seeds.push(seed);
        }
    }

    pub fn passes(&self) -> bool {
        self.failing_seeds.is_empty()
    }
}

/// Maps a grid point back to its node index.
fn node_lookup(grid: &GridSpec) -> impl Fn(Point) -> usize + Send + Sync + 'static {
    let grid = grid.clone();
    move |p: Point| {
        let (a, dx) = (grid.bounds()[0].0, grid.dx());
        let ix = ((p.x - a) / dx).round() as usize;
        let iy = if grid.dim() == 2 {
            ((p.y - grid.bounds()[1].0) / dx).round() as usize
        } else {
            0
        };
        grid.node_at([ix, iy]).expect("point lies on the grid")
    }
}

fn random_grid(rng: &mut ChaCha8Rng, max_nodes_1d: usize, max_nodes_2d: usize) -> GridSpec {
    let dx = rng.gen_range(0.02..=0.5);
    let grid = if rng.gen_bool(0.5) {
        let n = rng.gen_range(3..=max_nodes_1d);
        GridSpec::line(0.0, dx * (n - 1) as f64, n)
    } else {
        let n = rng.gen_range(3..=max_nodes_2d);
        GridSpec::square(0.0, dx * (n - 1) as f64, n)
    };
    grid.expect("random grid parameters are valid")
}

fn random_values(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-VALUE_RANGE..=VALUE_RANGE)).collect()
}

/// Per-node coefficient, constant or spatially varying with equal odds.
fn random_coefficient(rng: &mut ChaCha8Rng, grid: &GridSpec) -> CoefficientField {
    if rng.gen_bool(0.5) {
        CoefficientField::constant(grid, rng.gen_range(0.05..=5.0))
    } else {
        CoefficientField::from_values((0..grid.len()).map(|_| rng.gen_range(0.05..=5.0)).collect())
    }
}

fn field_coefficient(grid: &GridSpec, field: &CoefficientField) -> Coefficient {
    let values = field.values().to_vec();
    let lookup = node_lookup(grid);
    Coefficient::field(move |p| values[lookup(p)])
}

/// Residual of one explicit step on a random CFL-compliant problem,
/// relative to `1 + ‖u‖∞`.
pub fn explicit_exactness_trial(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = random_grid(&mut rng, 12, 7);
    let c = rng.gen_range(0.0..=1.0) / grid.k() as f64;
    let params = SchemeParams::new(grid.dx(), c * grid.dx() * grid.dx(), grid.k());
    let lp = random_coefficient(&mut rng, &grid);
    let lm = random_coefficient(&mut rng, &grid);
    let u = GridFunction::new(&grid, random_values(&mut rng, grid.len()))?;
    let boundary = GridFunction::new(&grid, random_values(&mut rng, grid.len()))?;
    let next = explicit_step(&grid, &params, &u, &lp, &lm, &boundary)?;
    let r = parabolic_residual(&grid, &params, &u, &next, &lp, &lm).sup_norm();
    Ok(r / (1.0 + u.sup_norm()))
}

/// Explicit steps leave a residual of at most `1e-12·(1 + ‖u‖∞)`.
pub fn explicit_exactness_trials(trials: usize, seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("explicit_step_exactness", trials);
    for i in 0..trials {
        let s = trial_seed(seed, i);
        let e = explicit_exactness_trial(s)?;
        report.record(s, e, e <= 1e-12);
    }
    Ok(report)
}

/// A random problem with at most [`ORACLE_MAX_INTERIOR`] unknowns.
pub fn tiny_elliptic_problem(seed: u64) -> Result<ProblemSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = random_grid(&mut rng, ORACLE_MAX_INTERIOR + 2, 4);
    let lp = random_coefficient(&mut rng, &grid);
    let lm = random_coefficient(&mut rng, &grid);
    let boundary = random_values(&mut rng, grid.len());
    let lookup = node_lookup(&grid);
    ProblemSpec::builder(grid.clone())
        .lambda_plus(field_coefficient(&grid, &lp))
        .lambda_minus(field_coefficient(&grid, &lm))
        .steady_boundary(move |p| boundary[lookup(p)])
        .build()
}

/// Inner tolerances tight enough for a `1e-10` comparison with the oracle.
pub fn oracle_pgs_config() -> PgsConfig {
    PgsConfig {
        tol_update: 1e-14,
        tol_residual: 1e-9,
        max_iterations: Some(1_000_000),
    }
}

/// Sup distance between the solver and the oracle, and the oracle's count
/// of consistent branch assignments.
pub fn oracle_trial(seed: u64) -> Result<(f64, usize)> {
    let problem = tiny_elliptic_problem(seed)?;
    let oracle = brute_force_elliptic(&problem)?;
    let (u, _) = solve_elliptic(&problem, &oracle_pgs_config())?;
    Ok((u.max_abs_diff(&oracle.solution), oracle.consistent_assignments))
}

/// The solver matches the oracle to `1e-10` and the oracle sees exactly one
/// consistent branch assignment.
pub fn oracle_trials(trials: usize, seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("oracle_equivalence", trials);
    for i in 0..trials {
        let s = trial_seed(seed, i);
        let (diff, assignments) = oracle_trial(s)?;
        report.record(s, diff, diff <= 1e-10 && assignments == 1);
    }
    Ok(report)
}

/// Two problems on one grid with ordered data (`g₁ ≥ g₂`, `h₁ ≥ h₂`), the
/// boundary data varying linearly in time.
pub fn ordered_pair(seed: u64, mode: StepMode) -> Result<(ProblemSpec, ProblemSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = random_grid(&mut rng, 21, 8);
    let steps = rng.gen_range(5..=30);
    let c = match mode {
        StepMode::Explicit => rng.gen_range(0.05..=1.0) / grid.k() as f64,
        StepMode::Implicit => rng.gen_range(0.05..=4.0),
    };
    let time = TimeGrid::new(steps as f64 * c * grid.dx() * grid.dx(), steps)?;
    let lp = random_coefficient(&mut rng, &grid);
    let lm = random_coefficient(&mut rng, &grid);
    let n = grid.len();
    let h_base = random_values(&mut rng, n);
    let h_rate = random_values(&mut rng, n);
    let mut g_low = random_values(&mut rng, n);
    for node in grid.boundary_nodes() {
        g_low[node] = h_base[node];
    }
    let noise = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n)
            .map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.0..=5.0) } else { 0.0 })
            .collect()
    };
    let h_gap = noise(&mut rng);
    let mut g_gap = noise(&mut rng);
    for node in grid.boundary_nodes() {
        g_gap[node] = h_gap[node];
    }
    let build = |g_shift: Vec<f64>, h_shift: Vec<f64>| -> Result<ProblemSpec> {
        let g: Vec<f64> = g_low.iter().zip(&g_shift).map(|(a, b)| a + b).collect();
        let (hb, hr) = (h_base.clone(), h_rate.clone());
        let lookup_g = node_lookup(&grid);
        let lookup_h = node_lookup(&grid);
        ProblemSpec::builder(grid.clone())
            .time(time)
            .lambda_plus(field_coefficient(&grid, &lp))
            .lambda_minus(field_coefficient(&grid, &lm))
            .initial_arc(Arc::new(move |p| g[lookup_g(p)]))
            .boundary(move |t, p| {
                let i = lookup_h(p);
                hb[i] + h_shift[i] + t * hr[i]
            })
            .build()
    };
    let upper = build(g_gap, h_gap)?;
    let lower = build(vec![0.0; n], vec![0.0; n])?;
    Ok((upper, lower))
}

/// Largest violation of `u₁ ≥ u₂` over all time levels of one ordered pair.
pub fn comparison_trial(seed: u64, mode: StepMode) -> Result<f64> {
    let (upper, lower) = ordered_pair(seed, mode)?;
    let config = StepperConfig {
        mode,
        snapshot_stride: Some(1),
        ..StepperConfig::default()
    };
    let a = solve_parabolic(&upper, &config)?;
    let b = solve_parabolic(&lower, &config)?;
    let mut worst = f64::NEG_INFINITY;
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        for (x, y) in sa.u.as_slice().iter().zip(sb.u.as_slice()) {
            worst = worst.max(y - x);
        }
    }
    Ok(worst.max(0.0))
}

/// Ordered data stays ordered at every time level, to `1e-8`.
pub fn comparison_trials(trials: usize, seed: u64, mode: StepMode) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("comparison_{mode}"), trials);
    for i in 0..trials {
        let s = trial_seed(seed, i);
        let v = comparison_trial(s, mode)?;
        report.record(s, v, v <= 1e-8);
    }
    Ok(report)
}

/// Band check of a converged elliptic solution of a built-in case, at
/// `10·tol_residual`.
pub fn builtin_elliptic_band(case: &BuiltinCase, nodes: usize, config: &PgsConfig) -> Result<CheckReport> {
    let problem = case.elliptic(nodes)?;
    let (u, solve) = solve_elliptic(&problem, config)?;
    let band = residual_band_check(
        problem.grid(),
        &u,
        problem.lambda_plus(),
        problem.lambda_minus(),
        10.0 * config.tol_residual,
    );
    let mut report = CheckReport::new(format!("band_elliptic_{}", case.name), 1);
    report.record(0, band.max_violation, solve.converged && band.passes());
    Ok(report)
}

/// Qualitative features of a built-in parabolic run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureReport {
    pub case: String,
    pub mode: StepMode,
    pub levels: usize,
    /// Time levels without a negative node next to the left end and a
    /// positive node next to the right end.
    pub sign_failures: Vec<usize>,
    /// Steps in the final 20% where the rate diagnostic fails to drop.
    pub rate_failures: Vec<usize>,
    /// Snapshots failing the residual band check.
    pub band_failures: Vec<usize>,
    pub max_band_violation: f64,
    pub final_rate: f64,
}

impl FigureReport {
    pub fn passes(&self) -> bool {
        self.sign_failures.is_empty() && self.rate_failures.is_empty() && self.band_failures.is_empty()
    }
}

/// Runs a built-in case at every level and checks the sign layout, the
/// decay of `‖(u^{m+1} − u^m)/Δt‖∞` over the final 20% of steps and the
/// residual band of each snapshot (tolerance `10·tol_residual/Δt`).
pub fn figure_check(
    case: &BuiltinCase,
    nodes: usize,
    steps: usize,
    horizon: f64,
    config: &StepperConfig,
) -> Result<FigureReport> {
    let problem = case.parabolic(nodes, steps, horizon)?;
    let config = StepperConfig {
        snapshot_stride: Some(1),
        ..*config
    };
    let trace = solve_parabolic(&problem, &config)?;
    let grid = problem.grid();
    let dt = trace.params.dt;
    let last = grid.len() - 1;

    let mut sign_failures = Vec::new();
    let mut band_failures = Vec::new();
    let mut max_band_violation = 0.0_f64;
    let tol = 10.0 * config.inner.tol_residual / dt;
    for snap in &trace.snapshots {
        let signs = classify_signs(grid, &snap.u, default_sign_tolerance(&snap.u));
        if signs.classes[1] != SignClass::Negative || signs.classes[last - 1] != SignClass::Positive {
            sign_failures.push(snap.step);
        }
        let band = snapshot_band_check(
            grid,
            snap,
            dt,
            config.mode,
            problem.lambda_plus(),
            problem.lambda_minus(),
            tol,
        );
        max_band_violation = max_band_violation.max(band.max_violation);
        if !band.passes() {
            band_failures.push(snap.step);
        }
    }

    let rates: Vec<f64> = trace.diagnostics.iter().map(|d| d.rate_sup).collect();
    let tail_start = rates.len() - rates.len() / 5;
    let rate_failures = (tail_start.max(1)..rates.len())
        .filter(|&m| rates[m].partial_cmp(&rates[m - 1]) != Some(std::cmp::Ordering::Less))
        .map(|m| trace.diagnostics[m].step)
        .collect();

    Ok(FigureReport {
        case: case.name.to_string(),
        mode: config.mode,
        levels: trace.snapshots.len(),
        sign_failures,
        rate_failures,
        band_failures,
        max_band_violation,
        final_rate: rates.last().copied().unwrap_or(0.0),
    })
}
