//! JSON run configuration and its resolution into solver inputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use twophase_core::analysis::SmoothProbe;
use twophase_core::elliptic::PgsConfig;
use twophase_core::parabolic::{StepMode, StepperConfig};
use twophase_core::{builtin_case, Coefficient, GridSpec, Point, ProblemSpec, TimeGrid};

use crate::error::{CliError, CliResult};
use crate::expr::{Expr, Var};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemBlock>,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyBlock>,
}

/// A number or an expression string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Datum {
    Number(f64),
    Expr(String),
}

impl Datum {
    fn source(&self) -> String {
        match self {
            Datum::Number(v) => format!("{v}"),
            Datum::Expr(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Steps {
    Count(usize),
    /// Only `"auto"` is accepted.
    Keyword(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    /// Start from a reference case; other keys override its data.
    pub builtin: Option<String>,
    /// One `[a, b]` pair per axis.
    pub bounds: Option<Vec<[f64; 2]>>,
    /// Nodes per axis.
    pub nodes: Option<usize>,
    pub horizon: Option<f64>,
    pub steps: Option<Steps>,
    pub lambda_plus: Option<Datum>,
    pub lambda_minus: Option<Datum>,
    /// `g` in `x` (and `y`).
    pub initial: Option<Datum>,
    /// `h` in `t`, `x` (and `y`).
    pub boundary: Option<Datum>,
    /// Allow zero coefficients (heat-equation and Laplace reductions).
    #[serde(default)]
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub mode: StepMode,
    pub tol_update: f64,
    pub tol_residual: f64,
    pub max_iterations: Option<usize>,
    pub cfl_safety: f64,
    pub snapshot_stride: Option<usize>,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let s = StepperConfig::default();
        Self {
            mode: s.mode,
            tol_update: s.inner.tol_update,
            tol_residual: s.inner.tol_residual,
            max_iterations: s.inner.max_iterations,
            cfl_safety: s.cfl_safety,
            snapshot_stride: s.snapshot_stride,
        }
    }
}

impl SolverBlock {
    pub fn pgs(&self) -> PgsConfig {
        PgsConfig {
            tol_update: self.tol_update,
            tol_residual: self.tol_residual,
            max_iterations: self.max_iterations,
        }
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            mode: self.mode,
            cfl_safety: self.cfl_safety,
            snapshot_stride: self.snapshot_stride,
            inner: self.pgs(),
        }
    }

    fn validate(&self) -> CliResult<()> {
        for (name, v) in [("solver.tol_update", self.tol_update), ("solver.tol_residual", self.tol_residual)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(CliError::Config(format!(
                "solver.cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(CliError::Config("solver.max_iterations must be at least 1".into()));
        }
        if self.snapshot_stride == Some(0) {
            return Err(CliError::Config("solver.snapshot_stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Artifact {
    Solution,
    Signs,
    FreeBoundary,
    Diagnostics,
}

impl Artifact {
    pub const ALL: [Artifact; 4] = [Artifact::Solution, Artifact::Signs, Artifact::FreeBoundary, Artifact::Diagnostics];
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: Option<PathBuf>,
    /// Artifacts to write; all of them when absent.
    pub emit: Option<Vec<Artifact>>,
}

impl OutputBlock {
    pub fn wants(&self, a: Artifact) -> bool {
        self.emit.as_ref().is_none_or(|e| e.contains(&a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeOperator {
    Elliptic,
    Parabolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StudyBlock {
    /// Heat reduction refined in space at fixed `c = Δt/Δx²`.
    HeatSpace {
        levels: Vec<usize>,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_heat_horizon")]
        horizon: f64,
        #[serde(default = "explicit_mode")]
        mode: StepMode,
    },
    /// Heat reduction refined in time at fixed `Δx`.
    HeatTime {
        intervals: usize,
        steps: Vec<usize>,
        #[serde(default = "default_heat_horizon")]
        horizon: f64,
        #[serde(default = "implicit_mode")]
        mode: StepMode,
    },
    /// Consistency of a discrete residual on a smooth probe.
    Probe {
        probe: SmoothProbe,
        operator: ProbeOperator,
        /// `Δt/Δx²` for parabolic probes.
        #[serde(default = "default_probe_c")]
        c: f64,
        point: Vec<f64>,
        #[serde(default)]
        t: f64,
        #[serde(default = "one")]
        lambda_plus: f64,
        #[serde(default = "one")]
        lambda_minus: f64,
        levels: Vec<usize>,
    },
}

fn default_c() -> f64 {
    0.4
}
fn default_probe_c() -> f64 {
    0.25
}
fn default_heat_horizon() -> f64 {
    0.1
}
fn explicit_mode() -> StepMode {
    StepMode::Explicit
}
fn implicit_mode() -> StepMode {
    StepMode::Implicit
}
fn one() -> f64 {
    1.0
}

impl StudyBlock {
    pub fn level_count(&self) -> usize {
        match self {
            StudyBlock::HeatSpace { levels, .. } | StudyBlock::Probe { levels, .. } => levels.len(),
            StudyBlock::HeatTime { steps, .. } => steps.len(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parses JSON text. Syntax and schema errors carry line and column.
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.solver.validate()?;
        Ok(cfg)
    }
}

/// Resolved problem fields, echoed into the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemEcho {
    pub builtin: Option<String>,
    pub bounds: Vec<[f64; 2]>,
    pub nodes: usize,
    pub dx: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub lambda_plus: String,
    pub lambda_minus: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
    pub boundary: String,
    pub degenerate: bool,
}

pub struct ResolvedProblem {
    pub spec: ProblemSpec,
    pub echo: ProblemEcho,
}

fn linear_source(slope: f64, offset: f64) -> String {
    if offset < 0.0 {
        format!("{slope}*x - {}", -offset)
    } else {
        format!("{slope}*x + {offset}")
    }
}

fn parse_datum(name: &str, datum: &Datum, allowed: &[Var]) -> CliResult<Expr> {
    let source = datum.source();
    Expr::parse(&source, allowed).map_err(|e| CliError::Config(format!("{name} = \"{source}\": {e}")))
}

fn coefficient(expr: Expr) -> Coefficient {
    match expr.constant() {
        Some(v) => Coefficient::Constant(v),
        None => Coefficient::field(move |p: Point| expr.eval(0.0, p.x, p.y)),
    }
}

/// Builds the problem. `time_dependent` selects the parabolic form, which
/// needs a horizon, a step count and an initial datum.
pub fn resolve_problem(cfg: &RunConfig, time_dependent: bool) -> CliResult<ResolvedProblem> {
    let block = cfg
        .problem
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `problem` block".into()))?;
    let base = match &block.builtin {
        Some(name) => Some(
            builtin_case(name)
                .ok_or_else(|| CliError::Config(format!("problem.builtin: unknown case `{name}`")))?,
        ),
        None => None,
    };
    let required = |field: &str| CliError::Config(format!("problem.{field} is required"));

    let bounds = match (&block.bounds, &base) {
        (Some(b), _) => b.clone(),
        (None, Some(_)) => vec![[0.0, 1.0]],
        (None, None) => return Err(required("bounds")),
    };
    let nodes = block
        .nodes
        .or(base.as_ref().map(|_| twophase_core::problem::REFERENCE_NODES))
        .ok_or_else(|| required("nodes"))?;
    if bounds.is_empty() || bounds.len() > 2 {
        return Err(CliError::Config(format!(
            "problem.bounds must list 1 or 2 intervals, got {}",
            bounds.len()
        )));
    }
    let pairs: Vec<(f64, f64)> = bounds.iter().map(|b| (b[0], b[1])).collect();
    let grid = GridSpec::new(&pairs, &vec![nodes; pairs.len()])
        .map_err(|e| CliError::Config(format!("problem.bounds/nodes: {e}")))?;
    let space: &[Var] = if grid.dim() == 1 { &[Var::X] } else { &[Var::X, Var::Y] };
    let space_time: &[Var] = if grid.dim() == 1 { &[Var::T, Var::X] } else { &[Var::T, Var::X, Var::Y] };

    let pick = |field: &str, own: &Option<Datum>, fallback: Option<Datum>| -> CliResult<Datum> {
        own.clone().or(fallback).ok_or_else(|| required(field))
    };
    let lp = pick("lambda_plus", &block.lambda_plus, base.as_ref().map(|c| Datum::Number(c.lambda_plus)))?;
    let lm = pick("lambda_minus", &block.lambda_minus, base.as_ref().map(|c| Datum::Number(c.lambda_minus)))?;
    let linear = base.as_ref().map(|c| Datum::Expr(linear_source(c.slope, c.offset)));
    let h = pick("boundary", &block.boundary, linear.clone())?;

    let lp_expr = parse_datum("problem.lambda_plus", &lp, space)?;
    let lm_expr = parse_datum("problem.lambda_minus", &lm, space)?;
    let h_expr = parse_datum("problem.boundary", &h, if time_dependent { space_time } else { space })?;

    let mut echo = ProblemEcho {
        builtin: block.builtin.clone(),
        bounds,
        nodes,
        dx: grid.dx(),
        horizon: None,
        steps: None,
        dt: None,
        lambda_plus: lp_expr.source().to_string(),
        lambda_minus: lm_expr.source().to_string(),
        initial: None,
        boundary: h_expr.source().to_string(),
        degenerate: block.degenerate,
    };

    let mut builder = ProblemSpec::builder(grid.clone())
        .lambda_plus(coefficient(lp_expr))
        .lambda_minus(coefficient(lm_expr))
        .boundary(move |t, p| h_expr.eval(t, p.x, p.y))
        .allow_degenerate(block.degenerate);

    if time_dependent {
        let horizon = block
            .horizon
            .or(base.as_ref().map(|_| 1.0))
            .ok_or_else(|| required("horizon"))?;
        let steps = match (&block.steps, &base) {
            (Some(s), _) => s.clone(),
            (None, Some(_)) => Steps::Count(twophase_core::problem::REFERENCE_STEPS),
            (None, None) => return Err(required("steps")),
        };
        let time = match steps {
            Steps::Count(m) => TimeGrid::new(horizon, m),
            Steps::Keyword(k) if k == "auto" => TimeGrid::cfl_limited(horizon, grid.dx(), grid.k(), cfg.solver.cfl_safety),
            Steps::Keyword(k) => {
                return Err(CliError::Config(format!(
                    "problem.steps must be a positive integer or \"auto\", got \"{k}\""
                )))
            }
        }
        .map_err(|e| CliError::Config(format!("problem.horizon/steps: {e}")))?;
        let g = pick("initial", &block.initial, linear)?;
        let g_expr = parse_datum("problem.initial", &g, space)?;
        echo.horizon = Some(horizon);
        echo.steps = Some(time.steps());
        echo.dt = Some(time.dt());
        echo.initial = Some(g_expr.source().to_string());
        builder = builder.time(time).initial(move |p| g_expr.eval(0.0, p.x, p.y));
    } else {
        for (field, present) in [
            ("horizon", block.horizon.is_some()),
            ("steps", block.steps.is_some()),
            ("initial", block.initial.is_some()),
        ] {
            if present {
                log::warn!("problem.{field} is ignored by the elliptic solver");
            }
        }
    }
    let spec = builder.build().map_err(|e| CliError::Config(format!("problem: {e}")))?;
    Ok(ResolvedProblem { spec, echo })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<RunConfig> {
        RunConfig::parse(text)
    }

    #[test]
    fn builtin_resolves_to_reference_problem() {
        let cfg = parse(r#"{"problem": {"builtin": "fig1"}}"#).unwrap();
        let r = resolve_problem(&cfg, true).unwrap();
        let case = builtin_case("fig1").unwrap();
        assert_eq!(r.spec.grid(), case.problem.grid());
        assert_eq!(r.spec.time(), case.problem.time());
        assert_eq!(r.spec.initial_level().unwrap(), case.problem.initial_level().unwrap());
        assert_eq!(r.spec.lambda_plus(), case.problem.lambda_plus());
        assert_eq!(r.echo.initial.as_deref(), Some("16*x - 8"));
        assert_eq!(r.echo.steps, Some(250));
    }

    #[test]
    fn missing_field_is_named() {
        let cfg = parse(
            r#"{"problem": {"bounds": [[0, 1]], "nodes": 11, "horizon": 1, "steps": 10,
                "lambda_plus": 1, "initial": "x", "boundary": "x"}}"#,
        )
        .unwrap();
        let err = resolve_problem(&cfg, true).err().unwrap();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("problem.lambda_minus"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected_with_position() {
        let err = parse("{\n  \"problem\": {\"builtin\": \"fig1\", \"lambda\": 2}\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown field `lambda`") && msg.contains("line 2"), "{msg}");
        assert!(parse(r#"{"solver": {"mode": "implicit", "omega": 1.5}}"#).is_err());
        assert!(parse(r#"{"surprise": 1}"#).is_err());
    }

    #[test]
    fn expressions_and_auto_steps() {
        let cfg = parse(
            r#"{"problem": {"bounds": [[0, 1], [0, 1]], "nodes": 11, "horizon": 0.1, "steps": "auto",
                "lambda_plus": "1 + x*y", "lambda_minus": 0.5, "initial": "x - y", "boundary": "x - y + t"},
                "solver": {"mode": "explicit", "cfl_safety": 0.5}}"#,
        )
        .unwrap();
        let r = resolve_problem(&cfg, true).unwrap();
        let time = r.spec.time().unwrap();
        assert!(time.dt() <= 0.5 * 0.01 / 4.0);
        assert_eq!(r.spec.lambda_plus().at(120), 2.0);
        let corner = r.spec.grid().node_at([10, 0]).unwrap();
        assert_eq!(r.spec.boundary_value(0.5, corner), 1.0 + 0.5);
    }

    #[test]
    fn time_is_rejected_in_coefficients_and_elliptic_boundaries() {
        let cfg = parse(r#"{"problem": {"builtin": "fig2", "lambda_plus": "1 + t"}}"#).unwrap();
        assert!(resolve_problem(&cfg, true).err().unwrap().to_string().contains("`t`"));
        let cfg = parse(r#"{"problem": {"builtin": "fig2", "boundary": "t"}}"#).unwrap();
        assert!(resolve_problem(&cfg, false).is_err());
        assert!(resolve_problem(&cfg, true).is_ok());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for text in [
            r#"{"problem": {"builtin": "fig1", "lambda_plus": -1}}"#,
            r#"{"problem": {"builtin": "fig1", "nodes": 2}}"#,
            r#"{"problem": {"builtin": "fig1", "steps": "lots"}}"#,
            r#"{"problem": {"builtin": "fig9"}}"#,
        ] {
            let err = resolve_problem(&parse(text).unwrap(), true).err().unwrap();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
        assert_eq!(parse(r#"{"solver": {"cfl_safety": 1.5}}"#).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn study_blocks_parse() {
        let cfg = parse(r#"{"study": {"kind": "heat_space", "levels": [10, 20, 40, 80]}}"#).unwrap();
        assert_eq!(
            cfg.study,
            Some(StudyBlock::HeatSpace {
                levels: vec![10, 20, 40, 80],
                c: 0.4,
                horizon: 0.1,
                mode: StepMode::Explicit
            })
        );
        let cfg = parse(
            r#"{"study": {"kind": "probe", "probe": "sin_pi", "operator": "elliptic", "point": [0.5], "levels": [8, 16, 32]}}"#,
        )
        .unwrap();
        assert_eq!(cfg.study.unwrap().level_count(), 3);
        assert!(parse(r#"{"study": {"kind": "heat_space", "levels": [10], "extra": 1}}"#).is_err());
    }
}
