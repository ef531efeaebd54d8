//! The four subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use twophase_core::analysis::checks::{
    builtin_elliptic_band, comparison_trials, explicit_exactness_trials, oracle_trials, CheckReport,
};
use twophase_core::analysis::heat::study_stepper;
use twophase_core::analysis::{
    consistency_order, heat_space_study, heat_time_study, monotonicity_fuzz, ConsistencyProbe, FuzzKind, FuzzReport,
    OperatorKind, OrderEstimate,
};
use twophase_core::elliptic::solve_elliptic;
use twophase_core::parabolic::{solve_parabolic, StepMode};
use twophase_core::{builtin_cases, Point};

use crate::config::{resolve_problem, Artifact, ProbeOperator, ProblemEcho, RunConfig, SolverBlock, StudyBlock};
use crate::error::{CliError, CliResult};
use crate::output::{
    self, ensure_dir, write_json, CsvSink, FileEntry, Manifest, Timing, MANIFEST_FILE, TIMING_FILE,
};

pub const DEFAULT_OUT_DIR: &str = "out";
pub const DEFAULT_SEED: u64 = 0;
pub const REPORT_FILE: &str = "report.json";
pub const STUDY_CSV: &str = "study.csv";
pub const STUDY_JSON: &str = "study.json";
pub const VERIFY_FILE: &str = "verify_report.json";

/// Flags shared by the solve and study commands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub mode: Option<StepMode>,
}

fn out_dir(cfg: &RunConfig, ov: &Overrides) -> PathBuf {
    ov.out
        .clone()
        .or_else(|| cfg.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

#[derive(Debug, Serialize)]
struct SolveEcho<'a> {
    problem: &'a ProblemEcho,
    solver: &'a SolverBlock,
    emit: Vec<Artifact>,
}

fn finish_run<C: Serialize>(
    dir: &Path,
    command: &'static str,
    seed: u64,
    config: C,
    files: Vec<FileEntry>,
    started: Instant,
) -> CliResult<()> {
    write_json(&dir.join(MANIFEST_FILE), &Manifest::new(command, seed, config, files))?;
    write_json(&dir.join(TIMING_FILE), &Timing::new(command, started))
}

pub fn solve_parabolic_cmd(config: &Path, ov: &Overrides) -> CliResult<String> {
    let started = Instant::now();
    let mut cfg = RunConfig::load(config)?;
    if let Some(mode) = ov.mode {
        cfg.solver.mode = mode;
    }
    let resolved = resolve_problem(&cfg, true)?;
    let stepper = cfg.solver.stepper();
    let dir = out_dir(&cfg, ov);
    log::info!(
        "solving {} nodes x {} steps ({})",
        resolved.spec.grid().len(),
        resolved.echo.steps.unwrap_or(0),
        stepper.mode
    );
    let trace = solve_parabolic(&resolved.spec, &stepper)?;
    ensure_dir(&dir)?;
    let grid = resolved.spec.grid();
    let wants = |a| cfg.output.wants(a);
    let written = output::write_trace(&dir, grid, &trace, &wants)?;
    let files = written.iter().map(|&a| FileEntry::csv(a, grid.dim(), true)).collect();
    let echo = SolveEcho {
        problem: &resolved.echo,
        solver: &cfg.solver,
        emit: written.clone(),
    };
    finish_run(&dir, "solve-parabolic", ov.seed.unwrap_or(DEFAULT_SEED), echo, files, started)?;
    let last = trace.diagnostics.last();
    Ok(format!(
        "{} snapshots written to {} (final |u_t| {:e}, final residual {:e})",
        trace.snapshots.len(),
        dir.display(),
        last.map_or(0.0, |d| d.rate_sup),
        last.map_or(0.0, |d| d.residual_sup),
    ))
}

pub fn solve_elliptic_cmd(config: &Path, ov: &Overrides) -> CliResult<String> {
    let started = Instant::now();
    let cfg = RunConfig::load(config)?;
    if ov.mode.is_some() {
        log::warn!("--mode has no effect on the elliptic solver");
    }
    let resolved = resolve_problem(&cfg, false)?;
    let dir = out_dir(&cfg, ov);
    let (u, report) = solve_elliptic(&resolved.spec, &cfg.solver.pgs())?;
    ensure_dir(&dir)?;
    let grid = resolved.spec.grid();
    let wants = |a| cfg.output.wants(a);
    let written = output::write_steady(&dir, grid, &u, &report, &wants)?;
    write_json(&dir.join(REPORT_FILE), &report)?;
    let mut files: Vec<FileEntry> = written.iter().map(|&a| FileEntry::csv(a, grid.dim(), false)).collect();
    files.push(FileEntry::other(REPORT_FILE));
    let echo = SolveEcho {
        problem: &resolved.echo,
        solver: &cfg.solver,
        emit: written.clone(),
    };
    finish_run(&dir, "solve-elliptic", ov.seed.unwrap_or(DEFAULT_SEED), echo, files, started)?;
    let report_json = serde_json::to_string(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    if !report.converged {
        return Err(CliError::Runtime(format!(
            "elliptic solver did not converge; partial output in {}; report: {report_json}",
            dir.display()
        )));
    }
    Ok(format!("converged in {} sweeps; output in {}; report: {report_json}", report.iterations, dir.display()))
}

#[derive(Debug, Serialize)]
struct StudyOutput<'a> {
    study: &'a StudyBlock,
    spacing: &'static str,
    estimate: &'a OrderEstimate,
}

pub fn convergence_study_cmd(config: &Path, ov: &Overrides) -> CliResult<String> {
    let started = Instant::now();
    let cfg = RunConfig::load(config)?;
    let mut study = cfg
        .study
        .clone()
        .ok_or_else(|| CliError::Config("missing `study` block".into()))?;
    if study.level_count() < 3 {
        return Err(CliError::Config(format!(
            "a convergence study needs at least 3 levels, got {}",
            study.level_count()
        )));
    }
    if let (Some(m), StudyBlock::HeatSpace { mode, .. } | StudyBlock::HeatTime { mode, .. }) = (ov.mode, &mut study) {
        *mode = m;
    }
    let inner = cfg.solver.pgs();
    let (estimate, spacing) = match &study {
        StudyBlock::HeatSpace { levels, c, horizon, mode } => {
            let stepper = twophase_core::parabolic::StepperConfig { inner, ..study_stepper(*mode) };
            (heat_space_study(levels, *c, *horizon, &stepper)?, "dx")
        }
        StudyBlock::HeatTime { intervals, steps, horizon, mode } => {
            let stepper = twophase_core::parabolic::StepperConfig { inner, ..study_stepper(*mode) };
            (heat_time_study(*intervals, steps, *horizon, &stepper)?, "dt")
        }
        StudyBlock::Probe {
            probe,
            operator,
            c,
            point,
            t,
            lambda_plus,
            lambda_minus,
            levels,
        } => {
            if point.len() != probe.dim() {
                return Err(CliError::Config(format!(
                    "study.point has {} coordinates but probe `{}` is {}-dimensional",
                    point.len(),
                    probe.name(),
                    probe.dim()
                )));
            }
            let setup = ConsistencyProbe {
                probe: *probe,
                kind: match operator {
                    ProbeOperator::Elliptic => OperatorKind::Elliptic,
                    ProbeOperator::Parabolic => OperatorKind::Parabolic { c: *c },
                },
                t: *t,
                point: Point::new(point[0], point.get(1).copied().unwrap_or(0.0)),
                lambda_plus: *lambda_plus,
                lambda_minus: *lambda_minus,
            };
            let spacing = if *operator == ProbeOperator::Elliptic { "dx" } else { "dt" };
            let est = consistency_order(&setup, levels).map_err(|e| CliError::Config(format!("study: {e}")))?;
            (est, spacing)
        }
    };

    let dir = out_dir(&cfg, ov);
    ensure_dir(&dir)?;
    let mut sink = CsvSink::create(&dir, STUDY_CSV, &["level", "spacing", "error"])?;
    for (i, (h, e)) in estimate.spacings.iter().zip(&estimate.errors).enumerate() {
        sink.row([i.to_string(), output::format_float(*h), output::format_float(*e)])?;
    }
    sink.finish()?;
    write_json(
        &dir.join(STUDY_JSON),
        &StudyOutput {
            study: &study,
            spacing,
            estimate: &estimate,
        },
    )?;
    let files = vec![
        FileEntry {
            name: STUDY_CSV.into(),
            columns: vec!["level".into(), "spacing".into(), "error".into()],
        },
        FileEntry::other(STUDY_JSON),
    ];
    finish_run(&dir, "convergence-study", ov.seed.unwrap_or(DEFAULT_SEED), &study, files, started)?;
    Ok(match estimate.slope {
        Some(s) => format!("observed order {s:.4} in {spacing} (fit residual {:.2e})", estimate.fit_residual),
        None => "every level is exact to roundoff; no order to fit".to_string(),
    })
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    pub out: PathBuf,
    pub explicit_trials: usize,
    pub fuzz_trials: usize,
    pub elliptic_trials: usize,
    pub oracle_trials: usize,
    pub comparison_trials: usize,
    pub band_nodes: usize,
    pub inject_cfl_violation: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            out: PathBuf::from(DEFAULT_OUT_DIR),
            explicit_trials: 500,
            fuzz_trials: 1000,
            elliptic_trials: 1000,
            oracle_trials: 50,
            comparison_trials: 100,
            band_nodes: twophase_core::problem::REFERENCE_NODES,
            inject_cfl_violation: false,
        }
    }
}

/// Number of failing seeds listed per check.
pub const MAX_LISTED_SEEDS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub trials: usize,
    pub passed: bool,
    pub failures: usize,
    /// Reproducer seeds of the first failures.
    pub failing_seeds: Vec<u64>,
    pub max_error: Option<f64>,
}

impl VerifyCheck {
    fn from_check(r: CheckReport) -> Self {
        Self {
            passed: r.passes(),
            failures: r.failing_seeds.len(),
            failing_seeds: r.failing_seeds.into_iter().take(MAX_LISTED_SEEDS).collect(),
            max_error: r.max_error.is_finite().then_some(r.max_error),
            name: r.name,
            trials: r.trials,
        }
    }

    fn from_fuzz(name: &str, r: FuzzReport) -> Self {
        Self {
            name: name.to_string(),
            trials: r.trials,
            passed: r.passes(),
            failures: r.violations.len(),
            failing_seeds: r.violations.iter().take(MAX_LISTED_SEEDS).map(|v| v.seed).collect(),
            max_error: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<VerifyCheck>,
}

/// Runs the property suite. Returns the report; the caller maps a failing
/// report to exit code 1.
pub fn run_verify(opts: &VerifyOptions) -> CliResult<VerifyReport> {
    let seed = opts.seed;
    let mut checks = vec![VerifyCheck::from_check(explicit_exactness_trials(opts.explicit_trials, seed)?)];
    for (name, kind, trials) in [
        ("monotonicity_parabolic_1d", FuzzKind::Parabolic { dim: 1, c: 0.5 }, opts.fuzz_trials),
        ("monotonicity_parabolic_2d", FuzzKind::Parabolic { dim: 2, c: 0.25 }, opts.fuzz_trials),
        ("degenerate_ellipticity_1d", FuzzKind::Elliptic { dim: 1 }, opts.elliptic_trials),
        ("degenerate_ellipticity_2d", FuzzKind::Elliptic { dim: 2 }, opts.elliptic_trials),
    ] {
        log::info!("{name}: {trials} trials");
        checks.push(VerifyCheck::from_fuzz(name, monotonicity_fuzz(kind, trials, seed)));
    }
    if opts.inject_cfl_violation {
        let kind = FuzzKind::Parabolic { dim: 1, c: 0.6 };
        checks.push(VerifyCheck::from_fuzz(
            "injected_cfl_violation",
            monotonicity_fuzz(kind, opts.fuzz_trials, seed),
        ));
    }
    checks.push(VerifyCheck::from_check(oracle_trials(opts.oracle_trials, seed)?));
    for mode in [StepMode::Explicit, StepMode::Implicit] {
        checks.push(VerifyCheck::from_check(comparison_trials(opts.comparison_trials, seed, mode)?));
    }
    let pgs = twophase_core::elliptic::PgsConfig::default();
    for case in builtin_cases() {
        checks.push(VerifyCheck::from_check(builtin_elliptic_band(&case, opts.band_nodes, &pgs)?));
    }
    Ok(VerifyReport {
        schema_version: output::SCHEMA_VERSION,
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

pub fn verify_cmd(opts: &VerifyOptions) -> CliResult<String> {
    let started = Instant::now();
    let report = run_verify(opts)?;
    ensure_dir(&opts.out)?;
    let path = opts.out.join(VERIFY_FILE);
    write_json(&path, &report)?;
    write_json(&opts.out.join(TIMING_FILE), &Timing::new("verify", started))?;
    let mut lines: Vec<String> = report
        .checks
        .iter()
        .map(|c| {
            let status = if c.passed { "pass" } else { "FAIL" };
            let mut line = format!("{status} {} ({} trials)", c.name, c.trials);
            if !c.passed {
                line.push_str(&format!(", {} failures, reproducer seeds {:?}", c.failures, c.failing_seeds));
            }
            line
        })
        .collect();
    lines.push(format!("report written to {}", path.display()));
    let text = lines.join("\n");
    if report.passed {
        Ok(text)
    } else {
        Err(CliError::Runtime(format!("verification failed\n{text}")))
    }
}
