//! CSV and JSON artifacts.
//!
//! Every file is a pure function of the resolved configuration, so repeated
//! runs produce identical bytes. Wall-clock time goes to `timing.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use twophase_core::analysis::signs::default_sign_tolerance;
use twophase_core::analysis::{classify_signs, SignSets};
use twophase_core::parabolic::{SolutionTrace, StepDiagnostics};
use twophase_core::{GridFunction, GridSpec, Point};

use crate::config::Artifact;
use crate::error::{CliError, CliResult};

/// Bumped whenever a CSV header or manifest field changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const SOLUTION_FILE: &str = "solution.csv";
pub const SIGNS_FILE: &str = "signs.csv";
pub const FREE_BOUNDARY_FILE: &str = "free_boundary.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMING_FILE: &str = "timing.json";

/// Plain decimal for moderate magnitudes, scientific otherwise. Both forms
/// are the shortest text that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn space_columns(dim: usize) -> Vec<&'static str> {
    if dim == 1 {
        vec!["x"]
    } else {
        vec!["x", "y"]
    }
}

/// Column names of an artifact; `timed` adds the leading `t` column.
pub fn columns(artifact: Artifact, dim: usize, timed: bool) -> Vec<&'static str> {
    let lead = |tail: &[&'static str]| {
        let mut cols = Vec::new();
        if timed {
            cols.push("t");
        }
        cols.extend(space_columns(dim));
        cols.extend_from_slice(tail);
        cols
    };
    match artifact {
        Artifact::Solution => lead(&["u"]),
        Artifact::Signs => lead(&["class"]),
        Artifact::FreeBoundary => lead(&[]),
        Artifact::Diagnostics if timed => vec!["m", "t", "ut_sup", "residual_sup", "inner_iterations"],
        Artifact::Diagnostics => vec!["iterations", "update_sup", "residual_sup", "converged"],
    }
}

pub fn file_name(artifact: Artifact) -> &'static str {
    match artifact {
        Artifact::Solution => SOLUTION_FILE,
        Artifact::Signs => SIGNS_FILE,
        Artifact::FreeBoundary => FREE_BOUNDARY_FILE,
        Artifact::Diagnostics => DIAGNOSTICS_FILE,
    }
}

fn point_fields(p: Point, dim: usize) -> Vec<String> {
    let mut f = vec![format_float(p.x)];
    if dim == 2 {
        f.push(format_float(p.y));
    }
    f
}

pub struct CsvSink {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl CsvSink {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> CliResult<Self> {
        let path = dir.join(name);
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(|e| csv_error(&path, e))?;
        writer.write_record(header).map_err(|e| csv_error(&path, e))?;
        Ok(Self { path, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| csv_error(&self.path, e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Runtime(format!("{}: {other:?}", path.display())),
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Rows for one grid function, optionally prefixed by a time.
fn emit_level(
    sinks: &mut Sinks,
    grid: &GridSpec,
    t: Option<f64>,
    u: &GridFunction,
) -> CliResult<()> {
    let dim = grid.dim();
    let prefix: Vec<String> = t.map(format_float).into_iter().collect();
    let signs: Option<SignSets> = (sinks.signs.is_some() || sinks.free_boundary.is_some())
        .then(|| classify_signs(grid, u, default_sign_tolerance(u)));
    for node in 0..grid.len() {
        let mut fields = prefix.clone();
        fields.extend(point_fields(grid.point(node), dim));
        if let Some(s) = sinks.solution.as_mut() {
            let mut row = fields.clone();
            row.push(format_float(u[node]));
            s.row(row)?;
        }
        if let (Some(s), Some(sets)) = (sinks.signs.as_mut(), signs.as_ref()) {
            fields.push(sets.classes[node].as_i8().to_string());
            s.row(fields)?;
        }
    }
    if let (Some(s), Some(sets)) = (sinks.free_boundary.as_mut(), signs.as_ref()) {
        for &p in &sets.free_boundary {
            let mut row = prefix.clone();
            row.extend(point_fields(p, dim));
            s.row(row)?;
        }
    }
    Ok(())
}

struct Sinks {
    solution: Option<CsvSink>,
    signs: Option<CsvSink>,
    free_boundary: Option<CsvSink>,
}

impl Sinks {
    fn open(dir: &Path, dim: usize, timed: bool, wants: &dyn Fn(Artifact) -> bool) -> CliResult<Self> {
        let open = |a: Artifact| -> CliResult<Option<CsvSink>> {
            if wants(a) {
                CsvSink::create(dir, file_name(a), &columns(a, dim, timed)).map(Some)
            } else {
                Ok(None)
            }
        };
        Ok(Self {
            solution: open(Artifact::Solution)?,
            signs: open(Artifact::Signs)?,
            free_boundary: open(Artifact::FreeBoundary)?,
        })
    }

    fn finish(self) -> CliResult<()> {
        for s in [self.solution, self.signs, self.free_boundary].into_iter().flatten() {
            s.finish()?;
        }
        Ok(())
    }
}

/// Writes the trace artifacts of a parabolic run. Returns the files written.
pub fn write_trace(
    dir: &Path,
    grid: &GridSpec,
    trace: &SolutionTrace,
    wants: &dyn Fn(Artifact) -> bool,
) -> CliResult<Vec<Artifact>> {
    let mut sinks = Sinks::open(dir, grid.dim(), true, wants)?;
    for snap in &trace.snapshots {
        emit_level(&mut sinks, grid, Some(snap.t), &snap.u)?;
    }
    sinks.finish()?;
    if wants(Artifact::Diagnostics) {
        let mut sink = CsvSink::create(dir, DIAGNOSTICS_FILE, &columns(Artifact::Diagnostics, grid.dim(), true))?;
        for d in &trace.diagnostics {
            sink.row(diagnostic_row(d))?;
        }
        sink.finish()?;
    }
    Ok(Artifact::ALL.into_iter().filter(|&a| wants(a)).collect())
}

fn diagnostic_row(d: &StepDiagnostics) -> [String; 5] {
    [
        d.step.to_string(),
        format_float(d.t),
        format_float(d.rate_sup),
        format_float(d.residual_sup),
        d.inner_iterations.to_string(),
    ]
}

/// Writes the artifacts of a steady solve; the diagnostics file holds the
/// single solver report row.
pub fn write_steady(
    dir: &Path,
    grid: &GridSpec,
    u: &GridFunction,
    report: &twophase_core::elliptic::EllipticSolveReport,
    wants: &dyn Fn(Artifact) -> bool,
) -> CliResult<Vec<Artifact>> {
    let mut sinks = Sinks::open(dir, grid.dim(), false, wants)?;
    emit_level(&mut sinks, grid, None, u)?;
    sinks.finish()?;
    if wants(Artifact::Diagnostics) {
        let mut sink = CsvSink::create(dir, DIAGNOSTICS_FILE, &columns(Artifact::Diagnostics, grid.dim(), false))?;
        sink.row([
            report.iterations.to_string(),
            format_float(report.final_update_norm),
            format_float(report.final_residual_norm),
            report.converged.to_string(),
        ])?;
        sink.finish()?;
    }
    Ok(Artifact::ALL.into_iter().filter(|&a| wants(a)).collect())
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub columns: Vec<String>,
}

impl FileEntry {
    pub fn csv(artifact: Artifact, dim: usize, timed: bool) -> Self {
        Self {
            name: file_name(artifact).to_string(),
            columns: columns(artifact, dim, timed).into_iter().map(String::from).collect(),
        }
    }

    pub fn other(name: &str) -> Self {
        Self {
            name: name.to_string(),
            columns: Vec::new(),
        }
    }
}

/// Deterministic record of a run.
#[derive(Debug, Serialize)]
pub struct Manifest<C: Serialize> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: C,
    pub files: Vec<FileEntry>,
}

impl<C: Serialize> Manifest<C> {
    pub fn new(command: &'static str, seed: u64, config: C, files: Vec<FileEntry>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config,
            files,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub command: &'static str,
    pub wall_seconds: f64,
    /// Seconds since the Unix epoch at completion.
    pub finished_at: u64,
}

impl Timing {
    pub fn new(command: &'static str, started: std::time::Instant) -> Self {
        let finished_at = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            command,
            wall_seconds: started.elapsed().as_secs_f64(),
            finished_at,
        }
    }
}
