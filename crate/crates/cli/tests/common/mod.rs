#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_twophase"));
    cmd.env("RUST_LOG", "error");
    cmd
}

/// Writes `json` to `dir/name` and returns the path.
pub fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

pub fn header(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .next()
        .unwrap_or("")
        .to_string()
}

/// `(file, header)` for every CSV in `dir`, sorted by file name.
pub fn headers(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), header(&p)))
        .collect();
    out.sort();
    out
}

/// Every file of `dir` except the timing record, with its bytes.
pub fn deterministic_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "timing.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

pub const SMALL_PARABOLIC_1D: &str = r#"{
  "problem": {"bounds": [[0, 1]], "nodes": 21, "horizon": 0.2, "steps": 40,
              "lambda_plus": "2 + x", "lambda_minus": 1, "initial": "16*x - 8", "boundary": "16*x - 8 + t"},
  "solver": {"mode": "implicit", "snapshot_stride": 4}
}"#;

pub const SMALL_PARABOLIC_2D: &str = r#"{
  "problem": {"bounds": [[0, 1], [0, 1]], "nodes": 9, "horizon": 0.05, "steps": "auto",
              "lambda_plus": 1, "lambda_minus": 2, "initial": "4*(x - y)", "boundary": "4*(x - y)"},
  "solver": {"mode": "explicit", "snapshot_stride": 10}
}"#;

pub const SMALL_ELLIPTIC_1D: &str = r#"{
  "problem": {"bounds": [[0, 1]], "nodes": 21, "lambda_plus": 3, "lambda_minus": 1, "boundary": "16*x - 8"}
}"#;

pub const SMALL_ELLIPTIC_2D: &str = r#"{
  "problem": {"bounds": [[0, 1], [0, 1]], "nodes": 9, "lambda_plus": 1, "lambda_minus": 1, "boundary": "x - y"}
}"#;

/// The published headers, one `command dim file: header` line each.
pub fn golden_headers() -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/headers.txt")).unwrap()
}

/// Runs the four small configs and renders their headers in golden form.
pub fn rendered_headers(work: &Path) -> String {
    let mut lines = Vec::new();
    for (command, dim, json) in [
        ("solve-parabolic", 1, SMALL_PARABOLIC_1D),
        ("solve-parabolic", 2, SMALL_PARABOLIC_2D),
        ("solve-elliptic", 1, SMALL_ELLIPTIC_1D),
        ("solve-elliptic", 2, SMALL_ELLIPTIC_2D),
    ] {
        let tag = format!("{command}-{dim}d");
        let cfg = write_config(work, &format!("{tag}.json"), json);
        let out = work.join(&tag);
        let o = run(&[command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{tag}: {}", stderr(&o));
        for (file, h) in headers(&out) {
            lines.push(format!("{command} {dim}d {file}: {h}"));
        }
    }
    lines.join("\n") + "\n"
}
