//! `gauge-reader` command line: `read`, `eval` and `generate`.
//!
//! Exit codes: 0 success, 1 at least one input produced no reading, 2 usage
//! or I/O error, 3 schema or spec error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::fixtures::{parse_fixture, round_sig9, serialize_fixture, serialize_report, FixtureError, GaugeFixture, GaugeReadingReport, Stage, StageStatus};
use crate::pipeline::{evaluate_batch, read_gauge, ConfigError, EvalError, PipelineConfig};
use crate::synthgauge::{Manifest, SpecError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    ReadingFailure = 1,
    Usage = 2,
    Schema = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(name = "gauge-reader", version, about = "Read analog gauges from detection fixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the pipeline on fixture files and print one report per file.
    Read(ReadArgs),
    /// Evaluate a manifest of fixtures with ground truth.
    Eval(EvalArgs),
    /// Write synthetic fixtures from a scene spec or batch manifest.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct ReadArgs {
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON reports, one per line (default).
    #[arg(long, conflicts_with = "table")]
    json: bool,
    /// Reading, unit and stage statuses as text.
    #[arg(long)]
    table: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    manifest: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the summary here and print the path instead.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    spec: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

/// List of fixture files consumed by `eval` and written by `generate`.
/// Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub fixtures: Vec<PathBuf>,
}

#[derive(Debug)]
struct Failure {
    status: ExitStatus,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            status: ExitStatus::Usage,
            message: message.into(),
        }
    }

    fn schema(message: impl Into<String>) -> Self {
        Failure {
            status: ExitStatus::Schema,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::usage(e.to_string()),
            _ => Failure::schema(e.to_string()),
        }
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        Failure::schema(e.to_string())
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure::schema(e.to_string())
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Reads and validates one fixture file.
pub fn load_fixture(path: &Path) -> Result<GaugeFixture, (ExitStatus, String)> {
    let bytes = read_file(path).map_err(|f| (f.status, f.message))?;
    parse_fixture(&bytes).map_err(|e: FixtureError| {
        (ExitStatus::Schema, format!("{}: {e}", path.display()))
    })
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    match path {
        Some(p) => Ok(PipelineConfig::load(p)?),
        None => Ok(PipelineConfig::default()),
    }
}

/// Text rendering of a report used by `read --table`.
pub fn report_table_row(name: &str, report: &GaugeReadingReport) -> String {
    let readings = if report.readings.is_empty() {
        "-".to_string()
    } else {
        report
            .readings
            .iter()
            .map(|r| format!("{}={}", r.scale.as_str(), round_sig9(r.value)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let stages = Stage::ALL
        .iter()
        .filter_map(|&s| {
            report.status(s).map(|st| match st {
                StageStatus::Ok => format!("{}:ok", s.as_str()),
                StageStatus::Failed(r) => format!("{}:{}", s.as_str(), r.as_str()),
            })
        })
        .collect::<Vec<_>>()
        .join(" ");
    format!(
        "{name}\t{readings}\t{}\t{stages}",
        report.unit.as_deref().unwrap_or("-")
    )
}

fn cmd_read(args: &ReadArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<ExitStatus, Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let mut status = ExitStatus::Success;
    for path in &args.paths {
        let fixture = match load_fixture(path) {
            Ok(f) => f,
            Err((code, message)) => {
                let _ = writeln!(err, "error: {message}");
                if matches!(status, ExitStatus::Success | ExitStatus::ReadingFailure) {
                    status = code;
                }
                continue;
            }
        };
        let report = read_gauge(&fixture, &cfg);
        if report.readings.is_empty() && status == ExitStatus::Success {
            status = ExitStatus::ReadingFailure;
        }
        let line = if args.table {
            report_table_row(&path.display().to_string(), &report).into_bytes()
        } else {
            serialize_report(&report)
        };
        out.write_all(&line)
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    Ok(status)
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<ExitStatus, Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let bytes = read_file(&args.manifest)?;
    let manifest: FixtureManifest = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::schema(format!("{}: {e}", args.manifest.display())))?;
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let mut batch = Vec::with_capacity(manifest.fixtures.len());
    for rel in &manifest.fixtures {
        let fixture = load_fixture(&base.join(rel)).map_err(|(status, message)| Failure { status, message })?;
        batch.push((rel.display().to_string(), fixture));
    }
    let summary = evaluate_batch(&batch, &cfg)?;
    let json = summary.to_json();
    let _ = err.write_all(summary.to_table().as_bytes());
    match &args.out {
        Some(path) => {
            write_file(path, &json)?;
            let _ = writeln!(out, "{}", path.display());
        }
        None => out.write_all(&json).map_err(|e| Failure::usage(e.to_string()))?,
    }
    Ok(ExitStatus::Success)
}

/// Fixture files produced for `manifest`, in job order, as
/// `(file name, contents)`.
pub fn generate_files(manifest: &Manifest, seed: Option<u64>) -> Result<Vec<(String, Vec<u8>)>, SpecError> {
    manifest
        .jobs(seed)?
        .iter()
        .enumerate()
        .map(|(i, job)| Ok((format!("scene_{i}.json"), serialize_fixture(&job.run()?))))
        .collect()
}

fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<ExitStatus, Failure> {
    let bytes = read_file(&args.spec)?;
    let manifest: Manifest = serde_json::from_slice(&bytes)
        .map_err(|e| Failure::schema(format!("{}: not a scene spec or manifest: {e}", args.spec.display())))?;
    let files = generate_files(&manifest, args.seed)?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.out_dir.display())))?;
    for (name, contents) in &files {
        write_file(&args.out_dir.join(name), contents)?;
    }
    let listing = FixtureManifest {
        fixtures: files.iter().map(|(n, _)| PathBuf::from(n)).collect(),
    };
    let mut json = serde_json::to_vec_pretty(&listing).expect("manifest is serializable");
    json.push(b'\n');
    let manifest_path = args.out_dir.join("manifest.json");
    write_file(&manifest_path, &json)?;
    let _ = writeln!(out, "{}", manifest_path.display());
    Ok(ExitStatus::Success)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() {
                ExitStatus::Usage
            } else {
                ExitStatus::Success
            };
        }
    };
    let result = match &cli.command {
        Command::Read(a) => cmd_read(a, out, err),
        Command::Eval(a) => cmd_eval(a, out, err),
        Command::Generate(a) => cmd_generate(a, out),
    };
    match result {
        Ok(status) => status,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.status
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (ExitStatus, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let status = run(std::iter::once("gauge-reader").chain(args.iter().copied()), &mut out, &mut err);
        (
            status,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_args(&[]).0, ExitStatus::Usage);
        assert_eq!(run_args(&["frobnicate"]).0, ExitStatus::Usage);
        assert_eq!(run_args(&["read"]).0, ExitStatus::Usage);
        assert_eq!(run_args(&["read", "--json", "--table", "x"]).0, ExitStatus::Usage);
    }

    #[test]
    fn help_exits_0() {
        let (status, _, err) = run_args(&["--help"]);
        assert_eq!(status, ExitStatus::Success);
        assert!(err.contains("generate"));
    }

    #[test]
    fn missing_file_exits_2() {
        let (status, out, err) = run_args(&["read", "/nonexistent/fixture.json"]);
        assert_eq!(status, ExitStatus::Usage);
        assert!(out.is_empty());
        assert!(err.contains("/nonexistent/fixture.json"));
    }

    #[test]
    fn schema_error_exits_3() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        std::fs::write(&p, r#"{"schema":2,"keypoints":[],"needle_points":[]}"#).unwrap();
        assert_eq!(run_args(&["read", p.to_str().unwrap()]).0, ExitStatus::Schema);
    }
}
