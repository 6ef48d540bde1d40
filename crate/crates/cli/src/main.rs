//! `pureconn`: point queries and verification suites, reported as JSON lines.

mod report;
mod settings;
mod suites;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use report::{CheckRecord, RunReport};
use settings::{parse_point, FileConfig, Settings};
use suites::Suite;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Parser)]
#[command(
    name = "pureconn",
    version,
    about = "Pure connection formulation of Einstein 4-manifolds: checks and point queries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chiral curvature blocks of a model metric at one point.
    Decompose(Flags),
    /// Run a verification suite.
    Check {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Catalog model, optionally suffixed with `-reversed`.
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated coordinates, e.g. `0.1,0,0.2,0`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    point: Option<[f64; 4]>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// `analytic` or `fd`.
    #[arg(long)]
    scheme: Option<String>,
    /// Finite-difference step.
    #[arg(long)]
    h: Option<f64>,
    /// Overrides every check's default tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Random points (or instances) per check.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with any of the above keys, plus `radial` and `angular`.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn settings(self) -> Result<Settings, CliError> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let flags = FileConfig {
            model: self.model,
            point: self.point,
            lambda: self.lambda,
            scheme: self.scheme,
            h: self.h,
            tol: self.tol,
            points: self.points,
            seed: self.seed,
            out: self.out,
            radial: None,
            angular: None,
        };
        Settings::resolve(file.overlay(flags))
    }
}

fn decompose(s: &Settings) -> Result<Vec<CheckRecord>, CliError> {
    let m = settings::parse_model(s.model.as_deref().unwrap_or("flat"))?;
    let scheme = s.scheme()?;
    let name = format!("decompose/{}", m.name());
    let inputs = json!({ "model": m.name(), "point": s.point, "scheme": s.scheme, "h": s.h });
    let d = suites::decomposition(&m, &s.point, scheme).map_err(|e| CliError::Usage(e.to_string()))?;
    let defect = (d.scalar - 4.0 * d.rplus.trace())
        .abs()
        .max((d.scalar - 4.0 * d.rminus.trace()).abs());
    let tol = s.tol(if scheme == pureconn::models::Scheme::Analytic {
        1e-6
    } else {
        1e-3
    });
    let mut values = suites::decomposition_values(&d);
    values["trace_identity_defect"] = json!(defect);
    let pass = defect <= tol;
    Ok(vec![CheckRecord {
        name,
        inputs_digest: report::digest(&inputs),
        values,
        tolerance: Some(tol),
        pass,
        error: None,
    }])
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let start = Instant::now();
    let (command, s, checks) = match cli.command {
        Command::Decompose(f) => {
            let s = f.settings()?;
            let c = decompose(&s)?;
            ("decompose".to_string(), s, c)
        }
        Command::Check { suite, flags } => {
            let s = flags.settings()?;
            if let Some(msg) = suites::validate(suite, &s) {
                return Err(CliError::Usage(msg));
            }
            let c = suites::run(suite, &s);
            let name = format!("check {}", format!("{suite:?}").to_lowercase());
            (name, s, c)
        }
    };
    let report = RunReport::new(command, s, checks);
    let elapsed = start.elapsed().as_millis();
    match &report.settings.out {
        Some(path) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            report.write_jsonl(&mut f, elapsed)?;
            f.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            report.write_jsonl(&mut lock, elapsed)?;
        }
    }
    eprintln!("{}", report.human_summary());
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
