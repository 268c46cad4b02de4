use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use infogeo_cli::report::ErrorObject;
use infogeo_cli::spec::{self, Format, JobSpec, Thresholds};
use infogeo_cli::{export, CliError};

#[derive(Parser)]
#[command(name = "infogeo", version, about = "Fisher geometry and Cramér-Rao checks from JSON job specs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a job spec and write its report.
    Run(RunArgs),
    /// Check a job spec without computing anything.
    Validate {
        /// Job spec JSON file.
        #[arg(long, env = "INFOGEO_SPEC")]
        spec: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Job spec JSON file.
    #[arg(long, env = "INFOGEO_SPEC")]
    spec: PathBuf,
    /// Report file; standard output when absent.
    #[arg(long, env = "INFOGEO_OUT")]
    out: Option<PathBuf>,
    /// Report format; overrides `output.format` in the spec.
    #[arg(long, env = "INFOGEO_FORMAT", value_enum)]
    format: Option<Format>,
    /// Seed for Monte Carlo sampling; overrides `seed` in the spec.
    #[arg(long, env = "INFOGEO_SEED")]
    seed: Option<u64>,
    /// Worker threads; the report does not depend on it.
    #[arg(long, env = "INFOGEO_THREADS")]
    threads: Option<usize>,
    /// Relative eigenvalue cutoff for the Fisher rank.
    #[arg(long, env = "INFOGEO_RANK_THRESHOLD")]
    rank_threshold: Option<f64>,
    /// Absolute tolerance for gap certificates instead of the automatic one.
    #[arg(long, env = "INFOGEO_PSD_TOL")]
    psd_tol: Option<f64>,
}

/// Failure before a report exists; printed as JSON on stderr.
struct Failure(Vec<ErrorObject>);

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        Failure(e.to_objects())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure(vec![ErrorObject { kind: "io".into(), path: None, message: format!("{e:#}") }])
    }
}

fn read_spec(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn apply_overrides(spec: &mut JobSpec, args: &RunArgs) {
    if args.seed.is_some() {
        spec.seed = args.seed;
    }
    if args.rank_threshold.is_some() || args.psd_tol.is_some() {
        let t = spec.thresholds.get_or_insert_with(Thresholds::default);
        if args.rank_threshold.is_some() {
            t.rank_rel = args.rank_threshold;
        }
        if args.psd_tol.is_some() {
            t.psd_tol = args.psd_tol;
        }
    }
}

fn run(args: &RunArgs) -> Result<i32, Failure> {
    let text = read_spec(&args.spec)?;
    let mut job = spec::deserialize(&text).map_err(CliError::from)?;
    apply_overrides(&mut job, args);
    let job = spec::check(job).map_err(CliError::from)?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let report = infogeo_cli::run(&job)?;

    let output = job.output.clone().unwrap_or_default();
    let format = args.format.or(output.format).unwrap_or_default();
    let path = args.out.clone().or(output.path.map(PathBuf::from));
    let mut buf = Vec::new();
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &report).context("serializing the report")?;
            buf.push(b'\n');
        }
        Format::Csv => export::write_csv(&report, &mut buf).context("writing CSV")?,
    }
    match path {
        Some(p) => fs::write(&p, &buf).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(&buf).context("writing to stdout")?,
    }
    Ok(infogeo_cli::exit_code(&report))
}

fn validate(path: &Path) -> Result<i32, Failure> {
    let text = read_spec(path)?;
    let out = match spec::parse(&text) {
        Ok(_) => serde_json::json!({ "valid": true }),
        Err(e) => serde_json::json!({ "valid": false, "errors": CliError::from(e).to_objects() }),
    };
    println!("{out}");
    Ok(if out["valid"] == true { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Run(args) => run(args),
        Cmd::Validate { spec } => validate(spec),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(Failure(errors)) => {
            eprintln!("{}", serde_json::json!({ "errors": errors }));
            ExitCode::from(1)
        }
    }
}
