use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dampkg::compare::compare;
use dampkg::io::Artifacts;
use dampkg::run::{run, REPORT_JSON};
use dampkg::{CliError, RunConfig};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "dampkg", version, about = "Damped fractional Klein-Gordon experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the damped equation and classify the energy decay.
    Simulate(RunArgs),
    /// Smallest resolvent singular value along the imaginary axis.
    ResolventSweep(RunArgs),
    /// Spectral-inequality constant of a level set against band radius.
    SpectralConstant(RunArgs),
    /// Smallest eigenvalue of the resolvent quadratic form against lambda.
    UncertaintySweep(RunArgs),
    /// Thickness certificate of a damping level set.
    Thickness(RunArgs),
    /// Decay-model fit of an existing trace CSV.
    Fit(RunArgs),
    /// Field-by-field difference of two report.json files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Also write the diff to <out>/report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn run_experiment(name: &str, args: &RunArgs) -> Result<Value, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if cfg.experiment.name() != name {
        return Err(CliError::Validation {
            path: Some("experiment".into()),
            message: format!("config describes `{}`, not `{name}`", cfg.experiment.name()),
        });
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| Path::new("out").join(name));
    let mut artifacts = Artifacts::create(&out)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Validation { path: Some("--threads".into()), message: "must be at least 1".into() });
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Io(e.to_string()))?;
    let report = pool.install(|| run(&cfg, &mut artifacts))?;
    let files: Vec<String> = artifacts.written().iter().map(|p| p.display().to_string()).collect();
    Ok(json!({ "status": "ok", "experiment": name, "config_hash": report["config_hash"], "files": files }))
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation {
        path: Some(path.display().to_string()),
        message: e.to_string(),
    })
}

fn dispatch(cmd: &Command) -> Result<Value, CliError> {
    match cmd {
        Command::Simulate(a) => run_experiment("simulate", a),
        Command::ResolventSweep(a) => run_experiment("resolvent-sweep", a),
        Command::SpectralConstant(a) => run_experiment("spectral-constant", a),
        Command::UncertaintySweep(a) => run_experiment("uncertainty-sweep", a),
        Command::Thickness(a) => run_experiment("thickness", a),
        Command::Fit(a) => run_experiment("fit", a),
        Command::Compare { a, b, out } => {
            let diff = compare(&read_json(a)?, &read_json(b)?)?;
            if let Some(dir) = out {
                Artifacts::create(dir)?.json(REPORT_JSON, &diff)?;
            }
            Ok(diff)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Validation { path: None, message: e.to_string().trim().to_string() };
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match dispatch(&cli.command) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
