use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rkhs_blaschke::experiments::{self, ExperimentConfig, RunOptions, RunOutcome, Task, PRESETS};

/// Constructs and verifies generalized Blaschke products in reproducing
/// kernel Hilbert spaces on the disk.
#[derive(Parser, Debug)]
#[command(name = "blaschke", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory receiving reports and profiles.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the seed of every experiment.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Suppresses the per-verdict summary and the report on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// Experiment configuration (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Builds the Shapiro-Shields function of a multiset.
    Construct(ConfigArg),
    /// Builds or loads a function and checks innerness and its zeros.
    Verify(ConfigArg),
    /// Compares the invariant subspaces generated by two polynomials.
    Subspace(ConfigArg),
    /// Reports prescribed and extraneous zeros.
    Zeros(ConfigArg),
    /// Checks the extremal property against random competitors.
    Extremal(ConfigArg),
    /// Runs the finite-dimensional projection oracle.
    Oracle(ConfigArg),
    /// Runs a bundled example.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        name: String,
        /// Optional configuration supplying overrides for the preset.
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
    },
    /// Runs every configuration of a batch file concurrently.
    Batch(ConfigArg),
}

fn load_for(task: Task, path: &Path) -> Result<ExperimentConfig> {
    let config = experiments::load_config(path)?;
    if config.task != task {
        bail!(
            "{}: configuration task is {:?} but the subcommand runs {:?}",
            path.display(),
            config.task,
            task
        );
    }
    Ok(config)
}

fn configs(command: &Command) -> Result<Vec<ExperimentConfig>> {
    let single = |task, arg: &ConfigArg| load_for(task, &arg.config).map(|c| vec![c]);
    match command {
        Command::Construct(a) => single(Task::Construct, a),
        Command::Verify(a) => single(Task::Verify, a),
        Command::Subspace(a) => single(Task::Subspace, a),
        Command::Zeros(a) => single(Task::Zeros, a),
        Command::Extremal(a) => single(Task::Extremal, a),
        Command::Oracle(a) => single(Task::Oracle, a),
        Command::Preset { name, config } => {
            let mut c = match config {
                Some(path) => experiments::load_config(path)?,
                None => ExperimentConfig::preset(name),
            };
            c.task = Task::Preset;
            c.preset = Some(name.clone());
            Ok(vec![c])
        }
        Command::Batch(a) => {
            let all = experiments::load_batch(&a.config)?;
            let mut names = std::collections::BTreeSet::new();
            for c in &all {
                if !names.insert(c.name.as_str()) {
                    bail!("{}: experiment name {:?} appears twice", a.config.display(), c.name);
                }
            }
            Ok(all)
        }
    }
}

fn summarize(outcome: &RunOutcome) {
    let r = &outcome.report;
    for v in &r.verdicts {
        eprintln!("[{}] {}: {}", if v.passed { "pass" } else { "FAIL" }, r.name, v.name);
    }
    for e in &r.errors {
        eprintln!("[error] {}: {e}", r.name);
    }
    for f in &outcome.files {
        eprintln!("[wrote] {}", f.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let configs = match configs(&cli.command).context("loading configuration") {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        out_dir: cli.out.clone(),
        seed: cli.seed,
    };
    let outcomes = experiments::run_batch(&configs, &opts);
    let mut failed = false;
    for outcome in &outcomes {
        failed |= outcome.exit_code() != 0;
        if !cli.quiet {
            summarize(outcome);
            if outcome.files.iter().all(|f| f.extension().is_some_and(|e| e == "csv")) {
                print!("{}", outcome.report.to_json());
            }
        }
    }
    if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
