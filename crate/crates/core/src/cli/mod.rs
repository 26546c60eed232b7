//! Command-line front end: `generate`, `fit`, `sweep` and `reproduce`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 I/O or malformed input.

pub mod config;
pub mod csvio;
pub mod reproduce;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use self::config::ExperimentConfig;
use crate::bench::{Runner, SweepParam, TrimPolicy};
use crate::error::Error;
use crate::optimizer::fit;
use crate::types::ModelConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Environment variable holding the trial thread count (0 or unset: sequential).
pub const THREADS_ENV: &str = "MBGDT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "mbgdt", version, about = "Trimmed mini-batch gradient descent and its contamination benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a training and a test dataset.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Fit one model and write its weights and loss trace.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Training CSV; generated from the config when omitted.
        #[arg(long)]
        train: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "fit")]
        out: PathBuf,
    },
    /// Sweep one contamination parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated ascending values; a default grid when omitted.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        /// Output CSV.
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Run every shipped experiment and write the result bundle.
    Reproduce {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Master seed (overrides `master_seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Trial count (overrides `trials`).
    #[arg(long)]
    trials: Option<usize>,
}

impl Common {
    fn resolve(&self) -> crate::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        for s in &self.set {
            cfg.set(s)?;
        }
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if cfg.trials == 0 {
            return Err(Error::InvalidConfig("trials must be positive".into()));
        }
        Ok(cfg)
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Divergence { .. } | Error::AllTrialsFailed(_) => EXIT_NUMERIC,
        Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn runner_from_env() -> crate::Result<Runner> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(Runner::sequential()),
        Ok(v) if v.trim().is_empty() => Ok(Runner::sequential()),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Runner::with_threads)
            .map_err(|e| Error::InvalidConfig(format!("{THREADS_ENV} = `{v}`: {e}"))),
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

fn dispatch(command: Command) -> crate::Result<i32> {
    match command {
        Command::Generate { common, out } => cmd_generate(&common.resolve()?, &out),
        Command::Fit { common, train, out } => cmd_fit(&common.resolve()?, train.as_deref(), &out),
        Command::Sweep {
            common,
            param,
            grid,
            out,
        } => {
            let grid = grid.unwrap_or_else(|| reproduce::default_grid(param));
            cmd_sweep(&common.resolve()?, param, &grid, &out)
        }
        Command::Reproduce { common, out } => cmd_reproduce(&common.resolve()?, &out),
    }
}

fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> crate::Result<i32> {
    let (train, test) = cfg.scenario.generate(cfg.master_seed)?;
    let header = cfg.echo();
    csvio::write_file(&out.join("train.csv"), &csvio::dataset_csv(&header, &train))?;
    let test = crate::datagen::Contaminated::clean(test);
    csvio::write_file(&out.join("test.csv"), &csvio::dataset_csv(&header, &test))?;
    println!(
        "wrote {} training and {} test samples to {}",
        train.data.len(),
        test.data.len(),
        out.display()
    );
    Ok(EXIT_OK)
}

/// Model settings `fit` uses: the scenario's model with the trim fraction
/// resolved and the master seed driving batch selection.
pub fn fit_model(cfg: &ExperimentConfig) -> ModelConfig {
    ModelConfig {
        trim_fraction: cfg.scenario.trim_fraction(),
        seed: cfg.master_seed,
        ..cfg.scenario.model.clone()
    }
}

fn cmd_fit(cfg: &ExperimentConfig, train: Option<&Path>, out: &Path) -> crate::Result<i32> {
    let model = fit_model(cfg);
    // Echo the trim fraction actually used, so `auto` and its value agree.
    let mut resolved = cfg.clone();
    resolved.scenario.trim = TrimPolicy::Fixed(model.trim_fraction);
    let mut header = resolved.echo();
    let data = match train {
        Some(path) => {
            header.push_str(&format!("# train = {}\n", path.display()));
            csvio::read_dataset(path)?.data
        }
        None => cfg.scenario.generate(cfg.master_seed)?.0.data,
    };
    let result = fit(&data, &model)?;
    csvio::write_file(&out.join("weights.txt"), &csvio::weights_text(&header, &result))?;
    csvio::write_file(&out.join("trace.csv"), &csvio::trace_csv(&header, &result))?;
    println!(
        "fitted degree {} on {} samples: {} iterations, converged = {}",
        model.model_degree,
        data.len(),
        result.trace.iterations_run,
        result.trace.converged
    );
    Ok(EXIT_OK)
}

fn cmd_sweep(cfg: &ExperimentConfig, param: SweepParam, grid: &[f64], out: &Path) -> crate::Result<i32> {
    let table = reproduce::run_sweep(&runner_from_env()?, cfg, param, grid)?;
    let header = reproduce::sweep_header(cfg, param, grid);
    csvio::write_file(out, &csvio::sweep_csv(&header, &table))?;
    println!("wrote {} sweep rows to {}", table.rows.len(), out.display());
    Ok(EXIT_OK)
}

fn cmd_reproduce(cfg: &ExperimentConfig, out: &Path) -> crate::Result<i32> {
    let bundle = reproduce::reproduce(cfg, &runner_from_env()?);
    bundle.write(out)?;
    println!("wrote {} files to {}", bundle.files.len(), out.display());
    let failures = bundle.failures();
    if failures.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("error: experiments failed entirely: {}", failures.join(", "));
        Ok(EXIT_NUMERIC)
    }
}
