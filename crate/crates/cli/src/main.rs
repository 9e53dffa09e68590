//! `qabom`: experiment runner for QAOA-based Boltzmann machine training.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a configuration error.

mod commands;
mod config;
mod output;

use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Axis;
use config::{DataSpec, DatagenJob, ExperimentConfig, ThermalizeJob};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn config(e: impl Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn runtime(e: impl Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "qabom", version, about = "Train Boltzmann machines with QAOA-prepared approximate Gibbs states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed overriding the config; falls back to QABOM_SEED.
    #[arg(long, env = "QABOM_SEED")]
    seed: Option<u64>,
    /// Worker threads (0 uses every core). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Directory for output files.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train an RBM and record the KL divergence per epoch.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Repeat training or update estimation across values of one hyperparameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Generate a coded-Bernoulli or hidden-mode dataset.
    Datagen {
        #[command(flatten)]
        common: Common,
        /// Bits per sample (coded-Bernoulli source).
        #[arg(long)]
        n: Option<usize>,
        /// Code dimension (coded-Bernoulli source).
        #[arg(long)]
        k: Option<usize>,
        /// Probability of a 1 in each code-word bit.
        #[arg(long)]
        eta: Option<f64>,
        /// Bit flip probability after encoding.
        #[arg(long)]
        p_flip: Option<f64>,
        /// Number of samples.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Thermalize a single model and compare it with its exact Gibbs state.
    Thermalize {
        #[command(flatten)]
        common: Common,
    },
}

fn load_or_default<T: Default + for<'de> serde::Deserialize<'de>>(common: &Common) -> Result<T, CliError> {
    common.config.as_deref().map(config::load).unwrap_or_else(|| Ok(T::default()))
}

fn experiment(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg: ExperimentConfig = load_or_default(common)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

struct DataFlags {
    n: Option<usize>,
    k: Option<usize>,
    eta: Option<f64>,
    p_flip: Option<f64>,
    count: Option<usize>,
}

fn datagen_job(common: &Common, flags: DataFlags) -> Result<DatagenJob, CliError> {
    let mut job: DatagenJob = load_or_default(common)?;
    if let Some(seed) = common.seed {
        job.seed = seed;
    }
    match &mut job.data {
        DataSpec::CodedBernoulli { n, k, eta, p_flip, count } => {
            *n = flags.n.unwrap_or(*n);
            *k = flags.k.unwrap_or(*k);
            *eta = flags.eta.unwrap_or(*eta);
            *p_flip = flags.p_flip.unwrap_or(*p_flip);
            *count = flags.count.unwrap_or(*count);
        }
        DataSpec::HiddenMode { n, count, .. } => {
            if flags.k.is_some() || flags.eta.is_some() || flags.p_flip.is_some() {
                return Err(CliError::Config("--k, --eta and --p-flip apply to the coded-bernoulli source".into()));
            }
            *n = flags.n.unwrap_or(*n);
            *count = flags.count.unwrap_or(*count);
        }
    }
    Ok(job)
}

fn thermalize_job(common: &Common) -> Result<ThermalizeJob, CliError> {
    let path = common.config.as_deref().ok_or_else(|| CliError::Config("thermalize requires --config".into()))?;
    let mut job: ThermalizeJob = config::load(path)?;
    if let Some(seed) = common.seed {
        job.seed = seed;
    }
    Ok(job)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::Train { common }
        | Command::Sweep { common, .. }
        | Command::Datagen { common, .. }
        | Command::Thermalize { common } => common,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", common.jobs)))?;
    pool.install(|| match cli.command {
        Command::Train { common } => commands::cmd_train(&experiment(&common)?, &common.out_dir),
        Command::Sweep { common, axis, values } => {
            commands::cmd_sweep(&experiment(&common)?, axis, &values, &common.out_dir)
        }
        Command::Datagen { common, n, k, eta, p_flip, count } => {
            let job = datagen_job(&common, DataFlags { n, k, eta, p_flip, count })?;
            commands::cmd_datagen(&job, &common.out_dir)
        }
        Command::Thermalize { common } => commands::cmd_thermalize(&thermalize_job(&common)?, &common.out_dir),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
