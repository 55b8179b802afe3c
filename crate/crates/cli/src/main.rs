use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod table;

use commands::Failure;
use config::RunConfig;

/// Single-photon source simulations: figure sweeps, gate fidelity, coincidence traces.
#[derive(Parser, Debug)]
#[command(name = "sps", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overrides the config key `out`
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep of a bundled figure preset
    Figure {
        /// Preset name, e.g. fig7; may instead be given in the config
        preset: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep defined by a config, optionally starting from a preset
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Worst-case gate fidelity against helper-photon jitter
    Gate {
        #[command(flatten)]
        common: Common,
    },
    /// Coincidence trace of a pulse train
    Hbt {
        #[command(flatten)]
        common: Common,
    },
    /// Run the analytic reference checks
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common, required: bool) -> Result<RunConfig, Failure> {
    match &common.config {
        Some(path) => Ok(RunConfig::load(path)?),
        None if required => Err(Failure::Config("this subcommand needs --config".into())),
        None => Ok(RunConfig::parse("{}")?),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (common, required) = match &cli.command {
        Command::Figure { common, .. } | Command::Gate { common } | Command::Hbt { common } | Command::Validate { common } => {
            (common, false)
        }
        Command::Sweep { common } => (common, true),
    };
    let cfg = load(common, required)?;
    let out = common.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.worker_count()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Failure::Numerical(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Figure { preset, .. } => commands::figure(&cfg, preset.as_deref(), &out).map(drop),
        Command::Sweep { .. } => commands::figure(&cfg, None, &out).map(drop),
        Command::Gate { .. } => commands::gate(&cfg, &out).map(drop),
        Command::Hbt { .. } => commands::hbt(&cfg, &out).map(drop),
        Command::Validate { .. } => commands::validate(),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("sps: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
