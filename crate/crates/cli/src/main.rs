//! `dualpol`: reproducible experiments over the dualpol library.

mod config;
mod constellation;
mod fd;
mod link;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::Config;
use manifest::{Run, RunManifest};

/// Prints a line to stdout, ignoring a closed pipe.
#[macro_export]
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

/// Exit status for an unreachable design target.
pub const EXIT_INFEASIBLE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "dualpol", version, about = "Dual-polarized satellite link experiments")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Master seed for every random stream of the run.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Directory receiving outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker thread cap; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory with `dualpol.toml`, `bearers.csv` and `miesm_d<d>.csv`.
    #[arg(long, global = true, env = "DUALPOL_CONFIG_DIR")]
    pub config_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate, evaluate and sweep 4D constellations.
    #[command(subcommand)]
    Constellation(constellation::ConstellationCmd),
    /// Gray labelings, quasi-Gray order and GA labeling search.
    #[command(subcommand)]
    Labeling(constellation::LabelingCmd),
    /// MIESM tables and effective SINR.
    #[command(subcommand)]
    Pla(link::PlaCmd),
    /// Mobile dual-polar channel series.
    #[command(subcommand)]
    Channel(link::ChannelCmd),
    /// Adaptive MODCOD and MIMO selection over a trip.
    #[command(subcommand)]
    Linkadapt(link::LinkadaptCmd),
    /// Full-duplex self-interference budgets and canceller simulation.
    #[command(subcommand)]
    Fd(fd::FdCmd),
    /// Re-run the invocation recorded in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

/// What a command reports back besides its files.
pub struct Outcome {
    pub parameters: serde_json::Value,
    /// Set when the requested target cannot be met.
    pub infeasible: Option<String>,
}

impl Outcome {
    pub fn ok(parameters: impl serde::Serialize) -> Result<Outcome> {
        Ok(Outcome {
            parameters: serde_json::to_value(parameters)?,
            infeasible: None,
        })
    }
}

fn command_name(c: &Command) -> String {
    let (group, sub) = match c {
        Command::Constellation(s) => ("constellation", s.name()),
        Command::Labeling(s) => ("labeling", s.name()),
        Command::Pla(s) => ("pla", s.name()),
        Command::Channel(s) => ("channel", s.name()),
        Command::Linkadapt(s) => ("linkadapt", s.name()),
        Command::Fd(s) => ("fd", s.name()),
        Command::Replay { .. } => ("replay", ""),
    };
    if sub.is_empty() {
        group.to_string()
    } else {
        format!("{group} {sub}")
    }
}

fn execute(cli: Cli, argv: Vec<String>) -> Result<Option<String>> {
    if let Command::Replay { manifest } = &cli.command {
        let m = manifest::read_manifest(manifest)?;
        let mut args = vec!["dualpol".to_string()];
        args.extend(m.argv.iter().cloned());
        let mut inner = Cli::try_parse_from(&args)?;
        if inner.config_dir.is_none() {
            inner.config_dir = m.config_dir.clone();
        }
        if matches!(inner.command, Command::Replay { .. }) {
            anyhow::bail!("a manifest cannot replay another replay");
        }
        return execute(inner, m.argv);
    }
    if let Some(n) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let cfg = Config::load(cli.config_dir.as_deref())?;
    let mut run = Run::new(&cli.out_dir, cli.seed)?;
    let name = command_name(&cli.command);
    let outcome = match &cli.command {
        Command::Constellation(c) => constellation::run_constellation(c, &mut run)?,
        Command::Labeling(c) => constellation::run_labeling(c, &mut run)?,
        Command::Pla(c) => link::run_pla(c, &cfg, &mut run)?,
        Command::Channel(c) => link::run_channel(c, &cfg, &mut run)?,
        Command::Linkadapt(c) => link::run_linkadapt(c, &cfg, &mut run)?,
        Command::Fd(c) => fd::run_fd(c, &mut run)?,
        Command::Replay { .. } => unreachable!("handled above"),
    };
    run.finish(RunManifest {
        tool: "dualpol".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name,
        argv,
        seed: cli.seed,
        config_dir: cfg.dir.clone(),
        parameters: outcome.parameters,
        outputs: Vec::new(),
    })?;
    Ok(outcome.infeasible)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match execute(cli, argv) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(reason)) => {
            eprintln!("infeasible: {reason}");
            ExitCode::from(EXIT_INFEASIBLE)
        }
        Err(e) => {
            if let Some(clap_err) = e.downcast_ref::<clap::Error>() {
                clap_err.exit();
            }
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
