use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use dualpol::channel::{gen_maritime_series, load_series, save_series, Calibration, ScenarioParams};
use dualpol::linkadapt::{
    simulate_trip, summarize, throughput_cdf, throughput_cdf_from_bits, wilson_upper, write_cdf, write_decision_log,
    MimoMode, TripConfig,
};
use dualpol::pla::{build_miesm_lut, db_to_lin, effective_sinr, export_lut, lin_to_db, EsmParams, PmReceiver};
use dualpol::rng::child_seed;
use serde::Serialize;

use crate::config::Config;
use crate::manifest::Run;
use crate::Outcome;

#[derive(Debug, Subcommand)]
pub enum PlaCmd {
    /// Build MIESM tables by Monte Carlo.
    Build(BuildArgs),
    /// Effective SINR of a list of SINRs.
    Esm(EsmArgs),
}

impl PlaCmd {
    pub fn name(&self) -> &'static str {
        match self {
            PlaCmd::Build(_) => "build",
            PlaCmd::Esm(_) => "esm",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BuildArgs {
    /// Modulation orders (bits per 2D symbol).
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2, 4, 5, 6])]
    pub bits: Vec<u32>,
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct EsmArgs {
    #[arg(long)]
    pub bits: u32,
    /// Comma-separated per-symbol SINRs, dB.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub snr: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub beta1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta2: f64,
}

#[derive(Debug, Subcommand)]
pub enum ChannelCmd {
    /// Generate a maritime trip series.
    Gen(ChannelGenArgs),
}

impl ChannelCmd {
    pub fn name(&self) -> &'static str {
        "gen"
    }
}

/// Overrides of the configured scenario.
#[derive(Debug, Clone, Args, Serialize)]
pub struct TripOverrides {
    /// Distance from beam center towards the edge, km.
    #[arg(long)]
    pub trip_km: Option<f64>,
    /// Vessel speed, km/h.
    #[arg(long)]
    pub speed_kmh: Option<f64>,
}

impl TripOverrides {
    fn apply(&self, base: &ScenarioParams) -> ScenarioParams {
        ScenarioParams {
            trip_km: self.trip_km.unwrap_or(base.trip_km),
            speed_kmh: self.speed_kmh.unwrap_or(base.speed_kmh),
            ..base.clone()
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ChannelGenArgs {
    #[command(flatten)]
    pub trip: TripOverrides,
    #[arg(long, default_value = "series.csv")]
    pub out: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Receiver {
    MatchedFilter,
    TrueZf,
    Mmse,
}

impl From<Receiver> for PmReceiver {
    fn from(r: Receiver) -> Self {
        match r {
            Receiver::MatchedFilter => PmReceiver::MatchedFilter,
            Receiver::TrueZf => PmReceiver::TrueZf,
            Receiver::Mmse => PmReceiver::Mmse,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum LinkadaptCmd {
    /// Simulate adaptive selection over a trip.
    Simulate(SimulateArgs),
    /// Throughput CDF of an existing decision log.
    Cdf(CdfArgs),
}

impl LinkadaptCmd {
    pub fn name(&self) -> &'static str {
        match self {
            LinkadaptCmd::Simulate(_) => "simulate",
            LinkadaptCmd::Cdf(_) => "cdf",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Channel series CSV; generated from the scenario when absent.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Feedback delay, seconds (a whole number of blocks).
    #[arg(long)]
    pub delay: Option<f64>,
    /// SNR at the beam center, dB.
    #[arg(long, allow_negative_numbers = true)]
    pub center_snr: Option<f64>,
    /// Allowed MIMO modes, comma-separated (siso, optbc, pmod, pm).
    #[arg(long, value_delimiter = ',', value_parser = parse_mode)]
    pub modes: Option<Vec<MimoMode>>,
    /// Linear receiver used for polarization multiplexing.
    #[arg(long, value_enum)]
    pub receiver: Option<Receiver>,
    /// Interpolate the channel across each block's symbols.
    #[arg(long)]
    pub intra_block: bool,
    #[command(flatten)]
    pub trip: TripOverrides,
}

fn parse_mode(s: &str) -> std::result::Result<MimoMode, String> {
    MimoMode::parse(s).map_err(|e| e.to_string())
}

#[derive(Debug, Args, Serialize)]
pub struct CdfArgs {
    /// Decision log written by `linkadapt simulate`.
    #[arg(long)]
    pub decisions: PathBuf,
    #[arg(long, default_value_t = 0.02)]
    pub block_period: f64,
    #[arg(long, default_value = "cdf.csv")]
    pub out: String,
}

pub fn run_pla(cmd: &PlaCmd, cfg: &Config, run: &mut Run) -> Result<Outcome> {
    match cmd {
        PlaCmd::Build(a) => {
            for &d in &a.bits {
                let lut = build_miesm_lut(d, a.samples, child_seed(run.seed, d as u64))?;
                export_lut(&lut, run.output(&format!("miesm_d{d}.csv")))?;
            }
            crate::say!("built {} tables", a.bits.len());
            Outcome::ok(a)
        }
        PlaCmd::Esm(a) => {
            let params = EsmParams::new(a.beta1, a.beta2)?;
            let gammas: Vec<f64> = a.snr.iter().map(|&s| db_to_lin(s)).collect();
            let eff = effective_sinr(&gammas, cfg.luts.get(a.bits)?, &params)?;
            let report = serde_json::json!({ "bits": a.bits, "effective_sinr_db": lin_to_db(eff) });
            crate::say!("{}", serde_json::to_string_pretty(&report)?);
            run.write_json("esm.json", &report)?;
            Outcome::ok(a)
        }
    }
}

pub fn run_channel(cmd: &ChannelCmd, cfg: &Config, run: &mut Run) -> Result<Outcome> {
    let ChannelCmd::Gen(a) = cmd;
    let p = a.trip.apply(&cfg.settings.scenario);
    let series = gen_maritime_series(&p, &cfg.settings.model, run.seed)?;
    save_series(&series, run.output(&a.out))?;
    crate::say!("{} blocks -> {}", series.len(), a.out);
    Outcome::ok(serde_json::json!({ "args": a, "scenario": p, "model": cfg.settings.model }))
}

#[derive(Serialize)]
struct SimulateReport {
    delay_blocks: usize,
    center_snr_db: f64,
    modes: Vec<String>,
    #[serde(flatten)]
    summary: dualpol::linkadapt::TripSummary,
    /// One-sided 95% Wilson bound on the failure rate of feasible blocks.
    feasible_per_upper95: f64,
}

pub fn run_linkadapt(cmd: &LinkadaptCmd, cfg: &Config, run: &mut Run) -> Result<Outcome> {
    match cmd {
        LinkadaptCmd::Simulate(a) => {
            let s = &cfg.settings;
            let p = a.trip.apply(&s.scenario);
            let series = match &a.series {
                Some(path) => load_series(path).with_context(|| format!("loading series {}", path.display()))?,
                None => gen_maritime_series(&p, &s.model, run.seed)?,
            };
            let p = ScenarioParams {
                block_period_s: series.block_period_s(),
                ..p
            };
            let center = a.center_snr.unwrap_or(s.center_snr_db);
            let mut trip = TripConfig {
                calibration: Calibration::for_center_snr(&p, center),
                adapt: s.adapt.clone(),
                feedback_delay_s: a.delay.unwrap_or(p.feedback_delay_s),
                intra_block: a.intra_block,
                scenario: p.clone(),
            };
            if let Some(r) = a.receiver {
                trip.adapt.pm_receiver = r.into();
            }
            let modes = a.modes.clone().unwrap_or_else(|| MimoMode::ALL.to_vec());
            let log = simulate_trip(&series, &trip, &cfg.bearers, &modes, &cfg.luts, child_seed(run.seed, 1))?;
            write_decision_log(&log, run.output("decisions.csv"))?;
            write_cdf(&throughput_cdf(&log, p.block_period_s)?, run.output("cdf.csv"))?;
            let summary = summarize(&log, p.block_period_s);
            let report = SimulateReport {
                delay_blocks: (trip.feedback_delay_s / p.block_period_s).round() as usize,
                center_snr_db: center,
                modes: modes.iter().map(|m| m.name().to_string()).collect(),
                feasible_per_upper95: wilson_upper(summary.feasible_failures, summary.feasible_blocks, 1.645),
                summary,
            };
            run.write_json("summary.json", &report)?;
            crate::say!(
                "{} blocks, mean throughput {:.1} bit/s, PER {:.2e}",
                report.summary.blocks, report.summary.mean_throughput_bps, report.summary.per
            );
            Outcome::ok(serde_json::json!({ "args": a, "trip": trip }))
        }
        LinkadaptCmd::Cdf(a) => {
            let bits = read_bits(&a.decisions)?;
            write_cdf(&throughput_cdf_from_bits(&bits, a.block_period)?, run.output(&a.out))?;
            crate::say!("{} blocks -> {}", bits.len(), a.out);
            Outcome::ok(a)
        }
    }
}

/// The `bits` column of a decision log.
fn read_bits(path: &std::path::Path) -> Result<Vec<u64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines.next().context("empty decision log")?;
    let col = header
        .split(',')
        .position(|h| h.trim() == "bits")
        .context("decision log has no `bits` column")?;
    lines
        .enumerate()
        .map(|(i, l)| {
            l.split(',')
                .nth(col)
                .and_then(|v| v.trim().parse().ok())
                .with_context(|| format!("bad bits value on data row {}", i + 1))
        })
        .collect()
}
