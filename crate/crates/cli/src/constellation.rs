use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use dualpol::constellation::{
    export_constellation, gen_cartesian_qam, gen_lam, import_constellation, min_distance, neighbor_graph,
};
use dualpol::ga::GaConfig;
use dualpol::infometrics::{air, pair, sweep, write_sweep_csv, AwgnModel, Metric};
use dualpol::labeling::{
    export_labeling, ga_optimize_labeling, gray_product_labeling, import_labeling, quasi_gray_order, Labeling,
};
use serde::Serialize;

use crate::manifest::Run;
use crate::Outcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Cartesian product of two square or rectangular QAMs.
    Qam,
    /// Lowest-energy points of the D4 lattice.
    Lam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricArg {
    Air,
    Pair,
}

/// Genetic algorithm settings shared by LAM generation and labeling search.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GaArgs {
    #[arg(long, default_value_t = 64)]
    pub population: usize,
    #[arg(long, default_value_t = 200)]
    pub generations: usize,
    #[arg(long, default_value_t = 0.1)]
    pub mutation_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    pub crossover_rate: f64,
    #[arg(long, default_value_t = 2)]
    pub elite: usize,
    /// Monte Carlo samples per fitness evaluation.
    #[arg(long, default_value_t = 20_000)]
    pub ga_samples: usize,
}

impl GaArgs {
    fn config(&self, seed: u64) -> GaConfig {
        GaConfig {
            population: self.population,
            generations: self.generations,
            mutation_rate: self.mutation_rate,
            crossover_rate: self.crossover_rate,
            elite_count: self.elite,
            sample_budget: self.ga_samples,
            seed,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum ConstellationCmd {
    /// Write a generated constellation as CSV.
    Gen(GenArgs),
    /// AIR (and PAIR with a labeling) at one SNR, plus geometry.
    Eval(EvalArgs),
    /// AIR or PAIR over an SNR grid.
    Sweep(SweepArgs),
}

impl ConstellationCmd {
    pub fn name(&self) -> &'static str {
        match self {
            ConstellationCmd::Gen(_) => "gen",
            ConstellationCmd::Eval(_) => "eval",
            ConstellationCmd::Sweep(_) => "sweep",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long = "type", value_enum)]
    pub family: Family,
    /// Bits per 4D symbol.
    #[arg(long)]
    pub m: u32,
    /// SNR (dB) at which LAM boundary subsets are compared.
    #[arg(long, default_value_t = 8.0)]
    pub snr_eval: f64,
    #[command(flatten)]
    pub ga: GaArgs,
    #[arg(long, default_value = "constellation.csv")]
    pub out: String,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub constellation: PathBuf,
    #[arg(long)]
    pub labeling: Option<PathBuf>,
    #[arg(long)]
    pub snr: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value = "eval.csv")]
    pub out: String,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub constellation: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::Air)]
    pub metric: MetricArg,
    #[arg(long)]
    pub labeling: Option<PathBuf>,
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    pub snr_min: f64,
    #[arg(long, default_value_t = 25.0, allow_negative_numbers = true)]
    pub snr_max: f64,
    #[arg(long, default_value_t = 2.0)]
    pub snr_step: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value = "sweep.csv")]
    pub out: String,
}

#[derive(Debug, Subcommand)]
pub enum LabelingCmd {
    /// Gray labeling of an `m`-bit Cartesian QAM product.
    Gray(GrayArgs),
    /// Largest label Hamming distance between nearest neighbors.
    Order(OrderArgs),
    /// Genetic search for the labeling with the highest mean PAIR.
    Optimize(OptimizeArgs),
}

impl LabelingCmd {
    pub fn name(&self) -> &'static str {
        match self {
            LabelingCmd::Gray(_) => "gray",
            LabelingCmd::Order(_) => "order",
            LabelingCmd::Optimize(_) => "optimize",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GrayArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long, default_value = "labeling.csv")]
    pub out: String,
}

#[derive(Debug, Args, Serialize)]
pub struct OrderArgs {
    #[arg(long)]
    pub constellation: PathBuf,
    #[arg(long)]
    pub labeling: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub constellation: PathBuf,
    /// Labels use digits of GF(2^n).
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// Comma-separated SNR points (dB) averaged by the fitness.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub snr: Vec<f64>,
    #[command(flatten)]
    pub ga: GaArgs,
    #[arg(long, default_value = "labeling.csv")]
    pub out: String,
}

fn load_labeling(path: &Option<PathBuf>) -> Result<Option<Labeling>> {
    path.as_ref()
        .map(|p| import_labeling(p).with_context(|| format!("loading labeling {}", p.display())))
        .transpose()
}

fn grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    anyhow::ensure!(step > 0.0 && max >= min, "need snr_step > 0 and snr_max >= snr_min");
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| min + step * k as f64).collect())
}

pub fn run_constellation(cmd: &ConstellationCmd, run: &mut Run) -> Result<Outcome> {
    match cmd {
        ConstellationCmd::Gen(a) => {
            let c = match a.family {
                Family::Qam => gen_cartesian_qam(a.m)?,
                Family::Lam => {
                    anyhow::ensure!(a.m < 31, "m = {} is too large", a.m);
                    gen_lam(1usize << a.m, &a.ga.config(run.seed), a.snr_eval, run.seed)?
                }
            };
            export_constellation(&c, run.output(&a.out))?;
            crate::say!("{}: {} symbols -> {}", c.name(), c.len(), a.out);
            Outcome::ok(a)
        }
        ConstellationCmd::Eval(a) => {
            let c = import_constellation(&a.constellation)
                .with_context(|| format!("loading constellation {}", a.constellation.display()))?;
            let labeling = load_labeling(&a.labeling)?;
            let model = AwgnModel::from_snr_db(a.snr);
            let mut rows = vec![("air", air(&c, &model, a.samples, run.seed))];
            if let Some(l) = &labeling {
                rows.push(("pair", pair(&c, l, &model, a.samples, run.seed)?));
            }
            let mut text = String::from("metric,snr_db,value,std_error,samples\n");
            for (name, e) in &rows {
                text += &format!("{name},{},{},{},{}\n", a.snr, e.value, e.std_error, e.samples);
            }
            std::fs::write(run.output(&a.out), text)?;
            let degree = neighbor_graph(&c).iter().map(Vec::len).max().unwrap_or(0);
            let report = serde_json::json!({
                "name": c.name(),
                "symbols": c.len(),
                "min_distance": min_distance(&c),
                "max_neighbors": degree,
                "snr_db": a.snr,
                "air": rows[0].1,
                "pair": rows.get(1).map(|r| r.1),
            });
            crate::say!("{}", serde_json::to_string_pretty(&report)?);
            run.write_json("eval.json", &report)?;
            Outcome::ok(a)
        }
        ConstellationCmd::Sweep(a) => {
            let c = import_constellation(&a.constellation)
                .with_context(|| format!("loading constellation {}", a.constellation.display()))?;
            let labeling = load_labeling(&a.labeling)?;
            let metric = match a.metric {
                MetricArg::Air => Metric::Air,
                MetricArg::Pair => {
                    anyhow::ensure!(labeling.is_some(), "--metric pair needs --labeling");
                    Metric::Pair
                }
            };
            let snrs = grid(a.snr_min, a.snr_max, a.snr_step)?;
            let points = sweep(&c, labeling.as_ref(), metric, &snrs, a.samples, run.seed)?;
            write_sweep_csv(&points, run.output(&a.out))?;
            crate::say!("{} points -> {}", points.len(), a.out);
            Outcome::ok(a)
        }
    }
}

pub fn run_labeling(cmd: &LabelingCmd, run: &mut Run) -> Result<Outcome> {
    match cmd {
        LabelingCmd::Gray(a) => {
            let c = gen_cartesian_qam(a.m)?;
            let l = gray_product_labeling(&c)?;
            export_labeling(&l, run.output(&a.out))?;
            crate::say!("Gray labeling of {} -> {}", c.name(), a.out);
            Outcome::ok(a)
        }
        LabelingCmd::Order(a) => {
            let c = import_constellation(&a.constellation)?;
            let l = import_labeling(&a.labeling)?;
            let order = quasi_gray_order(&c, &l)?;
            crate::say!("quasi-Gray order {order}");
            run.write_json("order.json", &serde_json::json!({ "quasi_gray_order": order }))?;
            Outcome::ok(a)
        }
        LabelingCmd::Optimize(a) => {
            let c = import_constellation(&a.constellation)?;
            let r = ga_optimize_labeling(&c, a.n, &a.snr, &a.ga.config(run.seed))?;
            export_labeling(&r.labeling, run.output(&a.out))?;
            let mut hist = String::from("generation,best_fitness\n");
            for (g, f) in r.history.iter().enumerate() {
                hist += &format!("{g},{f}\n");
            }
            std::fs::write(run.output("fitness_history.csv"), hist)?;
            crate::say!("best mean PAIR {:.4} bits -> {}", r.fitness, a.out);
            Outcome::ok(a)
        }
    }
}
