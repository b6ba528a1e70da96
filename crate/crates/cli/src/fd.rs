use anyhow::Result;
use clap::{Args, Subcommand};
use dualpol::fullduplex::{
    attenuation_sweep, cancellation_from_amplitude_error, cancellation_from_delay_error, required_passive_attenuation,
    simulate_analog_canceller, sinr_after_cancellation, CancellerConfig, FdBudget, Path, SincKind, Solver,
};
use dualpol::{Complex64, Error};
use serde::Serialize;

use crate::manifest::Run;
use crate::Outcome;

#[derive(Debug, Subcommand)]
pub enum FdCmd {
    /// SINR after cancellation, error-limited cancellation bounds and the
    /// passive isolation needed for a target.
    Budget(BudgetArgs),
    /// Required passive isolation versus total active cancellation.
    Sweep(SweepArgs),
    /// Tapped-delay-line canceller simulation for growing tap counts.
    Canceller(CancellerArgs),
}

impl FdCmd {
    pub fn name(&self) -> &'static str {
        match self {
            FdCmd::Budget(_) => "budget",
            FdCmd::Sweep(_) => "sweep",
            FdCmd::Canceller(_) => "canceller",
        }
    }
}

/// Receiver powers in dB (relative to any common reference) and converter
/// parameters.
#[derive(Debug, Clone, Args, Serialize)]
pub struct PowerArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub desired_db: f64,
    #[arg(long, default_value_t = -30.0, allow_negative_numbers = true)]
    pub noise_db: f64,
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub si_db: f64,
    /// Peak-to-average power ratio, linear.
    #[arg(long, default_value_t = 4.0)]
    pub papr: f64,
    #[arg(long, default_value_t = 12.0)]
    pub enob: f64,
    /// Analog cancellation, dB.
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub analog_db: f64,
    /// Digital cancellation, dB.
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub digital_db: f64,
}

impl PowerArgs {
    fn budget(&self) -> FdBudget {
        let lin = |db: f64| 10f64.powf(db / 10.0);
        FdBudget {
            sigma_d2: lin(self.desired_db),
            sigma_n2: lin(self.noise_db),
            sigma_s2: lin(self.si_db),
            papr: self.papr,
            enob: self.enob,
            alpha_a: lin(-self.analog_db),
            alpha_d: lin(-self.digital_db),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BudgetArgs {
    #[command(flatten)]
    pub power: PowerArgs,
    /// Relative amplitude error of the SI estimate.
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Signal bandwidth, Hz, for the delay-error bound.
    #[arg(long, requires = "tau")]
    pub bandwidth: Option<f64>,
    /// Delay error, seconds.
    #[arg(long, requires = "bandwidth")]
    pub tau: Option<f64>,
    /// Use `sin(x)/x` instead of `sin(pi x)/(pi x)`.
    #[arg(long)]
    pub unnormalized_sinc: bool,
    /// SINR target for the passive isolation requirement, dB.
    #[arg(long, allow_negative_numbers = true)]
    pub target_sinr_db: Option<f64>,
    /// Transmit power on the same dB scale as the receiver powers.
    #[arg(long, default_value_t = 60.0, allow_negative_numbers = true)]
    pub tx_power_db: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub power: PowerArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub target_sinr_db: f64,
    #[arg(long, default_value_t = 60.0, allow_negative_numbers = true)]
    pub tx_power_db: f64,
    #[arg(long, default_value_t = 0.0)]
    pub min_db: f64,
    #[arg(long, default_value_t = 100.0)]
    pub max_db: f64,
    #[arg(long, default_value_t = 5.0)]
    pub step_db: f64,
    #[arg(long, default_value = "sweep.csv")]
    pub out: String,
}

#[derive(Debug, Args, Serialize)]
pub struct CancellerArgs {
    /// Largest number of taps; every count from 1 up is simulated.
    #[arg(long, default_value_t = 4)]
    pub max_taps: usize,
    /// Tap spacing, seconds.
    #[arg(long)]
    pub spacing: f64,
    /// Signal bandwidth, Hz.
    #[arg(long)]
    pub bandwidth: f64,
    /// Coupling path as `delay_s:gain_re:gain_im`; repeatable.
    #[arg(long = "path", value_parser = parse_path, required = true)]
    pub paths: Vec<(f64, f64, f64)>,
    #[arg(long, default_value_t = 4096)]
    pub training: usize,
    #[arg(long, default_value_t = 8192)]
    pub samples: usize,
    /// Fit with normalized LMS of this step instead of least squares.
    #[arg(long)]
    pub nlms_mu: Option<f64>,
    #[arg(long, default_value = "canceller.csv")]
    pub out: String,
}

fn parse_path(s: &str) -> std::result::Result<(f64, f64, f64), String> {
    let v: Vec<f64> = s
        .split(':')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [d, re] => Ok((d, re, 0.0)),
        [d, re, im] => Ok((d, re, im)),
        _ => Err("expected delay_s:gain_re[:gain_im]".into()),
    }
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// JSON has no infinity; unbounded values become `null`.
fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn run_fd(cmd: &FdCmd, run: &mut Run) -> Result<Outcome> {
    match cmd {
        FdCmd::Budget(a) => {
            let b = a.power.budget();
            let kind = if a.unnormalized_sinc {
                SincKind::Unnormalized
            } else {
                SincKind::Normalized
            };
            let mut report = serde_json::json!({
                "sinr_db": db(sinr_after_cancellation(&b)?),
                "quantization_noise_db": db(b.quantization_noise()),
            });
            if let Some(e) = a.epsilon {
                report["amplitude_error_cancellation_db"] = serde_json::json!(finite(cancellation_from_amplitude_error(e)));
            }
            if let (Some(bw), Some(tau)) = (a.bandwidth, a.tau) {
                let c = cancellation_from_delay_error(bw, tau, kind)?;
                report["delay_error_cancellation_db"] = serde_json::json!(finite(c));
            }
            let mut infeasible = None;
            if let Some(t) = a.target_sinr_db {
                match required_passive_attenuation(&b, 10f64.powf(a.tx_power_db / 10.0), 10f64.powf(t / 10.0)) {
                    Ok(r) => {
                        report["required_passive_db"] = serde_json::json!(r.attenuation_db);
                        report["max_si_db"] = serde_json::json!(db(r.max_sigma_s2));
                    }
                    Err(Error::Infeasible(msg)) => {
                        report["infeasible"] = serde_json::json!(msg);
                        infeasible = Some(msg);
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            crate::say!("{}", serde_json::to_string_pretty(&report)?);
            run.write_json("budget.json", &report)?;
            Ok(Outcome {
                parameters: serde_json::to_value(a)?,
                infeasible,
            })
        }
        FdCmd::Sweep(a) => {
            anyhow::ensure!(a.step_db > 0.0 && a.max_db >= a.min_db, "need step_db > 0 and max_db >= min_db");
            let n = ((a.max_db - a.min_db) / a.step_db + 1e-9).floor() as usize;
            let totals: Vec<f64> = (0..=n).map(|k| a.min_db + a.step_db * k as f64).collect();
            let tx = 10f64.powf(a.tx_power_db / 10.0);
            let rows = match attenuation_sweep(&a.power.budget(), tx, 10f64.powf(a.target_sinr_db / 10.0), &totals) {
                Ok(r) => r,
                Err(Error::Infeasible(msg)) => {
                    return Ok(Outcome {
                        parameters: serde_json::to_value(a)?,
                        infeasible: Some(msg),
                    })
                }
                Err(e) => return Err(e.into()),
            };
            let mut text = String::from("alpha_total_db,required_passive_db\n");
            for r in &rows {
                text += &format!("{},{}\n", r.alpha_total_db, r.required_passive_db);
            }
            std::fs::write(run.output(&a.out), text)?;
            crate::say!("{} rows -> {}", rows.len(), a.out);
            Outcome::ok(a)
        }
        FdCmd::Canceller(a) => {
            anyhow::ensure!(a.max_taps >= 1, "need at least one tap");
            let channel: Vec<Path> = a
                .paths
                .iter()
                .map(|&(d, re, im)| Path {
                    delay_s: d,
                    gain: Complex64::new(re, im),
                })
                .collect();
            let mut text = String::from("num_taps,achieved_db,holdout_db\n");
            for taps in 1..=a.max_taps {
                let mut cfg = CancellerConfig::uniform(taps, a.spacing, a.bandwidth, a.training, run.seed);
                if let Some(mu) = a.nlms_mu {
                    cfg.solver = Solver::Nlms { mu };
                }
                let r = simulate_analog_canceller(&cfg, &channel, a.samples)?;
                let hold = r.holdout_db.map(|h| h.to_string()).unwrap_or_default();
                text += &format!("{taps},{},{hold}\n", r.achieved_db);
            }
            std::fs::write(run.output(&a.out), text)?;
            crate::say!("{} tap counts -> {}", a.max_taps, a.out);
            Outcome::ok(a)
        }
    }
}
