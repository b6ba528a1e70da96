//! Adaptive MIMO mode and MODCOD selection under a PER constraint.
//!
//! For each block every (mode, bearer) tuple gets an effective SINR from the
//! MIESM tables and a predicted PER from the bearer's curve. The selector
//! returns the highest-rate tuple meeting the PER target. The trip simulator
//! feeds the selector with a delayed channel and draws block success from
//! the PER on the actual channel.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{blocks_for, snr_per_block, Calibration, ChannelSeries, ScenarioParams};
use crate::error::{parse_err, Error, Result};
use crate::pla::{
    effective_sinr, lin_to_db, mimo_post_sinr, EsmParams, LutSet, Matrix2, MimoScheme, PerCurve, PmReceiver,
    SUPPORTED_BITS,
};
use crate::rng;

/// PER constraint of the selector.
pub const DEFAULT_PER_TARGET: f64 = 1e-3;

/// Allowed block lengths in symbols.
pub const BLOCK_LENGTHS: [usize; 3] = [640, 1098, 941];

/// Transmission scheme over the two polarizations, in increasing order of
/// complexity (the tie-break order of the selector).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MimoMode {
    Siso,
    Optbc,
    Pmod,
    Pm,
}

impl MimoMode {
    pub const ALL: [MimoMode; 4] = [MimoMode::Siso, MimoMode::Optbc, MimoMode::Pmod, MimoMode::Pm];

    pub fn streams(self) -> usize {
        match self {
            MimoMode::Pm => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MimoMode::Siso => "SISO",
            MimoMode::Optbc => "OPTBC",
            MimoMode::Pmod => "PMOD",
            MimoMode::Pm => "PM",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SISO" => Ok(MimoMode::Siso),
            "OPTBC" => Ok(MimoMode::Optbc),
            "PMOD" => Ok(MimoMode::Pmod),
            "PM" | "VBLAST" => Ok(MimoMode::Pm),
            _ => Err(Error::InvalidArgument(format!("unknown MIMO mode `{s}`"))),
        }
    }
}

impl std::fmt::Display for MimoMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One modulation and coding scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bearer {
    pub id: String,
    pub d: u32,
    pub code_rate: f64,
    pub block_n: usize,
    pub info_bits: u64,
    pub per: PerCurve,
}

impl Bearer {
    pub fn new(id: &str, d: u32, code_rate: f64, block_n: usize, info_bits: u64, gamma50_db: f64, slope_db: f64) -> Result<Self> {
        if !SUPPORTED_BITS.contains(&d) {
            return Err(Error::UnsupportedOrder(format!("bearer {id}: {d} bits")));
        }
        if !(code_rate > 0.0 && code_rate <= 1.0) {
            return Err(Error::InvalidArgument(format!("bearer {id}: code rate {code_rate}")));
        }
        if !BLOCK_LENGTHS.contains(&block_n) {
            return Err(Error::InvalidArgument(format!("bearer {id}: block length {block_n}")));
        }
        if info_bits == 0 || info_bits > d as u64 * block_n as u64 {
            return Err(Error::InvalidArgument(format!("bearer {id}: {info_bits} info bits")));
        }
        Ok(Bearer {
            id: id.to_string(),
            d,
            code_rate,
            block_n,
            info_bits,
            per: PerCurve::new(id, gamma50_db, slope_db)?,
        })
    }

    /// Information bits per block in `mode`. Polarized modulation adds one
    /// polarization bit per symbol at the same code rate.
    pub fn bits(&self, mode: MimoMode) -> u64 {
        match mode {
            MimoMode::Siso | MimoMode::Optbc => self.info_bits,
            MimoMode::Pm => 2 * self.info_bits,
            MimoMode::Pmod => self.info_bits + (self.code_rate * self.block_n as f64).floor() as u64,
        }
    }

    pub fn rate_bps(&self, mode: MimoMode, block_period_s: f64) -> f64 {
        self.bits(mode) as f64 / block_period_s
    }
}

pub const BEARER_HEADER: &str = "bearer_id,d,code_rate,block_N,gamma50_db,slope_db,info_bits";

const DEFAULT_BEARERS: &str = include_str!("../data/bearers.csv");

/// Representative bearer table shipped with the crate. The PER curve
/// parameters are provisional placeholders.
pub fn default_bearers() -> Vec<Bearer> {
    bearers_from_csv(DEFAULT_BEARERS).expect("bundled bearer table is valid")
}

pub fn default_bearers_csv() -> &'static str {
    DEFAULT_BEARERS
}

pub fn load_bearers(path: impl AsRef<Path>) -> Result<Vec<Bearer>> {
    bearers_from_csv(&std::fs::read_to_string(path)?)
}

pub fn bearers_from_csv(text: &str) -> Result<Vec<Bearer>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.replace(' ', "") == BEARER_HEADER {
            continue;
        }
        let err = |m: &str| parse_err(idx + 1, m);
        let c: Vec<&str> = line.split(',').map(str::trim).collect();
        if c.len() != 7 {
            return Err(err("expected 7 columns"));
        }
        let num = |i: usize| c[i].parse::<f64>().map_err(|_| err("non-numeric field"));
        let d = c[1].parse().map_err(|_| err("bad d"))?;
        let n = c[3].parse().map_err(|_| err("bad block_N"))?;
        let info = c[6].parse().map_err(|_| err("bad info_bits"))?;
        out.push(Bearer::new(c[0], d, num(2)?, n, info, num(4)?, num(5)?)?);
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("empty bearer table".into()));
    }
    Ok(out)
}

pub fn bearers_to_csv(bearers: &[Bearer]) -> String {
    let mut s = format!("{BEARER_HEADER}\n");
    for b in bearers {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            b.id, b.d, b.code_rate, b.block_n, b.per.gamma50_db, b.per.slope_db, b.info_bits
        ));
    }
    s
}

/// Selector settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptConfig {
    pub pm_receiver: PmReceiver,
    pub esm: EsmParams,
    pub per_target: f64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            pm_receiver: PmReceiver::Mmse,
            esm: EsmParams::default(),
            per_target: DEFAULT_PER_TARGET,
        }
    }
}

/// Evaluation of one (mode, bearer) tuple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub mode: MimoMode,
    pub bearer: usize,
    pub gamma_eff_db: f64,
    pub per: f64,
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub chosen: Candidate,
    pub feasible: bool,
    pub candidates: Vec<Candidate>,
}

/// Symbol SINRs a codeword sees in `mode` on the matrices `hs`.
///
/// Both PM streams belong to one codeword; PMod symbols ride either
/// polarization with equal probability, so both columns contribute.
fn mode_sinrs(mode: MimoMode, hs: &[Matrix2], sigma2: f64, rx: PmReceiver) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(hs.len() * 2);
    for h in hs {
        match mode {
            MimoMode::Siso => out.extend(mimo_post_sinr(MimoScheme::Siso, h, sigma2)?),
            MimoMode::Optbc => out.extend(mimo_post_sinr(MimoScheme::Optbc, h, sigma2)?),
            MimoMode::Pm => out.extend(mimo_post_sinr(MimoScheme::Pm(rx), h, sigma2)?),
            MimoMode::Pmod => {
                out.extend(mimo_post_sinr(MimoScheme::Pmod { active: 0 }, h, sigma2)?);
                out.extend(mimo_post_sinr(MimoScheme::Pmod { active: 1 }, h, sigma2)?);
            }
        }
    }
    Ok(out)
}

fn validate_sets(bearers: &[Bearer], modes: &[MimoMode]) -> Result<()> {
    if bearers.is_empty() {
        return Err(Error::InvalidArgument("empty bearer table".into()));
    }
    if modes.is_empty() {
        return Err(Error::InvalidArgument("empty MIMO mode set".into()));
    }
    Ok(())
}

/// Evaluates every tuple on the matrices `hs` (one per block, or one per
/// symbol) at noise variance `sigma2`.
pub fn evaluate_candidates(
    hs: &[Matrix2],
    sigma2: f64,
    bearers: &[Bearer],
    modes: &[MimoMode],
    luts: &LutSet,
    cfg: &AdaptConfig,
) -> Result<Vec<Candidate>> {
    validate_sets(bearers, modes)?;
    let mut out = Vec::with_capacity(bearers.len() * modes.len());
    for &mode in modes {
        let sinrs = mode_sinrs(mode, hs, sigma2, cfg.pm_receiver)?;
        let mut cache: [Option<f64>; 7] = [None; 7];
        for (bi, b) in bearers.iter().enumerate() {
            let g = match cache[b.d as usize] {
                Some(g) => g,
                None => {
                    let g = effective_sinr(&sinrs, luts.get(b.d)?, &cfg.esm)?;
                    cache[b.d as usize] = Some(g);
                    g
                }
            };
            out.push(Candidate {
                mode,
                bearer: bi,
                gamma_eff_db: lin_to_db(g),
                per: b.per.per(g),
                bits: b.bits(mode),
            });
        }
    }
    Ok(out)
}

/// Picks the tuple from evaluated candidates.
///
/// Feasible tuples (PER at most `per_target`) compete on rate, then lower
/// PER, then simpler mode, then lower modulation order. Without any feasible
/// tuple the minimum-PER one is returned and flagged.
pub fn choose(candidates: &[Candidate], bearers: &[Bearer], per_target: f64) -> Option<(Candidate, bool)> {
    let d = |c: &Candidate| bearers[c.bearer].d;
    let feasible = candidates
        .iter()
        .filter(|c| c.per <= per_target)
        .min_by(|a, b| {
            b.bits
                .cmp(&a.bits)
                .then(a.per.total_cmp(&b.per))
                .then(a.mode.cmp(&b.mode))
                .then(d(a).cmp(&d(b)))
        });
    if let Some(c) = feasible {
        return Some((*c, true));
    }
    candidates
        .iter()
        .min_by(|a, b| a.per.total_cmp(&b.per).then(a.mode.cmp(&b.mode)).then(d(a).cmp(&d(b))))
        .map(|c| (*c, false))
}

/// Chooses the tuple for channel `h` at noise variance `sigma2`.
pub fn select_tuple(
    h: &Matrix2,
    sigma2: f64,
    bearers: &[Bearer],
    modes: &[MimoMode],
    luts: &LutSet,
    cfg: &AdaptConfig,
) -> Result<Selection> {
    let candidates = evaluate_candidates(std::slice::from_ref(h), sigma2, bearers, modes, luts, cfg)?;
    let (chosen, feasible) = choose(&candidates, bearers, cfg.per_target).expect("nonempty candidate set");
    Ok(Selection {
        chosen,
        feasible,
        candidates,
    })
}

/// The most conservative tuple: lowest rate, preferring OPTBC, then the
/// simpler mode and the lower modulation order.
pub fn bootstrap_tuple(bearers: &[Bearer], modes: &[MimoMode]) -> Result<(MimoMode, usize)> {
    validate_sets(bearers, modes)?;
    let mut best: Option<(MimoMode, usize)> = None;
    let key = |m: MimoMode, i: usize| (bearers[i].bits(m), m != MimoMode::Optbc, m, bearers[i].d);
    for &m in modes {
        for i in 0..bearers.len() {
            if best.is_none_or(|(bm, bi)| key(m, i) < key(bm, bi)) {
                best = Some((m, i));
            }
        }
    }
    Ok(best.expect("nonempty sets"))
}

/// One simulated block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptDecision {
    pub block: usize,
    pub mode: MimoMode,
    pub bearer: usize,
    pub d: u32,
    pub code_rate: f64,
    /// Effective SINR of the chosen tuple on the channel used for the
    /// decision, dB.
    pub gamma_eff_db: f64,
    pub per_pred: f64,
    pub per_true: f64,
    pub feasible: bool,
    pub success: bool,
    pub bits: u64,
}

/// Trip simulation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripConfig {
    pub scenario: ScenarioParams,
    pub calibration: Calibration,
    pub adapt: AdaptConfig,
    pub feedback_delay_s: f64,
    /// Interpolate the channel across the symbols of each block instead of
    /// holding it constant.
    pub intra_block: bool,
}

impl TripConfig {
    pub fn new(scenario: ScenarioParams, center_snr_db: f64) -> Self {
        TripConfig {
            calibration: Calibration::for_center_snr(&scenario, center_snr_db),
            feedback_delay_s: scenario.feedback_delay_s,
            scenario,
            adapt: AdaptConfig::default(),
            intra_block: false,
        }
    }
}

/// Runs the selector over a trip.
///
/// The decision for block `k` is made on block `k - delay`; the first
/// `delay` blocks use [`bootstrap_tuple`]. Block `k` succeeds when a uniform
/// draw from the seeded stream is at least the PER of the chosen tuple on
/// block `k`'s own channel, so policies run with the same seed share their
/// randomness.
pub fn simulate_trip(
    series: &ChannelSeries,
    cfg: &TripConfig,
    bearers: &[Bearer],
    modes: &[MimoMode],
    luts: &LutSet,
    seed: u64,
) -> Result<Vec<AdaptDecision>> {
    validate_sets(bearers, modes)?;
    let delay = blocks_for(cfg.feedback_delay_s, series.block_period_s())?;
    if series.len() <= delay {
        return Err(Error::InvalidArgument(format!(
            "series of {} blocks is not longer than the {delay}-block feedback delay",
            series.len()
        )));
    }
    let snr = snr_per_block(series, &cfg.scenario, &cfg.calibration);
    let n_sym = cfg.scenario.block_symbols;
    let matrices = |k: usize| -> Vec<Matrix2> {
        if cfg.intra_block {
            (0..n_sym).map(|n| series.symbol_channel(k, n, n_sym)).collect()
        } else {
            vec![series.entries()[k].h]
        }
    };

    let evaluations: Vec<Vec<Candidate>> = (0..series.len())
        .into_par_iter()
        .map(|k| evaluate_candidates(&matrices(k), 1.0 / snr[k], bearers, modes, luts, &cfg.adapt))
        .collect::<Result<_>>()?;

    let boot = bootstrap_tuple(bearers, modes)?;
    let mut u = rng::stream(seed, 0x1a);
    let mut out = Vec::with_capacity(series.len());
    for k in 0..series.len() {
        let (plan, feasible) = if k >= delay {
            choose(&evaluations[k - delay], bearers, cfg.adapt.per_target).expect("nonempty")
        } else {
            let c = *evaluations[k]
                .iter()
                .find(|c| (c.mode, c.bearer) == boot)
                .expect("bootstrap tuple is a candidate");
            (c, c.per <= cfg.adapt.per_target)
        };
        let actual = evaluations[k]
            .iter()
            .find(|c| (c.mode, c.bearer) == (plan.mode, plan.bearer))
            .expect("tuple evaluated on every block");
        let draw: f64 = u.random();
        let success = draw >= actual.per;
        let b = &bearers[plan.bearer];
        out.push(AdaptDecision {
            block: k,
            mode: plan.mode,
            bearer: plan.bearer,
            d: b.d,
            code_rate: b.code_rate,
            gamma_eff_db: plan.gamma_eff_db,
            per_pred: plan.per,
            per_true: actual.per,
            feasible,
            success,
            bits: if success { plan.bits } else { 0 },
        });
    }
    Ok(out)
}

/// Empirical CDF of per-block throughput (bits per second): one
/// `(throughput, F)` pair per distinct value, ending at `F = 1`.
pub fn throughput_cdf(decisions: &[AdaptDecision], block_period_s: f64) -> Result<Vec<(f64, f64)>> {
    let bits: Vec<u64> = decisions.iter().map(|d| d.bits).collect();
    throughput_cdf_from_bits(&bits, block_period_s)
}

/// [`throughput_cdf`] from the delivered bits of each block.
pub fn throughput_cdf_from_bits(bits: &[u64], block_period_s: f64) -> Result<Vec<(f64, f64)>> {
    if bits.is_empty() {
        return Err(Error::InvalidArgument("no decisions".into()));
    }
    if !(block_period_s > 0.0) {
        return Err(Error::InvalidArgument("block period must be positive".into()));
    }
    let mut bits = bits.to_vec();
    bits.sort_unstable();
    let n = bits.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, b) in bits.iter().enumerate() {
        let x = *b as f64 / block_period_s;
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = f,
            _ => out.push((x, f)),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripSummary {
    pub blocks: usize,
    pub mean_throughput_bps: f64,
    /// Failed blocks over all blocks.
    pub per: f64,
    pub feasible_blocks: usize,
    pub feasible_failures: usize,
    pub infeasible_blocks: usize,
    pub mode_histogram: BTreeMap<String, usize>,
}

pub fn summarize(decisions: &[AdaptDecision], block_period_s: f64) -> TripSummary {
    let mut hist: BTreeMap<String, usize> = MimoMode::ALL.iter().map(|m| (m.name().to_string(), 0)).collect();
    for d in decisions {
        *hist.get_mut(d.mode.name()).expect("all modes present") += 1;
    }
    let n = decisions.len().max(1) as f64;
    let feasible: Vec<&AdaptDecision> = decisions.iter().filter(|d| d.feasible).collect();
    TripSummary {
        blocks: decisions.len(),
        mean_throughput_bps: decisions.iter().map(|d| d.bits as f64).sum::<f64>() / n / block_period_s,
        per: decisions.iter().filter(|d| !d.success).count() as f64 / n,
        feasible_blocks: feasible.len(),
        feasible_failures: feasible.iter().filter(|d| !d.success).count(),
        infeasible_blocks: decisions.len() - feasible.len(),
        mode_histogram: hist,
    }
}

/// Share of blocks using `mode` in each tenth of the trip.
pub fn mode_share_by_decile(decisions: &[AdaptDecision], mode: MimoMode) -> [f64; 10] {
    let n = decisions.len();
    let mut share = [0.0; 10];
    for (i, s) in share.iter_mut().enumerate() {
        let part = &decisions[i * n / 10..(i + 1) * n / 10];
        if !part.is_empty() {
            *s = part.iter().filter(|d| d.mode == mode).count() as f64 / part.len() as f64;
        }
    }
    share
}

/// Wilson score upper bound for a binomial proportion at normal quantile `z`.
pub fn wilson_upper(failures: usize, trials: usize, z: f64) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre + spread) / (1.0 + z2 / n)).min(1.0)
}

pub const DECISION_HEADER: &str = "block,mode,d,c,gamma_eff_db,per_pred,success,bits";

pub fn write_decision_log(decisions: &[AdaptDecision], path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{DECISION_HEADER}")?;
    for d in decisions {
        writeln!(
            f,
            "{},{},{},{},{},{:e},{},{}",
            d.block,
            d.mode,
            d.d,
            d.code_rate,
            d.gamma_eff_db,
            d.per_pred,
            u8::from(d.success),
            d.bits
        )?;
    }
    f.flush()?;
    Ok(())
}

pub fn write_cdf(cdf: &[(f64, f64)], path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "throughput_bps,cdf")?;
    for (x, p) in cdf {
        writeln!(f, "{x},{p}")?;
    }
    f.flush()?;
    Ok(())
}
