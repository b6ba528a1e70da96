//! Monte Carlo AIR and PAIR estimators over the dual-polar AWGN channel.
//!
//! The channel is `y = x + w` with `w` circularly-symmetric complex Gaussian
//! of variance `sigma2` on each polarization, so the likelihood of a symbol
//! is proportional to `exp(-|y - x|^2 / sigma2)`. Both estimators share the
//! same per-sample posterior computation: with the same seed they see the same
//! noise realizations, and a single-digit labeling reproduces the AIR
//! estimate exactly.

use std::f64::consts::LN_2;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::constellation::{Constellation4D, Symbol4D};
use crate::error::{Error, Result};
use crate::labeling::Labeling;
use crate::rng::{self, Rng};

/// Samples drawn from one random substream.
const CHUNK: usize = 4096;

/// Default Monte Carlo sample count per SNR point.
pub const DEFAULT_SAMPLES: usize = 100_000;

pub fn sigma2_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// AWGN channel with per-polarization complex noise variance `sigma2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AwgnModel {
    sigma2: f64,
}

impl AwgnModel {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
        }
        Ok(AwgnModel { sigma2 })
    }

    /// SNR relative to unit signal power per polarization.
    pub fn from_snr_db(snr_db: f64) -> Self {
        AwgnModel {
            sigma2: sigma2_from_snr_db(snr_db),
        }
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn snr_db(&self) -> f64 {
        -10.0 * self.sigma2.log10()
    }
}

/// A Monte Carlo estimate in bits per 4D channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

fn unit_noise(rng: &mut Rng) -> [f64; 4] {
    // unit variance per complex component
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        s * rng.sample::<f64, _>(StandardNormal),
        s * rng.sample::<f64, _>(StandardNormal),
        s * rng.sample::<f64, _>(StandardNormal),
        s * rng.sample::<f64, _>(StandardNormal),
    ]
}

fn add_noise(x: &Symbol4D, w: &[f64; 4], std: f64) -> Symbol4D {
    Symbol4D::new(
        x.rh + Complex64::new(std * w[0], std * w[1]),
        x.lh + Complex64::new(std * w[2], std * w[3]),
    )
}

/// Log-likelihoods relative to their maximum and the matching weights.
struct Likelihoods {
    rel: Vec<f64>,
    weights: Vec<f64>,
    ln_total: f64,
}

impl Likelihoods {
    fn new() -> Self {
        Likelihoods {
            rel: Vec::new(),
            weights: Vec::new(),
            ln_total: 0.0,
        }
    }

    fn compute(&mut self, symbols: &[Symbol4D], y: &Symbol4D, sigma2: f64) {
        self.rel.clear();
        self.rel.extend(symbols.iter().map(|x| -y.dist2(x) / sigma2));
        let max = self.rel.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for l in &mut self.rel {
            *l -= max;
        }
        self.weights.clear();
        self.weights.extend(self.rel.iter().map(|l| l.exp()));
        self.ln_total = self.weights.iter().sum::<f64>().ln();
    }

    /// `ln sum_{j in set} w_j`, falling back to the log domain on underflow.
    fn ln_sum(&self, set: impl Iterator<Item = usize> + Clone) -> f64 {
        let s: f64 = set.clone().map(|j| self.weights[j]).sum();
        if s > 0.0 {
            return s.ln();
        }
        let max = set.clone().map(|j| self.rel[j]).fold(f64::NEG_INFINITY, f64::max);
        max + set.map(|j| (self.rel[j] - max).exp()).sum::<f64>().ln()
    }
}

/// Posterior probabilities `P(x_j | y)` under uniform priors.
pub fn posterior(c: &Constellation4D, y: &Symbol4D, model: &AwgnModel) -> Vec<f64> {
    let mut lk = Likelihoods::new();
    lk.compute(c.symbols(), y, model.sigma2);
    let total = lk.ln_total.exp();
    lk.weights.iter().map(|w| w / total).collect()
}

/// Runs `term(tx_index, likelihoods)` over `samples` noise draws, chunked over
/// independent substreams, and reduces to mean and standard error.
fn estimate<F>(symbols: &[Symbol4D], sigma2: f64, samples: usize, seed: u64, term: F) -> McEstimate
where
    F: Fn(usize, &Likelihoods) -> f64 + Sync,
{
    let size = symbols.len();
    let std = sigma2.sqrt();
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, c as u64);
            let mut lk = Likelihoods::new();
            let (mut sum, mut sumsq) = (0.0, 0.0);
            let end = ((c + 1) * CHUNK).min(samples);
            for s in c * CHUNK..end {
                let tx = s % size;
                let w = unit_noise(&mut rng);
                let y = add_noise(&symbols[tx], &w, std);
                lk.compute(symbols, &y, sigma2);
                let t = term(tx, &lk);
                sum += t;
                sumsq += t * t;
            }
            (sum, sumsq)
        })
        .collect();
    let (sum, sumsq) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (s, q)| (a + s, b + q));
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 {
        ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    McEstimate {
        value: mean,
        std_error: (var / n).sqrt(),
        samples,
        seed,
    }
}

/// Achievable information rate of the constellation with uniform inputs.
pub fn air(c: &Constellation4D, model: &AwgnModel, samples: usize, seed: u64) -> McEstimate {
    let log2m = (c.len() as f64).log2();
    estimate(c.symbols(), model.sigma2, samples.max(1), seed, |tx, lk| {
        log2m + (lk.ln_sum(std::iter::once(tx)) - lk.ln_total) / LN_2
    })
}

/// Per-position digit tables of a labeling.
struct DigitTables {
    /// `digits[p][j]`: digit at position `p` of the label of symbol `j`.
    digits: Vec<Vec<u32>>,
    /// `members[p][v]`: symbols whose digit at position `p` equals `v`.
    members: Vec<Vec<Vec<usize>>>,
    /// `log2(M / |members[p][v]|)`.
    log_ratio: Vec<Vec<f64>>,
}

impl DigitTables {
    fn new(labeling: &Labeling) -> Self {
        let size = labeling.len();
        let q = 1usize << labeling.field_exponent();
        let mut digits = Vec::new();
        let mut members = Vec::new();
        let mut log_ratio = Vec::new();
        for p in 0..labeling.digits_per_symbol() {
            let d: Vec<u32> = (0..size).map(|j| labeling.digit(j, p)).collect();
            let mut mem = vec![Vec::new(); q];
            for (j, &v) in d.iter().enumerate() {
                mem[v as usize].push(j);
            }
            log_ratio.push(
                mem.iter()
                    .map(|s| if s.is_empty() { 0.0 } else { (size as f64 / s.len() as f64).log2() })
                    .collect(),
            );
            digits.push(d);
            members.push(mem);
        }
        DigitTables {
            digits,
            members,
            log_ratio,
        }
    }
}

/// Pragmatic AIR: the sum over digit positions of the mutual information
/// between each label digit and the channel output. Binary labelings give the
/// BICM generalized mutual information; for `GF(2^n)` digits the empirical
/// digit distribution of the label set is used as the prior.
pub fn pair(
    c: &Constellation4D,
    labeling: &Labeling,
    model: &AwgnModel,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    labeling.check_matches(c)?;
    let tables = DigitTables::new(labeling);
    Ok(estimate(c.symbols(), model.sigma2, samples.max(1), seed, |tx, lk| {
        let mut total = 0.0;
        for p in 0..tables.digits.len() {
            let v = tables.digits[p][tx] as usize;
            let set = &tables.members[p][v];
            total += tables.log_ratio[p][v] + (lk.ln_sum(set.iter().copied()) - lk.ln_total) / LN_2;
        }
        total
    }))
}

/// Which estimator a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Air,
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub estimate: McEstimate,
}

/// Evaluates the metric over an SNR grid. Point `k` uses the child seed
/// `(seed, k)`, so a one-point grid reproduces a direct call with
/// `rng::child_seed(seed, 0)`.
pub fn sweep(
    c: &Constellation4D,
    labeling: Option<&Labeling>,
    metric: Metric,
    snr_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    snr_grid
        .iter()
        .enumerate()
        .map(|(k, &snr_db)| {
            let model = AwgnModel::from_snr_db(snr_db);
            let point_seed = rng::child_seed(seed, k as u64);
            let estimate = match metric {
                Metric::Air => air(c, &model, samples, point_seed),
                Metric::Pair => {
                    let l = labeling.ok_or_else(|| {
                        Error::InvalidArgument("PAIR sweep requires a labeling".into())
                    })?;
                    pair(c, l, &model, samples, point_seed)?
                }
            };
            Ok(SweepPoint { snr_db, estimate })
        })
        .collect()
}

/// Writes `snr_db,value,std_error,samples` rows.
pub fn write_sweep_csv(points: &[SweepPoint], path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "snr_db,value,std_error,samples")?;
    for p in points {
        writeln!(
            f,
            "{},{},{},{}",
            p.snr_db, p.estimate.value, p.estimate.std_error, p.estimate.samples
        )?;
    }
    Ok(())
}

/// SNR (dB) at which a curve sampled on `points` first reaches `level`, by
/// linear interpolation. `None` if the curve never gets there.
pub fn crossing_snr(points: &[SweepPoint], level: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        let (va, vb) = (a.estimate.value, b.estimate.value);
        if va <= level && vb >= level && vb > va {
            Some(a.snr_db + (level - va) / (vb - va) * (b.snr_db - a.snr_db))
        } else {
            None
        }
    })
}

/// Pre-drawn noise realizations shared by all candidates of an optimization,
/// so fitness comparisons see the same randomness.
#[derive(Debug, Clone)]
pub struct CommonNoise {
    noise: Vec<[f64; 4]>,
}

impl CommonNoise {
    pub fn new(samples: usize, seed: u64) -> Self {
        let mut noise = Vec::with_capacity(samples);
        for c in 0..samples.div_ceil(CHUNK) {
            let mut rng = rng::stream(seed, c as u64);
            let n = CHUNK.min(samples - c * CHUNK);
            noise.extend((0..n).map(|_| unit_noise(&mut rng)));
        }
        CommonNoise { noise }
    }

    pub fn len(&self) -> usize {
        self.noise.len()
    }

    pub fn is_empty(&self) -> bool {
        self.noise.is_empty()
    }

    /// AIR point estimate for an arbitrary symbol set.
    pub fn air(&self, symbols: &[Symbol4D], sigma2: f64) -> f64 {
        let log2m = (symbols.len() as f64).log2();
        let std = sigma2.sqrt();
        let mut lk = Likelihoods::new();
        let mut sum = 0.0;
        for (s, w) in self.noise.iter().enumerate() {
            let tx = s % symbols.len();
            lk.compute(symbols, &add_noise(&symbols[tx], w, std), sigma2);
            sum += log2m + (lk.ln_sum(std::iter::once(tx)) - lk.ln_total) / LN_2;
        }
        sum / self.noise.len() as f64
    }
}

/// Posterior probabilities of every noise sample, kept sparsely.
///
/// Entries below `1e-12` of the largest weight are dropped; the transmitted
/// symbol is always kept. Labeling fitness evaluated from the table costs a
/// handful of operations per sample instead of a full likelihood pass.
#[derive(Debug, Clone)]
pub struct PosteriorTable {
    size: usize,
    tx: Vec<u32>,
    offsets: Vec<usize>,
    entries: Vec<(u32, f64)>,
}

const SPARSE_FLOOR: f64 = 1e-12;

impl PosteriorTable {
    pub fn new(c: &Constellation4D, sigma2: f64, noise: &CommonNoise) -> Self {
        let symbols = c.symbols();
        let std = sigma2.sqrt();
        let mut lk = Likelihoods::new();
        let mut tx = Vec::with_capacity(noise.len());
        let mut offsets = Vec::with_capacity(noise.len() + 1);
        let mut entries = Vec::new();
        offsets.push(0);
        for (s, w) in noise.noise.iter().enumerate() {
            let i = s % symbols.len();
            lk.compute(symbols, &add_noise(&symbols[i], w, std), sigma2);
            let total = lk.ln_total.exp();
            for (j, &wj) in lk.weights.iter().enumerate() {
                if wj >= SPARSE_FLOOR || j == i {
                    entries.push((j as u32, wj / total));
                }
            }
            tx.push(i as u32);
            offsets.push(entries.len());
        }
        PosteriorTable {
            size: symbols.len(),
            tx,
            offsets,
            entries,
        }
    }

    /// PAIR point estimate for a labeling, given as the label value of each
    /// symbol, with `digits` digits of `n` bits each.
    pub fn pair(&self, labels: &[u32], n: u32, digits: u32) -> f64 {
        debug_assert_eq!(labels.len(), self.size);
        let mask = (1u32 << n) - 1;
        let q = 1usize << n;
        let size = self.size as f64;
        // log2(M / |S|) per (position, digit value)
        let mut log_ratio = vec![0.0; digits as usize * q];
        for p in 0..digits {
            let shift = n * (digits - 1 - p);
            let mut count = vec![0usize; q];
            for &l in labels {
                count[((l >> shift) & mask) as usize] += 1;
            }
            for v in 0..q {
                if count[v] > 0 {
                    log_ratio[p as usize * q + v] = (size / count[v] as f64).log2();
                }
            }
        }
        let mut sum = 0.0;
        for s in 0..self.tx.len() {
            let row = &self.entries[self.offsets[s]..self.offsets[s + 1]];
            let lt = labels[self.tx[s] as usize];
            for p in 0..digits {
                let shift = n * (digits - 1 - p);
                let v = (lt >> shift) & mask;
                let mass: f64 = row
                    .iter()
                    .filter(|(j, _)| (labels[*j as usize] >> shift) & mask == v)
                    .map(|(_, pj)| pj)
                    .sum();
                sum += log_ratio[p as usize * q + v as usize] + mass.log2();
            }
        }
        sum / self.tx.len() as f64
    }
}
