//! Dual-polarized land mobile satellite channel time series.
//!
//! Each 20 ms block carries one 2x2 matrix. Every entry is a Loo process: a
//! line-of-sight phasor with log-normal shadowed amplitude plus a Rayleigh
//! diffuse part. Cross-polar entries are scaled down by the XPD, and the two
//! co-polar diffuse parts are correlated with coefficient `rho`. Shadowing and
//! diffuse fading evolve as first-order autoregressive processes whose
//! coefficients follow from the terminal speed.
//!
//! A parabolic beam rolloff in dB sets the large-scale gain from beam center
//! (0 dB) to beam edge (`-edge_loss_db`).

use std::f64::consts::PI;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{parse_err, Error, Result};
use crate::pla::Matrix2;
use crate::rng;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default calibrated SNR at beam center, dB.
pub const DEFAULT_CENTER_SNR_DB: f64 = 6.0;

/// Link and trip parameters. Defaults reproduce the reference scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub carrier_hz: f64,
    pub beam_diameter_km: f64,
    pub noise_dbw_hz: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbw: f64,
    pub block_symbols: usize,
    pub speed_kmh: f64,
    pub gt_db_k: f64,
    pub feedback_delay_s: f64,
    pub block_period_s: f64,
    /// Distance travelled from beam center; the beam radius by default.
    pub trip_km: f64,
    /// Beam rolloff at the edge (half the beam diameter), dB.
    pub edge_loss_db: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            carrier_hz: 1.59e9,
            beam_diameter_km: 300.0,
            noise_dbw_hz: -204.0,
            bandwidth_hz: 32e3,
            tx_power_dbw: 4.0,
            block_symbols: 640,
            speed_kmh: 50.0,
            gt_db_k: -13.5,
            feedback_delay_s: 0.5,
            block_period_s: 0.020,
            trip_km: 150.0,
            edge_loss_db: 4.0,
        }
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_hz", self.carrier_hz),
            ("beam_diameter_km", self.beam_diameter_km),
            ("bandwidth_hz", self.bandwidth_hz),
            ("speed_kmh", self.speed_kmh),
            ("block_period_s", self.block_period_s),
            ("trip_km", self.trip_km),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.block_symbols == 0 {
            return Err(Error::InvalidArgument("block_symbols must be positive".into()));
        }
        if !(self.feedback_delay_s >= 0.0) || !(self.edge_loss_db >= 0.0) {
            return Err(Error::InvalidArgument(
                "feedback_delay_s and edge_loss_db must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn speed_m_s(&self) -> f64 {
        self.speed_kmh / 3.6
    }

    pub fn trip_duration_s(&self) -> f64 {
        self.trip_km * 1e3 / self.speed_m_s()
    }

    /// Number of blocks in the trip, rounded to the nearest integer.
    pub fn block_count(&self) -> usize {
        (self.trip_duration_s() / self.block_period_s).round() as usize
    }

    /// Feedback delay in blocks; the delay must be a whole number of blocks.
    pub fn delay_blocks(&self) -> Result<usize> {
        blocks_for(self.feedback_delay_s, self.block_period_s)
    }

    /// Beam rolloff at `distance_km` from the center: `-edge_loss * (r / R)^2`.
    pub fn largescale_db(&self, distance_km: f64) -> f64 {
        let r = distance_km / (self.beam_diameter_km / 2.0);
        -self.edge_loss_db * r * r
    }

    pub fn doppler_hz(&self) -> f64 {
        self.speed_m_s() * self.carrier_hz / SPEED_OF_LIGHT
    }

    /// Link budget before calibration,
    /// `tx_power + gt - (noise + 10 log10 bandwidth)`, dB.
    pub fn raw_budget_db(&self) -> f64 {
        self.tx_power_dbw + self.gt_db_k - (self.noise_dbw_hz + 10.0 * self.bandwidth_hz.log10())
    }
}

pub(crate) fn blocks_for(delay_s: f64, period_s: f64) -> Result<usize> {
    let k = delay_s / period_s;
    let r = k.round();
    if !(delay_s >= 0.0) || (k - r).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "delay {delay_s} s is not a multiple of the {period_s} s block period"
        )));
    }
    Ok(r as usize)
}

/// Statistical channel model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmsModelParams {
    pub name: String,
    /// Mean of the LOS amplitude in dB (of the underlying normal in log domain).
    pub loo_mean_db: f64,
    /// Standard deviation of the LOS amplitude, dB.
    pub loo_std_db: f64,
    /// Diffuse multipath power relative to unit LOS power, dB.
    pub multipath_db: f64,
    /// Co-polar to cross-polar power ratio, dB. `f64::INFINITY` disables
    /// cross-polar coupling.
    pub xpd_db: f64,
    /// Correlation of the two co-polar diffuse components.
    pub rho: f64,
    /// Shadowing decorrelation distance, m.
    pub shadow_corr_m: f64,
}

impl Default for LmsModelParams {
    fn default() -> Self {
        LmsModelParams::maritime()
    }
}

impl LmsModelParams {
    /// Open-sea preset: strong line of sight with weak sea-surface multipath.
    pub fn maritime() -> Self {
        LmsModelParams {
            name: "maritime".into(),
            loo_mean_db: -0.5,
            loo_std_db: 1.0,
            multipath_db: -12.0,
            xpd_db: 15.0,
            rho: 0.3,
            shadow_corr_m: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.loo_std_db >= 0.0) || !self.loo_mean_db.is_finite() || !self.multipath_db.is_finite() {
            return Err(Error::InvalidArgument("invalid Loo parameters".into()));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidArgument(format!("rho {} outside [-1, 1]", self.rho)));
        }
        if self.xpd_db.is_nan() || !(self.shadow_corr_m > 0.0) {
            return Err(Error::InvalidArgument("invalid XPD or correlation distance".into()));
        }
        Ok(())
    }

    fn log_params(&self) -> (f64, f64) {
        let k = 10f64.ln() / 20.0;
        (self.loo_mean_db * k, self.loo_std_db * k)
    }

    /// Mean power of a co-polar entry before normalization.
    fn raw_copolar_power(&self) -> f64 {
        let (mu, s) = self.log_params();
        (2.0 * mu + 2.0 * s * s).exp() + 10f64.powf(self.multipath_db / 10.0)
    }

    /// Power of a cross-polar entry relative to a co-polar one.
    pub fn cross_scale(&self) -> f64 {
        if self.xpd_db == f64::INFINITY {
            0.0
        } else {
            10f64.powf(-self.xpd_db / 10.0)
        }
    }

    /// Analytic `E[||H||_F^2] / 2` after normalization to `E[|h11|^2] = 1`.
    pub fn mean_channel_power(&self) -> f64 {
        1.0 + self.cross_scale()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEntry {
    pub t: f64,
    pub h: Matrix2,
    pub largescale_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub profile: String,
    pub speed_kmh: f64,
    pub seed: u64,
}

/// Uniformly sampled sequence of channel matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSeries {
    block_period_s: f64,
    entries: Vec<ChannelEntry>,
    pub metadata: SeriesMetadata,
}

impl ChannelSeries {
    pub fn new(block_period_s: f64, entries: Vec<ChannelEntry>, metadata: SeriesMetadata) -> Result<Self> {
        if !(block_period_s > 0.0) {
            return Err(Error::Validation("block period must be positive".into()));
        }
        if entries.is_empty() {
            return Err(Error::Validation("empty channel series".into()));
        }
        for (k, e) in entries.iter().enumerate() {
            let finite = e.t.is_finite()
                && e.largescale_db.is_finite()
                && e.h.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite());
            if !finite {
                return Err(Error::Validation(format!("non-finite value in block {k}")));
            }
        }
        for (k, w) in entries.windows(2).enumerate() {
            let dt = w[1].t - w[0].t;
            if !(dt > 0.0) {
                return Err(Error::Validation(format!("timestamps not increasing at block {}", k + 1)));
            }
            if (dt - block_period_s).abs() > 1e-6 * block_period_s.max(1.0) {
                return Err(Error::Validation(format!(
                    "nonuniform spacing {dt} s at block {} (period {block_period_s} s)",
                    k + 1
                )));
            }
        }
        Ok(ChannelSeries {
            block_period_s,
            entries,
            metadata,
        })
    }

    pub fn block_period_s(&self) -> f64 {
        self.block_period_s
    }

    pub fn entries(&self) -> &[ChannelEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Channel seen by symbol `n` of `count` in block `k`, interpolated
    /// linearly from the previous block's matrix. Block 0 is constant.
    pub fn symbol_channel(&self, k: usize, n: usize, count: usize) -> Matrix2 {
        let cur = self.entries[k].h;
        if k == 0 || count == 0 {
            return cur;
        }
        let prev = self.entries[k - 1].h;
        let t = (n + 1) as f64 / count as f64;
        let mut h = cur;
        for r in 0..2 {
            for c in 0..2 {
                h[r][c] = prev[r][c] * (1.0 - t) + cur[r][c] * t;
            }
        }
        h
    }
}

fn cn(rng: &mut rng::Rng) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(
        s * rng.sample::<f64, _>(StandardNormal),
        s * rng.sample::<f64, _>(StandardNormal),
    )
}

/// Generates the trip from beam center outwards, one matrix per block.
///
/// Block `k` is stamped `t = (k + 1) T`, so the final block sits exactly at
/// the end of the trip.
pub fn gen_maritime_series(p: &ScenarioParams, model: &LmsModelParams, seed: u64) -> Result<ChannelSeries> {
    p.validate()?;
    model.validate()?;
    let blocks = p.block_count();
    if blocks == 0 {
        return Err(Error::InvalidArgument("trip shorter than one block".into()));
    }
    let mut rng = rng::stream(seed, 0xc4);
    let period = p.block_period_s;
    let step_m = p.speed_m_s() * period;
    let a_shadow = (-step_m / model.shadow_corr_m).exp();
    let a_diffuse = libm::j0(2.0 * PI * p.doppler_hz() * period).abs().min(1.0);
    let inn_shadow = (1.0 - a_shadow * a_shadow).sqrt();
    let inn_diffuse = (1.0 - a_diffuse * a_diffuse).sqrt();

    let (mu, s) = model.log_params();
    let mp = 10f64.powf(model.multipath_db / 10.0);
    let norm = model.raw_copolar_power().sqrt().recip();
    let cross = model.cross_scale().sqrt();
    let rho = model.rho;
    let rho_c = (1.0 - rho * rho).sqrt();

    // entry order: h11, h12, h21, h22
    let los_phase: [Complex64; 4] = std::array::from_fn(|_| Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)));
    let mut shadow: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let mut diffuse: [Complex64; 4] = std::array::from_fn(|_| cn(&mut rng));

    let speed = p.speed_m_s();
    let mut entries = Vec::with_capacity(blocks);
    for k in 0..blocks {
        if k > 0 {
            for v in shadow.iter_mut() {
                *v = a_shadow * *v + inn_shadow * rng.sample::<f64, _>(StandardNormal);
            }
            for v in diffuse.iter_mut() {
                *v = *v * a_diffuse + cn(&mut rng) * inn_diffuse;
            }
        }
        let mut h = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, z) in h.iter_mut().flatten().enumerate() {
            // h22's diffuse part mixes with h11's to reach correlation rho
            let d = if i == 3 { diffuse[0] * rho + diffuse[3] * rho_c } else { diffuse[i] };
            let amp = (mu + s * shadow[i]).exp();
            let scale = if i == 1 || i == 2 { cross } else { 1.0 };
            *z = (los_phase[i] * amp + d * mp.sqrt()) * norm * scale;
        }
        let t = (k + 1) as f64 * period;
        let distance_km = speed * t / 1e3;
        entries.push(ChannelEntry {
            t,
            h,
            largescale_db: p.largescale_db(distance_km),
        });
    }
    ChannelSeries::new(
        period,
        entries,
        SeriesMetadata {
            profile: model.name.clone(),
            speed_kmh: p.speed_kmh,
            seed,
        },
    )
}

/// Offset that folds path loss and other fixed link terms into the budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub offset_db: f64,
}

impl Calibration {
    /// Chooses the offset so that a block with 0 dB large-scale gain sees
    /// `center_snr_db` under `p`. Later changes to `p` are not compensated.
    pub fn for_center_snr(p: &ScenarioParams, center_snr_db: f64) -> Self {
        Calibration {
            offset_db: center_snr_db - p.raw_budget_db(),
        }
    }
}

/// Pre-detection SNR (linear) of every block: `sigma_w^2 = 1 / snr` for the
/// unit-power channel matrices.
pub fn snr_per_block(series: &ChannelSeries, p: &ScenarioParams, cal: &Calibration) -> Vec<f64> {
    let base = p.raw_budget_db() + cal.offset_db;
    series
        .entries
        .iter()
        .map(|e| 10f64.powf((base + e.largescale_db) / 10.0))
        .collect()
}

pub const SERIES_HEADER: &str = "t_s,re_h11,im_h11,re_h12,im_h12,re_h21,im_h21,re_h22,im_h22,largescale_db";

pub fn save_series(series: &ChannelSeries, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let m = &series.metadata;
    writeln!(
        f,
        "# profile={} speed_kmh={} seed={} block_period_s={}",
        m.profile, m.speed_kmh, m.seed, series.block_period_s
    )?;
    writeln!(f, "{SERIES_HEADER}")?;
    for e in &series.entries {
        write!(f, "{}", e.t)?;
        for z in e.h.iter().flatten() {
            write!(f, ",{},{}", z.re, z.im)?;
        }
        writeln!(f, ",{}", e.largescale_db)?;
    }
    f.flush()?;
    Ok(())
}

pub fn load_series(path: impl AsRef<Path>) -> Result<ChannelSeries> {
    series_from_csv(&std::fs::read_to_string(path)?)
}

pub fn series_from_csv(text: &str) -> Result<ChannelSeries> {
    let mut meta = SeriesMetadata {
        profile: "external".into(),
        speed_kmh: f64::NAN,
        seed: 0,
    };
    let mut period = None;
    let mut entries = Vec::new();
    let mut header_seen = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            for kv in h.split_whitespace() {
                let Some((k, v)) = kv.split_once('=') else { continue };
                let bad = || parse_err(line_no, format!("bad metadata value `{kv}`"));
                match k {
                    "profile" => meta.profile = v.to_string(),
                    "speed_kmh" => meta.speed_kmh = v.parse().map_err(|_| bad())?,
                    "seed" => meta.seed = v.parse().map_err(|_| bad())?,
                    "block_period_s" => period = Some(v.parse::<f64>().map_err(|_| bad())?),
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            if line.replace(' ', "") != SERIES_HEADER {
                return Err(parse_err(line_no, format!("expected header `{SERIES_HEADER}`")));
            }
            header_seen = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 10 {
            return Err(parse_err(line_no, format!("expected 10 columns, found {}", cols.len())));
        }
        let v: Vec<f64> = cols
            .iter()
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(line_no, "non-numeric value"))?;
        let z = |i: usize| Complex64::new(v[1 + 2 * i], v[2 + 2 * i]);
        entries.push(ChannelEntry {
            t: v[0],
            h: [[z(0), z(1)], [z(2), z(3)]],
            largescale_db: v[9],
        });
    }
    if !header_seen {
        return Err(parse_err(1, "missing header"));
    }
    let period = match period {
        Some(p) => p,
        None if entries.len() >= 2 => entries[1].t - entries[0].t,
        None => return Err(Error::Validation("cannot infer block period from one block".into())),
    };
    ChannelSeries::new(period, entries, meta)
}
