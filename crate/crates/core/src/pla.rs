//! Physical layer abstraction.
//!
//! MIESM maps a vector of per-symbol SINRs to one effective SINR through the
//! mutual information curve `phi` of the 2D modulation. The curve is sampled
//! offline by Monte Carlo on a fixed dB grid and stored as a lookup table;
//! post-detection SINRs come from closed forms per MIMO scheme.

use std::f64::consts::LN_2;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::{cross_qam32, rect_qam};
use crate::error::{parse_err, Error, Result};
use crate::rng;

/// First grid point of the MIESM tables, dB.
pub const LUT_MIN_DB: f64 = -20.0;
/// Last grid point, dB.
pub const LUT_MAX_DB: f64 = 27.0;
pub const LUT_STEP_DB: f64 = 0.5;
/// Number of grid points from `LUT_MIN_DB` to `LUT_MAX_DB` inclusive.
pub const LUT_POINTS: usize = 95;

/// Modulation orders (bits per 2D symbol) with a defined constellation.
pub const SUPPORTED_BITS: [u32; 5] = [1, 2, 4, 5, 6];

/// Mutual information within this many bits of the top of a table counts
/// as saturated; the table cannot resolve SNR differences there.
pub const SATURATION_TOL: f64 = 1e-9;

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Unit-energy 2D constellation for `d` bits: BPSK, QPSK, 16QAM, 32QAM cross
/// or 64QAM.
pub fn modulation_points(d: u32) -> Result<Vec<Complex64>> {
    match d {
        1 | 2 | 4 | 6 => Ok(rect_qam(d)?.points),
        5 => Ok(cross_qam32()),
        _ => Err(Error::UnsupportedOrder(format!("no 2D modulation with {d} bits"))),
    }
}

pub fn lut_grid() -> Vec<f64> {
    (0..LUT_POINTS).map(|k| LUT_MIN_DB + LUT_STEP_DB * k as f64).collect()
}

/// Sampled MIESM curve of one modulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiesmLut {
    d: u32,
    snr_db: Vec<f64>,
    phi: Vec<f64>,
}

/// Where an inverse lookup landed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Clamp {
    None,
    /// Below the first grid point; the value returned is the grid minimum.
    Low,
    /// At or above the last distinct table value; the value returned is the
    /// lowest SNR reaching it.
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inverse {
    /// Linear SINR.
    pub gamma: f64,
    pub clamp: Clamp,
}

impl MiesmLut {
    pub fn new(d: u32, snr_db: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if !SUPPORTED_BITS.contains(&d) {
            return Err(Error::UnsupportedOrder(format!("{d} bits")));
        }
        if snr_db.len() != phi.len() || snr_db.len() < 2 {
            return Err(Error::Validation("LUT needs at least two (snr, phi) pairs".into()));
        }
        if snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("LUT SNR grid must be strictly increasing".into()));
        }
        if phi.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Validation("LUT phi must be nondecreasing".into()));
        }
        if phi.iter().any(|&p| !(0.0..=d as f64).contains(&p)) {
            return Err(Error::Validation(format!("LUT phi must lie in [0, {d}]")));
        }
        Ok(MiesmLut { d, snr_db, phi })
    }

    pub fn bits(&self) -> u32 {
        self.d
    }

    pub fn snr_db(&self) -> &[f64] {
        &self.snr_db
    }

    pub fn values(&self) -> &[f64] {
        &self.phi
    }

    /// Mutual information (bits per 2D symbol) at linear SINR `gamma`,
    /// interpolated linearly in dB and clamped to the table ends.
    pub fn phi(&self, gamma: f64) -> f64 {
        self.phi_db(if gamma > 0.0 { lin_to_db(gamma) } else { f64::NEG_INFINITY })
    }

    pub fn phi_db(&self, snr_db: f64) -> f64 {
        let (g, p) = (&self.snr_db, &self.phi);
        let last = g.len() - 1;
        if snr_db.is_nan() {
            return f64::NAN;
        }
        if snr_db <= g[0] {
            return p[0];
        }
        if snr_db >= g[last] {
            return p[last];
        }
        let k = g.partition_point(|&x| x <= snr_db) - 1;
        let t = (snr_db - g[k]) / (g[k + 1] - g[k]);
        p[k] + t * (p[k + 1] - p[k])
    }

    /// Lowest SINR whose interpolated `phi` equals `info`.
    ///
    /// `info` must lie in `(0, d)`. Values beyond the table range are clamped
    /// and flagged.
    pub fn phi_inv(&self, info: f64) -> Result<Inverse> {
        if !(info > 0.0 && info < self.d as f64) {
            return Err(Error::OutOfRange(format!(
                "phi^-1 argument {info} outside (0, {})",
                self.d
            )));
        }
        let (g, p) = (&self.snr_db, &self.phi);
        if info <= p[0] {
            return Ok(Inverse {
                gamma: db_to_lin(g[0]),
                clamp: Clamp::Low,
            });
        }
        let top = p[p.len() - 1];
        if info >= top - SATURATION_TOL {
            let k = p.partition_point(|&x| x < top);
            return Ok(Inverse {
                gamma: db_to_lin(g[k]),
                clamp: Clamp::High,
            });
        }
        let k = p.partition_point(|&x| x < info);
        let t = (info - p[k - 1]) / (p[k] - p[k - 1]);
        Ok(Inverse {
            gamma: db_to_lin(g[k - 1] + t * (g[k] - g[k - 1])),
            clamp: Clamp::None,
        })
    }
}

/// Monte Carlo estimate of the 2D constellation-constrained mutual
/// information at every grid point, before monotone correction.
///
/// All grid points reuse the same noise draws, scaled by `sigma`.
pub fn miesm_raw(d: u32, samples: usize, seed: u64) -> Result<Vec<(f64, f64, f64)>> {
    let points = modulation_points(d)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let size = points.len();
    let log2m = (size as f64).log2();
    let mut r = rng::stream(seed, 0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let noise: Vec<Complex64> = (0..samples)
        .map(|_| {
            Complex64::new(
                s * r.sample::<f64, _>(StandardNormal),
                s * r.sample::<f64, _>(StandardNormal),
            )
        })
        .collect();
    Ok(lut_grid()
        .into_par_iter()
        .map(|snr_db| {
            let sigma2 = db_to_lin(-snr_db);
            let std = sigma2.sqrt();
            let mut exps = vec![0.0; size];
            let (mut sum, mut sumsq) = (0.0, 0.0);
            for (k, w) in noise.iter().enumerate() {
                let x = points[k % size];
                let wn = w * std;
                // exponent -(|x - x' + w|^2 - |w|^2) / sigma2, zero for x' = x
                for (e, xp) in exps.iter_mut().zip(&points) {
                    *e = -((x - xp + wn).norm_sqr() - wn.norm_sqr()) / sigma2;
                }
                let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + exps.iter().map(|e| (e - max).exp()).sum::<f64>().ln();
                let t = log2m - lse / LN_2;
                sum += t;
                sumsq += t * t;
            }
            let n = samples as f64;
            let mean = sum / n;
            let var = ((sumsq - n * mean * mean) / (n - 1.0).max(1.0)).max(0.0);
            (snr_db, mean, (var / n).sqrt())
        })
        .collect())
}

/// Pool-adjacent-violators isotonic regression with equal weights.
pub fn isotonic(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().unwrap();
            *last = ((a * na as f64 + b * nb as f64) / (na + nb) as f64, na + nb);
        }
    }
    blocks
        .into_iter()
        .flat_map(|(v, n)| std::iter::repeat_n(v, n))
        .collect()
}

/// Builds the MIESM table of a modulation over `-20:0.5:27` dB.
pub fn build_miesm_lut(d: u32, samples: usize, seed: u64) -> Result<MiesmLut> {
    let raw = miesm_raw(d, samples, seed)?;
    let values: Vec<f64> = raw.iter().map(|r| r.1).collect();
    let fixed = isotonic(&values);
    for ((snr, v, se), f) in raw.iter().zip(&fixed) {
        if (v - f).abs() > 2.0 * se && (v - f).abs() > 1e-12 {
            log::warn!("MIESM d={d}: monotone correction of {:.3e} at {snr} dB exceeds 2 std errors", v - f);
        }
    }
    // Pooled plateaus below saturation are tilted by a negligible amount so
    // that the inverse stays single valued.
    let top = d as f64;
    let mut phi: Vec<f64> = Vec::with_capacity(fixed.len());
    for v in fixed {
        let v = if v >= top - SATURATION_TOL { top } else { v.max(0.0) };
        let v = match phi.last() {
            Some(&prev) if v <= prev => (prev + 1e-12).min(top),
            _ => v,
        };
        phi.push(v);
    }
    MiesmLut::new(d, lut_grid(), phi)
}

/// Tables for every supported modulation, indexed by bits.
#[derive(Debug, Clone)]
pub struct LutSet {
    luts: Vec<MiesmLut>,
}

impl LutSet {
    pub fn build(samples: usize, seed: u64) -> Result<Self> {
        let luts = SUPPORTED_BITS
            .iter()
            .map(|&d| build_miesm_lut(d, samples, rng::child_seed(seed, d as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(LutSet { luts })
    }

    /// Tables shipped with the crate (200 000 samples per grid point).
    pub fn bundled() -> Self {
        let files = [
            include_str!("../data/miesm_d1.csv"),
            include_str!("../data/miesm_d2.csv"),
            include_str!("../data/miesm_d4.csv"),
            include_str!("../data/miesm_d5.csv"),
            include_str!("../data/miesm_d6.csv"),
        ];
        let luts = files
            .iter()
            .map(|t| lut_from_csv(t).expect("bundled MIESM table is valid"))
            .collect();
        LutSet { luts }
    }

    pub fn from_luts(luts: Vec<MiesmLut>) -> Self {
        LutSet { luts }
    }

    pub fn get(&self, d: u32) -> Result<&MiesmLut> {
        self.luts
            .iter()
            .find(|l| l.d == d)
            .ok_or_else(|| Error::UnsupportedOrder(format!("no LUT for {d} bits")))
    }

    pub fn luts(&self) -> &[MiesmLut] {
        &self.luts
    }
}

/// Calibration factors of the effective SINR mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EsmParams {
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for EsmParams {
    fn default() -> Self {
        EsmParams { beta1: 1.0, beta2: 1.0 }
    }
}

impl EsmParams {
    pub fn new(beta1: f64, beta2: f64) -> Result<Self> {
        if !(beta1 > 0.0 && beta2 > 0.0) {
            return Err(Error::InvalidArgument("beta1 and beta2 must be positive".into()));
        }
        Ok(EsmParams { beta1, beta2 })
    }
}

/// Effective SINR `beta1 * phi^-1(mean_n phi(gamma_n / beta2))`, linear.
///
/// Where the table cannot resolve the mean (every scaled input sits on the
/// saturated top plateau, or below the first grid point) the result is the
/// matching bound of the inputs: the smallest scaled input at the top, the
/// largest at the bottom. Constant inputs map to themselves either way.
/// Interpolation round-off is clipped to the range of the scaled inputs.
pub fn effective_sinr(gammas: &[f64], lut: &MiesmLut, params: &EsmParams) -> Result<f64> {
    if gammas.is_empty() {
        return Err(Error::InvalidArgument("empty SINR vector".into()));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative SINR {g}")));
    }
    let scaled = gammas.iter().map(|g| g / params.beta2);
    let mean = scaled.clone().map(|g| lut.phi(g)).sum::<f64>() / gammas.len() as f64;
    let lo = scaled.clone().fold(f64::INFINITY, f64::min);
    let hi = scaled.fold(0.0, f64::max);
    let d = lut.d as f64;
    let top = lut.phi[lut.phi.len() - 1];
    let inner = if mean >= top - SATURATION_TOL || mean >= d {
        lo
    } else if mean <= lut.phi[0] + SATURATION_TOL {
        hi
    } else {
        lut.phi_inv(mean)?.gamma.clamp(lo, hi)
    };
    Ok(params.beta1 * inner)
}

/// 2x2 channel matrix, `h[r][t]`: receive polarization `r`, transmit `t`.
pub type Matrix2 = [[Complex64; 2]; 2];

/// Linear receiver for polarization multiplexing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PmReceiver {
    /// Column energy `h_m^H h_m / sigma2` (interference-free matched filter).
    MatchedFilter,
    /// Zero forcing, `1 / ([(H^H H)^-1]_mm sigma2)`.
    TrueZf,
    /// Linear MMSE, `1 / [(I + H^H H / sigma2)^-1]_mm - 1`.
    Mmse,
}

/// MIMO scheme over the two polarizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MimoScheme {
    Siso,
    Optbc,
    Pm(PmReceiver),
    /// Polarized modulation with the symbol on transmit polarization `active`.
    Pmod { active: usize },
}

fn column_energy(h: &Matrix2, col: usize) -> f64 {
    h[0][col].norm_sqr() + h[1][col].norm_sqr()
}

/// Gram matrix `H^H H` (Hermitian).
fn gram(h: &Matrix2) -> Matrix2 {
    let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = h[0][i].conj() * h[0][j] + h[1][i].conj() * h[1][j];
        }
    }
    g
}

/// Diagonal of the inverse of a 2x2 Hermitian matrix, `None` if singular.
fn inverse_diagonal(a: &Matrix2) -> Option<[f64; 2]> {
    let det = (a[0][0] * a[1][1] - a[0][1] * a[1][0]).re;
    let scale = a[0][0].norm() + a[1][1].norm();
    if !(det.abs() > 1e-12 * scale * scale) {
        return None;
    }
    Some([a[1][1].re / det, a[0][0].re / det])
}

/// Post-detection SINR per stream.
///
/// SISO: `|h11|^2 / sigma2`. OPTBC: `||H||_F^2 / sigma2`. PM: one value per
/// polarization for the chosen receiver; a singular channel gives zero SINR
/// under zero forcing. PMod: the active column energy over `sigma2`.
pub fn mimo_post_sinr(scheme: MimoScheme, h: &Matrix2, sigma2: f64) -> Result<Vec<f64>> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma2 must be positive, got {sigma2}")));
    }
    Ok(match scheme {
        MimoScheme::Siso => vec![h[0][0].norm_sqr() / sigma2],
        MimoScheme::Optbc => vec![h.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>() / sigma2],
        MimoScheme::Pm(PmReceiver::MatchedFilter) => {
            vec![column_energy(h, 0) / sigma2, column_energy(h, 1) / sigma2]
        }
        MimoScheme::Pm(PmReceiver::TrueZf) => match inverse_diagonal(&gram(h)) {
            Some(inv) => inv.iter().map(|v| 1.0 / (v * sigma2)).collect(),
            None => {
                // A rank-one channel still carries the stronger stream if the
                // other column is exactly zero.
                let e = [column_energy(h, 0), column_energy(h, 1)];
                (0..2)
                    .map(|m| if e[1 - m] == 0.0 { e[m] / sigma2 } else { 0.0 })
                    .collect()
            }
        },
        MimoScheme::Pm(PmReceiver::Mmse) => {
            let mut a = gram(h);
            for (i, row) in a.iter_mut().enumerate() {
                for v in row.iter_mut() {
                    *v /= sigma2;
                }
                row[i] += 1.0;
            }
            let inv = inverse_diagonal(&a).expect("I + H^H H / sigma2 is positive definite");
            inv.iter().map(|v| (1.0 / v - 1.0).max(0.0)).collect()
        }
        MimoScheme::Pmod { active } => {
            if active > 1 {
                return Err(Error::InvalidArgument(format!("polarization index {active}")));
            }
            vec![column_energy(h, active) / sigma2]
        }
    })
}

/// Block error rate as a function of effective SINR:
/// `0.5 erfc((gamma_dB - gamma50_db) / (sqrt(2) slope_db))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerCurve {
    pub bearer_id: String,
    pub gamma50_db: f64,
    pub slope_db: f64,
}

impl PerCurve {
    pub fn new(bearer_id: impl Into<String>, gamma50_db: f64, slope_db: f64) -> Result<Self> {
        if !(slope_db > 0.0 && gamma50_db.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "PER curve needs finite gamma50 and positive slope, got {gamma50_db}, {slope_db}"
            )));
        }
        Ok(PerCurve {
            bearer_id: bearer_id.into(),
            gamma50_db,
            slope_db,
        })
    }

    pub fn per_db(&self, gamma_db: f64) -> f64 {
        let z = (gamma_db - self.gamma50_db) / (std::f64::consts::SQRT_2 * self.slope_db);
        (0.5 * libm::erfc(z)).clamp(0.0, 1.0)
    }

    /// PER at linear effective SINR.
    pub fn per(&self, gamma_eff: f64) -> f64 {
        self.per_db(if gamma_eff > 0.0 { lin_to_db(gamma_eff) } else { f64::NEG_INFINITY })
    }
}

/// Writes `# d=<bits>` then `snr_db,phi` rows.
pub fn export_lut(lut: &MiesmLut, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# d={}", lut.d)?;
    writeln!(f, "snr_db,phi")?;
    for (s, p) in lut.snr_db.iter().zip(&lut.phi) {
        writeln!(f, "{s},{p}")?;
    }
    Ok(())
}

pub fn import_lut(path: impl AsRef<Path>) -> Result<MiesmLut> {
    lut_from_csv(&std::fs::read_to_string(path)?)
}

pub fn lut_from_csv(text: &str) -> Result<MiesmLut> {
    let mut d = None;
    let (mut snr, mut phi) = (Vec::new(), Vec::new());
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line == "snr_db,phi" {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            if let Some(v) = h.trim().strip_prefix("d=") {
                d = Some(v.trim().parse().map_err(|_| parse_err(idx + 1, "bad d"))?);
            }
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| parse_err(idx + 1, "expected snr_db,phi"))?;
        snr.push(a.trim().parse().map_err(|_| parse_err(idx + 1, "bad snr_db"))?);
        phi.push(b.trim().parse().map_err(|_| parse_err(idx + 1, "bad phi"))?);
    }
    MiesmLut::new(d.ok_or_else(|| parse_err(1, "missing `# d=` header"))?, snr, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn identity() -> Matrix2 {
        [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]
    }

    fn toy_lut() -> MiesmLut {
        // phi linear in dB from 0 to 2 bits with a saturated tail
        let g = lut_grid();
        let p = g.iter().map(|s| ((s + 20.0) / 30.0 * 2.0).min(2.0)).collect();
        MiesmLut::new(2, g, p).unwrap()
    }

    #[test]
    fn grid_has_95_points() {
        let g = lut_grid();
        assert_eq!(g.len(), 95);
        assert_eq!(g[0], -20.0);
        assert_eq!(g[94], 27.0);
    }

    #[test]
    fn modulations() {
        for d in SUPPORTED_BITS {
            let p = modulation_points(d).unwrap();
            assert_eq!(p.len(), 1 << d);
            let e = p.iter().map(|z| z.norm_sqr()).sum::<f64>() / p.len() as f64;
            assert_abs_diff_eq!(e, 1.0, epsilon = 1e-12);
        }
        assert!(modulation_points(3).is_err());
    }

    #[test]
    fn inverse_on_toy_table() {
        let lut = toy_lut();
        let inv = lut.phi_inv(1.0).unwrap();
        assert_eq!(inv.clamp, Clamp::None);
        assert_abs_diff_eq!(lin_to_db(inv.gamma), -5.0, epsilon = 1e-9);
        let top = lut.phi_inv(2.0 - 1e-6).unwrap();
        assert_eq!(top.clamp, Clamp::None);
        assert!(lin_to_db(top.gamma) <= 10.0 + 1e-6);
        assert!(lut.phi_inv(2.0).is_err());
        assert!(lut.phi_inv(0.0).is_err());
        // out-of-range gamma clamps
        assert_eq!(lut.phi(db_to_lin(-40.0)), lut.values()[0]);
        assert_eq!(lut.phi(0.0), lut.values()[0]);
        assert_eq!(lut.phi(db_to_lin(40.0)), 2.0);
    }

    #[test]
    fn inverse_flags_high_clamp_on_plateau() {
        let g = lut_grid();
        let p: Vec<f64> = g.iter().map(|s| ((s + 20.0) / 30.0 * 1.5).min(1.5)).collect();
        let lut = MiesmLut::new(2, g, p).unwrap();
        let inv = lut.phi_inv(1.9).unwrap();
        assert_eq!(inv.clamp, Clamp::High);
        assert_abs_diff_eq!(lin_to_db(inv.gamma), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn effective_sinr_scaling_and_fixed_point() {
        let lut = toy_lut();
        let g = db_to_lin(3.0);
        let eff = effective_sinr(&[g; 640], &lut, &EsmParams::default()).unwrap();
        assert_abs_diff_eq!(lin_to_db(eff), 3.0, epsilon = 1e-9);
        let eff2 = effective_sinr(&[g; 8], &lut, &EsmParams::new(2.0, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(eff2, 2.0 * eff, epsilon = 1e-9);
        // saturated and very low constant inputs map to themselves
        for db in [20.0, -30.0] {
            let x = db_to_lin(db);
            assert_abs_diff_eq!(effective_sinr(&[x, x], &lut, &EsmParams::default()).unwrap(), x, epsilon = 1e-12);
        }
        assert!(effective_sinr(&[], &lut, &EsmParams::default()).is_err());
        assert!(effective_sinr(&[-1.0], &lut, &EsmParams::default()).is_err());
    }

    #[test]
    fn identity_channel_sinrs() {
        let h = identity();
        let v = |s| mimo_post_sinr(s, &h, 1.0).unwrap();
        assert_eq!(v(MimoScheme::Siso), vec![1.0]);
        assert_eq!(v(MimoScheme::Optbc), vec![2.0]);
        for r in [PmReceiver::MatchedFilter, PmReceiver::TrueZf, PmReceiver::Mmse] {
            let s = v(MimoScheme::Pm(r));
            assert_abs_diff_eq!(s[0], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s[1], 1.0, epsilon = 1e-12);
        }
        assert_eq!(v(MimoScheme::Pmod { active: 0 }), vec![1.0]);
        assert!(mimo_post_sinr(MimoScheme::Siso, &h, 0.0).is_err());
    }

    #[test]
    fn singular_channel_zero_forcing() {
        let h = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        let s = mimo_post_sinr(MimoScheme::Pm(PmReceiver::TrueZf), &h, 1.0).unwrap();
        assert_eq!(s[1], 0.0);
        let h = [[c(1.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(1.0, 0.0)]];
        let s = mimo_post_sinr(MimoScheme::Pm(PmReceiver::TrueZf), &h, 1.0).unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
        let s = mimo_post_sinr(MimoScheme::Pm(PmReceiver::Mmse), &h, 1.0).unwrap();
        assert!(s.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn per_curve_shape() {
        let p = PerCurve::new("b", 4.0, 0.5).unwrap();
        assert_abs_diff_eq!(p.per_db(4.0), 0.5, epsilon = 1e-15);
        assert!(p.per_db(40.0) < 1e-100);
        assert_eq!(p.per(0.0), 1.0);
        assert!(PerCurve::new("b", 4.0, 0.0).is_err());
    }

    #[test]
    fn isotonic_pools_violators() {
        assert_eq!(isotonic(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(isotonic(&[1.0, 2.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn lut_csv_round_trip() {
        let lut = toy_lut();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lut.csv");
        export_lut(&lut, &path).unwrap();
        assert_eq!(import_lut(&path).unwrap(), lut);
        assert!(lut_from_csv("snr_db,phi\n0,1\n1,2\n").is_err());
        assert!(lut_from_csv("# d=2\n0,1\n1,0.5\n").is_err());
    }
}
