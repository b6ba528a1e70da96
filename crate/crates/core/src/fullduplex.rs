//! Self-interference budgets for full-duplex transceivers and an analog
//! tapped-delay-line canceller simulation.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Powers and cancellation factors of a full-duplex receiver, all linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdBudget {
    pub sigma_d2: f64,
    pub sigma_n2: f64,
    pub sigma_s2: f64,
    pub papr: f64,
    /// Effective number of ADC bits; `f64::INFINITY` removes quantization.
    pub enob: f64,
    pub alpha_a: f64,
    pub alpha_d: f64,
}

impl FdBudget {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [self.sigma_d2, self.sigma_n2, self.sigma_s2];
        if nonneg.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("powers must be finite and nonnegative".into()));
        }
        if !(self.papr >= 1.0) || !(self.enob >= 0.0) {
            return Err(Error::InvalidArgument("PAPR must be >= 1 and ENoB >= 0".into()));
        }
        for a in [self.alpha_a, self.alpha_d] {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidArgument(format!("cancellation factor {a} outside (0, 1]")));
            }
        }
        Ok(())
    }

    /// ADC quantization noise power:
    /// `PAPR (sigma_s2 alpha_a + sigma_d2 + sigma_n2) 10^(-6.02 ENoB / 10)`.
    pub fn quantization_noise(&self) -> f64 {
        self.papr * (self.sigma_s2 * self.alpha_a + self.sigma_d2 + self.sigma_n2) * quant_factor(self.enob)
    }
}

/// `10^(-6.02 ENoB / 10)`, zero for infinite ENoB.
pub fn quant_factor(enob: f64) -> f64 {
    10f64.powf(-0.602 * enob)
}

/// `sigma_d2 / (sigma_s2 alpha_a alpha_d + sigma_e2 + sigma_n2)`.
pub fn sinr_after_cancellation(b: &FdBudget) -> Result<f64> {
    b.validate()?;
    let den = b.sigma_s2 * b.alpha_a * b.alpha_d + b.quantization_noise() + b.sigma_n2;
    if den <= 0.0 {
        return Err(Error::InvalidArgument("zero interference-plus-noise power".into()));
    }
    Ok(b.sigma_d2 / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassiveRequirement {
    /// Largest SI power at the receiver input meeting the target.
    pub max_sigma_s2: f64,
    /// `10 log10(tx_power / max_sigma_s2)`.
    pub attenuation_db: f64,
}

/// Passive isolation needed between transmitter and receiver for the
/// SINR after cancellation to reach `target_sinr`. `b.sigma_s2` is ignored.
///
/// The SINR condition is linear in the SI power, so the bound is explicit.
pub fn required_passive_attenuation(b: &FdBudget, tx_power: f64, target_sinr: f64) -> Result<PassiveRequirement> {
    let b = FdBudget { sigma_s2: 0.0, ..*b };
    b.validate()?;
    if !(tx_power > 0.0 && target_sinr > 0.0) {
        return Err(Error::InvalidArgument("tx power and target SINR must be positive".into()));
    }
    let pq = b.papr * quant_factor(b.enob);
    let headroom = b.sigma_d2 / target_sinr - pq * (b.sigma_d2 + b.sigma_n2) - b.sigma_n2;
    if !(headroom > 0.0) {
        return Err(Error::Infeasible(format!(
            "target SINR {:.2} dB unreachable: ceiling without SI is {:.2} dB",
            10.0 * target_sinr.log10(),
            10.0 * sinr_after_cancellation(&b)?.log10()
        )));
    }
    let max_sigma_s2 = headroom / (b.alpha_a * b.alpha_d + pq * b.alpha_a);
    Ok(PassiveRequirement {
        max_sigma_s2,
        attenuation_db: 10.0 * (tx_power / max_sigma_s2).log10(),
    })
}

/// One row of a required-attenuation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha_total_db: f64,
    pub required_passive_db: f64,
}

/// Required passive attenuation versus total active cancellation, split
/// evenly between the analog and digital stages.
pub fn attenuation_sweep(b: &FdBudget, tx_power: f64, target_sinr: f64, totals_db: &[f64]) -> Result<Vec<SweepRow>> {
    totals_db
        .iter()
        .map(|&t| {
            let half = 10f64.powf(-t / 20.0);
            let r = required_passive_attenuation(&FdBudget { alpha_a: half, alpha_d: half, ..*b }, tx_power, target_sinr)?;
            Ok(SweepRow {
                alpha_total_db: t,
                required_passive_db: r.attenuation_db,
            })
        })
        .collect()
}

/// Cancellation bound from a relative amplitude error: `-20 log10 |eps|`.
/// Zero error gives `f64::INFINITY`.
pub fn cancellation_from_amplitude_error(epsilon: f64) -> f64 {
    -20.0 * epsilon.abs().log10()
}

/// Convention for `sinc`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SincKind {
    /// `sin(pi x) / (pi x)`.
    #[default]
    Normalized,
    /// `sin(x) / x`.
    Unnormalized,
}

/// `1 - sin(u) / u`, accurate for small `u`.
fn one_minus_sinc_arg(u: f64) -> f64 {
    if u.abs() < 1e-3 {
        let u2 = u * u;
        u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0))
    } else {
        1.0 - u.sin() / u
    }
}

pub fn sinc(x: f64, kind: SincKind) -> f64 {
    let u = match kind {
        SincKind::Normalized => PI * x,
        SincKind::Unnormalized => x,
    };
    1.0 - one_minus_sinc_arg(u)
}

/// Cancellation bound from a delay error: `-20 log10(1 - sinc(B tau))`.
/// A zero delay error gives `f64::INFINITY`.
pub fn cancellation_from_delay_error(bandwidth_hz: f64, tau_s: f64, kind: SincKind) -> Result<f64> {
    if !(bandwidth_hz > 0.0) || !(tau_s >= 0.0) {
        return Err(Error::InvalidArgument(format!("need B > 0 and tau >= 0, got {bandwidth_hz}, {tau_s}")));
    }
    let x = bandwidth_hz * tau_s;
    let u = match kind {
        SincKind::Normalized => PI * x,
        SincKind::Unnormalized => x,
    };
    Ok(-20.0 * one_minus_sinc_arg(u).log10())
}

/// Weight fitting algorithm of the canceller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Solver {
    LeastSquares,
    /// Normalized LMS with step `mu`, one pass over the training window.
    Nlms { mu: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellerConfig {
    /// Delay of each tap, seconds, sorted ascending.
    pub tap_delays_s: Vec<f64>,
    pub signal_bandwidth_hz: f64,
    /// Simulation sample rate; at least the signal bandwidth.
    pub sample_rate_hz: f64,
    pub training_len: usize,
    pub solver: Solver,
    pub seed: u64,
}

impl CancellerConfig {
    /// Taps at `0, spacing, 2 spacing, ...` with 8x oversampling.
    pub fn uniform(num_taps: usize, spacing_s: f64, bandwidth_hz: f64, training_len: usize, seed: u64) -> Self {
        CancellerConfig {
            tap_delays_s: (0..num_taps).map(|i| i as f64 * spacing_s).collect(),
            signal_bandwidth_hz: bandwidth_hz,
            sample_rate_hz: 8.0 * bandwidth_hz,
            training_len,
            solver: Solver::LeastSquares,
            seed,
        }
    }

    pub fn num_taps(&self) -> usize {
        self.tap_delays_s.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.tap_delays_s.is_empty() {
            return Err(Error::InvalidArgument("canceller needs at least one tap".into()));
        }
        if self.tap_delays_s.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(Error::InvalidArgument("tap delays must be finite and nonnegative".into()));
        }
        if self.tap_delays_s.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("tap delays must be sorted".into()));
        }
        if !(self.signal_bandwidth_hz > 0.0 && self.sample_rate_hz >= self.signal_bandwidth_hz) {
            return Err(Error::InvalidArgument("need 0 < bandwidth <= sample rate".into()));
        }
        if self.training_len < self.num_taps() {
            return Err(Error::InvalidArgument("training window shorter than the tap count".into()));
        }
        if let Solver::Nlms { mu } = self.solver {
            if !(mu > 0.0 && mu < 2.0) {
                return Err(Error::InvalidArgument(format!("NLMS step {mu} outside (0, 2)")));
            }
        }
        Ok(())
    }
}

/// One propagation path of the TX-to-RX coupling channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub delay_s: f64,
    pub gain: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CancellerResult {
    /// `10 log10(SI power / residual power)` over the training window.
    pub achieved_db: f64,
    /// The same ratio over samples after the training window, if any.
    pub holdout_db: Option<f64>,
    pub weights: Vec<Complex64>,
    /// Measured peak-to-average power ratio of the SI waveform, dB.
    pub papr_db: f64,
    /// The tap matrix was rank deficient and a ridge term was added.
    pub regularized: bool,
}

/// Periodic band-limited white Gaussian waveform and its delayed copies.
struct Waveform {
    spectrum: Vec<Complex64>,
    freqs: Vec<f64>,
    ifft: Arc<dyn Fft<f64>>,
}

impl Waveform {
    fn new(len: usize, fs: f64, bandwidth: f64, seed: u64) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(len);
        let ifft = planner.plan_fft_inverse(len);
        let mut r = rng::stream(seed, 0xfd);
        let mut spectrum: Vec<Complex64> = (0..len)
            .map(|_| Complex64::new(r.sample(StandardNormal), r.sample(StandardNormal)))
            .collect();
        fft.process(&mut spectrum);
        let freqs: Vec<f64> = (0..len)
            .map(|k| {
                let k = if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
                k * fs / len as f64
            })
            .collect();
        for (s, f) in spectrum.iter_mut().zip(&freqs) {
            if f.abs() > bandwidth / 2.0 {
                *s = Complex64::new(0.0, 0.0);
            }
        }
        Waveform { spectrum, freqs, ifft }
    }

    /// The waveform delayed by `delay` seconds (circularly), scaled by `gain`.
    fn delayed(&self, delay: f64, gain: Complex64) -> Vec<Complex64> {
        let n = self.spectrum.len() as f64;
        let mut buf: Vec<Complex64> = self
            .spectrum
            .iter()
            .zip(&self.freqs)
            .map(|(s, f)| s * Complex64::from_polar(1.0, -2.0 * PI * f * delay) * gain / n)
            .collect();
        self.ifft.process(&mut buf);
        buf
    }
}

fn power(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len().max(1) as f64
}

/// Solves the Hermitian system `a w = b` by Gaussian elimination with
/// partial pivoting. Returns `None` when a pivot vanishes.
fn solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    let scale = (0..n).map(|i| a[i][i].norm()).fold(0.0, f64::max);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if !(a[piv][col].norm() > 1e-10 * scale) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(r);
            for (dst, &v) in lower[0][col..n].iter_mut().zip(&upper[col][col..n]) {
                *dst -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * w[c];
        }
        w[r] = s / a[r][r];
    }
    Some(w)
}

/// Least-squares tap weights; adds a small ridge when the Gram matrix is
/// rank deficient.
fn ls_weights(taps: &[Vec<Complex64>], target: &[Complex64], len: usize) -> (Vec<Complex64>, bool) {
    let k = taps.len();
    let mut gram = vec![vec![Complex64::new(0.0, 0.0); k]; k];
    let mut rhs = vec![Complex64::new(0.0, 0.0); k];
    for i in 0..k {
        for j in i..k {
            let v: Complex64 = (0..len).map(|t| taps[i][t].conj() * taps[j][t]).sum();
            gram[i][j] = v;
            gram[j][i] = v.conj();
        }
        rhs[i] = (0..len).map(|t| taps[i][t].conj() * target[t]).sum();
    }
    if let Some(w) = solve(gram.clone(), rhs.clone()) {
        return (w, false);
    }
    let trace: f64 = (0..k).map(|i| gram[i][i].re).sum();
    let ridge = 1e-9 * trace / k as f64;
    log::warn!("canceller tap matrix is rank deficient; adding ridge {ridge:.3e}");
    for (i, row) in gram.iter_mut().enumerate() {
        row[i] += ridge;
    }
    (solve(gram, rhs).expect("ridge-regularized system is nonsingular"), true)
}

fn nlms_weights(taps: &[Vec<Complex64>], target: &[Complex64], len: usize, mu: f64) -> Vec<Complex64> {
    let k = taps.len();
    let mut w = vec![Complex64::new(0.0, 0.0); k];
    for t in 0..len {
        let x: Vec<Complex64> = (0..k).map(|i| taps[i][t]).collect();
        let est: Complex64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
        let e = target[t] - est;
        let norm: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>() + 1e-12;
        for (wi, xi) in w.iter_mut().zip(&x) {
            *wi += xi.conj() * e * (mu / norm);
        }
    }
    w
}

/// Simulates an analog canceller with fixed delays and adjustable weights.
///
/// A band-limited Gaussian SI waveform of `samples` samples passes through
/// the coupling `channel`; the weights are fitted on the first
/// `training_len` samples and the cancellation is measured there.
pub fn simulate_analog_canceller(cfg: &CancellerConfig, channel: &[Path], samples: usize) -> Result<CancellerResult> {
    cfg.validate()?;
    if channel.is_empty() {
        return Err(Error::InvalidArgument("empty coupling channel".into()));
    }
    if samples < cfg.training_len {
        return Err(Error::InvalidArgument("fewer samples than the training window".into()));
    }
    let wave = Waveform::new(samples, cfg.sample_rate_hz, cfg.signal_bandwidth_hz, cfg.seed);
    let one = Complex64::new(1.0, 0.0);
    let mut si = vec![Complex64::new(0.0, 0.0); samples];
    for p in channel {
        for (acc, v) in si.iter_mut().zip(wave.delayed(p.delay_s, p.gain)) {
            *acc += v;
        }
    }
    let taps: Vec<Vec<Complex64>> = cfg.tap_delays_s.iter().map(|&d| wave.delayed(d, one)).collect();

    let len = cfg.training_len;
    let (weights, regularized) = match cfg.solver {
        Solver::LeastSquares => ls_weights(&taps, &si, len),
        Solver::Nlms { mu } => (nlms_weights(&taps, &si, len, mu), false),
    };
    let residual: Vec<Complex64> = (0..samples)
        .map(|t| si[t] - weights.iter().zip(&taps).map(|(w, x)| w * x[t]).sum::<Complex64>())
        .collect();
    let ratio_db = |a: &[Complex64], b: &[Complex64]| 10.0 * (power(a) / power(b)).log10();
    let holdout_db = (samples > len).then(|| ratio_db(&si[len..], &residual[len..]));
    let x0 = &taps[0];
    let peak = x0.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    Ok(CancellerResult {
        achieved_db: ratio_db(&si[..len], &residual[..len]),
        holdout_db,
        weights,
        papr_db: 10.0 * (peak / power(x0)).log10(),
        regularized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn budget() -> FdBudget {
        FdBudget {
            sigma_d2: 1.0,
            sigma_n2: 1e-3,
            sigma_s2: 1e3,
            papr: 4.0,
            enob: 12.0,
            alpha_a: 1e-3,
            alpha_d: 1e-3,
        }
    }

    #[test]
    fn no_si_no_quantization() {
        let b = FdBudget {
            sigma_s2: 0.0,
            enob: f64::INFINITY,
            ..budget()
        };
        assert_relative_eq!(sinr_after_cancellation(&b).unwrap(), 1e3, max_relative = 1e-15);
    }

    #[test]
    fn uncancelled_si_dominates() {
        let b = FdBudget {
            sigma_s2: 1e6,
            alpha_a: 1.0,
            alpha_d: 1.0,
            enob: f64::INFINITY,
            ..budget()
        };
        assert_relative_eq!(sinr_after_cancellation(&b).unwrap(), 1e-6, max_relative = 1e-8);
    }

    #[test]
    fn amplitude_error_values() {
        assert_eq!(cancellation_from_amplitude_error(0.01), 40.0);
        assert_eq!(cancellation_from_amplitude_error(0.1), 20.0);
        assert_eq!(cancellation_from_amplitude_error(1.0), 0.0);
        assert_eq!(cancellation_from_amplitude_error(0.0), f64::INFINITY);
        assert_eq!(cancellation_from_amplitude_error(-0.01), 40.0);
    }

    #[test]
    fn delay_error_values() {
        let k = SincKind::Normalized;
        assert_eq!(cancellation_from_delay_error(1.0, 0.0, k).unwrap(), f64::INFINITY);
        assert_abs_diff_eq!(cancellation_from_delay_error(1.0, 1.0, k).unwrap(), 0.0, epsilon = 1e-12);
        // 1 - sin(0.1 pi) / (0.1 pi) by its alternating series
        let u: f64 = 0.1 * PI;
        let series: f64 = (1..12)
            .map(|n| {
                let fact: f64 = (1..=(2 * n + 1)).map(|i| i as f64).product();
                -(-1f64).powi(n) * u.powi(2 * n) / fact
            })
            .sum();
        let db = cancellation_from_delay_error(1e3, 1e-4, k).unwrap();
        assert_abs_diff_eq!(db, -20.0 * series.log10(), epsilon = 1e-9);
        assert!(cancellation_from_delay_error(0.0, 1.0, k).is_err());
        assert!(cancellation_from_delay_error(1.0, -1.0, k).is_err());
        // small-argument branch is continuous with the direct formula
        let a = one_minus_sinc_arg(0.999e-3);
        let b = 1.0 - (1.001e-3f64).sin() / 1.001e-3;
        assert_relative_eq!(a, b, max_relative = 5e-3);
        assert!(cancellation_from_delay_error(1.0, 0.1, SincKind::Unnormalized).unwrap() > 50.0);
    }

    #[test]
    fn infeasible_target() {
        let b = budget();
        let ceiling = sinr_after_cancellation(&FdBudget { sigma_s2: 0.0, ..b }).unwrap();
        assert!(matches!(
            required_passive_attenuation(&b, 1.0, ceiling * 1.01),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn passive_requirement_round_trip() {
        let b = budget();
        let target = 10f64.powf(2.7);
        let r = required_passive_attenuation(&b, 10.0, target).unwrap();
        let s = sinr_after_cancellation(&FdBudget { sigma_s2: r.max_sigma_s2, ..b }).unwrap();
        assert_abs_diff_eq!(10.0 * s.log10(), 27.0, epsilon = 1e-9);
    }

    #[test]
    fn tap_matched_channel() {
        let cfg = CancellerConfig::uniform(4, 1e-6, 1e5, 2048, 3);
        let ch = [Path {
            delay_s: 2e-6,
            gain: Complex64::new(0.3, -0.2),
        }];
        let r = simulate_analog_canceller(&cfg, &ch, 4096).unwrap();
        assert!(r.achieved_db > 60.0, "{}", r.achieved_db);
        assert!(r.holdout_db.unwrap() > 60.0);
        assert!(!r.regularized);
    }

    #[test]
    fn duplicate_taps_are_regularized() {
        let mut cfg = CancellerConfig::uniform(2, 0.0, 1e5, 512, 3);
        cfg.tap_delays_s = vec![1e-6, 1e-6];
        let ch = [Path {
            delay_s: 1e-6,
            gain: Complex64::new(1.0, 0.0),
        }];
        let r = simulate_analog_canceller(&cfg, &ch, 512).unwrap();
        assert!(r.regularized);
        assert!(r.achieved_db > 60.0);
    }

    #[test]
    fn single_tap_mismatch_matches_least_squares_oracle() {
        // with one tap the LS residual is 1 - sinc^2 of the delay error
        let b = 1e5;
        for bt in [0.01, 0.05, 0.1] {
            let cfg = CancellerConfig::uniform(1, 0.0, b, 1 << 14, 11);
            let ch = [Path {
                delay_s: bt / b,
                gain: Complex64::new(1.0, 0.0),
            }];
            let r = simulate_analog_canceller(&cfg, &ch, 1 << 14).unwrap();
            let s = sinc(bt, SincKind::Normalized);
            let oracle = -10.0 * (1.0 - s * s).log10();
            assert!((r.achieved_db - oracle).abs() < 0.5, "{bt}: {} vs {oracle}", r.achieved_db);
        }
    }

    #[test]
    fn nlms_converges_on_matched_channel() {
        let mut cfg = CancellerConfig::uniform(2, 1e-6, 1e5, 8192, 3);
        cfg.solver = Solver::Nlms { mu: 0.5 };
        let ch = [Path {
            delay_s: 1e-6,
            gain: Complex64::new(0.5, 0.0),
        }];
        let r = simulate_analog_canceller(&cfg, &ch, 8192).unwrap();
        assert!(r.achieved_db > 20.0, "{}", r.achieved_db);
    }

    #[test]
    fn config_validation() {
        let mut c = CancellerConfig::uniform(2, 1e-6, 1e5, 100, 1);
        c.tap_delays_s = vec![2e-6, 1e-6];
        assert!(c.validate().is_err());
        let c = CancellerConfig::uniform(0, 1e-6, 1e5, 100, 1);
        assert!(c.validate().is_err());
        let c = CancellerConfig::uniform(2, 1e-6, 1e5, 1, 1);
        assert!(c.validate().is_err());
    }
}
