use dualpol::channel::{gen_maritime_series, ChannelEntry, ChannelSeries, LmsModelParams, ScenarioParams, SeriesMetadata};
use dualpol::linkadapt::{
    default_bearers, select_tuple, simulate_trip, summarize, throughput_cdf, wilson_upper, AdaptConfig, AdaptDecision,
    MimoMode, TripConfig,
};
use dualpol::pla::{LutSet, Matrix2};
use dualpol::rng;
use dualpol::Complex64;
use rand::Rng;

fn luts() -> &'static LutSet {
    static CELL: std::sync::OnceLock<LutSet> = std::sync::OnceLock::new();
    CELL.get_or_init(LutSet::bundled)
}

fn diag(a: f64) -> Matrix2 {
    let z = Complex64::new(0.0, 0.0);
    [[Complex64::new(a, 0.0), z], [z, Complex64::new(a, 0.0)]]
}

/// A series of `n` blocks whose channel is `before` up to block `step` and
/// `after` from then on.
fn step_series(n: usize, step: usize, before: Matrix2, after: Matrix2) -> ChannelSeries {
    let entries = (0..n)
        .map(|k| ChannelEntry {
            t: (k + 1) as f64 * 0.02,
            h: if k < step { before } else { after },
            largescale_db: 0.0,
        })
        .collect();
    let meta = SeriesMetadata { profile: "step".into(), speed_kmh: 50.0, seed: 0 };
    ChannelSeries::new(0.02, entries, meta).unwrap()
}

fn key(d: &AdaptDecision) -> (MimoMode, usize) {
    (d.mode, d.bearer)
}

fn trip(delay_s: f64) -> TripConfig {
    TripConfig { feedback_delay_s: delay_s, ..TripConfig::new(ScenarioParams::default(), 12.0) }
}

#[test]
fn static_channel_without_delay_holds_one_decision() {
    let s = step_series(300, 300, diag(1.0), diag(1.0));
    let log = simulate_trip(&s, &trip(0.0), &default_bearers(), &MimoMode::ALL, luts(), 1).unwrap();
    assert!(log.iter().all(|d| key(d) == key(&log[0])));
}

#[test]
fn feedback_delay_postpones_the_reaction() {
    let s = step_series(300, 100, diag(1.0), diag(0.3));
    let log = simulate_trip(&s, &trip(0.5), &default_bearers(), &MimoMode::ALL, luts(), 1).unwrap();
    let settled = key(&log[99]);
    assert!(log[25..125].iter().all(|d| key(d) == settled));
    assert_ne!(key(&log[125]), settled);
    assert!(log[125..].iter().all(|d| key(d) == key(&log[125])));
}

#[test]
fn series_must_outlast_the_delay() {
    let s = step_series(20, 20, diag(1.0), diag(1.0));
    assert!(simulate_trip(&s, &trip(0.5), &default_bearers(), &MimoMode::ALL, luts(), 1).is_err());
}

#[test]
fn adaptive_rate_dominates_every_fixed_tuple() {
    let bearers = default_bearers();
    let cfg = AdaptConfig::default();
    let mut r = rng::stream(12, 0);
    for _ in 0..300 {
        let mut h = diag(0.0);
        for row in h.iter_mut() {
            for z in row.iter_mut() {
                *z = Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            }
        }
        let sigma2 = 10f64.powf(-r.random_range(-5.0..25.0) / 10.0);
        let sel = select_tuple(&h, sigma2, &bearers, &MimoMode::ALL, luts(), &cfg).unwrap();
        let best_fixed = sel.candidates.iter().filter(|c| c.per <= cfg.per_target).map(|c| c.bits).max();
        match best_fixed {
            Some(b) => {
                assert!(sel.feasible && sel.chosen.bits == b && sel.chosen.per <= cfg.per_target);
            }
            None => {
                assert!(!sel.feasible);
                let min_per = sel.candidates.iter().map(|c| c.per).fold(f64::INFINITY, f64::min);
                assert_eq!(sel.chosen.per, min_per);
            }
        }
    }
}

#[test]
fn ideal_feedback_keeps_errors_rare() {
    let p = ScenarioParams { trip_km: 10.0, ..ScenarioParams::default() };
    let s = gen_maritime_series(&p, &LmsModelParams::maritime(), 6).unwrap();
    let cfg = TripConfig { feedback_delay_s: 0.0, ..TripConfig::new(p, 6.0) };
    let log = simulate_trip(&s, &cfg, &default_bearers(), &MimoMode::ALL, luts(), 6).unwrap();
    assert!(log.len() >= 10_000);
    let chosen: Vec<_> = log.iter().filter(|d| d.feasible).collect();
    let failures = chosen.iter().filter(|d| !d.success).count();
    assert!(wilson_upper(failures, chosen.len(), 1.645) <= 2e-3);
}

#[test]
fn runs_are_reproducible_and_cdf_is_valid() {
    let p = ScenarioParams { trip_km: 2.0, ..ScenarioParams::default() };
    let s = gen_maritime_series(&p, &LmsModelParams::maritime(), 2).unwrap();
    let cfg = TripConfig::new(p.clone(), 6.0);
    let a = simulate_trip(&s, &cfg, &default_bearers(), &MimoMode::ALL, luts(), 3).unwrap();
    let b = simulate_trip(&s, &cfg, &default_bearers(), &MimoMode::ALL, luts(), 3).unwrap();
    assert_eq!(a, b);
    let cdf = throughput_cdf(&a, p.block_period_s).unwrap();
    assert!(cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
    assert_eq!(cdf.last().unwrap().1, 1.0);
    let summary = summarize(&a, p.block_period_s);
    assert!(summary.mean_throughput_bps > 0.0);
}
