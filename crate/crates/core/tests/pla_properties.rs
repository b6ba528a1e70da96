use dualpol::pla::{
    build_miesm_lut, db_to_lin, effective_sinr, lin_to_db, lut_grid, Clamp, EsmParams, LutSet, PerCurve,
    LUT_POINTS,
};
use proptest::prelude::*;

fn luts() -> &'static LutSet {
    static CELL: std::sync::OnceLock<LutSet> = std::sync::OnceLock::new();
    CELL.get_or_init(LutSet::bundled)
}

/// QPSK mutual information at linear SNR `g`, from two antipodal real
/// channels integrated on a fine grid.
fn qpsk_mi(g: f64) -> f64 {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let s2 = 0.5 / g;
    let s = s2.sqrt();
    let steps = 20_000;
    let h = 24.0 * s / steps as f64;
    let mut acc = 0.0;
    for k in 0..=steps {
        let n = -12.0 * s + h * k as f64;
        let pdf = (-n * n / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt();
        let z = -2.0 * a * (a + n) / s2;
        let loss = if z > 30.0 { z } else { z.exp().ln_1p() } / std::f64::consts::LN_2;
        acc += if k == 0 || k == steps { 0.5 } else { 1.0 } * pdf * loss;
    }
    2.0 * (1.0 - acc * h)
}

fn qpsk_mi_inv(target: f64) -> f64 {
    let (mut lo, mut hi) = (-30.0f64, 30.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if qpsk_mi(db_to_lin(mid)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn grid_is_the_documented_range() {
    let g = lut_grid();
    assert_eq!(g.len(), LUT_POINTS);
    assert_eq!(g[0], -20.0);
    assert_eq!(g[LUT_POINTS - 1], 27.0);
}

#[test]
fn qpsk_table_saturates_at_both_ends() {
    let lut = luts().get(2).unwrap();
    assert!((lut.phi_db(27.0) - 2.0).abs() < 0.02);
    assert!(lut.phi_db(-20.0) < 0.02);
}

#[test]
fn freshly_built_table_agrees_with_the_oracle() {
    let lut = build_miesm_lut(2, 20_000, 77).unwrap();
    for snr in [-5.0, 0.0, 5.0, 10.0] {
        let oracle = qpsk_mi(db_to_lin(snr));
        assert!((lut.phi_db(snr) - oracle).abs() < 0.03, "{snr} dB");
    }
}

#[test]
fn sixteen_qam_round_trip_at_five_db() {
    let lut = luts().get(4).unwrap();
    let inv = lut.phi_inv(lut.phi_db(5.0)).unwrap();
    assert_eq!(inv.clamp, Clamp::None);
    assert!((lin_to_db(inv.gamma) - 5.0).abs() < 0.01);
}

#[test]
fn inverse_near_the_ceiling_is_flagged() {
    let lut = luts().get(4).unwrap();
    let inv = lut.phi_inv(4.0 - 1e-12).unwrap();
    assert_eq!(inv.clamp, Clamp::High);
    assert!(lin_to_db(inv.gamma) <= 27.0 + 1e-9);
    assert!(lut.phi_inv(4.0).is_err());
    assert!(lut.phi_inv(0.0).is_err());
}

#[test]
fn mixed_block_matches_mutual_information_averaging() {
    let lut = luts().get(2).unwrap();
    let gammas: Vec<f64> = (0..640).map(|n| if n % 2 == 0 { 1.0 } else { 10.0 }).collect();
    let eff = lin_to_db(effective_sinr(&gammas, lut, &EsmParams::default()).unwrap());
    let oracle = qpsk_mi_inv(0.5 * (qpsk_mi(1.0) + qpsk_mi(10.0)));
    assert!(eff > 0.0 && eff < 10.0);
    assert!(eff <= lin_to_db(5.5));
    assert!((eff - oracle).abs() < 0.1, "ESM {eff} dB vs oracle {oracle} dB");
}

#[test]
fn beta1_scales_the_output() {
    let lut = luts().get(6).unwrap();
    let g = vec![db_to_lin(12.0); 32];
    let one = effective_sinr(&g, lut, &EsmParams::default()).unwrap();
    let two = effective_sinr(&g, lut, &EsmParams::new(2.0, 1.0).unwrap()).unwrap();
    assert!((two / one - 2.0).abs() < 1e-12);
}

#[test]
fn fixed_point_for_every_order() {
    for lut in luts().luts() {
        for snr in [-10.0, 0.0, 6.0, 15.0] {
            let g = vec![db_to_lin(snr); 640];
            let eff = effective_sinr(&g, lut, &EsmParams::default()).unwrap();
            assert!((lin_to_db(eff) - snr).abs() < 0.01, "d={} at {snr} dB", lut.bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn phi_is_monotone(a in -25.0f64..30.0, b in -25.0f64..30.0, k in 0usize..5) {
        let lut = &luts().luts()[k];
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(lut.phi_db(lo) <= lut.phi_db(hi));
    }

    #[test]
    fn per_is_monotone(a in -10.0f64..30.0, b in -10.0f64..30.0) {
        let c = PerCurve::new("x", 8.0, 0.4).unwrap();
        prop_assume!((a - b).abs() > 1e-9);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(c.per_db(lo) >= c.per_db(hi));
        prop_assert!((0.0..=1.0).contains(&c.per_db(lo)));
    }

    #[test]
    fn effective_sinr_is_bracketed(
        snrs in proptest::collection::vec(-15.0f64..25.0, 1..40),
        k in 0usize..5,
    ) {
        let lut = &luts().luts()[k];
        let g: Vec<f64> = snrs.iter().map(|&s| db_to_lin(s)).collect();
        let eff = effective_sinr(&g, lut, &EsmParams::default()).unwrap();
        let lo = g.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = g.iter().copied().fold(0.0, f64::max);
        prop_assert!(eff >= lo * (1.0 - 1e-9) && eff <= hi * (1.0 + 1e-9), "{eff} outside [{lo}, {hi}]");
    }
}
