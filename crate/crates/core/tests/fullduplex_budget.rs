use dualpol::fullduplex::{
    attenuation_sweep, cancellation_from_amplitude_error, required_passive_attenuation, simulate_analog_canceller,
    sinr_after_cancellation, CancellerConfig, FdBudget, Path,
};
use dualpol::rng;
use dualpol::Complex64;
use rand::Rng;

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn example() -> FdBudget {
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
fn worked_example_by_hand() {
    // residual SI 1e3 * 1e-6 = 1e-3; quantization 4 * (1 + 1 + 1e-3) * 10^-7.224
    let sigma_e2 = 4.0 * 2.001 * 10f64.powf(-7.224);
    let expected = 1.0 / (1e-3 + sigma_e2 + 1e-3);
    let got = sinr_after_cancellation(&example()).unwrap();
    assert!((got / expected - 1.0).abs() < 1e-12);
    assert!((db(got) - 26.9895).abs() < 1e-3);
}

#[test]
fn sinr_partial_derivative_signs() {
    let mut r = rng::stream(3, 0);
    for _ in 0..1000 {
        let b = FdBudget {
            sigma_d2: 10f64.powf(r.random_range(-2.0..2.0)),
            sigma_n2: 10f64.powf(r.random_range(-4.0..0.0)),
            sigma_s2: 10f64.powf(r.random_range(-2.0..6.0)),
            papr: r.random_range(1.0..10.0),
            enob: r.random_range(4.0..14.0),
            alpha_a: 10f64.powf(r.random_range(-4.0..0.0)),
            alpha_d: 10f64.powf(r.random_range(-4.0..0.0)),
        };
        let s = sinr_after_cancellation(&b).unwrap();
        let more_si = sinr_after_cancellation(&FdBudget { sigma_s2: b.sigma_s2 * 1.1, ..b }).unwrap();
        let more_bits = sinr_after_cancellation(&FdBudget { enob: b.enob + 0.5, ..b }).unwrap();
        let more_papr = sinr_after_cancellation(&FdBudget { papr: b.papr * 1.1, ..b }).unwrap();
        assert!(more_si < s && more_bits > s && more_papr < s);
    }
}

#[test]
fn passive_requirement_meets_the_target_exactly() {
    let target = 10f64.powf(2.7);
    let req = required_passive_attenuation(&example(), 1.0, target).unwrap();
    let b = FdBudget { sigma_s2: req.max_sigma_s2, ..example() };
    assert!((db(sinr_after_cancellation(&b).unwrap()) - 27.0).abs() < 1e-9);
}

#[test]
fn halving_the_cancellation_product_saves_at_most_three_db() {
    let target = 10f64.powf(2.7);
    for (aa, ad) in [(1e-3, 1e-3), (1e-2, 1e-4), (1e-1, 1e-1)] {
        let b = FdBudget { alpha_a: aa, alpha_d: ad, ..example() };
        let before = required_passive_attenuation(&b, 1.0, target).unwrap().attenuation_db;
        let after = required_passive_attenuation(&FdBudget { alpha_d: ad / 2.0, ..b }, 1.0, target)
            .unwrap()
            .attenuation_db;
        let saved = before - after;
        assert!(saved > 0.0 && saved <= db(2.0) + 1e-12, "saved {saved} dB");
    }
    // without quantization the SI term is the only one that scales
    let clean = FdBudget { enob: f64::INFINITY, ..example() };
    let before = required_passive_attenuation(&clean, 1.0, target).unwrap().attenuation_db;
    let after = required_passive_attenuation(&FdBudget { alpha_a: 5e-4, ..clean }, 1.0, target)
        .unwrap()
        .attenuation_db;
    assert!((before - after - db(2.0)).abs() < 1e-9);
}

#[test]
fn sweep_needs_less_isolation_with_more_cancellation() {
    let totals: Vec<f64> = (0..=16).map(|k| 5.0 * k as f64).collect();
    let rows = attenuation_sweep(&example(), 1.0, 10f64.powf(2.7), &totals).unwrap();
    assert!(rows.windows(2).all(|w| w[1].required_passive_db <= w[0].required_passive_db));
}

#[test]
fn unreachable_target_is_infeasible() {
    let err = required_passive_attenuation(&example(), 1.0, 1e9).unwrap_err();
    assert!(matches!(err, dualpol::Error::Infeasible(_)));
}

#[test]
fn amplitude_error_is_linear_per_decade() {
    for k in 1..6 {
        let e = 10f64.powi(-k);
        assert!((cancellation_from_amplitude_error(e) - 20.0 * k as f64).abs() < 1e-9);
    }
    assert_eq!(cancellation_from_amplitude_error(1.0), 0.0);
}

#[test]
fn adding_taps_never_hurts() {
    let bw = 1e6;
    let channel = [
        Path { delay_s: 0.13e-6, gain: Complex64::new(0.8, 0.1) },
        Path { delay_s: 0.41e-6, gain: Complex64::new(-0.2, 0.3) },
    ];
    let mut last = f64::NEG_INFINITY;
    for taps in 1..=6 {
        let cfg = CancellerConfig::uniform(taps, 0.125e-6, bw, 2048, 9);
        let r = simulate_analog_canceller(&cfg, &channel, 4096).unwrap();
        assert!(r.achieved_db >= last - 1e-9, "{taps} taps: {} after {last}", r.achieved_db);
        last = r.achieved_db;
    }
}

#[test]
fn sixty_db_of_active_cancellation_leaves_ninety_db_to_passive_isolation() {
    // Desired signal 30 dB over the noise floor, 27 dB SINR target and a
    // transmitter 150 dB above the noise floor.
    let b = FdBudget {
        sigma_d2: 1e3,
        sigma_n2: 1.0,
        sigma_s2: 0.0,
        papr: 4.0,
        enob: 12.0,
        alpha_a: 1e-3,
        alpha_d: 1e-3,
    };
    let tx = 1e15;
    let req = required_passive_attenuation(&b, tx, 10f64.powf(2.7)).unwrap();
    assert!((req.attenuation_db - 90.0).abs() < 0.1, "{}", req.attenuation_db);
    let residual = req.max_sigma_s2 * b.alpha_a * b.alpha_d;
    assert!((db(tx / residual) - (req.attenuation_db + 60.0)).abs() < 1e-9);
}
