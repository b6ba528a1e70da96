use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dualpol::channel::ScenarioParams;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dualpol"));
    c.env_remove("DUALPOL_CONFIG_DIR");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().arg("--out-dir").arg(dir).args(args).output().expect("spawn dualpol")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn json(p: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&read(p)).unwrap()
}

fn csv_column(text: &str, col: usize) -> Vec<f64> {
    text.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn qam_generation_writes_every_symbol() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["constellation", "gen", "--type", "qam", "--m", "6"]);
    let text = read(d.path().join("constellation.csv"));
    assert!(text.starts_with("# M=64"));
    assert_eq!(text.lines().count(), 65);
    let m = json(d.path().join("manifest.json"));
    assert_eq!(m["command"], "constellation gen");
    assert_eq!(m["outputs"][0], "constellation.csv");
}

#[test]
fn pair_sweep_needs_an_existing_labeling() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["constellation", "gen", "--type", "qam", "--m", "4"]);
    let c = d.path().join("constellation.csv");
    let missing = d.path().join("nope.csv");
    let out = run(
        d.path(),
        &["constellation", "sweep", "--metric", "pair", "--constellation", c.to_str().unwrap(),
          "--labeling", missing.to_str().unwrap()],
    );
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn evaluation_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["constellation", "gen", "--type", "qam", "--m", "4"]);
    ok(d.path(), &["labeling", "gray", "--m", "4"]);
    let c = d.path().join("constellation.csv");
    let l = d.path().join("labeling.csv");
    let args = |out: &'static str| {
        vec!["--seed", "7", "constellation", "eval", "--constellation", c.to_str().unwrap().to_owned().leak(),
             "--labeling", l.to_str().unwrap().to_owned().leak(), "--snr", "6", "--samples", "4000", "--out", out]
    };
    ok(d.path(), &args("a.csv"));
    ok(d.path(), &args("b.csv"));
    let a = read(d.path().join("a.csv"));
    assert_eq!(a, read(d.path().join("b.csv")));
    assert_eq!(a.lines().count(), 3);
}

#[test]
fn replaying_a_manifest_reproduces_outputs() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["--seed", "3", "constellation", "gen", "--type", "lam", "--m", "5",
                   "--population", "8", "--generations", "4", "--ga-samples", "500"]);
    let produced = d.path().join("constellation.csv");
    let original = read(&produced);
    let manifest = d.path().join("manifest.json");
    let before = read(&manifest);
    std::fs::remove_file(&produced).unwrap();
    let out = bin().args(["replay", manifest.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(&produced), original);
    assert_eq!(read(&manifest), before);
}

fn trip_dir() -> (tempfile::TempDir, PathBuf) {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["channel", "gen", "--trip-km", "3"]);
    let s = d.path().join("series.csv");
    (d, s)
}

#[test]
fn feedback_delay_changes_the_decision_log() {
    let (d, series) = trip_dir();
    let s = series.to_str().unwrap();
    let a = d.path().join("a");
    let b = d.path().join("b");
    ok(&a, &["linkadapt", "simulate", "--series", s, "--delay", "0"]);
    ok(&b, &["linkadapt", "simulate", "--series", s, "--delay", "0.5"]);
    assert_ne!(read(a.join("decisions.csv")), read(b.join("decisions.csv")));
    let cdf = read(b.join("cdf.csv"));
    assert!(cdf.starts_with("throughput_bps,cdf"));
    let x = csv_column(&cdf, 0);
    let f = csv_column(&cdf, 1);
    assert!(x.windows(2).all(|w| w[0] < w[1]));
    assert!(f.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*f.last().unwrap(), 1.0);
    // the standalone CDF command agrees with the simulator's own
    let dec = b.join("decisions.csv");
    ok(&b, &["linkadapt", "cdf", "--decisions", dec.to_str().unwrap(), "--out", "again.csv"]);
    assert_eq!(cdf, read(b.join("again.csv")));
}

#[test]
fn missing_series_file_is_an_error() {
    let d = tempfile::tempdir().unwrap();
    let out = run(d.path(), &["linkadapt", "simulate", "--series", "/nonexistent/series.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_count_does_not_change_results() {
    let (d, series) = trip_dir();
    let s = series.to_str().unwrap();
    let one = d.path().join("one");
    let many = d.path().join("many");
    ok(&one, &["--threads", "1", "linkadapt", "simulate", "--series", s]);
    ok(&many, &["--threads", "3", "linkadapt", "simulate", "--series", s]);
    assert_eq!(read(one.join("decisions.csv")), read(many.join("decisions.csv")));
}

#[test]
fn default_trip_has_the_configured_block_count() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["linkadapt", "simulate"]);
    let summary = json(d.path().join("summary.json"));
    let p = ScenarioParams::default();
    let expected = (p.trip_km * 1e3 / (p.speed_kmh / 3.6) / p.block_period_s).round() as u64;
    assert_eq!(summary["blocks"].as_u64().unwrap(), expected);
    assert_eq!(expected, 540_000);
    assert_eq!(summary["delay_blocks"], 25);
}

#[test]
fn config_directory_overrides_defaults() {
    let cfg = tempfile::tempdir().unwrap();
    std::fs::write(
        cfg.path().join("dualpol.toml"),
        "center_snr_db = 12.5\n[scenario]\ntrip_km = 2.0\n[adapt]\npm_receiver = \"true-zf\"\n",
    )
    .unwrap();
    let d = tempfile::tempdir().unwrap();
    let out = bin()
        .env("DUALPOL_CONFIG_DIR", cfg.path())
        .args(["--out-dir", d.path().to_str().unwrap(), "linkadapt", "simulate"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(d.path().join("summary.json"));
    assert_eq!(summary["center_snr_db"], 12.5);
    assert_eq!(summary["blocks"], 7_200);
    let manifest = json(d.path().join("manifest.json"));
    assert_eq!(manifest["parameters"]["trip"]["adapt"]["pm_receiver"], "true-zf");

    std::fs::write(cfg.path().join("dualpol.toml"), "[scenario]\ntrip_kms = 2.0\n").unwrap();
    let out = bin()
        .env("DUALPOL_CONFIG_DIR", cfg.path())
        .args(["--out-dir", d.path().to_str().unwrap(), "channel", "gen"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trip_kms"));
}

#[test]
fn amplitude_error_budget_reports_forty_db() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["fd", "budget", "--epsilon", "0.01"]);
    let b = json(d.path().join("budget.json"));
    assert_eq!(b["amplitude_error_cancellation_db"].as_f64().unwrap(), 40.0);
}

#[test]
fn attenuation_sweep_is_monotone() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["fd", "sweep", "--target-sinr-db", "27", "--max-db", "120"]);
    let text = read(d.path().join("sweep.csv"));
    assert!(text.starts_with("alpha_total_db,required_passive_db"));
    let req = csv_column(&text, 1);
    assert_eq!(req.len(), 25);
    assert!(req.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let out = run(d.path(), &["fd", "sweep"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--target-sinr-db"));
}

#[test]
fn unreachable_target_has_its_own_exit_code() {
    let d = tempfile::tempdir().unwrap();
    let out = run(d.path(), &["fd", "budget", "--target-sinr-db", "80"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(json(d.path().join("budget.json"))["infeasible"].is_string());
    assert!(d.path().join("manifest.json").exists());
}

#[test]
fn canceller_table_grows_with_taps() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["fd", "canceller", "--spacing", "1.25e-7", "--bandwidth", "1e6", "--max-taps", "4",
                   "--path", "1.3e-7:0.8:0.1", "--path", "4.1e-7:-0.2:0.3"]);
    let text = read(d.path().join("canceller.csv"));
    let achieved = csv_column(&text, 1);
    assert_eq!(achieved.len(), 4);
    assert!(achieved.windows(2).all(|w| w[1] >= w[0] - 1e-9));
}
