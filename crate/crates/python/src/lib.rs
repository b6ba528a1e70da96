//! Python bindings for `dualpol`.
//!
//! Powers and SNRs cross the boundary in dB unless a name says otherwise.
//! Library errors surface as `ValueError`, except unreachable design targets,
//! which raise `dualpol.InfeasibleError`.

use dualpol::channel::{gen_maritime_series, LmsModelParams, ScenarioParams};
use dualpol::constellation::{self as cst, Constellation4D};
use dualpol::fullduplex::{self as fdx, CancellerConfig, FdBudget, SincKind};
use dualpol::ga::GaConfig;
use dualpol::infometrics::{self as im, AwgnModel};
use dualpol::labeling::{self as lab, Labeling as CoreLabeling};
use dualpol::linkadapt::{self as la, MimoMode, TripConfig};
use dualpol::pla::{self, LutSet, MimoScheme, PmReceiver};
use dualpol::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::sync::OnceLock;

create_exception!(pydualpol, InfeasibleError, PyException);

fn err(e: dualpol::Error) -> PyErr {
    match e {
        dualpol::Error::Infeasible(m) => InfeasibleError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for dualpol::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn luts() -> &'static LutSet {
    static CELL: OnceLock<LutSet> = OnceLock::new();
    CELL.get_or_init(LutSet::bundled)
}

fn ga_config(population: usize, generations: usize, samples: usize, seed: u64) -> GaConfig {
    GaConfig {
        population,
        generations,
        sample_budget: samples,
        seed,
        ..GaConfig::default()
    }
}

/// Monte Carlo estimate as `(value, std_error)`.
fn estimate(e: im::McEstimate) -> (f64, f64) {
    (e.value, e.std_error)
}

/// A 4D constellation with average symbol energy 2.
#[pyclass(frozen, module = "pydualpol")]
pub struct Constellation {
    inner: Constellation4D,
}

#[pymethods]
impl Constellation {
    /// Cartesian product of two QAMs carrying `m` bits in total (even `m`).
    #[staticmethod]
    fn qam(m: u32) -> PyResult<Self> {
        Ok(Constellation { inner: cst::gen_cartesian_qam(m).py()? })
    }

    /// Lattice amplitude modulation with `size` points of D4.
    #[staticmethod]
    #[pyo3(signature = (size, snr_eval_db=8.0, seed=1, population=64, generations=200, samples=20_000))]
    fn lam(
        py: Python<'_>,
        size: usize,
        snr_eval_db: f64,
        seed: u64,
        population: usize,
        generations: usize,
        samples: usize,
    ) -> PyResult<Self> {
        let cfg = ga_config(population, generations, samples, seed);
        let inner = py.detach(|| cst::gen_lam(size, &cfg, snr_eval_db, seed)).py()?;
        Ok(Constellation { inner })
    }

    /// Symbols given as `(rh, lh)` complex pairs; normalized on construction.
    #[staticmethod]
    #[pyo3(signature = (symbols, name="custom"))]
    fn from_symbols(symbols: Vec<(Complex64, Complex64)>, name: &str) -> PyResult<Self> {
        let syms = symbols.into_iter().map(|(a, b)| cst::Symbol4D::new(a, b)).collect();
        let c = Constellation4D::new(syms, name).py()?;
        Ok(Constellation { inner: c.normalized() })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Constellation { inner: cst::import_constellation(path).py()? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        cst::export_constellation(&self.inner, path).py()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn bits(&self) -> u32 {
        self.inner.bits()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Constellation({:?}, M={})", self.inner.name(), self.inner.len())
    }

    /// `(rh, lh)` complex pairs.
    fn symbols(&self) -> Vec<(Complex64, Complex64)> {
        self.inner.symbols().iter().map(|s| (s.rh, s.lh)).collect()
    }

    fn min_distance(&self) -> f64 {
        cst::min_distance(&self.inner)
    }

    /// Number of nearest neighbors of every symbol.
    fn neighbor_counts(&self) -> Vec<usize> {
        cst::neighbor_graph(&self.inner).iter().map(Vec::len).collect()
    }

    /// AIR in bits per 4D use as `(value, std_error)`.
    #[pyo3(signature = (snr_db, samples=100_000, seed=1))]
    fn air(&self, py: Python<'_>, snr_db: f64, samples: usize, seed: u64) -> (f64, f64) {
        let model = AwgnModel::from_snr_db(snr_db);
        estimate(py.detach(|| im::air(&self.inner, &model, samples, seed)))
    }

    /// Pragmatic AIR under `labeling` as `(value, std_error)`.
    #[pyo3(signature = (labeling, snr_db, samples=100_000, seed=1))]
    fn pair(&self, py: Python<'_>, labeling: &Labeling, snr_db: f64, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
        let model = AwgnModel::from_snr_db(snr_db);
        let e = py.detach(|| im::pair(&self.inner, &labeling.inner, &model, samples, seed)).py()?;
        Ok(estimate(e))
    }

    /// Posterior symbol probabilities for the received point `(rh, lh)`.
    fn posterior(&self, y: (Complex64, Complex64), snr_db: f64) -> Vec<f64> {
        im::posterior(&self.inner, &cst::Symbol4D::new(y.0, y.1), &AwgnModel::from_snr_db(snr_db))
    }
}

/// Per-symbol labels over GF(2^n).
#[pyclass(frozen, module = "pydualpol")]
pub struct Labeling {
    inner: CoreLabeling,
}

#[pymethods]
impl Labeling {
    #[new]
    #[pyo3(signature = (labels, n=1))]
    fn new(labels: Vec<u32>, n: u32) -> PyResult<Self> {
        Ok(Labeling { inner: CoreLabeling::new(n, labels).py()? })
    }

    /// Gray labeling of a Cartesian QAM product.
    #[staticmethod]
    fn gray(c: &Constellation) -> PyResult<Self> {
        Ok(Labeling { inner: lab::gray_product_labeling(&c.inner).py()? })
    }

    /// Genetic search maximizing the mean PAIR over `snr_db`. Returns the
    /// labeling and the best fitness of every generation.
    #[staticmethod]
    #[pyo3(signature = (c, snr_db, n=1, seed=1, population=64, generations=200, samples=20_000))]
    #[allow(clippy::too_many_arguments)]
    fn optimize(
        py: Python<'_>,
        c: &Constellation,
        snr_db: Vec<f64>,
        n: u32,
        seed: u64,
        population: usize,
        generations: usize,
        samples: usize,
    ) -> PyResult<(Self, Vec<f64>)> {
        let cfg = ga_config(population, generations, samples, seed);
        let r = py.detach(|| lab::ga_optimize_labeling(&c.inner, n, &snr_db, &cfg)).py()?;
        Ok((Labeling { inner: r.labeling }, r.history))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Labeling { inner: lab::import_labeling(path).py()? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        lab::export_labeling(&self.inner, path).py()
    }

    #[getter]
    fn labels(&self) -> Vec<u32> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.field_exponent()
    }

    #[getter]
    fn digits(&self) -> u32 {
        self.inner.digits_per_symbol()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Largest Hamming distance between labels of nearest neighbors.
    fn quasi_gray_order(&self, c: &Constellation) -> PyResult<u32> {
        lab::quasi_gray_order(&c.inner, &self.inner).py()
    }
}

/// `phi` of the bundled `d`-bit table at `snr_db`.
#[pyfunction]
fn miesm_phi(d: u32, snr_db: f64) -> PyResult<f64> {
    Ok(luts().get(d).py()?.phi_db(snr_db))
}

/// Inverse of `phi` in dB and whether the table clamped it.
#[pyfunction]
fn miesm_phi_inv(d: u32, info: f64) -> PyResult<(f64, bool)> {
    let inv = luts().get(d).py()?.phi_inv(info).py()?;
    Ok((pla::lin_to_db(inv.gamma), inv.clamp != pla::Clamp::None))
}

/// Effective SINR (dB) of per-symbol SINRs (dB).
#[pyfunction]
#[pyo3(signature = (snr_db, d, beta1=1.0, beta2=1.0))]
fn effective_sinr(snr_db: Vec<f64>, d: u32, beta1: f64, beta2: f64) -> PyResult<f64> {
    let params = pla::EsmParams::new(beta1, beta2).py()?;
    let g: Vec<f64> = snr_db.iter().map(|&s| pla::db_to_lin(s)).collect();
    Ok(pla::lin_to_db(pla::effective_sinr(&g, luts().get(d).py()?, &params).py()?))
}

/// Linear post-detection SINRs for a 2x2 channel `h[r][t]`.
///
/// `scheme` is one of `siso`, `optbc`, `pm-matched-filter`, `pm-true-zf`,
/// `pm-mmse`, `pmod0`, `pmod1`.
#[pyfunction]
fn mimo_post_sinr(scheme: &str, h: [[Complex64; 2]; 2], sigma2: f64) -> PyResult<Vec<f64>> {
    let s = match scheme {
        "siso" => MimoScheme::Siso,
        "optbc" => MimoScheme::Optbc,
        "pm-matched-filter" => MimoScheme::Pm(PmReceiver::MatchedFilter),
        "pm-true-zf" => MimoScheme::Pm(PmReceiver::TrueZf),
        "pm-mmse" => MimoScheme::Pm(PmReceiver::Mmse),
        "pmod0" => MimoScheme::Pmod { active: 0 },
        "pmod1" => MimoScheme::Pmod { active: 1 },
        other => return Err(PyValueError::new_err(format!("unknown scheme {other:?}"))),
    };
    pla::mimo_post_sinr(s, &h, sigma2).py()
}

/// Adaptive MODCOD and MIMO selection over a generated maritime trip.
/// Returns the trip summary as a dict.
#[pyfunction]
#[pyo3(signature = (trip_km=150.0, center_snr_db=dualpol::channel::DEFAULT_CENTER_SNR_DB, delay_s=0.5, modes=None, seed=1))]
fn simulate_trip<'py>(
    py: Python<'py>,
    trip_km: f64,
    center_snr_db: f64,
    delay_s: f64,
    modes: Option<Vec<String>>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let modes: Vec<MimoMode> = match modes {
        Some(v) => v.iter().map(|m| MimoMode::parse(m)).collect::<dualpol::Result<_>>().py()?,
        None => MimoMode::ALL.to_vec(),
    };
    let p = ScenarioParams { trip_km, ..ScenarioParams::default() };
    let summary = py
        .detach(|| -> dualpol::Result<la::TripSummary> {
            let series = gen_maritime_series(&p, &LmsModelParams::maritime(), seed)?;
            let cfg = TripConfig { feedback_delay_s: delay_s, ..TripConfig::new(p.clone(), center_snr_db) };
            let log = la::simulate_trip(&series, &cfg, &la::default_bearers(), &modes, luts(), seed)?;
            Ok(la::summarize(&log, p.block_period_s))
        })
        .py()?;
    let d = PyDict::new(py);
    d.set_item("blocks", summary.blocks)?;
    d.set_item("mean_throughput_bps", summary.mean_throughput_bps)?;
    d.set_item("per", summary.per)?;
    d.set_item("feasible_blocks", summary.feasible_blocks)?;
    d.set_item("feasible_failures", summary.feasible_failures)?;
    d.set_item("mode_histogram", summary.mode_histogram)?;
    Ok(d)
}

/// Full-duplex receive budget; powers in dB, cancellation in dB.
#[pyclass(frozen, module = "pydualpol")]
pub struct Budget {
    inner: FdBudget,
}

#[pymethods]
impl Budget {
    #[new]
    #[pyo3(signature = (desired_db=0.0, noise_db=-30.0, si_db=30.0, papr=4.0, enob=12.0, analog_db=30.0, digital_db=30.0))]
    fn new(desired_db: f64, noise_db: f64, si_db: f64, papr: f64, enob: f64, analog_db: f64, digital_db: f64) -> PyResult<Self> {
        let lin = |db: f64| 10f64.powf(db / 10.0);
        let inner = FdBudget {
            sigma_d2: lin(desired_db),
            sigma_n2: lin(noise_db),
            sigma_s2: lin(si_db),
            papr,
            enob,
            alpha_a: lin(-analog_db),
            alpha_d: lin(-digital_db),
        };
        inner.validate().py()?;
        Ok(Budget { inner })
    }

    /// SINR after cancellation, dB.
    fn sinr_db(&self) -> PyResult<f64> {
        Ok(10.0 * fdx::sinr_after_cancellation(&self.inner).py()?.log10())
    }

    /// Passive isolation (dB) for `target_sinr_db` at `tx_power_db`.
    fn required_passive_db(&self, tx_power_db: f64, target_sinr_db: f64) -> PyResult<f64> {
        let r = fdx::required_passive_attenuation(
            &self.inner,
            10f64.powf(tx_power_db / 10.0),
            10f64.powf(target_sinr_db / 10.0),
        )
        .py()?;
        Ok(r.attenuation_db)
    }
}

#[pyfunction]
fn cancellation_from_amplitude_error(epsilon: f64) -> f64 {
    fdx::cancellation_from_amplitude_error(epsilon)
}

#[pyfunction]
#[pyo3(signature = (bandwidth_hz, tau_s, normalized=true))]
fn cancellation_from_delay_error(bandwidth_hz: f64, tau_s: f64, normalized: bool) -> PyResult<f64> {
    let kind = if normalized { SincKind::Normalized } else { SincKind::Unnormalized };
    fdx::cancellation_from_delay_error(bandwidth_hz, tau_s, kind).py()
}

/// Least-squares canceller with `num_taps` uniformly spaced taps against a
/// coupling channel of `(delay_s, gain)` paths. Returns the cancellation, dB.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (num_taps, spacing_s, bandwidth_hz, paths, training_len=4096, samples=8192, seed=1))]
fn simulate_canceller(
    py: Python<'_>,
    num_taps: usize,
    spacing_s: f64,
    bandwidth_hz: f64,
    paths: Vec<(f64, Complex64)>,
    training_len: usize,
    samples: usize,
    seed: u64,
) -> PyResult<f64> {
    let cfg = CancellerConfig::uniform(num_taps, spacing_s, bandwidth_hz, training_len, seed);
    let channel: Vec<fdx::Path> = paths.into_iter().map(|(delay_s, gain)| fdx::Path { delay_s, gain }).collect();
    let r = py.detach(|| fdx::simulate_analog_canceller(&cfg, &channel, samples)).py()?;
    Ok(r.achieved_db)
}

#[pymodule]
fn pydualpol(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_class::<Constellation>()?;
    m.add_class::<Labeling>()?;
    m.add_class::<Budget>()?;
    m.add_function(wrap_pyfunction!(miesm_phi, m)?)?;
    m.add_function(wrap_pyfunction!(miesm_phi_inv, m)?)?;
    m.add_function(wrap_pyfunction!(effective_sinr, m)?)?;
    m.add_function(wrap_pyfunction!(mimo_post_sinr, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_trip, m)?)?;
    m.add_function(wrap_pyfunction!(cancellation_from_amplitude_error, m)?)?;
    m.add_function(wrap_pyfunction!(cancellation_from_delay_error, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_canceller, m)?)?;
    Ok(())
}
