use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use wavemetro::acquisition::{self, InterleavePlan, ReconstructMode};
use wavemetro::cmrr::{cmrr_report, Band};
use wavemetro::metrics::{self, EvmMode, EvmNormalization};
use wavemetro::synth::{self, PrbsSpec};
use wavemetro::wavesplit::{self, LineMeasurement};
use wavemetro::{forward_transform, ExactRate, Modulation, RealWaveform, SymbolFrame};

create_exception!(wavemetro, WavemetroError, PyException, "Numerical failure inside wavemetro.");

fn to_py(e: wavemetro::Error) -> PyErr {
    match e {
        wavemetro::Error::Validation(msg) => PyValueError::new_err(msg),
        other => WavemetroError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn or_py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for wavemetro::Result<T> {
    fn or_py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn modulation(name: &str) -> PyResult<Modulation> {
    name.parse().or_py()
}

fn rate(s: &str) -> PyResult<ExactRate> {
    s.parse().or_py()
}

fn real(samples: Vec<f64>, dt: f64) -> PyResult<RealWaveform> {
    RealWaveform::new(samples, dt, 0.0).or_py()
}

/// PRBS bits from an LFSR of the given degree. `seed` defaults to all ones.
#[pyfunction]
#[pyo3(signature = (degree, n, seed=None))]
fn prbs(degree: u32, n: usize, seed: Option<u64>) -> PyResult<Vec<u8>> {
    let seed = seed.unwrap_or_else(|| (1u64 << degree.min(63)) - 1);
    let spec = PrbsSpec::new(degree, seed).or_py()?;
    synth::prbs_generate(&spec, n).or_py()
}

/// Gray-mapped unit-power symbols for `bits`.
#[pyfunction]
fn map_symbols(bits: Vec<u8>, modulation_name: &str) -> PyResult<Vec<Complex64>> {
    let frame = wavemetro::map_symbols(&bits, modulation(modulation_name)?).or_py()?;
    Ok(frame.symbols().to_vec())
}

/// Nearest-point decisions and their bits.
#[pyfunction]
fn decide(symbols: Vec<Complex64>, modulation_name: &str) -> PyResult<(Vec<Complex64>, Vec<u8>)> {
    let frame = SymbolFrame::new(symbols, modulation(modulation_name)?, None).or_py()?;
    Ok(metrics::decide_symbols(&frame))
}

/// Adds complex white Gaussian noise at `snr_db` relative to the mean
/// symbol power.
#[pyfunction]
fn add_awgn(symbols: Vec<Complex64>, snr_db: f64, seed: u64) -> PyResult<Vec<Complex64>> {
    let mut out = symbols;
    synth::awgn_in_place(&mut out, snr_db, seed).or_py()?;
    Ok(out)
}

/// Circular fractional delay of a real record by `tau` seconds.
#[pyfunction]
fn fractional_delay(samples: Vec<f64>, dt: f64, tau: f64) -> PyResult<Vec<f64>> {
    let w = real(samples, dt)?;
    Ok(wavemetro::fractional_delay(&w, tau).or_py()?.into_samples())
}

#[pyclass(name = "InterleavePlan", module = "wavemetro", frozen)]
struct PyInterleavePlan {
    inner: InterleavePlan,
}

#[pymethods]
impl PyInterleavePlan {
    #[getter]
    fn p(&self) -> u64 {
        self.inner.ratio().p()
    }

    #[getter]
    fn q(&self) -> u64 {
        self.inner.ratio().q()
    }

    #[getter]
    fn pattern_len(&self) -> u64 {
        self.inner.pattern_len()
    }

    #[getter]
    fn required_samples(&self) -> u64 {
        self.inner.required_samples()
    }

    /// Effective output rate as an exact `num/den` string.
    #[getter]
    fn effective_rate(&self) -> String {
        self.inner.effective_rate().to_string()
    }

    #[getter]
    fn out_dt(&self) -> f64 {
        self.inner.out_dt_f64()
    }

    #[getter]
    fn degenerate(&self) -> bool {
        self.inner.is_degenerate()
    }

    fn positions(&self) -> Vec<u64> {
        self.inner.positions().to_vec()
    }

    /// Reorders acquired samples into a dense record. `mode` is `"strict"`
    /// or `"average"`.
    #[pyo3(signature = (samples, mode="strict"))]
    fn reconstruct(&self, samples: Vec<f64>, mode: &str) -> PyResult<Vec<f64>> {
        let mode = match mode {
            "strict" => ReconstructMode::Strict,
            "average" => ReconstructMode::Average,
            other => return Err(PyValueError::new_err(format!("unknown mode '{other}'"))),
        };
        Ok(acquisition::interleave_reconstruct(&samples, &self.inner, mode).or_py()?.into_samples())
    }

    fn __repr__(&self) -> String {
        format!(
            "InterleavePlan(p={}, q={}, pattern_len={}, required_samples={})",
            self.p(),
            self.q(),
            self.pattern_len(),
            self.required_samples()
        )
    }
}

/// Rates are exact strings such as `"80000000000"` or `"25000000000/7"`.
#[pyfunction]
fn interleave_plan(f_scope: &str, f_sym: &str, pattern_len: u64) -> PyResult<PyInterleavePlan> {
    let inner = acquisition::interleave_plan(rate(f_scope)?, rate(f_sym)?, pattern_len).or_py()?;
    Ok(PyInterleavePlan { inner })
}

#[pyfunction]
#[pyo3(signature = (vp, vn, dt, band=None, tau_window=100e-12))]
fn cmrr<'py>(
    py: Python<'py>,
    vp: Vec<f64>,
    vn: Vec<f64>,
    dt: f64,
    band: Option<(f64, f64)>,
    tau_window: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let band = band.map(|(lo, hi)| Band::new(lo, hi)).transpose().or_py()?;
    let r = cmrr_report(&real(vp, dt)?, &real(vn, dt)?, band, tau_window).or_py()?;
    let d = PyDict::new(py);
    d.set_item("alpha", r.params.alpha)?;
    d.set_item("tau", r.params.tau)?;
    d.set_item("at_boundary", r.params.at_boundary)?;
    d.set_item("band", (r.band.lo, r.band.hi))?;
    d.set_item("freqs", r.trace.freqs)?;
    d.set_item("cmrr_db", r.trace.cmrr_db)?;
    d.set_item("rejection_db", r.trace.rejection_db)?;
    d.set_item("floor_mask", r.trace.floor_mask)?;
    d.set_item("min_rejection_db", r.summary.min_rejection_db)?;
    d.set_item("median_rejection_db", r.summary.median_rejection_db)?;
    d.set_item("floor_limited", r.summary.floor_limited)?;
    d.set_item("alpha_dc", r.summary.alpha_dc)?;
    Ok(d)
}

fn records(rs: Vec<Vec<f64>>, dt: f64) -> PyResult<Vec<RealWaveform>> {
    rs.into_iter().map(|r| real(r, dt)).collect()
}

/// Per-record timing offsets, positive when a record is late.
#[pyfunction]
fn jitter_estimate<'py>(py: Python<'py>, references: Vec<Vec<f64>>, dt: f64, f_ref: f64) -> PyResult<Bound<'py, PyDict>> {
    let est = acquisition::iq_jitter_estimate(&records(references, dt)?, f_ref).or_py()?;
    let d = PyDict::new(py);
    d.set_item("offsets", est.per_record_dt)?;
    d.set_item("ambiguous", est.ambiguous)?;
    d.set_item("amplitudes", est.amplitudes)?;
    d.set_item("ambiguity_range", est.ambiguity_range)?;
    Ok(d)
}

/// Aligns every signal record with the offsets measured on its reference
/// and returns their average.
#[pyfunction]
fn jitter_compensate(signals: Vec<Vec<f64>>, references: Vec<Vec<f64>>, dt: f64, f_ref: f64) -> PyResult<Vec<f64>> {
    let est = acquisition::iq_jitter_estimate(&records(references, dt)?, f_ref).or_py()?;
    let out = acquisition::iq_jitter_compensate(&records(signals, dt)?, &est).or_py()?;
    Ok(out.into_samples())
}

#[pyfunction]
#[pyo3(signature = (rx, modulation_name, reference=None, normalization="average", mode="data-aided"))]
fn evm<'py>(
    py: Python<'py>,
    rx: Vec<Complex64>,
    modulation_name: &str,
    reference: Option<Vec<Complex64>>,
    normalization: &str,
    mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let m = modulation(modulation_name)?;
    let norm = match normalization {
        "average" => EvmNormalization::Average,
        "peak" => EvmNormalization::Peak,
        other => return Err(PyValueError::new_err(format!("unknown normalization '{other}'"))),
    };
    let mode = match mode {
        "data-aided" => EvmMode::DataAided,
        "decision-directed" => EvmMode::DecisionDirected,
        other => return Err(PyValueError::new_err(format!("unknown EVM mode '{other}'"))),
    };
    let rx = SymbolFrame::new(rx, m, None).or_py()?;
    let reference = reference.map(|s| SymbolFrame::new(s, m, None)).transpose().or_py()?;
    let e = metrics::evm(&rx, reference.as_ref(), norm, mode).or_py()?;
    let snr = metrics::snr_from_evm(&e);
    let d = PyDict::new(py);
    d.set_item("evm_rms", e.evm_rms)?;
    d.set_item("evm_percent", e.evm_percent)?;
    d.set_item("n_symbols", e.n_symbols)?;
    d.set_item("snr_db", snr.db)?;
    d.set_item("snr_bias_warning", snr.bias_warning)?;
    if norm == EvmNormalization::Average {
        d.set_item("ber_from_evm", metrics::ber_from_evm(&e, m).or_py()?.ber)?;
    }
    Ok(d)
}

/// Theoretical BER of Gray-coded square QAM at linear SNR `snr`.
#[pyfunction]
fn ber_from_snr(snr: f64, modulation_name: &str) -> PyResult<f64> {
    metrics::ber_from_snr(snr, modulation(modulation_name)?).or_py()
}

#[pyfunction]
fn q_function(x: f64) -> f64 {
    metrics::q_function(x)
}

/// Counted bit errors: `(ber, errors, n_bits, (ci_lo, ci_hi))`.
#[pyfunction]
fn count_bit_errors(decided: Vec<u8>, truth: Vec<u8>) -> PyResult<(f64, u64, u64, (f64, f64))> {
    let e = metrics::count_bit_errors(&decided, &truth).or_py()?;
    let ci = e.wilson_ci95.unwrap_or((f64::NAN, f64::NAN));
    Ok((e.ber, e.errors.unwrap_or(0), e.n_bits.unwrap_or(0), ci))
}

type SweepRow = (f64, f64, f64, f64, f64, f64);

/// Monte-Carlo sweep; each row is
/// `(snr_db, evm_rms, ber_counted, ber_from_evm, ci_lo, ci_hi)`.
#[pyfunction]
fn ber_sweep(
    py: Python<'_>,
    modulation_name: &str,
    snr_db: Vec<f64>,
    n_symbols: usize,
    seed: u64,
) -> PyResult<Vec<SweepRow>> {
    let m = modulation(modulation_name)?;
    let points = py.detach(|| metrics::ber_sweep(m, &snr_db, n_symbols, seed)).or_py()?;
    Ok(points
        .iter()
        .map(|p| (p.snr_db, p.evm_rms, p.ber_counted, p.ber_from_evm, p.ci_lo, p.ci_hi))
        .collect())
}

/// Separates forward and reverse waves from real time records taken at
/// `positions` (metres). Masked bins come back as NaN.
#[pyfunction]
#[pyo3(signature = (records, dt, positions, velocity, cond_threshold=wavesplit::DEFAULT_COND_THRESHOLD))]
fn split_waves<'py>(
    py: Python<'py>,
    records: Vec<Vec<f64>>,
    dt: f64,
    positions: Vec<f64>,
    velocity: f64,
    cond_threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let spectra = records.into_iter().map(|r| real(r, dt).map(|w| forward_transform(&w))).collect::<PyResult<Vec<_>>>()?;
    let freqs = spectra.first().map(|s| s.freqs()).unwrap_or_default();
    let m = LineMeasurement::new(positions, spectra, velocity).or_py()?;
    let r = wavesplit::split_waves(&m, cond_threshold).or_py()?;
    let d = PyDict::new(py);
    d.set_item("freqs", freqs)?;
    d.set_item("forward", r.forward.bins().to_vec())?;
    d.set_item("reverse", r.reverse.bins().to_vec())?;
    d.set_item("condition", r.condition)?;
    d.set_item("singular_mask", r.singular_mask)?;
    Ok(d)
}

#[pymodule(name = "wavemetro")]
fn wavemetro_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("WavemetroError", m.py().get_type::<WavemetroError>())?;
    m.add_class::<PyInterleavePlan>()?;
    m.add_function(wrap_pyfunction!(prbs, m)?)?;
    m.add_function(wrap_pyfunction!(map_symbols, m)?)?;
    m.add_function(wrap_pyfunction!(decide, m)?)?;
    m.add_function(wrap_pyfunction!(add_awgn, m)?)?;
    m.add_function(wrap_pyfunction!(fractional_delay, m)?)?;
    m.add_function(wrap_pyfunction!(interleave_plan, m)?)?;
    m.add_function(wrap_pyfunction!(cmrr, m)?)?;
    m.add_function(wrap_pyfunction!(jitter_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(jitter_compensate, m)?)?;
    m.add_function(wrap_pyfunction!(evm, m)?)?;
    m.add_function(wrap_pyfunction!(ber_from_snr, m)?)?;
    m.add_function(wrap_pyfunction!(q_function, m)?)?;
    m.add_function(wrap_pyfunction!(count_bit_errors, m)?)?;
    m.add_function(wrap_pyfunction!(ber_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(split_waves, m)?)?;
    Ok(())
}
