//! Python bindings: configuration, single runs, KPI access, and the
//! headline coordination operations (overhead budget, projector
//! construction, effective-SINR mapping, distribution statistics).
//!
//! Build with `cargo build -p tddsim-py`; `python/smoke_test.py` locates
//! the produced shared library and exercises this surface end to end.

use std::path::PathBuf;
use std::str::FromStr;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tddsim_core::csa::{self, AggressorEstimate};
use tddsim_core::linalg::{CMat, CVec, C64};
use tddsim_core::phy;
use tddsim_core::sim::{self, KpiStore, Scheme, SimConfig};
use tddsim_core::topology::CellId;

fn value_err(msg: impl ToString) -> PyErr {
    PyValueError::new_err(msg.to_string())
}

/// Simulation configuration: defaults, TOML round-trip, and the axis knobs
/// usually swept from Python. Everything else is reachable through TOML.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: SimConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new() -> Self {
        PyConfig {
            inner: SimConfig::default(),
        }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = SimConfig::from_toml_str(text).map_err(value_err)?;
        Ok(PyConfig { inner })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(value_err)
    }

    fn config_hash(&self) -> String {
        self.inner.config_hash()
    }

    #[getter]
    fn get_cells(&self) -> u32 {
        self.inner.layout.cells
    }

    #[setter]
    fn set_cells(&mut self, cells: u32) {
        self.inner.layout.cells = cells;
    }

    #[getter]
    fn get_duration_s(&self) -> f64 {
        self.inner.run.duration_s
    }

    #[setter]
    fn set_duration_s(&mut self, s: f64) {
        self.inner.run.duration_s = s;
    }

    #[getter]
    fn get_load_mbps(&self) -> f64 {
        self.inner.traffic.offered_load_mbps
    }

    #[setter]
    fn set_load_mbps(&mut self, mbps: f64) {
        self.inner.traffic.offered_load_mbps = mbps;
    }

    #[getter]
    fn get_scheme(&self) -> &'static str {
        self.inner.run.scheme.as_str()
    }

    #[setter]
    fn set_scheme(&mut self, scheme: &str) -> PyResult<()> {
        self.inner.run.scheme = Scheme::from_str(scheme).map_err(value_err)?;
        Ok(())
    }

    #[getter]
    fn get_seed(&self) -> u64 {
        self.inner.run.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.run.seed = seed;
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(cells={}, scheme='{}', seed={}, load_mbps={}, duration_s={})",
            self.inner.layout.cells,
            self.inner.run.scheme,
            self.inner.run.seed,
            self.inner.traffic.offered_load_mbps,
            self.inner.run.duration_s
        )
    }
}

/// One run's KPI store: counts, sample arrays, summary, JSON round-trip.
#[pyclass(name = "Kpi")]
struct PyKpi {
    inner: KpiStore,
}

#[pymethods]
impl PyKpi {
    #[getter]
    fn scheme(&self) -> &'static str {
        self.inner.scheme.as_str()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn cells(&self) -> u32 {
        self.inner.cells
    }

    #[getter]
    fn slots(&self) -> u64 {
        self.inner.slots
    }

    #[getter]
    fn overhead_bits(&self) -> u64 {
        self.inner.overhead_bits
    }

    #[getter]
    fn dl_latency_ms(&self) -> Vec<f64> {
        self.inner.dl_latency_ms.clone()
    }

    #[getter]
    fn ul_latency_ms(&self) -> Vec<f64> {
        self.inner.ul_latency_ms.clone()
    }

    #[getter]
    fn mu(&self) -> Vec<f64> {
        self.inner.mu.clone()
    }

    #[getter]
    fn ul_cir_db(&self) -> Vec<f64> {
        self.inner.ul_cir_db.clone()
    }

    /// Packet counters as a dict: generated/decoded/failed per direction.
    fn counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = &self.inner.counts;
        let d = PyDict::new(py);
        d.set_item("generated_dl", c.generated_dl)?;
        d.set_item("generated_ul", c.generated_ul)?;
        d.set_item("decoded_dl", c.decoded_dl)?;
        d.set_item("decoded_ul", c.decoded_ul)?;
        d.set_item("failed_dl", c.failed_dl)?;
        d.set_item("failed_ul", c.failed_ul)?;
        d.set_item("harq_attempts", c.harq_attempts)?;
        Ok(d)
    }

    /// Headline summary as a dict; outage values are None when the quantile
    /// falls into the HARQ-failure mass.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = &self.inner.summary;
        let d = PyDict::new(py);
        d.set_item("dl_outage_ms", s.dl_outage.value_ms)?;
        d.set_item("dl_outage_insufficient", s.dl_outage.insufficient)?;
        d.set_item("ul_outage_ms", s.ul_outage.value_ms)?;
        d.set_item("ul_outage_insufficient", s.ul_outage.insufficient)?;
        d.set_item("median_mu", s.median_mu)?;
        d.set_item("ul_cir_p10_db", s.ul_cir_p10_db)?;
        d.set_item("dl_tput_p10_bits_per_ms", s.dl_tput_p10_bits_per_ms)?;
        d.set_item("ul_tput_p10_bits_per_ms", s.ul_tput_p10_bits_per_ms)?;
        Ok(d)
    }

    fn check_integrity(&self) -> PyResult<()> {
        self.inner.check_integrity().map_err(value_err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = KpiStore::from_json(text).map_err(value_err)?;
        Ok(PyKpi { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner
            .save(&path)
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = KpiStore::load(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        Ok(PyKpi { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Kpi(scheme='{}', seed={}, slots={}, decoded={}, failed={})",
            self.inner.scheme,
            self.inner.seed,
            self.inner.slots,
            self.inner.counts.decoded_dl + self.inner.counts.decoded_ul,
            self.inner.counts.failed_dl + self.inner.counts.failed_ul,
        )
    }
}

/// Run one simulation to completion; the KPI store is a pure function of
/// (config, seed).
#[pyfunction]
fn run(config: &PyConfig) -> PyResult<PyKpi> {
    let inner = sim::run(&config.inner).map_err(value_err)?;
    Ok(PyKpi { inner })
}

/// Map-exchange budget in bits per radio-frame-configuration period.
#[pyfunction]
fn signaling_overhead(prbs: u32, subband_prbs: u32, pmi_bits: u32, cli_slots: u32) -> u64 {
    csa::signaling_overhead(prbs, subband_prbs, pmi_bits, cli_slots)
}

fn vec_from_py(entries: Vec<C64>) -> PyResult<CVec> {
    if entries.is_empty() {
        return Err(value_err("empty vector"));
    }
    let mut v = CVec::zeros(entries.len());
    for (i, e) in entries.into_iter().enumerate() {
        v[i] = e;
    }
    Ok(v)
}

fn mat_to_py(m: &CMat) -> Vec<Vec<C64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Orthogonal projector onto the complement of the span of the given
/// interference vectors, as a row-major nested list. Dependent vectors are
/// absorbed by the orthogonalization.
#[pyfunction]
fn cli_projector_complement(vectors: Vec<Vec<C64>>) -> PyResult<Vec<Vec<C64>>> {
    if vectors.is_empty() {
        return Err(value_err("no interference vectors"));
    }
    let estimates: Vec<AggressorEstimate> = vectors
        .into_iter()
        .enumerate()
        .map(|(i, entries)| {
            Ok(AggressorEstimate::new(
                CellId(0),
                0,
                CellId(1 + i as u16),
                vec_from_py(entries)?,
            ))
        })
        .collect::<PyResult<_>>()?;
    let dim = estimates[0].vector.dim();
    if estimates.iter().any(|e| e.vector.dim() != dim) {
        return Err(value_err("mixed vector dimensions"));
    }
    let state = csa::build_cli_projector(&estimates, 0).map_err(value_err)?;
    Ok(mat_to_py(&state.complement()))
}

/// Exponential effective-SINR mapping over per-resource linear SINRs.
#[pyfunction]
fn eesm(sinrs: Vec<f64>, beta: f64) -> PyResult<f64> {
    if sinrs.is_empty() {
        return Err(value_err("no SINR samples"));
    }
    Ok(phy::eesm(&sinrs, beta))
}

/// Empirical CDF as (value, fraction) steps; duplicates merge upward.
#[pyfunction]
fn ecdf(samples: Vec<f64>) -> Vec<(f64, f64)> {
    sim::ecdf(&samples)
}

/// Latency at the (1 - p) quantile with failed packets censored at rank
/// +infinity. Returns (value_or_None, insufficient_samples).
#[pyfunction]
fn outage_latency(completed: Vec<f64>, failed: usize, p: f64) -> PyResult<(Option<f64>, bool)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(value_err("outage probability must lie in (0, 1)"));
    }
    let est = sim::outage_latency(&completed, failed, p);
    Ok((est.value_ms, est.insufficient))
}

/// Labels of the evaluated schemes, in their canonical order.
#[pyfunction]
fn schemes() -> Vec<&'static str> {
    Scheme::ALL.iter().map(|s| s.as_str()).collect()
}

#[pymodule]
fn tddsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyKpi>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(signaling_overhead, m)?)?;
    m.add_function(wrap_pyfunction!(cli_projector_complement, m)?)?;
    m.add_function(wrap_pyfunction!(eesm, m)?)?;
    m.add_function(wrap_pyfunction!(ecdf, m)?)?;
    m.add_function(wrap_pyfunction!(outage_latency, m)?)?;
    m.add_function(wrap_pyfunction!(schemes, m)?)?;
    Ok(())
}
