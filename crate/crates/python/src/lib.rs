//! Python bindings for `thz_vapor`.
//!
//! Configurations, scenes and reports cross the boundary as JSON strings or
//! keyword arguments; signals and catalogs are wrapped as opaque classes.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyComplex;

use thz_vapor as core;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "TimeSignal", module = "thz_vapor", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTimeSignal(core::TimeSignal);

#[pymethods]
impl PyTimeSignal {
    #[new]
    #[pyo3(signature = (samples, sample_spacing_ps, start_time_ps = 0.0))]
    fn new(samples: Vec<f64>, sample_spacing_ps: f64, start_time_ps: f64) -> PyResult<Self> {
        core::TimeSignal::new(samples, sample_spacing_ps, start_time_ps).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        core::io::read_signal_csv(text).map(Self).map_err(err)
    }

    fn to_csv(&self) -> String {
        core::io::write_signal_csv(&self.0)
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.0.samples().to_vec()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times().collect()
    }

    #[getter]
    fn sample_spacing_ps(&self) -> f64 {
        self.0.sample_spacing()
    }

    #[getter]
    fn start_time_ps(&self) -> f64 {
        self.0.start_time()
    }

    fn energy(&self) -> f64 {
        self.0.energy()
    }

    fn main_peak(&self) -> PyResult<f64> {
        core::find_main_peak(&self.0).map_err(err)
    }

    /// Returns `(frequencies_ghz, values)` of the one-sided spectrum.
    fn spectrum<'py>(&self, py: Python<'py>) -> (Vec<f64>, Vec<Bound<'py, PyComplex>>) {
        let s = core::forward_transform(&self.0);
        let freqs = s.grid.frequencies().collect();
        let values = s.values.iter().map(|v| PyComplex::from_doubles(py, v.re, v.im)).collect();
        (freqs, values)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "TimeSignal(len={}, dt={} ps, start={} ps)",
            self.0.len(),
            self.0.sample_spacing(),
            self.0.start_time()
        )
    }
}

#[pyclass(name = "LineCatalog", module = "thz_vapor", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLineCatalog(core::LineCatalog);

#[pymethods]
impl PyLineCatalog {
    /// Builds a catalog from `(freq_ghz, intensity, fwhm_ghz)` triples.
    #[new]
    #[pyo3(signature = (lines, label = "python"))]
    fn new(lines: Vec<(f64, f64, f64)>, label: &str) -> PyResult<Self> {
        core::LineCatalog::from_raw(lines, label).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        core::parse_catalog_csv(text).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_jpl(text: &str) -> PyResult<Self> {
        core::parse_catalog_jpl(text).map(Self).map_err(err)
    }

    #[staticmethod]
    fn bundled() -> Self {
        Self(core::catalog::bundled_test_catalog())
    }

    fn to_csv(&self) -> String {
        core::write_catalog_csv(&self.0)
    }

    fn filter(&self, f_min_ghz: f64, f_max_ghz: f64, threshold: f64) -> Self {
        Self(core::filter_lines(&self.0, f_min_ghz, f_max_ghz, threshold))
    }

    #[getter]
    fn frequencies(&self) -> Vec<f64> {
        self.0.iter().map(|l| l.center_frequency).collect()
    }

    #[getter]
    fn nominal_strengths(&self) -> Vec<f64> {
        self.0.iter().map(|l| l.nominal_strength).collect()
    }

    #[getter]
    fn fwhms(&self) -> Vec<f64> {
        self.0.iter().map(|l| l.reference_fwhm).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("LineCatalog(len={}, source={:?})", self.0.len(), self.0.source_label)
    }
}

#[pyclass(name = "RemovalReport", module = "thz_vapor", frozen, skip_from_py_object)]
struct PyRemovalReport(core::RemovalReport);

#[pymethods]
impl PyRemovalReport {
    fn to_json(&self) -> PyResult<String> {
        self.0.to_json().map_err(err)
    }

    #[getter]
    fn ratio_before(&self) -> f64 {
        self.0.metrics.fluctuation_ratio_before
    }

    #[getter]
    fn ratio_after(&self) -> f64 {
        self.0.metrics.fluctuation_ratio_after
    }

    #[getter]
    fn band_energy_before(&self) -> f64 {
        self.0.metrics.band_energy_before
    }

    #[getter]
    fn band_energy_after(&self) -> f64 {
        self.0.metrics.band_energy_after
    }

    #[getter]
    fn mse_percent(&self) -> Option<f64> {
        self.0.metrics.mse_percent
    }

    #[getter]
    fn ratio_trace(&self) -> Vec<f64> {
        self.0.ratio_trace.clone()
    }

    #[getter]
    fn line_frequencies_ghz(&self) -> Vec<f64> {
        self.0.line_frequencies_ghz.clone()
    }

    #[getter]
    fn cumulative_strengths(&self) -> Vec<f64> {
        self.0.cumulative_strengths.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "RemovalReport(ratio {:e} -> {:e}, {} lines)",
            self.0.metrics.fluctuation_ratio_before,
            self.0.metrics.fluctuation_ratio_after,
            self.0.line_frequencies_ghz.len()
        )
    }
}

/// Default removal configuration as JSON.
#[pyfunction]
fn default_config() -> PyResult<String> {
    serde_json::to_string_pretty(&core::RemovalConfig::default())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Runs line removal. `config` is a JSON object; missing keys take defaults.
#[pyfunction]
#[pyo3(signature = (signal, catalog, config = None, reference = None))]
fn remove_water_vapor(
    py: Python<'_>,
    signal: &PyTimeSignal,
    catalog: &PyLineCatalog,
    config: Option<&str>,
    reference: Option<&PyTimeSignal>,
) -> PyResult<(PyTimeSignal, PyRemovalReport)> {
    let config: core::RemovalConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => core::RemovalConfig::default(),
    };
    let (signal, catalog) = (&signal.0, &catalog.0);
    let reference = reference.map(|r| &r.0);
    let (processed, report) = py
        .detach(|| core::remove_water_vapor_with_reference(signal, catalog, &config, reference))
        .map_err(err)?;
    Ok((PyTimeSignal(processed), PyRemovalReport(report)))
}

/// Renders a scene given as JSON; returns `(wet, dry)`.
#[pyfunction]
fn render_scene(scene_json: &str) -> PyResult<(PyTimeSignal, PyTimeSignal)> {
    let scene = core::SyntheticScene::from_json(scene_json).map_err(err)?;
    let (wet, dry) = core::render_scene(&scene).map_err(err)?;
    Ok((PyTimeSignal(wet), PyTimeSignal(dry)))
}

#[pyfunction]
#[pyo3(signature = (signal, window_fwhm_ps, window_center_ps = None))]
fn fluctuation_ratio(signal: &PyTimeSignal, window_fwhm_ps: f64, window_center_ps: Option<f64>) -> PyResult<f64> {
    let center = match window_center_ps {
        Some(c) => c,
        None => core::find_main_peak(&signal.0).map_err(err)?,
    };
    let window = core::WindowSpec::new(center, window_fwhm_ps).map_err(err)?;
    core::fluctuation_ratio(&signal.0, &window).map_err(err)
}

#[pyfunction]
fn mse_percent(reference: &PyTimeSignal, candidate: &PyTimeSignal) -> PyResult<f64> {
    core::mse_percent(&reference.0, &candidate.0).map_err(err)
}

#[pyfunction]
fn band_energy(signal: &PyTimeSignal, f_min_ghz: f64, f_max_ghz: f64) -> f64 {
    core::band_energy(&core::forward_transform(&signal.0), f_min_ghz, f_max_ghz)
}

#[pyfunction]
#[pyo3(signature = (reference_fwhm_ghz, pressure_hpa, temperature_k, temperature_index = 0.68))]
fn scale_linewidth(reference_fwhm_ghz: f64, pressure_hpa: f64, temperature_k: f64, temperature_index: f64) -> f64 {
    let conditions = core::AtmosphereConditions {
        pressure: pressure_hpa,
        temperature: temperature_k,
        temperature_index,
        ..core::AtmosphereConditions::default()
    };
    core::scale_linewidth(reference_fwhm_ghz, &conditions)
}

#[pyfunction]
fn lorentz_absorption(f_ghz: f64, center_ghz: f64, hwhm_ghz: f64) -> f64 {
    core::lorentz_absorption(f_ghz, center_ghz, hwhm_ghz)
}

#[pyfunction]
fn lorentz_dispersion(f_ghz: f64, center_ghz: f64, hwhm_ghz: f64) -> f64 {
    core::lorentz_dispersion(f_ghz, center_ghz, hwhm_ghz)
}

#[pymodule]
#[pyo3(name = "thz_vapor")]
fn thz_vapor_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTimeSignal>()?;
    m.add_class::<PyLineCatalog>()?;
    m.add_class::<PyRemovalReport>()?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(remove_water_vapor, m)?)?;
    m.add_function(wrap_pyfunction!(render_scene, m)?)?;
    m.add_function(wrap_pyfunction!(fluctuation_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(mse_percent, m)?)?;
    m.add_function(wrap_pyfunction!(band_energy, m)?)?;
    m.add_function(wrap_pyfunction!(scale_linewidth, m)?)?;
    m.add_function(wrap_pyfunction!(lorentz_absorption, m)?)?;
    m.add_function(wrap_pyfunction!(lorentz_dispersion, m)?)?;
    Ok(())
}
