//! Python bindings. Structured results (reports, outcomes, metadata) cross
//! the boundary as plain dicts and lists.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use microtensile::analysis::{analyze_last_cycle, analyze_monotonic, fit_sn, reduce};
use microtensile::config::{bundled_config, BenchConfig, ProtocolConfig, BUNDLED_CONFIGS};
use microtensile::mechanics::{self, series_stiffness};
use microtensile::model::{self, BilinearMaterial, Hardening, MaterialState, SpecimenGeometry};
use microtensile::record::{read_record, samples_to_csv, sidecar_json, sidecar_path};
use microtensile::simulator::{self, run_fatigue, run_monotonic, FatigueOptions, ProtocolSpec, TestRecord};
use microtensile::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::RecordFormat { .. } => PyOSError::new_err(e.to_string()),
        Error::SolverFailure { .. } | Error::OpenLoop { .. } | Error::NoYield | Error::TooFewPoints { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

#[pyclass(name = "MaterialState", module = "microtensile", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyMaterialState {
    inner: MaterialState,
}

#[pymethods]
impl PyMaterialState {
    #[new]
    fn new() -> Self {
        Self {
            inner: MaterialState::virgin(),
        }
    }

    #[getter]
    fn plastic_strain(&self) -> f64 {
        self.inner.plastic_strain
    }

    #[getter]
    fn backstress(&self) -> f64 {
        self.inner.backstress
    }

    #[getter]
    fn accumulated_plastic_strain(&self) -> f64 {
        self.inner.accumulated_plastic_strain
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "Material", module = "microtensile", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMaterial {
    inner: BilinearMaterial,
}

#[pymethods]
impl PyMaterial {
    #[new]
    #[pyo3(signature = (youngs_modulus, yield_strength, uts, tangent_modulus=None, unloading_modulus=None, hardening="kinematic"))]
    fn new(
        youngs_modulus: f64,
        yield_strength: f64,
        uts: f64,
        tangent_modulus: Option<f64>,
        unloading_modulus: Option<f64>,
        hardening: &str,
    ) -> PyResult<Self> {
        let mut m = BilinearMaterial::new(youngs_modulus, yield_strength, uts).map_err(py_err)?;
        if let Some(h) = tangent_modulus {
            m = m.with_tangent_modulus(h).map_err(py_err)?;
        }
        if let Some(eu) = unloading_modulus {
            m = m.with_unloading_modulus(eu).map_err(py_err)?;
        }
        let hardening = match hardening {
            "kinematic" => Hardening::Kinematic,
            "isotropic" => Hardening::Isotropic,
            other => return Err(PyValueError::new_err(format!("unknown hardening '{other}'"))),
        };
        Ok(Self {
            inner: m.with_hardening(hardening),
        })
    }

    #[getter]
    fn youngs_modulus(&self) -> f64 {
        self.inner.youngs_modulus
    }

    #[getter]
    fn yield_strength(&self) -> f64 {
        self.inner.yield_strength
    }

    #[getter]
    fn tangent_modulus(&self) -> f64 {
        self.inner.tangent_modulus
    }

    #[getter]
    fn uts(&self) -> f64 {
        self.inner.uts
    }

    /// Stress and next state for a total strain.
    #[pyo3(signature = (strain, state=None))]
    fn stress_update(&self, strain: f64, state: Option<PyMaterialState>) -> PyResult<(f64, PyMaterialState)> {
        let state = state.map(|s| s.inner).unwrap_or_default();
        let (s, next) = model::stress_update(&self.inner, &state, strain).map_err(py_err)?;
        Ok((s, PyMaterialState { inner: next }))
    }

    /// Noise-free monotonic curve as (strains, stresses).
    #[pyo3(signature = (max_strain, n_points, thickness=300e-9))]
    fn monotonic_curve(&self, max_strain: f64, n_points: usize, thickness: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let g = SpecimenGeometry::standard(thickness).map_err(py_err)?;
        let c = model::monotonic_curve(&self.inner, &g, max_strain, n_points).map_err(py_err)?;
        Ok(c.points.iter().map(|p| (p.strain, p.stress)).unzip())
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "Record", module = "microtensile", frozen)]
struct PyRecord {
    inner: TestRecord,
}

#[pymethods]
impl PyRecord {
    #[staticmethod]
    fn read(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: read_record(&path).map_err(py_err)?,
        })
    }

    /// Writes the CSV and its `<stem>.meta.json` sidecar.
    fn write(&self, path: std::path::PathBuf) -> PyResult<()> {
        std::fs::write(&path, samples_to_csv(&self.inner.samples)).map_err(|e| PyOSError::new_err(e.to_string()))?;
        std::fs::write(sidecar_path(&path), sidecar_json(&self.inner)).map_err(|e| PyOSError::new_err(e.to_string()))
    }

    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }

    fn to_csv(&self) -> String {
        samples_to_csv(&self.inner.samples)
    }

    /// Channels as a dict of equal-length lists.
    fn columns(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let s = &self.inner.samples;
        let cols = serde_json::json!({
            "t_s": s.iter().map(|x| x.t).collect::<Vec<_>>(),
            "u_act_m": s.iter().map(|x| x.u_act).collect::<Vec<_>>(),
            "dx_m": s.iter().map(|x| x.dx).collect::<Vec<_>>(),
            "dy_m": s.iter().map(|x| x.dy).collect::<Vec<_>>(),
            "F_N": s.iter().map(|x| x.force).collect::<Vec<_>>(),
        });
        to_py(py, &cols)
    }

    #[getter]
    fn metadata(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.metadata)
    }

    #[getter]
    fn termination(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.termination)
    }

    #[getter]
    fn fatigue(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.fatigue)
    }

    /// Reduced curve as (strains, stresses).
    fn stress_strain(&self) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let m = &self.inner.metadata;
        let c = reduce(&self.inner, &m.geometry, m.train.k_sensor).map_err(py_err)?;
        Ok(c.points.iter().map(|p| (p.strain, p.stress)).unzip())
    }

    /// Monotonic report or last-cycle statistics, as a dict.
    fn analyze(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let m = &self.inner.metadata;
        let curve = reduce(&self.inner, &m.geometry, m.train.k_sensor).map_err(py_err)?;
        match m.protocol {
            ProtocolSpec::Monotonic(_) => to_py(py, &analyze_monotonic(&curve).map_err(py_err)?),
            ProtocolSpec::Fatigue(p) => to_py(py, &analyze_last_cycle(&curve, p.samples_per_cycle).map_err(py_err)?),
        }
    }
}

#[pyclass(name = "Config", module = "microtensile", frozen)]
struct PyConfig {
    inner: BenchConfig,
}

#[pymethods]
impl PyConfig {
    #[staticmethod]
    fn bundled(name: &str) -> PyResult<Self> {
        let text = bundled_config(name)
            .ok_or_else(|| PyValueError::new_err(format!("no bundled config '{name}'")))?;
        Self::from_toml(text)
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: BenchConfig::from_toml_str(text).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Normalized SI form; loading it gives back an equal config.
    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn material(&self) -> PyMaterial {
        PyMaterial {
            inner: self.inner.material.material.clone(),
        }
    }

    /// Resolved alignment-spring stiffness, N/m.
    #[getter]
    fn k_align(&self) -> PyResult<f64> {
        Ok(self.inner.load_train().map_err(py_err)?.k_align)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    /// Runs the monotonic or fatigue protocol.
    #[pyo3(signature = (seed=None))]
    fn simulate(&self, py: Python<'_>, seed: Option<u64>) -> PyResult<PyRecord> {
        let cfg = &self.inner;
        let seed = seed.unwrap_or(cfg.seed);
        let inner = py.detach(|| -> Result<TestRecord, Error> {
            let bench = cfg.bench(seed)?;
            match cfg.protocol_spec() {
                Some(ProtocolSpec::Monotonic(p)) => run_monotonic(&bench, &p),
                Some(ProtocolSpec::Fatigue(p)) => Ok(run_fatigue(&bench, &p, FatigueOptions::default())?
                    .1
                    .expect("record requested")),
                None => Err(Error::Config("config has a [sweep] section; use sweep()".into())),
            }
        });
        Ok(PyRecord {
            inner: inner.map_err(py_err)?,
        })
    }

    /// Runs the fatigue grid; returns (outcomes, exclusions, S-N fit or None).
    #[pyo3(signature = (seed=None))]
    fn sweep(&self, py: Python<'_>, seed: Option<u64>) -> PyResult<(Py<PyAny>, Py<PyAny>, Py<PyAny>)> {
        let cfg = &self.inner;
        let ProtocolConfig::Sweep(grid) = &cfg.protocol else {
            return Err(PyValueError::new_err("config has no [sweep] section"));
        };
        let seed = seed.unwrap_or(cfg.seed);
        let plan = grid.plan();
        let outcomes = py
            .detach(|| {
                plan.protocols
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let bench = cfg.bench(seed.wrapping_add(i as u64))?;
                        let options = FatigueOptions {
                            keep_record: false,
                            ..Default::default()
                        };
                        Ok(run_fatigue(&bench, p, options)?.0)
                    })
                    .collect::<Result<Vec<_>, Error>>()
            })
            .map_err(py_err)?;
        let uts = cfg.bench(seed).map_err(py_err)?.material.uts;
        let fit = fit_sn(&outcomes, uts).ok();
        Ok((to_py(py, &outcomes)?, to_py(py, &plan.excluded)?, to_py(py, &fit)?))
    }
}

#[pyfunction]
fn bundled_configs() -> Vec<&'static str> {
    BUNDLED_CONFIGS.iter().map(|(n, _)| *n).collect()
}

#[pyfunction]
fn fixed_guided_beam_stiffness(youngs_modulus: f64, width: f64, thickness: f64, length: f64) -> PyResult<f64> {
    mechanics::fixed_guided_beam_stiffness(youngs_modulus, width, thickness, length).map_err(py_err)
}

#[pyfunction(name = "series_stiffness")]
fn py_series_stiffness(stiffnesses: Vec<f64>) -> PyResult<f64> {
    series_stiffness(&stiffnesses).map_err(py_err)
}

/// Alignment-spring stiffness for a stress-per-displacement target (Pa/m).
#[pyfunction]
#[pyo3(signature = (target, youngs_modulus, k_sensor, thickness, gauge_length=600e-6, width=100e-6))]
fn calibrate_load_train(
    target: f64,
    youngs_modulus: f64,
    k_sensor: f64,
    thickness: f64,
    gauge_length: f64,
    width: f64,
) -> PyResult<f64> {
    let g = SpecimenGeometry::new(gauge_length, width, thickness).map_err(py_err)?;
    mechanics::calibrate_load_train(target, &g, youngs_modulus, k_sensor).map_err(py_err)
}

#[pyfunction]
fn goodman_equivalent_amplitude(sigma_amp: f64, sigma_mean: f64, uts: f64) -> Option<f64> {
    simulator::goodman_equivalent_amplitude(sigma_amp, sigma_mean, uts)
}

#[pyfunction]
fn basquin_life(sigma_ar: f64, sigma_f: f64, b: f64) -> f64 {
    simulator::basquin_life(sigma_ar, sigma_f, b)
}

#[pymodule]
#[pyo3(name = "microtensile")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMaterial>()?;
    m.add_class::<PyMaterialState>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyRecord>()?;
    m.add_function(wrap_pyfunction!(bundled_configs, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_guided_beam_stiffness, m)?)?;
    m.add_function(wrap_pyfunction!(py_series_stiffness, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_load_train, m)?)?;
    m.add_function(wrap_pyfunction!(goodman_equivalent_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(basquin_life, m)?)?;
    Ok(())
}
