//! Python module `wgm_isolator`.

use std::path::PathBuf;

use wgm_isolator::linalg::C64 as Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use wgm_isolator::analytic::{self, SweepVariable};
use wgm_isolator::helicity::{self, FieldPoint};
use wgm_isolator::model::{self, Direction, DriveSpec};
use wgm_isolator::oracle::{self, EmitterModel, TruncationSpec};
use wgm_isolator::optimize::{self, OptimizationResult};
use wgm_isolator::{FieldGrid, ModeLabel, SystemParams};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn direction(name: &str) -> PyResult<Direction> {
    match name {
        "forward" => Ok(Direction::Forward),
        "backward" => Ok(Direction::Backward),
        _ => Err(value_err(format!("direction must be 'forward' or 'backward', got {name:?}"))),
    }
}

/// Rates and couplings in units of the emitter decay rate.
#[pyclass(name = "SystemParams", module = "wgm_isolator")]
struct PySystemParams {
    inner: SystemParams,
}

impl PySystemParams {
    /// Applies `f` only if the result validates.
    fn update(&mut self, f: impl FnOnce(&mut SystemParams)) -> PyResult<()> {
        let mut next = self.inner;
        f(&mut next);
        next.validate().map_err(value_err)?;
        self.inner = next;
        Ok(())
    }
}

#[pymethods]
impl PySystemParams {
    #[new]
    #[pyo3(signature = (
        g0 = 20.0,
        theta = std::f64::consts::FRAC_PI_4,
        p = 1.0,
        h = 0.0,
        kappa_i = 3.0,
        kappa_ex = 5.0,
        gamma = 1.0,
        delta12 = 0.0,
        drive_amp = 1.0,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        g0: f64,
        theta: f64,
        p: f64,
        h: f64,
        kappa_i: f64,
        kappa_ex: f64,
        gamma: f64,
        delta12: f64,
        drive_amp: f64,
    ) -> PyResult<Self> {
        let inner = SystemParams {
            g0,
            theta,
            p,
            h,
            kappa_i,
            kappa_ex,
            gamma,
            delta12,
            drive_amp,
        };
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    /// `h = 0`, `p = 1`, `theta = pi/4`, `gamma = 1`.
    #[staticmethod]
    fn ideal(g0: f64, kappa_i: f64, kappa_ex: f64) -> PyResult<Self> {
        let inner = SystemParams::ideal(g0, kappa_i, kappa_ex);
        inner.validate().map_err(value_err)?;
        Ok(Self { inner })
    }

    fn kappa(&self) -> f64 {
        self.inner.kappa()
    }

    #[getter]
    fn g0(&self) -> f64 {
        self.inner.g0
    }

    #[setter]
    fn set_g0(&mut self, value: f64) -> PyResult<()> {
        self.update(|p| p.g0 = value)
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    #[setter]
    fn set_theta(&mut self, value: f64) -> PyResult<()> {
        self.update(|p| p.theta = value)
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }

    #[setter]
    fn set_p(&mut self, value: f64) -> PyResult<()> {
        self.update(|p| p.p = value)
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    #[setter]
    fn set_h(&mut self, value: f64) -> PyResult<()> {
        self.update(|p| p.h = value)
    }

    #[getter]
    fn kappa_i(&self) -> f64 {
        self.inner.kappa_i
    }

    #[setter]
    fn set_kappa_i(&mut self, value: f64) -> PyResult<()> {
        self.update(|p| p.kappa_i = value)
    }

    #[getter]
    fn kappa_ex(&self) -> f64 {
        self.inner.kappa_ex
    }

    #[setter]
    fn set_kappa_ex(&mut self, value: f64) -> PyResult<()> {
        self.update(|p| p.kappa_ex = value)
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[setter]
    fn set_gamma(&mut self, value: f64) -> PyResult<()> {
        self.update(|p| p.gamma = value)
    }

    #[getter]
    fn delta12(&self) -> f64 {
        self.inner.delta12
    }

    #[setter]
    fn set_delta12(&mut self, value: f64) -> PyResult<()> {
        self.update(|p| p.delta12 = value)
    }

    #[getter]
    fn drive_amp(&self) -> f64 {
        self.inner.drive_amp
    }

    #[setter]
    fn set_drive_amp(&mut self, value: f64) -> PyResult<()> {
        self.update(|p| p.drive_amp = value)
    }

    fn copy(&self) -> Self {
        Self { inner: self.inner }
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let p = &self.inner;
        let d = PyDict::new(py);
        for (k, v) in [
            ("g0", p.g0),
            ("theta", p.theta),
            ("p", p.p),
            ("h", p.h),
            ("kappa_i", p.kappa_i),
            ("kappa_ex", p.kappa_ex),
            ("gamma", p.gamma),
            ("delta12", p.delta12),
            ("drive_amp", p.drive_amp),
        ] {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "SystemParams(g0={}, theta={}, p={}, h={}, kappa_i={}, kappa_ex={}, gamma={}, delta12={}, drive_amp={})",
            p.g0, p.theta, p.p, p.h, p.kappa_i, p.kappa_ex, p.gamma, p.delta12, p.drive_amp
        )
    }

    fn __eq__(&self, other: PyRef<'_, Self>) -> bool {
        self.inner == other.inner
    }
}

#[pyfunction]
#[pyo3(signature = (params, detuning, direction = "forward"))]
fn transmission(params: PyRef<'_, PySystemParams>, detuning: f64, direction: &str) -> PyResult<f64> {
    let drive = DriveSpec { direction: self::direction(direction)?, detuning };
    model::transmission(&params.inner, drive).map_err(value_err)
}

/// `(transmission, reflection)`.
#[pyfunction]
#[pyo3(signature = (params, detuning, direction = "forward"))]
fn response(params: PyRef<'_, PySystemParams>, detuning: f64, direction: &str) -> PyResult<(f64, f64)> {
    let drive = DriveSpec { direction: self::direction(direction)?, detuning };
    let r = model::response(&params.inner, drive).map_err(value_err)?;
    Ok((r.transmission, r.reflection))
}

/// Columns `delta_c, t_fwd, t_bwd, r_fwd, r_bwd` plus the skipped detunings.
#[pyfunction]
fn spectrum<'py>(
    py: Python<'py>,
    params: PyRef<'_, PySystemParams>,
    detunings: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let s = py.detach(|| model::spectrum(&p, &detunings)).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("delta_c", s.detunings)?;
    d.set_item("t_fwd", s.t_fwd)?;
    d.set_item("t_bwd", s.t_bwd)?;
    d.set_item("r_fwd", s.r_fwd)?;
    d.set_item("r_bwd", s.r_bwd)?;
    d.set_item("skipped", s.skipped)?;
    Ok(d)
}

/// Closed-form transmission of the `h = 0`, `p = 1` device.
#[pyfunction]
#[pyo3(signature = (params, detuning, direction = "forward"))]
fn ideal_transmission(params: PyRef<'_, PySystemParams>, detuning: f64, direction: &str) -> PyResult<f64> {
    analytic::ideal_transmission(&params.inner, self::direction(direction)?, detuning).map_err(value_err)
}

/// `(delta12, delta_c)` nulling the ideal backward transmission.
#[pyfunction]
#[pyo3(signature = (g0, kappa_i, kappa_ex, gamma = 1.0))]
fn isolation_conditions(g0: f64, kappa_i: f64, kappa_ex: f64, gamma: f64) -> PyResult<(f64, f64)> {
    let c = analytic::isolation_conditions(g0, gamma, kappa_i, kappa_ex).map_err(value_err)?;
    Ok((c.delta12, c.delta_c))
}

#[pyfunction]
#[pyo3(signature = (g0, kappa_i, gamma = 1.0))]
fn optimal_coupling<'py>(py: Python<'py>, g0: f64, kappa_i: f64, gamma: f64) -> PyResult<Bound<'py, PyDict>> {
    let pt = analytic::optimal_coupling(g0, gamma, kappa_i).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("kappa_ex", pt.kappa_ex)?;
    d.set_item("delta12", pt.delta12)?;
    d.set_item("delta_c", pt.delta_c)?;
    d.set_item("t_fwd", pt.t_fwd_predicted)?;
    Ok(d)
}

/// Ascending eigenvalues of the coupling matrix at zero detuning.
#[pyfunction]
fn polariton_eigenvalues(params: PyRef<'_, PySystemParams>) -> PyResult<Vec<f64>> {
    analytic::polariton_eigenvalues(&params.inner)
        .map(|e| e.to_vec())
        .map_err(runtime_err)
}

#[pyfunction]
fn lossy_eigenvalues(params: PyRef<'_, PySystemParams>) -> PyResult<Vec<Complex64>> {
    analytic::lossy_eigenvalues(&params.inner)
        .map(|e| e.to_vec())
        .map_err(runtime_err)
}

/// One row of four eigenvalues per value of `variable` (`"delta12"` or `"p"`).
#[pyfunction]
fn eigenvalue_sweep(params: PyRef<'_, PySystemParams>, variable: &str, values: Vec<f64>) -> PyResult<Vec<[f64; 4]>> {
    let var = match variable {
        "delta12" => SweepVariable::Delta12,
        "p" => SweepVariable::P,
        _ => return Err(value_err(format!("variable must be 'delta12' or 'p', got {variable:?}"))),
    };
    analytic::eigenvalue_sweep(&params.inner, var, &values).map_err(runtime_err)
}

#[pyfunction]
fn helicity_degree(e_rho: Complex64, e_phi: Complex64, e_z: Complex64) -> PyResult<f64> {
    helicity::helicity_degree(&FieldPoint::new(0.0, 0.0, e_rho, e_phi, e_z)).map_err(value_err)
}

fn mode_label(name: &str) -> PyResult<ModeLabel> {
    match name {
        "quasi_te" => Ok(ModeLabel::QuasiTe),
        "quasi_tm" => Ok(ModeLabel::QuasiTm),
        _ => Err(value_err(format!("label must be 'quasi_te' or 'quasi_tm', got {name:?}"))),
    }
}

/// Mode cross-section on a rectilinear `(rho, z)` grid.
#[pyclass(name = "FieldGrid", module = "wgm_isolator")]
struct PyFieldGrid {
    inner: FieldGrid,
}

#[pymethods]
impl PyFieldGrid {
    /// `fields` holds `(e_rho, e_phi, e_z)` per point, `rho` outer.
    #[new]
    #[pyo3(signature = (rho, z, fields, mode_number, label = "quasi_te"))]
    fn new(rho: Vec<f64>, z: Vec<f64>, fields: Vec<[Complex64; 3]>, mode_number: i32, label: &str) -> PyResult<Self> {
        FieldGrid::new(rho, z, fields, mode_number, mode_label(label)?)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    #[pyo3(signature = (path, mode_number, label = "quasi_te"))]
    fn load(path: PathBuf, mode_number: i32, label: &str) -> PyResult<Self> {
        helicity::load_field_grid(&path, mode_number, mode_label(label)?)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    /// Gaussian test field with uniform helicity degree `p`.
    #[staticmethod]
    #[pyo3(signature = (n_rho, n_z, p, tilt = 0.3, mode_number = 129))]
    fn synthetic(n_rho: usize, n_z: usize, p: f64, tilt: f64, mode_number: i32) -> PyResult<Self> {
        helicity::synthetic_grid(n_rho, n_z, p, tilt, mode_number)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        helicity::save_field_grid(&self.inner, &path).map_err(runtime_err)
    }

    fn save_helicity_map(&self, path: PathBuf) -> PyResult<()> {
        let map = helicity::map_helicity(&self.inner);
        helicity::save_helicity_map(&self.inner, &map, &path).map_err(runtime_err)
    }

    /// Counter-propagating partner mode.
    fn partner(&self) -> Self {
        Self {
            inner: self.inner.counter_propagating_partner(),
        }
    }

    /// Helicity degree per point (`rho` outer); `None` at field nulls.
    fn helicity_map(&self) -> Vec<Option<f64>> {
        helicity::map_helicity(&self.inner).p
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    #[getter]
    fn mode_number(&self) -> i32 {
        self.inner.mode_number()
    }

    #[getter]
    fn rho(&self) -> Vec<f64> {
        self.inner.rho().to_vec()
    }

    #[getter]
    fn z(&self) -> Vec<f64> {
        self.inner.z().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

fn result_dict<'py>(py: Python<'py>, r: &OptimizationResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("kappa_ex", r.kappa_ex)?;
    d.set_item("delta12", r.delta12)?;
    d.set_item("delta_c", r.delta_c)?;
    d.set_item("t_fwd", r.t_fwd)?;
    d.set_item("t_bwd", r.t_bwd)?;
    d.set_item("contrast_db", r.contrast_db)?;
    d.set_item("saturated", r.saturated)?;
    d.set_item("converged", r.converged)?;
    Ok(d)
}

/// Best `(kappa_ex, delta12, delta_c)` on the zero-backward curve; the
/// `kappa_ex` and `delta12` of `params` are ignored.
#[pyfunction]
fn maximize_contrast<'py>(py: Python<'py>, params: PyRef<'_, PySystemParams>) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let r = py.detach(|| optimize::maximize_contrast(&p)).map_err(runtime_err)?;
    result_dict(py, &r)
}

#[pyfunction]
fn maximize_contrast_at_splitting<'py>(
    py: Python<'py>,
    params: PyRef<'_, PySystemParams>,
    delta12: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let r = py
        .detach(|| optimize::maximize_contrast_at_splitting(&p, delta12))
        .map_err(runtime_err)?;
    result_dict(py, &r)
}

/// `(kappa_ex, delta12, delta_c, t_fwd)` samples of the zero-backward line.
#[pyfunction]
fn trace_zero_tb_line(
    py: Python<'_>,
    params: PyRef<'_, PySystemParams>,
    kappa_ex_min: f64,
    kappa_ex_max: f64,
    points: usize,
) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let p = params.inner;
    let line = py
        .detach(|| optimize::trace_zero_tb_line(&p, (kappa_ex_min, kappa_ex_max), points))
        .map_err(runtime_err)?;
    Ok(line
        .iter()
        .map(|x| (x.kappa_ex, x.delta12, x.delta_c, x.t_fwd_predicted))
        .collect())
}

/// Node columns (`kappa_ex` outer) plus the ridge as a list of row tuples.
#[pyfunction]
fn sweep_grid<'py>(
    py: Python<'py>,
    params: PyRef<'_, PySystemParams>,
    kappa_ex: Vec<f64>,
    delta12: Vec<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params.inner;
    let data = py
        .detach(|| optimize::sweep_grid(&p, &kappa_ex, &delta12))
        .map_err(runtime_err)?;
    let column = |f: fn(&optimize::RidgePoint) -> f64| data.nodes.iter().map(f).collect::<Vec<f64>>();
    let d = PyDict::new(py);
    d.set_item("kappa_ex", column(|n| n.kappa_ex))?;
    d.set_item("delta12", column(|n| n.delta12))?;
    d.set_item("delta_c", column(|n| n.delta_c))?;
    d.set_item("t_fwd", column(|n| n.t_fwd))?;
    d.set_item("t_bwd", column(|n| n.t_bwd))?;
    d.set_item("contrast_db", column(|n| n.contrast_db))?;
    d.set_item("saturated", data.nodes.iter().map(|n| n.saturated).collect::<Vec<bool>>())?;
    d.set_item(
        "ridge",
        data.ridge
            .iter()
            .map(|r| (r.kappa_ex, r.delta12, r.delta_c, r.t_fwd, r.t_bwd, r.contrast_db))
            .collect::<Vec<_>>(),
    )?;
    d.set_item("failures", data.failures.iter().map(|f| f.0).collect::<Vec<usize>>())?;
    Ok(d)
}

fn truncation(n_max: usize, drive_amp: f64, emitter: &str) -> PyResult<TruncationSpec> {
    let emitter = match emitter {
        "v_type" => EmitterModel::VType,
        "two_level_pair" => EmitterModel::TwoLevelPair,
        _ => return Err(value_err(format!("emitter must be 'v_type' or 'two_level_pair', got {emitter:?}"))),
    };
    let t = TruncationSpec {
        emitter,
        ..TruncationSpec::new(n_max, drive_amp)
    };
    t.validate().map_err(value_err)?;
    Ok(t)
}

/// Transmission from the truncated master-equation steady state.
#[pyfunction]
#[pyo3(signature = (params, detuning, direction = "forward", n_max = 3, drive_amp = 0.01, emitter = "v_type"))]
fn oracle_transmission(
    py: Python<'_>,
    params: PyRef<'_, PySystemParams>,
    detuning: f64,
    direction: &str,
    n_max: usize,
    drive_amp: f64,
    emitter: &str,
) -> PyResult<f64> {
    let (p, dir, t) = (params.inner, self::direction(direction)?, truncation(n_max, drive_amp, emitter)?);
    py.detach(|| oracle::oracle_transmission(&p, &t, dir, detuning))
        .map_err(runtime_err)
}

#[pyfunction]
#[pyo3(signature = (params, detunings, n_max = 3, drive_amp = 0.01, emitter = "v_type"))]
fn compare_with_linear<'py>(
    py: Python<'py>,
    params: PyRef<'_, PySystemParams>,
    detunings: Vec<f64>,
    n_max: usize,
    drive_amp: f64,
    emitter: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let (p, t) = (params.inner, truncation(n_max, drive_amp, emitter)?);
    let c = py
        .detach(|| oracle::compare_with_linear(&p, &t, &detunings))
        .map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("max_deviation", c.max_deviation())?;
    d.set_item("delta_c", c.detunings)?;
    d.set_item("t_fwd_linear", c.t_fwd_linear)?;
    d.set_item("t_fwd_oracle", c.t_fwd_oracle)?;
    d.set_item("t_bwd_linear", c.t_bwd_linear)?;
    d.set_item("t_bwd_oracle", c.t_bwd_oracle)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "wgm_isolator")]
pub fn wgm_isolator_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyFieldGrid>()?;
    m.add_function(wrap_pyfunction!(transmission, m)?)?;
    m.add_function(wrap_pyfunction!(response, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(ideal_transmission, m)?)?;
    m.add_function(wrap_pyfunction!(isolation_conditions, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(polariton_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(lossy_eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(eigenvalue_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(helicity_degree, m)?)?;
    m.add_function(wrap_pyfunction!(maximize_contrast, m)?)?;
    m.add_function(wrap_pyfunction!(maximize_contrast_at_splitting, m)?)?;
    m.add_function(wrap_pyfunction!(trace_zero_tb_line, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_grid, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_transmission, m)?)?;
    m.add_function(wrap_pyfunction!(compare_with_linear, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
