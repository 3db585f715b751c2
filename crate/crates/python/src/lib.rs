//! Python bindings for the fractional seminorm engine.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use fracspace_core::experiments::{
    self, InterpolationTriple, Pair, SGrid, Target, Thresholds,
};
use fracspace_core::grid::{self, sample};
use fracspace_core::seminorms::{self as sn, Seminorm};
use fracspace_core::{oracle, report, Error};

fn py_err(e: Error) -> PyErr {
    let resolution = e.is_resolution()
        || matches!(e.root(), Error::SymmetryCorruption { .. } | Error::MissingAnalytic(_));
    if resolution {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(text: &str) -> PyResult<T> {
    text.parse().map_err(py_err)
}

#[pyclass(name = "GridSpec", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyGridSpec(grid::GridSpec);

#[pymethods]
impl PyGridSpec {
    #[new]
    fn new(n: usize, half_width: f64, points: usize) -> PyResult<Self> {
        grid::GridSpec::new(n, half_width, points).map(Self).map_err(py_err)
    }

    /// Default grid for dimension `n`.
    #[staticmethod]
    fn default(n: usize) -> PyResult<Self> {
        grid::GridSpec::default_for(n).map(Self).map_err(py_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }
    #[getter]
    fn half_width(&self) -> f64 {
        self.0.half_width()
    }
    #[getter]
    fn points(&self) -> usize {
        self.0.points()
    }
    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    /// Node coordinates along one axis.
    fn coordinates(&self) -> Vec<f64> {
        (0..self.0.points()).map(|i| self.0.coordinate(i)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "GridSpec(n={}, half_width={}, points={})",
            self.0.dim(),
            self.0.half_width(),
            self.0.points()
        )
    }
}

#[pyclass(name = "TestFunction", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyTestFunction(grid::TestFunction);

#[pymethods]
impl PyTestFunction {
    #[staticmethod]
    #[pyo3(signature = (a=1.0, n=1))]
    fn gaussian(a: f64, n: usize) -> PyResult<Self> {
        grid::TestFunction::gaussian(a, n).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (a=1.0, omega=4.0, n=1))]
    fn modulated_gaussian(a: f64, omega: f64, n: usize) -> PyResult<Self> {
        grid::TestFunction::modulated_gaussian(a, omega, n)
            .map(Self)
            .map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (radius=1.0, n=1))]
    fn bump(radius: f64, n: usize) -> PyResult<Self> {
        grid::TestFunction::bump(radius, n).map(Self).map_err(py_err)
    }

    /// The built-in catalog for dimension `n`.
    #[staticmethod]
    #[pyo3(signature = (n=1))]
    fn catalog(n: usize) -> PyResult<Vec<Self>> {
        experiments::catalog(n)
            .map(|v| v.into_iter().map(Self).collect())
            .map_err(py_err)
    }

    fn translated(&self, shift: Vec<f64>) -> PyResult<Self> {
        if shift.len() != self.0.dim {
            return Err(PyValueError::new_err(format!(
                "shift needs {} components",
                self.0.dim
            )));
        }
        Ok(Self(self.0.translated(&shift)))
    }

    /// `x ↦ f(λx)`
    fn dilated(&self, lam: f64) -> PyResult<Self> {
        if !(lam > 0.0 && lam.is_finite()) {
            return Err(PyValueError::new_err("dilation factor must be positive"));
        }
        Ok(Self(self.0.dilated(lam)))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim
    }

    #[getter]
    fn label(&self) -> String {
        self.0.label()
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.0.dim {
            return Err(PyValueError::new_err(format!("x needs {} components", self.0.dim)));
        }
        Ok(self.0.value(&x))
    }

    fn __repr__(&self) -> String {
        format!("TestFunction({})", self.0.label())
    }
}

#[pyclass(name = "SeminormEngine", frozen)]
struct PyEngine(sn::SeminormEngine);

#[pymethods]
impl PyEngine {
    /// Samples `function` on `grid` (the default grid when omitted).
    #[new]
    #[pyo3(signature = (function, grid=None))]
    fn new(function: &PyTestFunction, grid: Option<PyGridSpec>) -> PyResult<Self> {
        let spec = match grid {
            Some(g) => g.0,
            None => grid::GridSpec::default_for(function.0.dim).map_err(py_err)?,
        };
        let f = sample(&function.0, &spec).map_err(py_err)?;
        sn::SeminormEngine::with_defaults(f).map(Self).map_err(py_err)
    }

    /// Engine over raw samples in row-major order; off-grid values are interpolated.
    #[staticmethod]
    fn from_values(grid: PyGridSpec, values: Vec<f64>) -> PyResult<Self> {
        let f = grid::SampledFunction::from_values(grid.0, values).map_err(py_err)?;
        sn::SeminormEngine::with_defaults(f).map(Self).map_err(py_err)
    }

    /// One seminorm value; `which` is W, E, F_cont, F_disc, F_disc_bandlimited or M.
    #[pyo3(signature = (which, s, p=2.0, q=2.0))]
    fn evaluate(&self, py: Python<'_>, which: &str, s: f64, p: f64, q: f64) -> PyResult<f64> {
        self.evaluate_with_tails(py, which, s, p, q).map(|v| v.0)
    }

    /// `(value, tail_lo, tail_hi)` with the relative tail estimates of the truncated ranges.
    #[pyo3(signature = (which, s, p=2.0, q=2.0))]
    fn evaluate_with_tails(
        &self,
        py: Python<'_>,
        which: &str,
        s: f64,
        p: f64,
        q: f64,
    ) -> PyResult<(f64, f64, f64)> {
        let which: Seminorm = parse(which)?;
        let params = sn::SeminormParams::new(s, p, q).map_err(py_err)?;
        let v = py
            .detach(|| self.0.evaluate(which, &params))
            .map_err(py_err)?;
        Ok((v.value, v.tail_lo, v.tail_hi))
    }

    #[getter]
    fn grid(&self) -> PyGridSpec {
        PyGridSpec(self.0.function().spec)
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.function().values.clone()
    }
}

#[pyclass(name = "RatioReport", frozen)]
struct PyReport(report::RatioReport);

#[pymethods]
impl PyReport {
    #[getter]
    fn kind(&self) -> String {
        self.0.kind.clone()
    }
    #[getter]
    fn function(&self) -> String {
        self.0.function.clone()
    }
    #[getter]
    fn p(&self) -> f64 {
        self.0.p
    }
    #[getter]
    fn q(&self) -> f64 {
        self.0.q
    }
    #[getter]
    fn passed(&self) -> bool {
        self.0.verdict.is_pass()
    }
    #[getter]
    fn verdict(&self) -> String {
        self.0.verdict.to_string()
    }
    #[getter]
    fn band(&self) -> f64 {
        self.0.summary.band
    }
    #[getter]
    fn slope(&self) -> Option<f64> {
        self.0.summary.slope
    }

    /// Rows as `(s, lhs, rhs, ratio, tail_est_lhs, tail_est_rhs)`.
    #[getter]
    fn rows(&self) -> Vec<(f64, f64, f64, f64, f64, f64)> {
        self.0
            .rows
            .iter()
            .map(|r| (r.s, r.lhs, r.rhs, r.ratio, r.tail_est_lhs, r.tail_est_rhs))
            .collect()
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    fn to_json(&self) -> String {
        self.0.to_json_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "RatioReport(kind={:?}, function={:?}, rows={}, band={:.4}, verdict={})",
            self.0.kind,
            self.0.function,
            self.0.rows.len(),
            self.0.summary.band,
            self.0.verdict
        )
    }
}

fn s_grid(values: Option<Vec<f64>>, default: SGrid) -> PyResult<SGrid> {
    match values {
        Some(v) => SGrid::new(v).map_err(py_err),
        None => Ok(default),
    }
}

fn wrap(r: fracspace_core::Result<report::RatioReport>) -> PyResult<PyReport> {
    r.map(PyReport).map_err(py_err)
}

/// Two-sided comparison scan; `pair` is E_vs_F, E_vs_Fp2, W_vs_F, W_vs_Fp2, W_vs_E or PT_kernels.
#[pyfunction]
#[pyo3(signature = (engine, pair, p=2.0, q=2.0, s=None, theta=None))]
fn sharpness_scan(
    py: Python<'_>,
    engine: &PyEngine,
    pair: &str,
    p: f64,
    q: f64,
    s: Option<Vec<f64>>,
    theta: Option<f64>,
) -> PyResult<PyReport> {
    let pair: Pair = parse(pair)?;
    let default = if pair == Pair::PtKernels {
        SGrid::kernel_default()
    } else {
        SGrid::default()
    };
    let grid = s_grid(s, default)?;
    let th = Thresholds::default();
    wrap(py.detach(|| experiments::sharpness_scan(&engine.0, p, q, theta, &grid, pair, &th)))
}

#[pyfunction]
#[pyo3(signature = (engine, p=2.0, q=2.0, s=None))]
fn bbm1_limit(
    py: Python<'_>,
    engine: &PyEngine,
    p: f64,
    q: f64,
    s: Option<Vec<f64>>,
) -> PyResult<PyReport> {
    let grid = s_grid(s, SGrid::default())?;
    let th = Thresholds::default();
    wrap(py.detach(|| experiments::bbm1_limit(&engine.0, p, q, &grid, &th)))
}

/// `triples` are `(v, s, sigma)`; the default 12-triple grid when omitted.
#[pyfunction]
#[pyo3(signature = (engine, p=2.0, q=2.0, target="E", theta=None, triples=None))]
fn sobolev_interpolation_check(
    py: Python<'_>,
    engine: &PyEngine,
    p: f64,
    q: f64,
    target: &str,
    theta: Option<f64>,
    triples: Option<Vec<(f64, f64, f64)>>,
) -> PyResult<PyReport> {
    let target: Target = parse(target)?;
    let triples = match triples {
        Some(t) => t
            .into_iter()
            .map(|(v, s, sigma)| InterpolationTriple::new(v, s, sigma))
            .collect::<fracspace_core::Result<Vec<_>>>()
            .map_err(py_err)?,
        None => InterpolationTriple::default_grid(),
    };
    let th = Thresholds::default();
    wrap(py.detach(|| {
        experiments::sobolev_interpolation_check(&engine.0, p, q, theta, &triples, target, &th)
    }))
}

#[pyfunction]
#[pyo3(signature = (engine, p=2.0, q=2.0, theta_big=vec![1.5, 2.0, 4.0], gamma=None, target="E", s=None))]
fn lower_sobolev_check(
    py: Python<'_>,
    engine: &PyEngine,
    p: f64,
    q: f64,
    theta_big: Vec<f64>,
    gamma: Option<f64>,
    target: &str,
    s: Option<Vec<f64>>,
) -> PyResult<PyReport> {
    let target: Target = parse(target)?;
    let grid = match s {
        Some(v) => Some(SGrid::new(v).map_err(py_err)?),
        None => None,
    };
    let th = Thresholds::default();
    wrap(py.detach(|| {
        experiments::lower_sobolev_grid(&engine.0, p, q, &theta_big, gamma, target, grid.as_ref(), &th)
    }))
}

#[pyfunction]
#[pyo3(signature = (engine, p=2.0, q=2.0, s=None))]
fn kernel_equivalence_scan(
    py: Python<'_>,
    engine: &PyEngine,
    p: f64,
    q: f64,
    s: Option<Vec<f64>>,
) -> PyResult<PyReport> {
    let grid = s_grid(s, SGrid::kernel_default())?;
    let th = Thresholds::default();
    wrap(py.detach(|| experiments::kernel_equivalence_scan(&engine.0, p, q, &grid, &th)))
}

/// `(slope, intercept, residual)` of `log v` against `log(1 - s)`.
#[pyfunction]
fn slope_fit(s: Vec<f64>, values: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let f = experiments::slope_fit(&s, &values).map_err(py_err)?;
    Ok((f.slope, f.intercept, f.residual))
}

/// Exact `p = q = 2` value for the Gaussian family.
#[pyfunction]
fn hilbertian_exact(function: &PyTestFunction, s: f64, which: &str) -> PyResult<f64> {
    oracle::hilbertian_exact(&function.0, s, parse(which)?).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (s, n=1, a=1.0))]
fn gaussian_spectral_moment(s: f64, n: usize, a: f64) -> PyResult<f64> {
    oracle::gaussian_spectral_moment(s, n, a).map_err(py_err)
}

#[pyfunction]
fn gagliardo_level_constant(n: usize, s: f64) -> PyResult<f64> {
    oracle::gagliardo_level_constant(n, s).map_err(py_err)
}

/// `(passed, text)` of the Gamma-identity self-check.
#[pyfunction]
fn oracle_check(py: Python<'_>) -> (bool, String) {
    let r = py.detach(oracle::oracle_check);
    (r.passed(), r.to_string())
}

/// Runs the command-line front end in process: `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> (i32, String, String) {
    py.detach(|| {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("fracspace".to_string()).chain(args);
        let code = fracspace_core::cli::run(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8_lossy(&out).into_owned(),
            String::from_utf8_lossy(&err).into_owned(),
        )
    })
}

#[pymodule]
fn fracspace(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridSpec>()?;
    m.add_class::<PyTestFunction>()?;
    m.add_class::<PyEngine>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(sharpness_scan, m)?)?;
    m.add_function(wrap_pyfunction!(bbm1_limit, m)?)?;
    m.add_function(wrap_pyfunction!(sobolev_interpolation_check, m)?)?;
    m.add_function(wrap_pyfunction!(lower_sobolev_check, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_equivalence_scan, m)?)?;
    m.add_function(wrap_pyfunction!(slope_fit, m)?)?;
    m.add_function(wrap_pyfunction!(hilbertian_exact, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_spectral_moment, m)?)?;
    m.add_function(wrap_pyfunction!(gagliardo_level_constant, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
