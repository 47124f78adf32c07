//! Python bindings exposing the main types and operations of the
//! laboratory: factorizations, the spin moment map, normal forms,
//! trajectory integration by both solvers, and the verification suites.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use spinrs_core::cmat::{CMat, CVec};
use spinrs_core::dynamics;
use spinrs_core::reduction;
use spinrs_core::sample;
use spinrs_core::verify::{run_suite, Suite};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn mat_to_py(m: &CMat) -> Vec<Vec<Complex64>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
}

fn mat_from_py(rows: Vec<Vec<Complex64>>) -> PyResult<CMat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a square matrix"));
    }
    Ok(CMat::from_fn(n, n, |i, j| rows[i][j]))
}

/// The trigonometric potential `cot(x) - cot(x - i gamma)`.
#[pyfunction]
fn potential_v(x: Complex64, gamma: f64) -> PyResult<Complex64> {
    dynamics::potential_v(x, gamma).map_err(err)
}

/// Group-valued moment map of one spin vector; satisfies
/// `b b^dagger = 1 + w w^dagger`.
#[pyfunction]
fn moment_b(w: Vec<Complex64>) -> Vec<Vec<Complex64>> {
    mat_to_py(&spinrs_core::spins::moment_b(&spinrs_core::spins::SpinVector::new(w)))
}

/// Both triangular-times-unitary factorizations of an invertible matrix,
/// returned as `(b_l, g_r, g_l, b_r)`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn iwasawa(
    k: Vec<Vec<Complex64>>,
) -> PyResult<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>, Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)> {
    let f = spinrs_core::linalg::iwasawa_decompose(&mat_from_py(k)?).map_err(err)?;
    Ok((mat_to_py(&f.b_l), mat_to_py(&f.g_r), mat_to_py(&f.g_l), mat_to_py(&f.b_r)))
}

/// Upper triangular factor with positive diagonal of a positive definite
/// Hermitian matrix.
#[pyfunction]
fn cholesky_upper(l: Vec<Vec<Complex64>>) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(mat_to_py(&spinrs_core::linalg::cholesky_upper(&mat_from_py(l)?).map_err(err)?))
}

/// Eigenvalues (descending) and phase-fixed eigenvectors of a Hermitian
/// matrix.
#[pyfunction]
fn eig_hermitian(a: Vec<Vec<Complex64>>) -> PyResult<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let (vals, u) = spinrs_core::linalg::eig_hermitian(&mat_from_py(a)?).map_err(err)?;
    Ok((vals, mat_to_py(&u)))
}

fn state_dict<'py>(py: Python<'py>, sp: &reduction::SlicePoint) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("q", sp.q.clone())?;
    d.set_item("v", sp.v.clone())?;
    d.set_item("gamma", sp.gamma)?;
    let tr: Vec<f64> = (1..=sp.n()).map(|k| sp.tr_l_power(k)).collect();
    d.set_item("tr_l", tr)?;
    d.set_item("constraint_residual", sp.moment_residual().map_err(err)?)?;
    Ok(d)
}

fn build_state(y: Vec<f64>, d: usize, gamma: f64) -> PyResult<reduction::SlicePoint> {
    let dp = reduction::normal_form_d(&y, d, gamma).map_err(err)?;
    reduction::dressed_to_slice(&dp).map_err(err)
}

/// Constrained point with diagonal Lax matrix `diag(y)` and a single
/// nonzero spin vector, plus its gauge-slice representative.
#[pyfunction]
fn normal_form(py: Python<'_>, y: Vec<f64>, d: usize, gamma: f64) -> PyResult<Py<PyDict>> {
    let dp = reduction::normal_form_d(&y, d, gamma).map_err(err)?;
    let sp = reduction::dressed_to_slice(&dp).map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item("g_r", mat_to_py(&dp.g_r))?;
    out.set_item("l", mat_to_py(&dp.l))?;
    out.set_item("v", dp.v.clone())?;
    out.set_item("residual", dp.constraint_residual())?;
    out.set_item("slice", state_dict(py, &sp)?)?;
    Ok(out.into())
}

/// Integrate the reduced equations of motion from a normal-form-derived
/// state; returns sampled times, angles, Lax traces and drift summaries.
#[pyfunction]
#[pyo3(signature = (y, d, gamma, h, t, sample_every = 10))]
fn simulate(
    py: Python<'_>,
    y: Vec<f64>,
    d: usize,
    gamma: f64,
    h: f64,
    t: f64,
    sample_every: usize,
) -> PyResult<Py<PyDict>> {
    let sp = build_state(y, d, gamma)?;
    let traj = dynamics::rk4_integrate(&sp, h, t, sample_every).map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item("times", traj.times.clone())?;
    let qs: Vec<Vec<f64>> = traj.samples.iter().map(|s| s.q.clone()).collect();
    out.set_item("q", qs)?;
    let trl: Vec<Vec<f64>> = traj
        .samples
        .iter()
        .map(|s| (1..=s.n()).map(|k| s.tr_l_power(k)).collect())
        .collect();
    out.set_item("tr_l", trl)?;
    let drifts: Vec<f64> = (1..=traj.n()).map(|k| traj.tr_drift(k)).collect();
    out.set_item("tr_l_drift", drifts)?;
    out.set_item("sum_qdot_drift", traj.sum_qdot_drift())?;
    out.set_item("max_constraint_residual", traj.max_moment_residual().map_err(err)?)?;
    out.set_item("abort", traj.abort.as_ref().map(|a| a.to_string()))?;
    Ok(out.into())
}

/// Evaluate the exact solution of the reduced flow at time `t` from a
/// normal-form-derived state.
#[pyfunction]
fn exact_state(py: Python<'_>, y: Vec<f64>, d: usize, gamma: f64, t: f64) -> PyResult<Py<PyDict>> {
    let sp = build_state(y, d, gamma)?;
    let moved = dynamics::exact_solve(&sp, t).map_err(err)?;
    Ok(state_dict(py, &moved)?.into())
}

/// Run one verification suite; returns a dict with a `pass` flag and the
/// per-property maxima.
#[pyfunction]
#[pyo3(signature = (suite, seed = 0, samples = 30))]
fn verify(py: Python<'_>, suite: &str, seed: u64, samples: usize) -> PyResult<Py<PyDict>> {
    let s = Suite::parse(suite)
        .ok_or_else(|| PyValueError::new_err(format!("unknown suite {suite}")))?;
    let report = run_suite(s, seed, samples);
    let out = PyDict::new_bound(py);
    out.set_item("suite", report.suite)?;
    out.set_item("pass", report.all_pass())?;
    let props = PyList::empty_bound(py);
    for p in &report.properties {
        let e = PyDict::new_bound(py);
        e.set_item("name", &p.name)?;
        e.set_item("max_violation", p.max_violation)?;
        e.set_item("threshold", p.threshold)?;
        e.set_item("pass", p.pass)?;
        props.append(e)?;
    }
    out.set_item("properties", props)?;
    Ok(out.into())
}

/// Numeric Jacobian ranks `(full family, Hamiltonians)` of the spin
/// invariants at a random point of the diagonal slice.
#[pyfunction]
#[pyo3(signature = (n, d, gamma = 0.5, seed = 0))]
fn jacobian_rank(n: usize, d: usize, gamma: f64, seed: u64) -> PyResult<(usize, usize)> {
    let mut rng = sample::stream(seed, 0);
    let coords = sample::random_s1_coords(n, d, gamma, &mut rng).map_err(err)?;
    spinrs_core::redpoisson::jacobian_rank(&coords).map_err(err)
}

/// Dressed spins of a spin block under an upper triangular factor.
#[pyfunction]
fn dressed_spins(b_r: Vec<Vec<Complex64>>, w: Vec<Vec<Complex64>>) -> PyResult<Vec<CVec>> {
    let b = mat_from_py(b_r)?;
    let block = spinrs_core::spins::SpinBlock::new(
        w.into_iter().map(spinrs_core::spins::SpinVector::new).collect(),
    );
    let (v, _) = reduction::dressed_spins(&b, &block);
    Ok(v)
}

#[pymodule]
fn spinrs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(potential_v, m)?)?;
    m.add_function(wrap_pyfunction!(moment_b, m)?)?;
    m.add_function(wrap_pyfunction!(iwasawa, m)?)?;
    m.add_function(wrap_pyfunction!(cholesky_upper, m)?)?;
    m.add_function(wrap_pyfunction!(eig_hermitian, m)?)?;
    m.add_function(wrap_pyfunction!(normal_form, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(exact_state, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian_rank, m)?)?;
    m.add_function(wrap_pyfunction!(dressed_spins, m)?)?;
    Ok(())
}
