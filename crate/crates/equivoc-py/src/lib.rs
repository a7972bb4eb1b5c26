//! Python bindings. Forms and signs are passed as strings ("std"/"up",
//! "plus"/"minus"); library errors surface as `ValueError`.

use equivoc::asymptotics::{self, Sign};
use equivoc::hashing::{self, HashFamily};
use equivoc::measures;
use equivoc::oneshot::{self, Summary};
use equivoc::second_order::{self, Direction, GaussianSpec};
use equivoc::spectrum;
use equivoc::{Form, JointSource};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: equivoc::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn form(name: &str) -> PyResult<Form> {
    match name {
        "std" => Ok(Form::Std),
        "up" => Ok(Form::Up),
        _ => Err(PyValueError::new_err(format!("form must be 'std' or 'up', got '{name}'"))),
    }
}

fn sign(name: &str) -> PyResult<Sign> {
    match name {
        "plus" => Ok(Sign::Plus),
        "minus" => Ok(Sign::Minus),
        _ => Err(PyValueError::new_err(format!("sign must be 'plus' or 'minus', got '{name}'"))),
    }
}

/// Joint distribution of a secret A and side information E.
#[pyclass(name = "JointSource", module = "equivoc_py", frozen)]
struct PyJointSource {
    inner: JointSource,
}

#[pymethods]
impl PyJointSource {
    /// Rows indexed by A, columns by E.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PyJointSource { inner: equivoc::load_joint(&rows).map_err(err)? })
    }

    #[staticmethod]
    fn from_marginal(p: Vec<f64>) -> PyResult<Self> {
        Ok(PyJointSource { inner: JointSource::from_marginal(&p).map_err(err)? })
    }

    /// JSON ({"p": rows}) or, for a .csv extension, one row per A-symbol.
    #[staticmethod]
    fn from_path(path: &str) -> PyResult<Self> {
        Ok(PyJointSource { inner: JointSource::from_path(path).map_err(err)? })
    }

    #[staticmethod]
    fn random(seed: u64, a_size: usize, e_size: usize) -> Self {
        PyJointSource { inner: equivoc::random_joint(seed, a_size, e_size) }
    }

    #[getter]
    fn a_size(&self) -> usize {
        self.inner.a_size()
    }

    #[getter]
    fn e_size(&self) -> usize {
        self.inner.e_size()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows()
    }

    fn marginal_a(&self) -> Vec<f64> {
        self.inner.marginal_a()
    }

    fn marginal_e(&self) -> Vec<f64> {
        self.inner.marginal_e()
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    fn tensor_power(&self, n: u32) -> PyResult<Self> {
        Ok(PyJointSource { inner: equivoc::tensor_power(&self.inner, n).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        format!("JointSource(a_size={}, e_size={})", self.inner.a_size(), self.inner.e_size())
    }
}

/// Weighted family of maps A → {0..M−1}.
#[pyclass(name = "HashFamily", module = "equivoc_py", frozen)]
struct PyHashFamily {
    inner: HashFamily,
}

#[pymethods]
impl PyHashFamily {
    #[new]
    fn new(m: usize, members: Vec<Vec<u32>>, weights: Vec<f64>) -> PyResult<Self> {
        Ok(PyHashFamily { inner: HashFamily::new(m, members, weights).map_err(err)? })
    }

    #[staticmethod]
    fn all_functions(a_size: usize, m: usize) -> PyResult<Self> {
        Ok(PyHashFamily { inner: hashing::all_functions_family(a_size, m).map_err(err)? })
    }

    /// `samples=None` enumerates every matrix and certifies ε.
    #[staticmethod]
    #[pyo3(signature = (in_bits, out_bits, seed=0, samples=None))]
    fn toeplitz(in_bits: u32, out_bits: u32, seed: u64, samples: Option<usize>) -> PyResult<Self> {
        Ok(PyHashFamily { inner: hashing::toeplitz_family(in_bits, out_bits, seed, samples).map_err(err)? })
    }

    #[getter]
    fn a_size(&self) -> usize {
        self.inner.a_size()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m_size()
    }

    #[getter]
    fn certified_epsilon(&self) -> Option<f64> {
        self.inner.certified_epsilon()
    }

    fn members(&self) -> Vec<Vec<u32>> {
        self.inner.members().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }
}

/// H_{1+s}(A|E), optionally relative to a reference distribution on E.
#[pyfunction]
#[pyo3(signature = (source, s, q_e=None))]
fn cond_renyi_h(source: &PyJointSource, s: f64, q_e: Option<Vec<f64>>) -> PyResult<f64> {
    measures::cond_renyi_h(&source.inner, s, q_e.as_deref()).map_err(err)
}

#[pyfunction]
fn cond_renyi_h_up(source: &PyJointSource, s: f64) -> PyResult<f64> {
    measures::cond_renyi_h_up(&source.inner, s).map_err(err)
}

#[pyfunction]
fn two_param_h(source: &PyJointSource, s: f64, t: f64) -> PyResult<f64> {
    measures::two_param_h(&source.inner, s, t).map_err(err)
}

#[pyfunction]
fn renyi_divergence(p: Vec<f64>, q: Vec<f64>, s: f64) -> PyResult<f64> {
    measures::renyi_divergence(&p, &q, s).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (source, s, form="std"))]
fn security_measure(source: &PyJointSource, s: f64, form: &str) -> PyResult<f64> {
    measures::security_measure(&source.inner, s, self::form(form)?).map_err(err)
}

#[pyfunction]
fn sibson_mi(source: &PyJointSource, s: f64) -> PyResult<f64> {
    measures::sibson_mi(&source.inner, s).map_err(err)
}

#[pyfunction]
fn arimoto_mi(source: &PyJointSource, s: f64) -> PyResult<f64> {
    measures::arimoto_mi(&source.inner, s).map_err(err)
}

#[pyfunction]
fn tilted_qe(source: &PyJointSource, s: f64) -> PyResult<Vec<f64>> {
    measures::tilted_qe(&source.inner, s).map_err(err)
}

/// {"v": V, "v1": V1, "v2": V2}
#[pyfunction]
fn varentropies<'py>(py: Python<'py>, source: &PyJointSource) -> PyResult<Bound<'py, PyDict>> {
    let v = measures::varentropies(&source.inner);
    let d = PyDict::new(py);
    d.set_item("v", v.v)?;
    d.set_item("v1", v.v1)?;
    d.set_item("v2", v.v2)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (source, t, form="std"))]
fn critical_rate(source: &PyJointSource, t: f64, form: &str) -> PyResult<f64> {
    asymptotics::critical_rate(&source.inner, t, self::form(form)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (source, s, r, sign="plus", form="std"))]
fn equiv_limit(source: &PyJointSource, s: f64, r: f64, sign: &str, form: &str) -> PyResult<f64> {
    asymptotics::equiv_limit(&source.inner, s, r, self::sign(sign)?, self::form(form)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (source, s, form="std"))]
fn key_rate(source: &PyJointSource, s: f64, form: &str) -> PyResult<f64> {
    asymptotics::key_rate(&source.inner, s, self::form(form)?).map_err(err)
}

/// (value, hypothesis_holds)
#[pyfunction]
#[pyo3(signature = (source, s, r, sign="plus", form="std"))]
fn exponent(source: &PyJointSource, s: f64, r: f64, sign: &str, form: &str) -> PyResult<(f64, bool)> {
    let e = asymptotics::exponent(&source.inner, s, r, self::sign(sign)?, self::form(form)?).map_err(err)?;
    Ok((e.value, e.hypothesis_holds))
}

#[pyfunction]
fn case_b(l: f64, v: f64) -> f64 {
    second_order::case_b_closed_form(l, v)
}

/// (lower, upper) of the normalized criterion at s > 0.
#[pyfunction]
#[pyo3(signature = (source, s, l, form="std"))]
fn case_c_bounds(source: &PyJointSource, s: f64, l: f64, form: &str) -> PyResult<(f64, f64)> {
    let g = GaussianSpec::of(&source.inner);
    let b = second_order::case_c_bounds(s, l, &g, self::form(form)?).map_err(err)?;
    Ok((b.lower, b.upper))
}

/// Leading quadratic term; for negative L it approximates the log of the limit.
#[pyfunction]
#[pyo3(signature = (source, s, l, form="std"))]
fn large_l_approx(source: &PyJointSource, s: f64, l: f64, form: &str) -> PyResult<f64> {
    let direction = if l >= 0.0 { Direction::Pos } else { Direction::Neg };
    second_order::large_l_approx(&source.inner, s, l, self::form(form)?, direction)
        .map(|a| a.value)
        .map_err(err)
}

#[pyfunction]
fn exact_tail(source: &PyJointSource, n: usize, r: f64) -> PyResult<f64> {
    spectrum::exact_tail(&source.inner, n, r).map_err(err)
}

#[pyfunction]
fn log_exact_tail(source: &PyJointSource, n: usize, r: f64) -> PyResult<f64> {
    spectrum::log_exact_tail(&source.inner, n, r).map_err(err)
}

#[pyfunction]
fn cramer_exponent(source: &PyJointSource, r: f64) -> PyResult<f64> {
    spectrum::cramer_exponent(&source.inner, r).map(|c| c.value).map_err(err)
}

#[pyfunction]
fn collision_sum_exact(source: &PyJointSource, n: usize, m: usize) -> PyResult<f64> {
    spectrum::collision_sum_exact(&source.inner, n, m).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (source, family, s, form="std"))]
fn exact_security(source: &PyJointSource, family: &PyHashFamily, s: f64, form: &str) -> PyResult<f64> {
    oneshot::exact_security(&source.inner, &family.inner, s, self::form(form)?).map_err(err)
}

/// Checks every one-shot bound; returns (reports, summary) as plain dicts.
#[pyfunction]
#[pyo3(signature = (source, family, s_grid, c_grid=vec![1.01, 1.5, 3.0], epsilon=1.0))]
fn verify<'py>(
    py: Python<'py>,
    source: &PyJointSource,
    family: &PyHashFamily,
    s_grid: Vec<f64>,
    c_grid: Vec<f64>,
    epsilon: f64,
) -> PyResult<(Vec<Bound<'py, PyDict>>, Bound<'py, PyDict>)> {
    let reports = py
        .detach(|| oneshot::verify(&source.inner, &family.inner, &s_grid, &c_grid, epsilon))
        .map_err(err)?;
    let rows = reports
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("lemma", &r.lemma)?;
            d.set_item("kind", r.kind.name())?;
            d.set_item("s", r.s)?;
            d.set_item("c", r.c)?;
            d.set_item("epsilon", r.epsilon)?;
            d.set_item("m", r.m)?;
            d.set_item("member", r.member)?;
            d.set_item("lhs", r.lhs)?;
            d.set_item("rhs", r.rhs)?;
            d.set_item("slack", r.slack)?;
            d.set_item("status", r.status.to_string())?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    let summary = Summary::of(&reports);
    let s = PyDict::new(py);
    s.set_item("asserted_failures", summary.asserted_failures())?;
    s.set_item("reported", summary.reported())?;
    let per_kind = PyDict::new(py);
    for (kind, c) in &summary.per_kind {
        let d = PyDict::new(py);
        d.set_item("holds", c.holds)?;
        d.set_item("violated", c.violated)?;
        d.set_item("reported", c.reported)?;
        per_kind.set_item(kind, d)?;
    }
    s.set_item("per_kind", per_kind)?;
    Ok((rows, s))
}

#[pymodule]
fn equivoc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyJointSource>()?;
    m.add_class::<PyHashFamily>()?;
    m.add("S_EPS", equivoc::S_EPS)?;
    m.add_function(wrap_pyfunction!(cond_renyi_h, m)?)?;
    m.add_function(wrap_pyfunction!(cond_renyi_h_up, m)?)?;
    m.add_function(wrap_pyfunction!(two_param_h, m)?)?;
    m.add_function(wrap_pyfunction!(renyi_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(security_measure, m)?)?;
    m.add_function(wrap_pyfunction!(sibson_mi, m)?)?;
    m.add_function(wrap_pyfunction!(arimoto_mi, m)?)?;
    m.add_function(wrap_pyfunction!(tilted_qe, m)?)?;
    m.add_function(wrap_pyfunction!(varentropies, m)?)?;
    m.add_function(wrap_pyfunction!(critical_rate, m)?)?;
    m.add_function(wrap_pyfunction!(equiv_limit, m)?)?;
    m.add_function(wrap_pyfunction!(key_rate, m)?)?;
    m.add_function(wrap_pyfunction!(exponent, m)?)?;
    m.add_function(wrap_pyfunction!(case_b, m)?)?;
    m.add_function(wrap_pyfunction!(case_c_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(large_l_approx, m)?)?;
    m.add_function(wrap_pyfunction!(exact_tail, m)?)?;
    m.add_function(wrap_pyfunction!(log_exact_tail, m)?)?;
    m.add_function(wrap_pyfunction!(cramer_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(collision_sum_exact, m)?)?;
    m.add_function(wrap_pyfunction!(exact_security, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
