use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use kundt::catalog::{self, CaseSpec, CASE_IDS};
use kundt::curvature::riemann_frame;
use kundt::format::{parse_candidate, parse_metric, write_candidate, write_metric};
use kundt::invariants::{compute_invariants, csi_verdict, Verdict};
use kundt::killing::{self, causal_character, classify, killing_plan, killing_residuals, CausalVerdict};
use kundt::oracle::oracle_compare;
use kundt::{parse_expr, KundtMetric, Point, SamplePlan};

create_exception!(kundt_py, KundtError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    KundtError::new_err(e.to_string())
}

fn plan(n: usize, points: usize, seed: u64) -> SamplePlan {
    SamplePlan::new(n, points, seed)
}

/// A CCNV Kundt metric.
#[pyclass(name = "Metric", frozen)]
struct PyMetric {
    inner: KundtMetric,
}

#[pymethods]
impl PyMetric {
    /// Parse the `key = "expr"` metric format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyMetric {
            inner: parse_metric(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn minkowski(dimension: usize) -> PyResult<Self> {
        if dimension < 4 {
            return Err(err("dimension must be at least 4"));
        }
        Ok(PyMetric {
            inner: KundtMetric::minkowski(dimension),
        })
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn to_text(&self) -> String {
        write_metric(&self.inner)
    }

    /// Names of failing validation checks; empty when valid.
    #[pyo3(signature = (points = 100, seed = 1))]
    fn validate(&self, points: usize, seed: u64) -> Vec<String> {
        let report = self.inner.validate(&plan(self.inner.dimension(), points, seed));
        report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.clone())
            .collect()
    }

    /// Largest relative difference between frame and coordinate curvature.
    #[pyo3(signature = (points = 100, seed = 1, rel_tol = 1e-8))]
    fn oracle_compare(&self, points: usize, seed: u64, rel_tol: f64) -> (bool, f64) {
        let cmp = oracle_compare(&self.inner, &plan(self.inner.dimension(), points, seed), rel_tol, false);
        (cmp.passed(), cmp.max_rel_error())
    }

    /// `R_22`, `R_2i`, `R_ij` and `R` at one chart point.
    fn ricci_at<'py>(&self, py: Python<'py>, point: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        if point.len() != self.inner.dimension() {
            return Err(err("point has the wrong dimension"));
        }
        let c = riemann_frame(&self.inner, &Point::new(point)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("R22", c.ricci_22)?;
        d.set_item("R2i", c.ricci_2i)?;
        d.set_item("Rij", c.ricci_ij)?;
        d.set_item("R", c.ricci_scalar)?;
        Ok(d)
    }

    /// Verdict string and per-invariant spreads.
    #[pyo3(signature = (points = 100, seed = 1, rel_tol = 1e-9, abs_tol = 1e-12))]
    fn invariants<'py>(
        &self,
        py: Python<'py>,
        points: usize,
        seed: u64,
        rel_tol: f64,
        abs_tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let set = compute_invariants(&self.inner, &plan(self.inner.dimension(), points, seed)).map_err(err)?;
        let v = csi_verdict(&set, rel_tol, abs_tol).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item(
            "verdict",
            match v.verdict {
                Verdict::VsiConsistent => "VSI-consistent",
                Verdict::CsiConsistent => "CSI-consistent",
                Verdict::NonCsi => "non-CSI",
            },
        )?;
        let spreads = PyDict::new(py);
        for s in &v.spreads {
            spreads.set_item(s.name, (s.min, s.max))?;
        }
        d.set_item("ranges", spreads)?;
        d.set_item("transverse_difference", v.transverse_difference)?;
        Ok(d)
    }
}

/// `F₁, F₂, F₃` of a Killing candidate.
#[pyclass(name = "Candidate", frozen)]
struct PyCandidate {
    inner: killing::KillingCandidate,
}

#[pymethods]
impl PyCandidate {
    #[new]
    fn new(f1: &str, f2: &str, f3: &str, dimension: usize) -> PyResult<Self> {
        let p = |s: &str| parse_expr(s, dimension).map_err(err);
        Ok(PyCandidate {
            inner: killing::KillingCandidate::new(p(f1)?, p(f2)?, p(f3)?),
        })
    }

    #[staticmethod]
    fn from_text(text: &str, dimension: usize) -> PyResult<Self> {
        Ok(PyCandidate {
            inner: parse_candidate(text, dimension).map_err(err)?,
        })
    }

    fn to_text(&self) -> String {
        write_candidate(&self.inner)
    }
}

/// Largest Killing residual, the type tag and the causal verdict.
#[pyfunction]
#[pyo3(signature = (metric, candidate, points = 100, seed = 1))]
fn killing_check<'py>(
    py: Python<'py>,
    metric: &PyMetric,
    candidate: &PyCandidate,
    points: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let kp = killing_plan(metric.inner.dimension(), points, seed);
    let res = killing_residuals(&metric.inner, &candidate.inner.assemble(&metric.inner), &kp);
    let kind = classify(&candidate.inner, &kp).map_err(err)?;
    let causal = causal_character(&metric.inner, &candidate.inner, &kp).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("max_residual", res.max())?;
    d.set_item("passed", res.passed())?;
    d.set_item("type", kind.tag())?;
    d.set_item(
        "causal",
        match causal.verdict {
            CausalVerdict::TimelikeForAllV => "timelike-for-all-v",
            CausalVerdict::NullForAllV => "null-for-all-v",
            CausalVerdict::SpacelikeSomewhere => "spacelike-somewhere",
            CausalVerdict::Mixed => "mixed",
        },
    )?;
    Ok(d)
}

/// Build a catalog case. Unbound free functions take their defaults, or are
/// drawn from `random_seed` when it is given.
#[pyfunction]
#[pyo3(signature = (id, dimension = 5, bindings = None, random_seed = None, points = 100, seed = 1))]
fn build_case(
    id: &str,
    dimension: usize,
    bindings: Option<BTreeMap<String, String>>,
    random_seed: Option<u64>,
    points: usize,
    seed: u64,
) -> PyResult<(PyMetric, PyCandidate, bool)> {
    let plan = plan(dimension, points, seed);
    let inst = match random_seed {
        Some(s) => catalog::random_case(id, dimension, s, &plan).map_err(err)?,
        None => {
            let mut spec = CaseSpec::new(id, dimension);
            for (k, v) in bindings.unwrap_or_default() {
                spec = spec.bind(&k, parse_expr(&v, dimension).map_err(err)?);
            }
            catalog::build_case(&spec, &plan).map_err(err)?
        }
    };
    let ok = inst.relations_passed();
    Ok((
        PyMetric { inner: inst.metric },
        PyCandidate { inner: inst.candidate },
        ok,
    ))
}

#[pyfunction]
fn case_ids() -> Vec<&'static str> {
    CASE_IDS.to_vec()
}

/// Evaluate an expression at a chart point `(u, v, x3, ...)`.
#[pyfunction]
fn evaluate(expr: &str, point: Vec<f64>) -> PyResult<f64> {
    let e = parse_expr(expr, point.len()).map_err(err)?;
    e.eval(&Point::new(point)).map_err(err)
}

#[pymodule]
fn kundt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMetric>()?;
    m.add_class::<PyCandidate>()?;
    m.add_function(wrap_pyfunction!(killing_check, m)?)?;
    m.add_function(wrap_pyfunction!(build_case, m)?)?;
    m.add_function(wrap_pyfunction!(case_ids, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add("KundtError", m.py().get_type::<KundtError>())?;
    Ok(())
}
