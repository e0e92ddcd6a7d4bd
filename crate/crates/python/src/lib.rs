//! Python bindings: surfaces, line-bundle collections, the construction
//! pipeline, certificates and Hilbert series.

// the pyo3 0.22 function macros expand to `PyErr::from(PyErr)`
#![allow(clippy::useless_conversion)]

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use tilting_core::blocks::{self, ExtendedCollection, DEFAULT_ROUND_CAP};
use tilting_core::certify::{self as cert, Verdict};
use tilting_core::collections::{
    default_max_steps, search_sorted_line_collections, verify_line_collection,
};
use tilting_core::io::{CollectionFile, FileError};
use tilting_core::pipeline::{self, PipelineError, Strategy};
use tilting_core::properties;
use tilting_core::series;
use tilting_core::toric::{fan_from_json, validate_fan, DivisorClass, Ray, SmoothToricSurface};

create_exception!(tilting, TiltingError, PyValueError);
create_exception!(tilting, IncompleteError, TiltingError);

fn err(e: impl std::fmt::Display) -> PyErr {
    TiltingError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, value: &impl Serialize) -> PyResult<PyObject> {
    let text = serde_json::to_string(value).map_err(err)?;
    Ok(py
        .import_bound("json")?
        .call_method1("loads", (text,))?
        .unbind())
}

/// A smooth complete toric surface.
#[pyclass(module = "tilting", frozen)]
#[derive(Clone)]
pub struct Surface {
    inner: SmoothToricSurface,
}

#[pymethods]
impl Surface {
    #[new]
    #[pyo3(signature = (rays, name = "surface"))]
    fn new(rays: Vec<(i64, i64)>, name: &str) -> PyResult<Self> {
        let rays: Vec<Ray> = rays.into_iter().map(|(x, y)| [x, y]).collect();
        Ok(Surface {
            inner: validate_fan(name, &rays).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Surface {
            inner: fan_from_json(text).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn rays(&self) -> Vec<(i64, i64)> {
        self.inner.rays().iter().map(|r| (r[0], r[1])).collect()
    }

    #[getter]
    fn selfint(&self) -> Vec<i64> {
        self.inner.selfint.clone()
    }

    #[getter]
    fn canonical(&self) -> Vec<i64> {
        self.inner.canonical.0.clone()
    }

    #[getter]
    fn ksq(&self) -> i64 {
        self.inner.ksq()
    }

    fn classify(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &self.inner.classify())
    }

    fn ray_divisor(&self, i: usize) -> PyResult<Vec<i64>> {
        if i >= self.inner.num_rays() {
            return Err(err(format!("ray index {i} out of range")));
        }
        Ok(self.inner.ray_divisor(i).0)
    }

    fn intersect(&self, a: Vec<i64>, b: Vec<i64>) -> PyResult<i64> {
        self.inner
            .intersect(&DivisorClass(a), &DivisorClass(b))
            .map_err(err)
    }

    /// `(h0, h1, h2)` of `O(D)`.
    fn cohomology(&self, d: Vec<i64>) -> PyResult<(u64, u64, u64)> {
        let c = self.inner.cohomology(&DivisorClass(d)).map_err(err)?;
        Ok((c.h0, c.h1, c.h2))
    }

    fn h0(&self, d: Vec<i64>) -> PyResult<u64> {
        self.inner.h0(&DivisorClass(d)).map_err(err)
    }

    fn euler_characteristic(&self, d: Vec<i64>) -> PyResult<i64> {
        self.inner
            .euler_characteristic(&DivisorClass(d))
            .map_err(err)
    }

    /// Blows up the torus-fixed point between ray `corner` and the next.
    fn blowup(&self, corner: usize) -> PyResult<Surface> {
        Ok(Surface {
            inner: self.inner.blowup(corner).map_err(err)?.surface,
        })
    }

    #[pyo3(signature = (samples = 100, seed = properties::DEFAULT_SEED, bound = 5))]
    fn check_properties(
        &self,
        py: Python<'_>,
        samples: usize,
        seed: u64,
        bound: i64,
    ) -> PyResult<PyObject> {
        to_py(
            py,
            &properties::check_surface(&self.inner, samples, seed, bound),
        )
    }

    fn __repr__(&self) -> String {
        format!("Surface({:?}, rays={:?})", self.inner.name(), self.rays())
    }
}

/// An exceptional collection, possibly with universal extensions applied.
#[pyclass(module = "tilting", frozen)]
#[derive(Clone)]
pub struct Collection {
    inner: ExtendedCollection,
}

#[pymethods]
impl Collection {
    /// Line bundles `O(D)`; fails unless the sequence is exceptional.
    #[staticmethod]
    fn lines(surface: &Surface, divisors: Vec<Vec<i64>>) -> PyResult<Self> {
        let ds: Vec<DivisorClass> = divisors.into_iter().map(DivisorClass).collect();
        let c = verify_line_collection(&surface.inner, &ds).map_err(err)?;
        Ok(Collection { inner: c.into() })
    }

    /// Parses a collection file; the surface must be given inline.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file = CollectionFile::parse(text).map_err(err)?;
        let inner = file
            .into_collection(|name| Err(FileError::UnknownSurface(name.to_string())))
            .map_err(err)?;
        Ok(Collection { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&CollectionFile::from_collection(&self.inner)).map_err(err)
    }

    #[getter]
    fn surface(&self) -> Surface {
        Surface {
            inner: self.inner.base.surface.clone(),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// `(rank, c1, chi)` per member.
    fn classes(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &self.inner.classes())
    }

    /// Slopes as exact fractions in string form, e.g. `"3/2"`; `None` for rank 0.
    fn slopes(&self) -> PyResult<Vec<Option<String>>> {
        Ok(self
            .inner
            .members()
            .map_err(err)?
            .iter()
            .map(|m| m.slope.map(|s| s.to_string()))
            .collect())
    }

    fn gram(&self) -> Vec<Vec<i64>> {
        self.inner.base.gram()
    }

    fn is_strong(&self) -> bool {
        self.inner.base.is_strong()
    }

    fn extensions(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &self.inner.log)
    }

    /// Returns the sorted collection and the mutation trace.
    #[pyo3(signature = (max_steps = None))]
    fn sort_by_slope(
        &self,
        py: Python<'_>,
        max_steps: Option<usize>,
    ) -> PyResult<(Collection, PyObject)> {
        if !self.inner.log.is_empty() {
            return Err(err(
                "cannot mutate a collection that already carries extensions",
            ));
        }
        let steps =
            max_steps.unwrap_or_else(|| default_max_steps(self.inner.base.surface.num_rays()));
        let (sorted, trace) = self.inner.base.sort_by_slope(steps).map_err(err)?;
        Ok((
            Collection {
                inner: sorted.into(),
            },
            to_py(py, &trace)?,
        ))
    }

    #[pyo3(signature = (round_cap = DEFAULT_ROUND_CAP))]
    fn process_blocks(&self, round_cap: usize) -> PyResult<Collection> {
        Ok(Collection {
            inner: blocks::process_blocks(&self.inner, round_cap).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Collection(len={}, extensions={})",
            self.inner.len(),
            self.inner.log.len()
        )
    }
}

/// A tilting certificate with its supporting facts.
#[pyclass(module = "tilting", frozen)]
#[derive(Clone)]
pub struct Certificate {
    inner: cert::Certificate,
}

#[pymethods]
impl Certificate {
    #[getter]
    fn id(&self) -> String {
        self.inner.id.clone()
    }

    #[getter]
    fn verdict(&self) -> String {
        match self.inner.verdict {
            Verdict::TwoTilting => "two-tilting",
            Verdict::Tilting => "tilting",
            Verdict::Incomplete => "incomplete",
        }
        .into()
    }

    fn is_two_tilting(&self) -> bool {
        self.inner.is_two_tilting()
    }

    fn to_dict(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &self.inner)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Certificate(id={:?}, verdict={:?})",
            self.inner.id,
            self.verdict()
        )
    }
}

/// Certifies tilting, then 2-tilting by the slope window. Raises
/// `IncompleteError` when either step cannot be certified.
#[pyfunction]
fn certify(collection: &Collection) -> PyResult<Certificate> {
    let c = cert::certify_tilting(&collection.inner).map_err(err)?;
    if c.verdict == Verdict::Incomplete {
        return Err(IncompleteError::new_err(format!(
            "not tilting: {} blocking fact(s)",
            c.blocking.len()
        )));
    }
    let two = cert::certify_two_tilting(&c).map_err(|e| IncompleteError::new_err(e.to_string()))?;
    Ok(Certificate { inner: two })
}

#[pyfunction]
#[pyo3(signature = (surface, radius = 1, limit = 16))]
fn search(surface: &Surface, radius: i64, limit: usize) -> PyResult<Vec<Collection>> {
    Ok(
        search_sorted_line_collections(&surface.inner, radius, limit)
            .map_err(err)?
            .into_iter()
            .map(|c| Collection { inner: c.into() })
            .collect(),
    )
}

/// Full pipeline; returns `(initial, final, certificate)`.
#[pyfunction]
#[pyo3(signature = (surface, strategy = "blowup-chain", radius = 1, max_steps = None, round_cap = DEFAULT_ROUND_CAP))]
fn construct(
    surface: &Surface,
    strategy: &str,
    radius: i64,
    max_steps: Option<usize>,
    round_cap: usize,
) -> PyResult<(Collection, Collection, Certificate)> {
    let strategy = match strategy {
        "blowup-chain" => Strategy::BlowupChain,
        "search" => Strategy::Search { radius },
        other => return Err(err(format!("unknown strategy {other:?}"))),
    };
    let steps = max_steps.unwrap_or_else(|| default_max_steps(surface.inner.num_rays()));
    let out = match pipeline::construct(&surface.inner, strategy, steps, round_cap) {
        Ok(o) => o,
        Err(e @ (PipelineError::Incomplete(_) | PipelineError::NothingFound(_))) => {
            return Err(IncompleteError::new_err(e.to_string()))
        }
        Err(e) => return Err(err(e)),
    };
    Ok((
        Collection {
            inner: out.initial.into(),
        },
        Collection {
            inner: out.extended,
        },
        Certificate {
            inner: out.certificate,
        },
    ))
}

/// Series reports for `Pi3`, `R` and the module summands, as dicts.
#[pyfunction]
#[pyo3(signature = (collection, certificate, n_max = 10))]
fn hilbert_series(
    py: Python<'_>,
    collection: &Collection,
    certificate: &Certificate,
    n_max: usize,
) -> PyResult<PyObject> {
    let reports =
        series::series_reports(&collection.inner, &certificate.inner, n_max).map_err(err)?;
    to_py(py, &reports)
}

#[pyfunction]
#[pyo3(signature = (surface, n_max = 10))]
fn anticanonical_series(surface: &Surface, n_max: usize) -> PyResult<Vec<u64>> {
    Ok(series::anticanonical_hilbert(&surface.inner, n_max)
        .map_err(err)?
        .coeffs)
}

#[pymodule]
fn tilting(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Surface>()?;
    m.add_class::<Collection>()?;
    m.add_class::<Certificate>()?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(construct, m)?)?;
    m.add_function(wrap_pyfunction!(hilbert_series, m)?)?;
    m.add_function(wrap_pyfunction!(anticanonical_series, m)?)?;
    m.add("TiltingError", m.py().get_type_bound::<TiltingError>())?;
    m.add(
        "IncompleteError",
        m.py().get_type_bound::<IncompleteError>(),
    )?;
    Ok(())
}
