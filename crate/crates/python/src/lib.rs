//! Python bindings: program loading, traversal, verification runs and fact
//! embedding.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use cofact_core::config::{Overrides, RunConfig};
use cofact_core::error::RunError;
use cofact_core::facts::{self, PlacedFact};
use cofact_core::frontend::{self, build_call_graph};
use cofact_core::llm::{Cache, Gateway, Mode};
use cofact_core::model::{AssertionId, ImplicationGraph, ProgramModel, VerifiedFact};
use cofact_core::pipeline;
use cofact_core::traversal::cg_traversal;
use cofact_core::verifier::dependency_closure;

create_exception!(cofact, CofactError, PyException, "A failed cofact operation. `args` is (message, exit_code).");

fn err(e: impl Into<RunError>) -> PyErr {
    let e = e.into();
    CofactError::new_err((e.to_string(), e.exit_code()))
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "cofact")]
#[derive(Clone)]
struct Assertion {
    id: Option<usize>,
    function: String,
    logical_line: usize,
    predicate: String,
}

#[pymethods]
impl Assertion {
    fn __repr__(&self) -> String {
        let id = self.id.map_or("-".to_string(), |i| i.to_string());
        format!(
            "Assertion(id={id}, function={:?}, logical_line={}, predicate={:?})",
            self.function, self.logical_line, self.predicate
        )
    }
}

impl From<&cofact_core::model::Assertion> for Assertion {
    fn from(a: &cofact_core::model::Assertion) -> Self {
        Assertion {
            id: a.id.map(|i| i.0),
            function: a.function.clone(),
            logical_line: a.logical_line,
            predicate: a.predicate.clone(),
        }
    }
}

#[pyclass(frozen, module = "cofact")]
struct Program {
    model: ProgramModel,
}

#[pymethods]
impl Program {
    #[getter]
    fn source(&self) -> String {
        self.model.source.clone()
    }

    #[getter]
    fn functions(&self) -> Vec<String> {
        self.model.function_names().into_iter().map(String::from).collect()
    }

    /// Assertions in source order, without ids.
    fn assertions(&self) -> Vec<Assertion> {
        frontend::extract_assertions(&self.model).iter().map(Assertion::from).collect()
    }

    /// Assertions in verification order, numbered from 1.
    fn sequence(&self) -> PyResult<Vec<Assertion>> {
        let seq = cg_traversal(&self.model, &build_call_graph(&self.model)).map_err(err)?;
        Ok(seq.assertions.iter().map(Assertion::from).collect())
    }

    /// `(caller, callee, call_site_line)` for every call edge.
    fn call_graph(&self) -> Vec<(String, String, usize)> {
        build_call_graph(&self.model).edges.into_iter().map(|e| (e.caller, e.callee, e.call_site_line)).collect()
    }

    /// The program with every assertion removed.
    fn strip_assertions(&self) -> String {
        frontend::strip_assertions(&self.model)
    }
}

/// Normalizes multi-line assertions, then parses.
#[pyfunction]
fn load_program(source: &str) -> PyResult<Program> {
    Ok(Program { model: frontend::load_program(source).map_err(err)? })
}

#[pyfunction]
fn normalize(source: &str) -> PyResult<String> {
    frontend::normalize_assertions(source).map_err(err)
}

/// Returns `(success, messages)`.
#[pyfunction]
#[pyo3(signature = (source, compiler = "gcc"))]
fn compile_check(source: &str, compiler: &str) -> PyResult<(bool, Vec<String>)> {
    let cfg = frontend::CompilerConfig { path: compiler.into(), ..Default::default() };
    let d = frontend::compile_check_with(&cfg, source).map_err(err)?;
    Ok((d.success, d.messages))
}

fn config(path: Option<PathBuf>, bound: Option<u32>, timeout: Option<f64>) -> PyResult<RunConfig> {
    let flags = Overrides { bound, timeout_secs: timeout, ..Default::default() };
    RunConfig::resolve(&flags, path.as_deref()).map_err(err)
}

/// Verifies an annotated program into `out_dir`; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (source, out_dir, config_path = None, bound = None, timeout = None, property_map = None))]
fn verify(
    py: Python<'_>,
    source: &str,
    out_dir: PathBuf,
    config_path: Option<PathBuf>,
    bound: Option<u32>,
    timeout: Option<f64>,
    property_map: Option<PathBuf>,
) -> PyResult<String> {
    let cfg = config(config_path, bound, timeout)?;
    let r = py.detach(|| pipeline::run_verify_only(source, &cfg, &out_dir, property_map.as_deref()));
    Ok(r.map_err(err)?.to_json())
}

/// Runs the whole pipeline from recorded responses only. The config file
/// must set the provider cache directory.
#[pyfunction]
#[pyo3(signature = (description, out_dir, config_path))]
fn replay_full(py: Python<'_>, description: &str, out_dir: PathBuf, config_path: PathBuf) -> PyResult<String> {
    let mut cfg = config(Some(config_path), None, None)?;
    cfg.provider.mode = Mode::Replay;
    let mut gw = Gateway::replay(Cache::new(&cfg.provider.cache_dir), &cfg.provider.model);
    let r = py.detach(|| pipeline::run_full(description, &cfg, &mut gw, &out_dir));
    Ok(r.map_err(err)?.to_json())
}

/// Dependency closure of `id` given verified entries (id -> assumptions)
/// and the falsified and unknown ids.
#[pyfunction]
#[pyo3(signature = (entries, id, falsified = Vec::new(), unknown = Vec::new()))]
fn closure(
    entries: BTreeMap<usize, Vec<usize>>,
    id: usize,
    falsified: Vec<usize>,
    unknown: Vec<usize>,
) -> PyResult<Vec<usize>> {
    let mut ig = ImplicationGraph::new();
    for (i, deps) in entries {
        ig.insert(AssertionId(i), deps.into_iter().map(AssertionId).collect())
            .map_err(|e| CofactError::new_err((e.to_string(), 1)))?;
    }
    for f in falsified {
        ig.mark_falsified(AssertionId(f)).map_err(|e| CofactError::new_err((e.to_string(), 1)))?;
    }
    let mut attempted: BTreeSet<AssertionId> = ig.entries.keys().chain(&ig.falsified).copied().collect();
    attempted.extend(unknown.into_iter().map(AssertionId));
    if !attempted.contains(&AssertionId(id)) {
        return Err(CofactError::new_err((format!("assertion {id} was never attempted"), 2)));
    }
    Ok(dependency_closure(&ig, &attempted, AssertionId(id)).into_iter().map(|i| i.0).collect())
}

/// Embeds facts into `p0`. Each fact is
/// `(id, function, logical_line, k, text, depends_on)`.
#[pyfunction]
fn embed_facts(p0: &str, facts: Vec<(usize, String, usize, u32, String, Vec<usize>)>) -> PyResult<String> {
    let model = frontend::parse_program(p0).map_err(err)?;
    let placed: Vec<PlacedFact> = facts
        .into_iter()
        .map(|(id, function, logical_line, k, text, deps)| {
            let indent: String = model
                .function(&function)
                .and_then(|f| {
                    model
                        .lines()
                        .get(f.open_brace_line + 1)
                        .map(|l| l.chars().take_while(|c| c.is_whitespace() && *c != '\n').collect())
                })
                .unwrap_or_else(|| "    ".into());
            PlacedFact {
                fact: VerifiedFact::new(AssertionId(id), k, text, deps.into_iter().map(AssertionId).collect()),
                function,
                logical_line,
                indent,
            }
        })
        .collect();
    facts::embed_facts(&model, &placed).map_err(err)
}

#[pyfunction]
fn strip_facts(text: &str) -> String {
    facts::strip_facts(text)
}

#[pyfunction]
fn template_fact(predicate: &str) -> String {
    facts::template_fact(predicate)
}

#[pymodule]
fn cofact(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CofactError", m.py().get_type::<CofactError>())?;
    m.add_class::<Assertion>()?;
    m.add_class::<Program>()?;
    m.add_function(wrap_pyfunction!(load_program, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(compile_check, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(replay_full, m)?)?;
    m.add_function(wrap_pyfunction!(closure, m)?)?;
    m.add_function(wrap_pyfunction!(embed_facts, m)?)?;
    m.add_function(wrap_pyfunction!(strip_facts, m)?)?;
    m.add_function(wrap_pyfunction!(template_fact, m)?)?;
    Ok(())
}
