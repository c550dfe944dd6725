//! Python module `qorpilot`. Structured values cross the boundary as
//! canonical JSON strings.

use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use qorpilot_core::codegraph::{self, RegistrationPattern};
use qorpilot_core::flowsim::{self, FlowFixture, FlowRunConfig};
use qorpilot_core::hash::canonical_json;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn utf8(bytes: Vec<u8>) -> String {
    String::from_utf8(bytes).expect("canonical JSON is UTF-8")
}

#[pyfunction]
fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Percent change from `base` to `new`, rounded to two decimals.
#[pyfunction]
fn delta_percent(base: f64, new: f64) -> PyResult<f64> {
    flowsim::delta_percent(base, new).map_err(value_err)
}

/// Parses `KEY=VALUE` flow configuration text into config JSON.
#[pyfunction]
fn parse_flow_config(text: &str) -> PyResult<String> {
    let c = flowsim::parse_flow_config(text).map_err(value_err)?;
    Ok(utf8(canonical_json(&c)))
}

/// Validates a QoR report and returns it in canonical form.
#[pyfunction]
fn parse_qor_json(text: &str) -> PyResult<String> {
    let r = flowsim::parse_qor_json(text.as_bytes()).map_err(value_err)?;
    Ok(utf8(flowsim::render_qor_json(&r)))
}

/// Looks up a recorded report for `config_json` and `patch`.
#[pyfunction]
#[pyo3(signature = (fixture_path, config_json, patch = "baseline"))]
fn replay(fixture_path: &str, config_json: &str, patch: &str) -> PyResult<String> {
    let fixture = FlowFixture::load(Path::new(fixture_path)).map_err(value_err)?;
    let config: FlowRunConfig = serde_json::from_str(config_json).map_err(value_err)?;
    let r = flowsim::replay_run(&fixture, &config, patch).map_err(value_err)?;
    Ok(utf8(flowsim::render_qor_json(&r)))
}

/// Builds the code graph of `repo`. With `link`, script commands are linked
/// to their handlers and call cycles condensed.
#[pyfunction]
#[pyo3(signature = (repo, exclude = Vec::new(), link = true))]
fn build_graph(repo: &str, exclude: Vec<String>, link: bool) -> PyResult<String> {
    let raw = codegraph::build_graph(Path::new(repo), None).map_err(runtime_err)?;
    let (mut g, _) = codegraph::filter_nodes(&raw, &exclude).map_err(value_err)?;
    if link {
        let (linked, _) = codegraph::link_scripts(&g, &RegistrationPattern::defaults()).map_err(value_err)?;
        g = codegraph::condense_sccs(&linked).map_err(value_err)?;
    }
    Ok(utf8(codegraph::serialize(&g)))
}

/// First failing prefix of `n` diffs; `fails(k)` judges the first `k`.
/// Returns `(culprit, probes)`.
#[pyfunction]
fn bisect(n: usize, fails: Bound<'_, PyAny>) -> PyResult<(usize, usize)> {
    let mut err = None;
    let r = qorpilot_core::executor::bisect(n, |k| match fails.call1((k,)).and_then(|v| v.extract::<bool>()) {
        Ok(b) => b,
        Err(e) => {
            err.get_or_insert(e);
            true
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let r = r.map_err(value_err)?;
    Ok((r.culprit, r.probes))
}

/// Runs the command-line front end in-process and returns its exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> u8 {
    let mut argv = vec!["qorpilot".to_string()];
    argv.extend(args);
    qorpilot_cli::main_with(argv, std::env::vars().collect())
}

#[pymodule]
fn qorpilot(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(delta_percent, m)?)?;
    m.add_function(wrap_pyfunction!(parse_flow_config, m)?)?;
    m.add_function(wrap_pyfunction!(parse_qor_json, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(build_graph, m)?)?;
    m.add_function(wrap_pyfunction!(bisect, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
