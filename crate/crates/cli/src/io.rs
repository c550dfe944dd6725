//! File helpers shared by the subcommands.

use std::path::{Path, PathBuf};

use qorpilot_core::codegraph::{self, CodeGraph};
use qorpilot_core::hash::{canonical_json, sha256_hex};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Writes through a sibling temporary file and a rename, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_atomic(path, &canonical_json(value))
}

pub fn load_graph(path: &Path) -> Result<CodeGraph, CliError> {
    Ok(codegraph::deserialize(&read(path)?)?)
}

pub fn file_sha256(path: &Path) -> Result<String, CliError> {
    Ok(sha256_hex(read(path)?))
}

/// Prints `value` as canonical JSON on standard output.
pub fn emit<T: Serialize>(value: &T) {
    print!("{}", String::from_utf8(canonical_json(value)).expect("JSON is UTF-8"));
}
