//! Text file formats. Every float is written with Rust's shortest
//! round-trip representation, so save followed by load is bit-exact.

pub mod cuts;
pub mod events;
pub mod geometry;
pub mod keyvalue;
pub mod model;
pub mod report;

use std::fs;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_text(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn parse_f64(path: &Path, line: usize, field: &str, text: &str) -> CliResult<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| CliError::parse(path, line, format!("{field}: `{text}` is not a number")))
}

pub(crate) fn parse_u32(path: &Path, line: usize, field: &str, text: &str) -> CliResult<u32> {
    text.trim()
        .parse::<u32>()
        .map_err(|_| CliError::parse(path, line, format!("{field}: `{text}` is not a non-negative integer")))
}

pub(crate) fn parse_usize(path: &Path, line: usize, field: &str, text: &str) -> CliResult<usize> {
    text.trim()
        .parse::<usize>()
        .map_err(|_| CliError::parse(path, line, format!("{field}: `{text}` is not a non-negative integer")))
}
