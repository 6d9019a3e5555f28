//! Run manifests: what was run, on which inputs, with which settings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::formats::write_text;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// `<output>.manifest`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut p = output.as_os_str().to_owned();
    p.push(".manifest");
    PathBuf::from(p)
}

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub subcommand: String,
    pub seed: Option<u64>,
    pub config: Vec<(String, String)>,
    /// `(role, path, sha256)`.
    pub inputs: Vec<(String, PathBuf, String)>,
    pub outputs: Vec<(String, PathBuf)>,
    pub started: f64,
    pub finished: f64,
}

impl RunManifest {
    pub fn start(subcommand: &str) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            seed: None,
            config: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: unix_seconds(),
            finished: 0.0,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> CliResult<String> {
        let digest = file_sha256(path)?;
        self.inputs.push((role.to_string(), path.to_path_buf(), digest.clone()));
        Ok(digest)
    }

    pub fn output(&mut self, role: &str, path: &Path) {
        self.outputs.push((role.to_string(), path.to_path_buf()));
    }

    /// Adds every `key=value` line of `rendered` under `config.`.
    pub fn config_lines(&mut self, rendered: &str) {
        for line in rendered.lines() {
            if let Some((k, v)) = line.split_once('=') {
                self.config.push((k.to_string(), v.to_string()));
            }
        }
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "subcommand={}", self.subcommand);
        let _ = writeln!(out, "tool_version={}", env!("CARGO_PKG_VERSION"));
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "seed={seed}");
        }
        for (k, v) in &self.config {
            let _ = writeln!(out, "config.{k}={v}");
        }
        for (role, path, digest) in &self.inputs {
            let _ = writeln!(out, "input.{role}={}", path.display());
            let _ = writeln!(out, "input.{role}.sha256={digest}");
        }
        for (role, path) in &self.outputs {
            let _ = writeln!(out, "output.{role}={}", path.display());
        }
        let _ = writeln!(out, "started_unix={:.3}", self.started);
        let _ = writeln!(out, "finished_unix={:.3}", self.finished);
        out
    }

    /// Stamps the end time and writes the manifest next to `primary_output`.
    pub fn finish(mut self, primary_output: &Path) -> CliResult<PathBuf> {
        self.finished = unix_seconds();
        let path = manifest_path(primary_output);
        write_text(&path, &self.render())?;
        Ok(path)
    }
}
