//! Run directories, manifests, digests and the flat configuration file.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::sampler::{SampleBatch, RNG_ALGORITHM};

pub const NORMALIZATION_NOTE: &str = "normalization never computed; estimators self-normalized";

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config file {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One sampling run recorded in a manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    pub label: String,
    pub seed: u64,
    pub samples: usize,
    pub chains: usize,
    pub acceptance_rate: f64,
    pub chain_acceptance: Vec<f64>,
    pub ess: BTreeMap<String, f64>,
}

impl SampleRecord {
    pub fn new(label: impl Into<String>, seed: u64, batch: &SampleBatch) -> Self {
        Self {
            label: label.into(),
            seed,
            samples: batch.len(),
            chains: batch.chains.len(),
            acceptance_rate: batch.acceptance_rate,
            chain_acceptance: batch.chains.iter().map(|c| c.acceptance_rate).collect(),
            ess: batch.ess.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub params: serde_json::Value,
    pub rng: String,
    pub seed: Option<u64>,
    pub threads: usize,
    pub sampling: Vec<SampleRecord>,
    pub normalization: String,
    pub started_utc: String,
    pub wall_time_seconds: f64,
    /// File name → SHA-256 hex digest.
    pub outputs: BTreeMap<String, String>,
}

/// Output directory of one invocation plus the manifest being assembled.
pub struct RunContext {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    start: Instant,
}

impl RunContext {
    /// Creates `<base>/<subcommand>/<UTC timestamp>/`, suffixing `-1`, `-2`, …
    /// if that directory already exists.
    pub fn create(
        base: &Path,
        subcommand: &str,
        argv: Vec<String>,
        params: serde_json::Value,
        seed: Option<u64>,
    ) -> Result<Self, IoError> {
        let now = chrono::Utc::now();
        let stamp = now.format("%Y%m%dT%H%M%S%.3fZ").to_string();
        let parent = base.join(subcommand);
        fs::create_dir_all(&parent).map_err(io_err(&parent))?;
        let mut dir = parent.join(&stamp);
        let mut i = 1;
        loop {
            match fs::create_dir(&dir) {
                Ok(()) => break,
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    dir = parent.join(format!("{stamp}-{i}"));
                    i += 1;
                }
                Err(e) => return Err(io_err(&dir)(e)),
            }
        }
        Ok(Self {
            dir,
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                subcommand: subcommand.into(),
                argv,
                params,
                rng: RNG_ALGORITHM.into(),
                seed,
                threads: rayon::current_num_threads(),
                sampling: Vec::new(),
                normalization: NORMALIZATION_NOTE.into(),
                started_utc: now.to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
                wall_time_seconds: 0.0,
                outputs: BTreeMap::new(),
            },
            start: Instant::now(),
        })
    }

    pub fn record_sampling(&mut self, record: SampleRecord) {
        self.manifest.sampling.push(record);
    }

    /// Writes a data file through `f` and records its digest.
    pub fn write_file<F>(&mut self, name: &str, f: F) -> Result<PathBuf, IoError>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(io_err(&path))?;
        w.flush().map_err(io_err(&path))?;
        drop(w);
        let digest = sha256_file(&path)?;
        self.manifest.outputs.insert(name.to_string(), digest);
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, IoError> {
        let text = serde_json::to_string_pretty(value)?;
        self.write_file(name, |w| writeln!(w, "{text}"))
    }

    /// Stamps the wall time and writes `manifest.json`.
    pub fn finish(mut self) -> Result<PathBuf, IoError> {
        self.manifest.wall_time_seconds = self.start.elapsed().as_secs_f64();
        let path = self.dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&path, text + "\n").map_err(io_err(&path))?;
        Ok(self.dir)
    }
}

pub fn sha256_file(path: &Path) -> Result<String, IoError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Reads a flat TOML table (`key = value`, no sections) and renders it as
/// command-line flags. Underscores in keys become dashes; `true` booleans
/// become bare switches and `false` ones are dropped.
pub fn config_to_args(path: &Path) -> Result<Vec<String>, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| IoError::Config {
        path: path.to_path_buf(),
        message: e.message().to_string(),
    })?;
    let mut out = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        let rendered = match value {
            toml::Value::String(s) => s,
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Boolean(true) => {
                out.push(flag);
                continue;
            }
            toml::Value::Boolean(false) => continue,
            other => {
                return Err(IoError::Config {
                    path: path.to_path_buf(),
                    message: format!("key `{key}` must be a scalar, found {}", other.type_str()),
                })
            }
        };
        out.push(flag);
        out.push(rendered);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_renders_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "n = 5\nlambda = \"1/2\"\nfit_min = 0.5\nwrite_samples = true\nquiet = false\n").unwrap();
        let args = config_to_args(&path).unwrap();
        assert_eq!(args, ["--fit-min", "0.5", "--lambda", "1/2", "--n", "5", "--write-samples"]);
    }

    #[test]
    fn config_rejects_sections() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        fs::write(&path, "[grid]\npoints = 3\n").unwrap();
        assert!(matches!(config_to_args(&path), Err(IoError::Config { .. })));
    }

    #[test]
    fn run_directory_and_digests() {
        let dir = tempfile::tempdir().unwrap();
        let mut ctx = RunContext::create(dir.path(), "energy", vec![], serde_json::json!({}), None).unwrap();
        ctx.write_file("a.csv", |w| writeln!(w, "x\n1")).unwrap();
        let first = ctx.dir.clone();
        let out = ctx.finish().unwrap();
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
        assert_eq!(
            m["outputs"]["a.csv"],
            format!("{:x}", Sha256::digest(b"x\n1\n"))
        );
        assert_eq!(m["normalization"], NORMALIZATION_NOTE);
        let again = RunContext::create(dir.path(), "energy", vec![], serde_json::json!({}), None).unwrap();
        assert_ne!(again.dir, first);
    }
}
