//! Run records written next to every output, and the per-iteration metrics
//! log.

use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solvers::{EvolveReport, IterationRecord};

/// Every parameter a run used, resolved. Serialised as flat `key = value`
/// lines.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub inputs: Vec<String>,
    pub output: String,
    pub scheme: String,
    pub tau: f64,
    pub max_steps: usize,
    pub steady_tol: f64,
    pub linear_tol: f64,
    pub split_order: String,
    pub offset: f64,
    pub band: usize,
    pub rescale: String,
    pub output_depth: u32,
    pub threads: usize,
    pub metrics: String,
    pub seed: u64,
    pub channels: usize,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("manifest fields are plain values")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

/// `<output>.manifest.toml`, next to the output file.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.toml");
    PathBuf::from(name)
}

#[derive(Debug, Serialize)]
struct MetricsRow {
    channel: usize,
    iteration: usize,
    total_mass: f64,
    min_value: f64,
    update_norm: f64,
    wall_time: f64,
}

impl MetricsRow {
    fn new(channel: usize, r: &IterationRecord) -> Self {
        Self {
            channel,
            iteration: r.iteration,
            total_mass: r.total_mass,
            min_value: r.min_value,
            update_norm: r.update_norm,
            wall_time: r.wall_time,
        }
    }
}

/// Appends one CSV row per iteration and channel. The header is written only
/// when the file is new or empty.
pub fn append_metrics(path: impl AsRef<Path>, reports: &[EvolveReport]) -> Result<()> {
    let path = path.as_ref();
    let io = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io)?;
    let fresh = file.metadata().map_err(io)?.len() == 0;
    let mut w = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    for (c, rep) in reports.iter().enumerate() {
        for r in &rep.records {
            w.serialize(MetricsRow::new(c, r))
                .map_err(|e| io(std::io::Error::other(e)))?;
        }
    }
    w.flush().map_err(io)
}
