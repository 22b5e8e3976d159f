use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use sampler_core::{Design, Tolerances};

use crate::failure::{Failure, Outcome};
use crate::input::PopulationConfig;
use crate::json;

pub const SCHEMA_VERSION: u32 = 1;

/// Sequence of nested populations used by `rate` and by the H1–H3 checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceConfig {
    pub sizes: Vec<usize>,
    pub fraction: f64,
    pub pi: String,
    pub y: String,
}

/// Every setting that can change a result. Output paths and the worker count
/// are deliberately absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub design: Design,
    pub seed: u64,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population: Option<PopulationConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditions: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h4_ceiling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_window: Option<[f64; 2]>,
    pub monte_carlo: bool,
    pub trace: bool,
}

impl RunConfig {
    pub fn new(command: &'static str, design: Design, seed: u64, tolerances: Tolerances) -> Self {
        Self {
            command,
            design,
            seed,
            replicates: None,
            tolerances,
            population: None,
            sequence: None,
            conditions: None,
            h4_ceiling: None,
            slope_window: None,
            monte_carlo: false,
            trace: false,
        }
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> Outcome<String> {
        let bytes = json::to_compact(self).map_err(|e| Failure::internal(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(bytes)))
    }
}

#[derive(Debug, Serialize)]
pub struct Provenance<'a> {
    pub seed: u64,
    #[serde(rename = "R")]
    pub replicates: Option<usize>,
    pub design: Design,
    pub tolerances: Tolerances,
    pub config_hash: String,
    pub config: &'a RunConfig,
}

#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    command: &'static str,
    provenance: Provenance<'a>,
    result: &'a T,
}

pub fn render<T: Serialize>(config: &RunConfig, result: &T) -> Outcome<Vec<u8>> {
    let envelope = Envelope {
        schema_version: SCHEMA_VERSION,
        command: config.command,
        provenance: Provenance {
            seed: config.seed,
            replicates: config.replicates,
            design: config.design,
            tolerances: config.tolerances,
            config_hash: config.hash()?,
            config,
        },
        result,
    };
    json::to_pretty(&envelope).map_err(|e| Failure::internal(e.to_string()))
}

/// Writes to `path`, or to stdout when `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Outcome<()> {
    match path {
        Some(p) => std::fs::write(p, bytes)
            .map_err(|e| Failure::internal(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// `report.json` with suffix `trace.json` becomes `report.trace.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}
