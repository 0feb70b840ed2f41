//! CSV time series and JSON summaries.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{to_config_text, ExperimentConfig};
use crate::constants::PhysicalConstants;
use crate::dynamics::Observables;

pub const CSV_HEADER: &str = "time,norm,mean_q,variance,E_kin,E_pot,E_qu";

/// CSV text: header plus one row per snapshot, shortest round-trip floats.
pub fn csv_text<'a>(rows: impl IntoIterator<Item = &'a Observables>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.time, r.norm, r.mean_q, r.variance, r.e_kin, r.e_pot, r.e_qu
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum CsvError {
    Header(String),
    Row { line: usize, message: String },
}

impl std::fmt::Display for CsvError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CsvError::Header(h) => write!(f, "unexpected header {h:?}"),
            CsvError::Row { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}

impl std::error::Error for CsvError {}

/// Reads back a time series written by [`csv_text`].
pub fn parse_csv(text: &str) -> Result<Vec<Observables>, CsvError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(CSV_HEADER) => {}
        other => return Err(CsvError::Header(other.unwrap_or("").to_string())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(CsvError::Row {
                line: line_no,
                message: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let mut v = [0.0; 7];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| CsvError::Row {
                line: line_no,
                message: format!("malformed number {f:?}"),
            })?;
        }
        rows.push(Observables {
            time: v[0],
            norm: v[1],
            mean_q: v[2],
            variance: v[3],
            e_kin: v[4],
            e_pot: v[5],
            e_qu: v[6],
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub package: String,
    pub version: String,
    pub constants: PhysicalConstants,
    pub seed: u64,
    /// SHA-256 of the canonical config text.
    pub config_sha256: String,
}

impl Provenance {
    pub fn for_config(cfg: &ExperimentConfig) -> Self {
        Provenance {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            constants: PhysicalConstants::CODATA_2018,
            seed: cfg.experiment.seed,
            config_sha256: config_hash(cfg),
        }
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(to_config_text(cfg).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRecord {
    pub config: ExperimentConfig,
    pub results: Map<String, Value>,
    pub provenance: Provenance,
}

impl SummaryRecord {
    pub fn new(cfg: &ExperimentConfig, results: Map<String, Value>) -> Self {
        SummaryRecord {
            config: cfg.clone(),
            results,
            provenance: Provenance::for_config(cfg),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary records serialise");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

#[derive(Debug)]
pub struct OutputError {
    pub path: PathBuf,
    pub source: io::Error,
}

impl std::fmt::Display for OutputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.source)
    }
}

impl std::error::Error for OutputError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Writes `contents` to `path` through a temporary sibling and a rename, so
/// readers never see a partial file.
pub fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    let wrap = |source| OutputError {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(wrap)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(wrap)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        wrap(e)
    })
}
