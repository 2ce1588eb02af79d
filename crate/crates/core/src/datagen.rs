//! Synthetic per-client sensor datasets: two Gaussian clusters in 18-dim
//! feature space whose centroids sit `centroid_separation` apart along a
//! seed-chosen random unit direction, centered on the origin. Labels are
//! cluster membership. `covariance_scale` is the per-coordinate standard
//! deviation, so separation ≥ 6·scale keeps the clusters essentially
//! disjoint. Generation is fully determined by the seed.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Record, FEATURE_COUNT};

/// Column names for the 18 feature channels, used as CSV header metadata.
pub const SENSOR_NAMES: [&str; FEATURE_COUNT] = [
    "Evaporator inlet water temperature",
    "Evaporator outlet water temperature",
    "Condenser inlet water temperature",
    "Condenser outlet water temperature",
    "Evaporator cooling capacity",
    "Compressor inlet air temperature",
    "Compressor outlet air temperature",
    "Evaporator inlet air pressure",
    "Condenser outlet air pressure",
    "Exhaust air overheat temperature",
    "Main circuit's coolant level",
    "Opening size of the main coolant pipe valve",
    "Compressor's load",
    "Compressor's current",
    "Compressor's rotational speed",
    "Compressor's voltage",
    "Compressor's power",
    "Compressor's inverter's temperature",
];

/// Errors from dataset generation and CSV I/O.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{what} must be {requirement}, got {got}")]
    InvalidSpec { what: &'static str, requirement: &'static str, got: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected {expected} columns, got {got}")]
    ColumnCount { line: usize, expected: usize, got: usize },
    #[error("line {line}, column {column}: '{cell}' is not a finite number")]
    InvalidNumber { line: usize, column: usize, cell: String },
    #[error("line {line}: label must be 0 or 1, got '{got}'")]
    InvalidLabel { line: usize, got: String },
    #[error("{path}: no data rows")]
    NoRecords { path: PathBuf },
}

/// Recipe for one client's synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataGenSpec {
    pub client_id: String,
    #[serde(default = "default_set_size")]
    pub n_train: usize,
    #[serde(default = "default_set_size")]
    pub n_test: usize,
    #[serde(default = "default_positive_fraction")]
    pub positive_fraction: f64,
    #[serde(default = "default_separation")]
    pub centroid_separation: f64,
    #[serde(default = "default_covariance_scale")]
    pub covariance_scale: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_set_size() -> usize {
    1000
}

fn default_positive_fraction() -> f64 {
    0.5
}

fn default_separation() -> f64 {
    1.0
}

fn default_covariance_scale() -> f64 {
    0.15
}

/// Labeled train/test records held by one client.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientDataset {
    pub client_id: String,
    pub train: Vec<Record>,
    pub test: Vec<Record>,
}

impl ClientDataset {
    /// Writes `train.csv` and `test.csv` under `dir`, creating it if needed.
    pub fn save_dir(&self, dir: &Path) -> Result<(), DataError> {
        fs::create_dir_all(dir).map_err(|source| DataError::Io { path: dir.into(), source })?;
        save_records(&dir.join("train.csv"), &self.train)?;
        save_records(&dir.join("test.csv"), &self.test)?;
        Ok(())
    }

    /// Loads `train.csv` and `test.csv` from `dir`.
    pub fn load_dir(dir: &Path, client_id: &str) -> Result<ClientDataset, DataError> {
        Ok(ClientDataset {
            client_id: client_id.to_string(),
            train: load_records(&dir.join("train.csv"))?,
            test: load_records(&dir.join("test.csv"))?,
        })
    }
}

/// The four-client reference scenario: equal sizes and class balance, with
/// client 3's classes four times further apart than the others'.
pub fn reference_scenario() -> Vec<DataGenSpec> {
    let separations = [1.0, 1.0, 4.0, 1.0];
    separations
        .iter()
        .enumerate()
        .map(|(i, &sep)| DataGenSpec {
            client_id: format!("client-{}", i + 1),
            n_train: 1000,
            n_test: 1000,
            positive_fraction: 0.5,
            centroid_separation: sep,
            covariance_scale: 0.15,
            seed: 1001 + i as u64,
        })
        .collect()
}

/// Generates one client dataset from its spec, deterministically per seed.
pub fn synthesize(spec: &DataGenSpec) -> Result<ClientDataset, DataError> {
    validate(spec)?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);

    // Random unit direction for the centroid axis; both class means sit on
    // it at ±separation/2, so the optimal boundary passes through the origin.
    let direction = loop {
        let mut d = [0.0f64; FEATURE_COUNT];
        for v in &mut d {
            *v = rng.sample(StandardNormal);
        }
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut d {
                *v /= norm;
            }
            break d;
        }
    };

    let half = spec.centroid_separation / 2.0;
    let sigma = spec.covariance_scale;
    let mut make_set = |n: usize| -> Vec<Record> {
        let n_pos = ((n as f64 * spec.positive_fraction).round() as usize).clamp(1, n - 1);
        let mut records = Vec::with_capacity(n);
        for i in 0..n {
            let (sign, label) = if i < n_pos { (1.0, 1u8) } else { (-1.0, 0u8) };
            let mut x = [0.0f64; FEATURE_COUNT];
            for (v, u) in x.iter_mut().zip(&direction) {
                let noise: f64 = rng.sample(StandardNormal);
                *v = sign * half * u + sigma * noise;
            }
            records.push(Record::new(x, label).expect("generated features are finite"));
        }
        records.shuffle(&mut rng);
        records
    };

    let train = make_set(spec.n_train);
    let test = make_set(spec.n_test);
    Ok(ClientDataset { client_id: spec.client_id.clone(), train, test })
}

fn validate(spec: &DataGenSpec) -> Result<(), DataError> {
    let err = |what, requirement, got: String| {
        Err(DataError::InvalidSpec { what, requirement, got })
    };
    if spec.n_train < 2 {
        return err("n_train", "at least 2 (one record per class)", spec.n_train.to_string());
    }
    if spec.n_test < 2 {
        return err("n_test", "at least 2 (one record per class)", spec.n_test.to_string());
    }
    if !(spec.positive_fraction > 0.0 && spec.positive_fraction < 1.0) {
        return err(
            "positive_fraction",
            "strictly between 0 and 1",
            spec.positive_fraction.to_string(),
        );
    }
    if !(spec.covariance_scale.is_finite() && spec.covariance_scale > 0.0) {
        return err("covariance_scale", "finite and positive", spec.covariance_scale.to_string());
    }
    if !(spec.centroid_separation.is_finite() && spec.centroid_separation >= 0.0) {
        return err(
            "centroid_separation",
            "finite and non-negative",
            spec.centroid_separation.to_string(),
        );
    }
    Ok(())
}

fn header() -> String {
    let mut h = SENSOR_NAMES.join(",");
    h.push_str(",label");
    h
}

/// Writes records as CSV: sensor-name header plus one row per record. Data
/// rows are exactly the canonical byte form hashed when anchoring, so a
/// saved file can be audited against an anchored root byte-for-byte.
pub fn save_records(path: &Path, records: &[Record]) -> Result<(), DataError> {
    let io_err = |source| DataError::Io { path: path.into(), source };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    let mut out = String::with_capacity(records.len() * 64);
    out.push_str(&header());
    out.push('\n');
    for record in records {
        out.push_str(&crate::anchoring::canonicalize(record));
        out.push('\n');
    }
    let mut file = fs::File::create(path).map_err(io_err)?;
    file.write_all(out.as_bytes()).map_err(io_err)?;
    Ok(())
}

/// Reads a record CSV. The sensor-name header is optional; every data row
/// must have exactly 19 columns of finite numbers plus a 0/1 label. Parse
/// errors name the offending 1-based line.
pub fn load_records(path: &Path) -> Result<Vec<Record>, DataError> {
    let text =
        fs::read_to_string(path).map_err(|source| DataError::Io { path: path.into(), source })?;
    let expected_header = header();
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if idx == 0 && line == expected_header {
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != FEATURE_COUNT + 1 {
            return Err(DataError::ColumnCount {
                line: line_no,
                expected: FEATURE_COUNT + 1,
                got: cells.len(),
            });
        }
        let mut features = [0.0f64; FEATURE_COUNT];
        for (col, (slot, cell)) in features.iter_mut().zip(&cells).enumerate() {
            let value: f64 = cell.parse().map_err(|_| DataError::InvalidNumber {
                line: line_no,
                column: col + 1,
                cell: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(DataError::InvalidNumber {
                    line: line_no,
                    column: col + 1,
                    cell: cell.to_string(),
                });
            }
            *slot = value;
        }
        let label_cell = cells[FEATURE_COUNT];
        let label: u8 = label_cell
            .parse()
            .ok()
            .filter(|l| *l <= 1)
            .ok_or_else(|| DataError::InvalidLabel {
                line: line_no,
                got: label_cell.to_string(),
            })?;
        records.push(Record::new(features, label).expect("cells validated finite"));
    }
    if records.is_empty() {
        return Err(DataError::NoRecords { path: path.into() });
    }
    Ok(records)
}
