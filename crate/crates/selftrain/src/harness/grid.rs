//! The result grid: one record per grid cell, stored as JSONL so partial
//! runs can resume, plus seed-aggregation helpers for the renderers.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hash::{hash_hex, StableHasher};

/// Grid coordinates of one cell. `k == 0` encodes the naive selection rule.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub strategy: String,
    pub d_size: usize,
    pub k: usize,
    pub u_size: usize,
    pub seed: u64,
}

impl CellKey {
    /// Stable hash of the cell coordinates plus the settings fingerprint.
    /// Depends only on this cell, so adding or removing other cells from
    /// the config never changes it.
    pub fn cell_hash(&self, settings_fingerprint: u64) -> u64 {
        let mut h = StableHasher::new();
        h.update_str(&self.strategy);
        h.update_u64(self.d_size as u64);
        h.update_u64(self.k as u64);
        h.update_u64(self.u_size as u64);
        h.update_u64(self.seed);
        h.update_u64(settings_fingerprint);
        h.finish()
    }
}

/// Outcome of one cell. Accuracies are on the fixed test set; `delta` is
/// `student_acc - teacher_acc`. Failed cells carry an error string and NaN
/// metrics are never written: metrics are `None` instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    #[serde(flatten)]
    pub key: CellKey,
    pub cell_hash: String,
    pub d_prime_size: Option<usize>,
    pub teacher_acc: Option<f64>,
    pub student_acc: Option<f64>,
    pub delta: Option<f64>,
    /// Test accuracy of the student after each iteration.
    #[serde(default)]
    pub iteration_accs: Vec<f64>,
    #[serde(default)]
    pub error: Option<String>,
}

impl CellRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// In-memory view of a grid file, canonically ordered by cell key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultGrid {
    records: Vec<CellRecord>,
}

impl ResultGrid {
    pub fn new(mut records: Vec<CellRecord>) -> Self {
        records.sort_by(|a, b| a.key.cmp(&b.key));
        Self { records }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut records = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                records.push(serde_json::from_str(&line)?);
            }
        }
        Ok(Self::new(records))
    }

    pub fn records(&self) -> &[CellRecord] {
        &self.records
    }

    pub fn ok_records(&self) -> impl Iterator<Item = &CellRecord> {
        self.records.iter().filter(|r| r.is_ok())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn completed_hashes(&self) -> HashSet<String> {
        self.records.iter().map(|r| r.cell_hash.clone()).collect()
    }

    pub fn get(&self, key: &CellKey) -> Option<&CellRecord> {
        self.records.iter().find(|r| &r.key == key)
    }

    /// Writes the grid in canonical order, replacing the file.
    pub fn write_canonical(&self, path: &Path) -> Result<()> {
        let mut buf = String::new();
        for record in &self.records {
            buf.push_str(&serde_json::to_string(record)?);
            buf.push('\n');
        }
        std::fs::write(path, buf)?;
        Ok(())
    }

    /// Distinct values present on one axis, ascending.
    pub fn axis_values(&self, axis: Axis) -> Vec<u64> {
        let mut values: Vec<u64> = self
            .records
            .iter()
            .flat_map(|r| match axis {
                Axis::DSize => vec![r.key.d_size as u64],
                Axis::K => vec![r.key.k as u64],
                Axis::USize => vec![r.key.u_size as u64],
                Axis::Iteration => (1..=r.iteration_accs.len() as u64).collect(),
            })
            .collect();
        values.sort_unstable();
        values.dedup();
        values
    }

    /// Mean and population standard deviation of student accuracy over the
    /// ok cells in each (strategy, d, k, u) group, keyed canonically.
    pub fn aggregate(&self) -> BTreeMap<AggregateKey, Aggregate> {
        let mut groups: BTreeMap<AggregateKey, Vec<(f64, f64)>> = BTreeMap::new();
        for r in self.ok_records() {
            let (Some(student), Some(teacher)) = (r.student_acc, r.teacher_acc) else {
                continue;
            };
            groups
                .entry(AggregateKey {
                    strategy: r.key.strategy.clone(),
                    d_size: r.key.d_size,
                    k: r.key.k,
                    u_size: r.key.u_size,
                })
                .or_default()
                .push((student, teacher));
        }
        groups
            .into_iter()
            .map(|(key, accs)| {
                let students: Vec<f64> = accs.iter().map(|(s, _)| *s).collect();
                let teachers: Vec<f64> = accs.iter().map(|(_, t)| *t).collect();
                (
                    key,
                    Aggregate {
                        n: students.len(),
                        student_mean: mean(&students),
                        student_std: std_dev(&students),
                        teacher_mean: mean(&teachers),
                    },
                )
            })
            .collect()
    }

    /// Mean teacher accuracy over all ok cells of a row (one |D| value):
    /// the T(D) baseline the table's deltas are relative to.
    pub fn row_baseline(&self, d_size: usize) -> Option<f64> {
        let teachers: Vec<f64> = self
            .ok_records()
            .filter(|r| r.key.d_size == d_size)
            .filter_map(|r| r.teacher_acc)
            .collect();
        if teachers.is_empty() {
            None
        } else {
            Some(mean(&teachers))
        }
    }
}

/// Axes a series can be rendered over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    DSize,
    K,
    USize,
    Iteration,
}

impl Axis {
    pub fn parse(name: &str) -> Option<Axis> {
        match name {
            "d_size" => Some(Axis::DSize),
            "k" => Some(Axis::K),
            "u_size" => Some(Axis::USize),
            "iteration" => Some(Axis::Iteration),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Axis::DSize => "d_size",
            Axis::K => "k",
            Axis::USize => "u_size",
            Axis::Iteration => "iteration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AggregateKey {
    pub strategy: String,
    pub d_size: usize,
    pub k: usize,
    pub u_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub n: usize,
    pub student_mean: f64,
    pub student_std: f64,
    pub teacher_mean: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation; 0 for a single value.
pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Append-only grid writer shared across worker threads; each record is a
/// single flushed line so an interrupted run leaves a readable prefix.
pub struct GridWriter {
    path: PathBuf,
    file: Mutex<File>,
}

impl GridWriter {
    pub fn append_to(path: &Path) -> Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, record: &CellRecord) -> Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        let mut file = self.file.lock().expect("grid writer poisoned");
        file.write_all(line.as_bytes())?;
        file.flush()?;
        Ok(())
    }
}

pub fn record_for(
    key: CellKey,
    settings_fingerprint: u64,
    d_prime_size: Option<usize>,
    teacher_acc: f64,
    student_acc: f64,
    iteration_accs: Vec<f64>,
) -> CellRecord {
    let hash = key.cell_hash(settings_fingerprint);
    CellRecord {
        key,
        cell_hash: hash_hex(hash),
        d_prime_size,
        teacher_acc: Some(teacher_acc),
        student_acc: Some(student_acc),
        delta: Some(student_acc - teacher_acc),
        iteration_accs,
        error: None,
    }
}

pub fn failed_record(key: CellKey, settings_fingerprint: u64, error: String) -> CellRecord {
    let hash = key.cell_hash(settings_fingerprint);
    CellRecord {
        key,
        cell_hash: hash_hex(hash),
        d_prime_size: None,
        teacher_acc: None,
        student_acc: None,
        delta: None,
        iteration_accs: Vec::new(),
        error: Some(error),
    }
}
