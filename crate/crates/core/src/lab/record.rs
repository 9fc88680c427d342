//! Run records: per-sample rows, named summary values and flags.
//!
//! CSV columns are `kind, r, s, b, b_prime, lambda, delta, sample_id, lhs,
//! rhs, ratio`. Sample rows satisfy `ratio = lhs / rhs`. Rows by experiment:
//!
//! - estimate probes: `kind` is the estimate name, `lambda` the dilation,
//!   `delta` the cutoff scale;
//! - `SOLVE_N<n>`: `sample_id` is the iteration `n`, `lhs = d_{n+1}`,
//!   `rhs = d_n`, so `ratio` is the contraction factor;
//! - `LIPSCHITZ_N<n>`: `lambda` carries the perturbation size `eps`,
//!   `delta` is `delta0`, `lhs` the solution gap and `rhs` the data gap.
//!
//! Summary values follow as rows with `kind = summary:<name>` and the value
//! in `ratio`. A run that stopped early ends with a `partial` row.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{LabError, Result};

pub const PARTIAL_MARKER: &str = "partial";
pub const SUMMARY_PREFIX: &str = "summary:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub kind: String,
    pub r: Option<f64>,
    pub s: Option<f64>,
    pub b: Option<f64>,
    pub b_prime: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub sample_id: Option<usize>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub ratio: Option<f64>,
}

impl Row {
    fn marker(kind: String, value: Option<f64>) -> Self {
        Self {
            kind,
            r: None,
            s: None,
            b: None,
            b_prime: None,
            lambda: None,
            delta: None,
            sample_id: None,
            lhs: None,
            rhs: None,
            ratio: value,
        }
    }
}

/// `Some(x)` for finite `x`.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub value: f64,
}

/// Why a run stopped before finishing, with the CLI exit code of the error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub message: String,
    pub exit_code: i32,
}

impl Failure {
    pub fn from_error(e: &LabError) -> Self {
        Self {
            message: e.to_string(),
            exit_code: e.exit_code(),
        }
    }
}

/// Append-only result of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    /// Seconds since the Unix epoch when the run started.
    pub timestamp: u64,
    pub config: ExperimentConfig,
    rows: Vec<Row>,
    summary: Vec<Summary>,
    flags: Vec<String>,
    failure: Option<Failure>,
}

impl RunRecord {
    pub fn new(config: ExperimentConfig, timestamp: u64) -> Self {
        Self {
            config_hash: config.hash(),
            timestamp,
            config,
            rows: Vec::new(),
            summary: Vec::new(),
            flags: Vec::new(),
            failure: None,
        }
    }

    pub fn push_row(&mut self, row: Row) {
        self.rows.push(row);
    }

    /// Records a summary value; non-finite values are skipped.
    pub fn push_summary(&mut self, name: impl Into<String>, value: f64) {
        if value.is_finite() {
            self.summary.push(Summary {
                name: name.into(),
                value,
            });
        }
    }

    pub fn push_flag(&mut self, flag: impl Into<String>) {
        self.flags.push(flag.into());
    }

    /// Marks the run as stopped early. Only the first failure is kept.
    pub fn fail(&mut self, e: &LabError) {
        if self.failure.is_none() {
            self.failure = Some(Failure::from_error(e));
        }
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn summary(&self) -> &[Summary] {
        &self.summary
    }

    pub fn summary_value(&self, name: &str) -> Option<f64> {
        self.summary.iter().find(|s| s.name == name).map(|s| s.value)
    }

    pub fn flags(&self) -> &[String] {
        &self.flags
    }

    pub fn failure(&self) -> Option<&Failure> {
        self.failure.as_ref()
    }

    pub fn is_partial(&self) -> bool {
        self.failure.is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() && self.summary.is_empty()
    }

    /// CLI exit code: the failure's code, else 2 when flagged, else 0.
    pub fn exit_code(&self) -> i32 {
        match (&self.failure, self.flags.is_empty()) {
            (Some(f), _) => f.exit_code,
            (None, false) => 2,
            (None, true) => 0,
        }
    }

    /// Sample rows, summary rows and the partial marker, in CSV order.
    pub fn csv_rows(&self) -> Vec<Row> {
        let mut out = self.rows.clone();
        out.extend(
            self.summary
                .iter()
                .map(|s| Row::marker(format!("{SUMMARY_PREFIX}{}", s.name), Some(s.value))),
        );
        if self.is_partial() {
            out.push(Row::marker(PARTIAL_MARKER.into(), None));
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        if self.is_empty() {
            return Err(LabError::EmptyRecord);
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.csv_rows() {
            w.serialize(row).map_err(csv_error)?;
        }
        let bytes = w.into_inner().map_err(|e| LabError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| LabError::Parameter(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::Parameter(format!("unreadable run record: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn csv_error(e: csv::Error) -> LabError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => LabError::Io(e),
        other => LabError::Parameter(format!("csv: {other:?}")),
    }
}

/// Rows of a CSV written by [`RunRecord::to_csv`].
pub fn read_csv(text: &str) -> Result<Vec<Row>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(csv_error))
        .collect()
}
