//! Long-format result tables and run metadata.

use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::stats::Estimate;

/// One estimate per row. Rows with no uncertainty leave `stderr` and `n` empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// Which sub-run the row belongs to, e.g. `line beta=1.5`.
    pub series: String,
    pub quantity: String,
    /// Name of the varied parameter (`A`, `n`, `distance`, ...).
    pub param: String,
    pub param_value: Option<f64>,
    pub value: f64,
    pub stderr: Option<f64>,
    pub n: Option<usize>,
}

impl Row {
    pub fn scalar(series: &str, quantity: &str, value: f64) -> Self {
        Row {
            series: series.to_owned(),
            quantity: quantity.to_owned(),
            param: String::new(),
            param_value: None,
            value,
            stderr: None,
            n: None,
        }
    }

    pub fn at(series: &str, quantity: &str, param: &str, param_value: f64, value: f64) -> Self {
        Row {
            param: param.to_owned(),
            param_value: Some(param_value),
            ..Row::scalar(series, quantity, value)
        }
    }

    pub fn estimate(mut self, e: &Estimate) -> Self {
        self.value = e.value;
        self.stderr = Some(e.stderr);
        self.n = Some(e.n_samples);
        self
    }
}

pub const CSV_COLUMNS: [&str; 7] = ["series", "quantity", "param", "param_value", "value", "stderr", "n"];

/// CSV text with a header row; identical rows give identical bytes.
pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn rows_from_csv(text: &str) -> std::result::Result<Vec<Row>, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_owned)
        .collect();
    if header != CSV_COLUMNS {
        return Err(format!("unexpected header {header:?}"));
    }
    r.deserialize().map(|row| row.map_err(|e| e.to_string())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub generator_id: String,
    /// SHA-256 of the committed RNG reference fixture, if it could be read.
    pub fixture_sha256: Option<String>,
    pub version: String,
    pub workers: usize,
}

/// Metadata written next to the CSV table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: ExperimentConfig,
    pub provenance: Provenance,
    pub wall_time_s: f64,
    pub csv_file: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub metadata: RunMetadata,
    pub rows: Vec<Row>,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

impl RunRecord {
    pub fn config(&self) -> &ExperimentConfig {
        &self.metadata.config
    }

    pub fn csv(&self) -> String {
        rows_to_csv(&self.rows)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&mut self, dir: &FsPath, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.csv_path = dir.join(format!("{stem}.csv"));
        self.json_path = dir.join(format!("{stem}.json"));
        self.metadata.csv_file = format!("{stem}.csv");
        std::fs::write(&self.csv_path, self.csv()).map_err(|e| Error::io(&self.csv_path, e))?;
        let json = serde_json::to_string_pretty(&self.metadata).expect("metadata serializes");
        std::fs::write(&self.json_path, json + "\n").map_err(|e| Error::io(&self.json_path, e))?;
        Ok(())
    }

    /// Reads a record back from its JSON sidecar and the CSV it names.
    pub fn load(json_path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(json_path).map_err(|e| Error::io(json_path, e))?;
        let metadata: RunMetadata = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: json_path.to_path_buf(),
            message: e.to_string(),
        })?;
        let csv_path = json_path.with_file_name(&metadata.csv_file);
        let csv = std::fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
        let rows = rows_from_csv(&csv).map_err(|message| Error::Format {
            path: csv_path.clone(),
            message,
        })?;
        Ok(RunRecord {
            metadata,
            rows,
            csv_path,
            json_path: json_path.to_path_buf(),
        })
    }
}
