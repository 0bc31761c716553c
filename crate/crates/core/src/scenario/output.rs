//! CSV and JSON artifacts of a run.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::AggregateRow;
use crate::error::{invalid, Error, Result};
use crate::metrics::{ErrorCount, OpCountReport, PsdCurve};

pub const BER_FILE: &str = "ber_curves.csv";
pub const PSD_FILE: &str = "psd_curves.csv";
pub const AUDIT_FILE: &str = "audit.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const JOURNAL_FILE: &str = "journal.jsonl";

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Three significant figures in scientific notation.
pub fn sig3(v: f64) -> String {
    format!("{v:.2e}")
}

/// One line of `ber_curves.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCsvRow {
    pub receiver: String,
    pub snr_db: f64,
    pub iteration: usize,
    pub ber: String,
    pub ci_low: String,
    pub ci_high: String,
    pub errors: u64,
    pub bits: u64,
    pub sinr_db: String,
}

impl BerCsvRow {
    pub fn from_aggregate(row: &AggregateRow) -> Self {
        let (lo, hi) = row.errors.ci95();
        BerCsvRow {
            receiver: row.receiver.clone(),
            snr_db: row.snr_db,
            iteration: row.iteration,
            ber: sig3(row.ber()),
            ci_low: sig3(lo),
            ci_high: sig3(hi),
            errors: row.errors.errors,
            bits: row.errors.bits,
            sinr_db: format!("{:.3}", row.sinr.finish().sinr_db),
        }
    }

    pub fn error_count(&self) -> ErrorCount {
        ErrorCount {
            errors: self.errors,
            bits: self.bits,
        }
    }
}

pub fn write_ber_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    if rows.is_empty() {
        return invalid("no BER records to write");
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(BerCsvRow::from_aggregate(r)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_ber_csv(path: &Path) -> Result<Vec<BerCsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err(path))
}

/// `psd_curves.csv`: curves restricted to `|offset| ≤ span`.
pub fn write_psd_csv(path: &Path, curves: &[(String, PsdCurve)], span: f64) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["window", "offset_scs", "power_db", "marker"]).map_err(csv_err(path))?;
    for (label, c) in curves {
        for ((o, p), m) in c.offsets.iter().zip(&c.power_db).zip(&c.marker) {
            if o.abs() <= span {
                w.write_record([
                    label.as_str(),
                    &format!("{o:.4}"),
                    &format!("{p:.3}"),
                    if *m { "1" } else { "0" },
                ])
                .map_err(csv_err(path))?;
            }
        }
    }
    w.flush().map_err(io_err(path))
}

pub fn write_audit_csv(path: &Path, report: &OpCountReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["step", "formula_mults", "formula_adds", "measured_mults", "measured_adds"])
        .map_err(csv_err(path))?;
    for r in &report.rows {
        let (mm, ma) = match r.measured {
            Some((m, a)) => (m.to_string(), a.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            r.step.as_str(),
            &r.formula_mults.to_string(),
            &r.formula_adds.to_string(),
            &mm,
            &ma,
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}
