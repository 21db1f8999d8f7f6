//! CSV and JSON emission of result rows.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use super::sweep::{SweepRow, CSV_HEADER};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::arg(format!("format must be csv or json, got '{s}'"))),
        }
    }
}

fn io_err(path: &Path, e: impl ToString) -> Error {
    Error::Data {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

/// Rows as CSV bytes with the fixed header.
pub fn rows_to_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::arg(e.to_string());
    w.write_record(CSV_HEADER).map_err(fail)?;
    for r in rows {
        w.write_record(r.record()).map_err(fail)?;
    }
    w.into_inner().map_err(|e| Error::arg(e.to_string()))
}

/// JSON value of a row; non-finite numbers become the strings `inf`,
/// `-inf` and `NaN`.
pub fn row_to_json(row: &SweepRow) -> serde_json::Value {
    let num = |x: f64| {
        if x.is_finite() {
            json!(x)
        } else {
            json!(x.to_string())
        }
    };
    json!({
        "algorithm": row.algorithm,
        "window": row.window.name(),
        "lambda_requested": num(row.lambda_requested),
        "lambda_realized": num(row.lambda_realized),
        "D": row.redundancy,
        "a": row.a,
        "M": row.m,
        "signal_id": row.signal_id,
        "snr_ms_db": num(row.snr_ms_db),
        "projection_error": num(row.projection_error),
        "wall_time_s": row.wall_time_s,
        "iterations": row.iterations,
        "seed": row.seed,
        "odg": row.odg,
        "error": row.error,
    })
}

/// Writes `<stem>.csv` or `<stem>.json` plus a `<stem>.spec.json` sidecar
/// holding the run parameters. Returns the result path.
pub fn write_results<S: Serialize>(
    dir: &Path,
    stem: &str,
    rows: &[SweepRow],
    format: OutputFormat,
    spec: &S,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let spec_value = serde_json::to_value(spec).map_err(|e| Error::arg(e.to_string()))?;
    let meta = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "spec": spec_value,
    });
    let (path, bytes) = match format {
        OutputFormat::Csv => (dir.join(format!("{stem}.csv")), rows_to_csv(rows)?),
        OutputFormat::Json => {
            let v = json!({
                "rows": rows.iter().map(row_to_json).collect::<Vec<_>>(),
            });
            let mut b = serde_json::to_vec_pretty(&v).map_err(|e| Error::arg(e.to_string()))?;
            b.push(b'\n');
            (dir.join(format!("{stem}.json")), b)
        }
    };
    write_file(&path, &bytes)?;
    let mut sidecar = serde_json::to_vec_pretty(&meta).map_err(|e| Error::arg(e.to_string()))?;
    sidecar.push(b'\n');
    write_file(&dir.join(format!("{stem}.spec.json")), &sidecar)?;
    Ok(path)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(bytes).map_err(|e| io_err(path, e))
}
