//! On-disk formats.
//!
//! Sample CSV: two `#` comment lines (`# config_digest=<hex>`, `# seed=<u64>`),
//! a header `x0,x1,…`, then one row per particle. Floats use the shortest
//! representation that round-trips, so files are byte-stable for a given run.
//! Every CSV has a JSON sidecar with the resolved configuration and timings.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::batch::{SampleBatch, Samples};
use crate::error::{Result, SfsError};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| SfsError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| SfsError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| SfsError::Serialize(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn batch_csv_string(batch: &SampleBatch) -> Result<String> {
    let mut out = Vec::new();
    writeln!(out, "# config_digest={}", batch.config_digest).expect("write to vec");
    writeln!(out, "# seed={}", batch.seed).expect("write to vec");
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let header: Vec<String> = (0..batch.samples.dim()).map(|c| format!("x{c}")).collect();
        w.write_record(&header).map_err(|e| SfsError::Serialize(e.to_string()))?;
        for row in batch.samples.rows() {
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(|e| SfsError::Serialize(e.to_string()))?;
        }
        w.flush().map_err(|e| SfsError::Serialize(e.to_string()))?;
    }
    String::from_utf8(out).map_err(|e| SfsError::Serialize(e.to_string()))
}

pub fn write_batch_csv(path: &Path, batch: &SampleBatch) -> Result<()> {
    write_text(path, &batch_csv_string(batch)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedBatch {
    pub samples: Samples,
    pub config_digest: Option<String>,
    pub seed: Option<u64>,
}

pub fn read_batch_csv(path: &Path) -> Result<LoadedBatch> {
    let text = fs::read_to_string(path).map_err(|e| SfsError::io(path, e))?;
    let mut digest = None;
    let mut seed = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim();
        if let Some(v) = body.strip_prefix("config_digest=") {
            digest = Some(v.to_string());
        } else if let Some(v) = body.strip_prefix("seed=") {
            seed = v.parse().ok();
        }
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let dim = reader.headers().map_err(|e| SfsError::Serialize(e.to_string()))?.len();
    let mut data = Vec::new();
    let mut n = 0;
    for record in reader.records() {
        let record = record.map_err(|e| SfsError::Serialize(e.to_string()))?;
        for field in record.iter() {
            data.push(field.parse::<f64>().map_err(|e| SfsError::Serialize(format!("{field}: {e}")))?);
        }
        n += 1;
    }
    Ok(LoadedBatch { samples: Samples::new(n, dim, data)?, config_digest: digest, seed })
}
