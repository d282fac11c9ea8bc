//! CSV ingestion: UTF-8, header `x,y`, `.` as decimal point.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use afc_core::Observation;
use anyhow::{anyhow, bail, Context, Result};

/// Parsed observations plus the number of rows skipped for missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub observations: Vec<Observation>,
    pub dropped: usize,
}

fn is_missing(field: &str) -> bool {
    matches!(
        field.trim().to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "null"
    )
}

pub fn read_csv_path(path: &Path, drop_bad_rows: bool) -> Result<Dataset> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_csv(file, drop_bad_rows).with_context(|| format!("reading {}", path.display()))
}

pub fn read_csv<R: Read>(input: R, drop_bad_rows: bool) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .context("line 1: cannot read header")?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        bail!("empty input: expected a header row `x,y`");
    }
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
        bail!(
            "line 1: header must be `x,y`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        );
    }

    let mut observations = Vec::new();
    let mut dropped = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            anyhow!("line {line}: malformed row: {e}")
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            bail!("line {line}: expected 2 fields, found {}", record.len());
        }
        let (xs, ys) = (&record[0], &record[1]);
        if is_missing(xs) || is_missing(ys) {
            if drop_bad_rows {
                dropped += 1;
                continue;
            }
            bail!("line {line}: missing value (use --drop-bad-rows to skip such rows)");
        }
        let x: f64 = xs
            .parse()
            .map_err(|_| anyhow!("line {line}: cannot parse x value `{xs}`"))?;
        let y: f64 = ys
            .parse()
            .map_err(|_| anyhow!("line {line}: cannot parse y value `{ys}`"))?;
        if !x.is_finite() || x <= 0.0 {
            bail!("line {line}: x must be positive, found {x}");
        }
        if !y.is_finite() {
            bail!("line {line}: y must be finite, found {y}");
        }
        observations.push(Observation { x, y });
    }
    if observations.is_empty() {
        bail!("no data rows");
    }
    Ok(Dataset {
        observations,
        dropped,
    })
}
