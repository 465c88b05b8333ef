//! CSV ingestion. The first line is a header; every other cell must parse
//! as a finite `f64`. No intercept column is added.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use puffer_core::{Matrix, Vector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Response column given by header name or by zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl ColumnRef {
    /// A header name wins over a numeric reading, so a column literally
    /// named "0" is still addressable.
    fn resolve(&self, headers: &[String]) -> Option<usize> {
        match self {
            ColumnRef::Name(name) => headers
                .iter()
                .position(|h| h == name)
                .or_else(|| name.parse::<usize>().ok().filter(|&i| i < headers.len())),
            ColumnRef::Index(i) => (*i < headers.len()).then_some(*i),
        }
    }
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnRef::Name(s) => f.write_str(s),
            ColumnRef::Index(i) => write!(f, "#{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub response_name: String,
    pub feature_names: Vec<String>,
    pub x: Matrix,
    pub y: Vector,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

pub fn load_dataset(path: &Path, response: &ColumnRef) -> Result<Dataset> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    parse_dataset(&text, response)
}

pub fn parse_dataset(text: &str, response: &ColumnRef) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(e, None))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(CliError::parse("missing header row", None, Some(1), None));
    }
    let mut seen = HashSet::new();
    for h in &headers {
        if h.is_empty() {
            return Err(CliError::parse("empty header name", None, Some(1), None));
        }
        if !seen.insert(h.as_str()) {
            return Err(CliError::parse(format!("duplicate header name '{h}'"), None, Some(1), Some(h)));
        }
    }
    if headers.len() < 2 {
        return Err(CliError::parse("need a response and at least one feature column", None, Some(1), None));
    }
    let r = response
        .resolve(&headers)
        .ok_or_else(|| CliError::Usage(format!("response column '{response}' not found in header")))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_error(e, Some(row)))?;
        let line = record.position().map(|p| p.line());
        let mut values = Vec::with_capacity(headers.len());
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(CliError::parse(
                    format!("blank cell at row {row}, column '{}'", headers[j]),
                    Some(row),
                    line,
                    Some(&headers[j]),
                ));
            }
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                CliError::parse(
                    format!("non-numeric cell '{cell}' at row {row}, column '{}'", headers[j]),
                    Some(row),
                    line,
                    Some(&headers[j]),
                )
            })?;
            values.push(v);
        }
        rows.push(values);
    }
    let n = rows.len();
    if n < 2 {
        return Err(CliError::parse(format!("need at least 2 data rows, found {n}"), None, None, None));
    }
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&j| j != r).collect();
    let x = Matrix::from_fn(n, feature_cols.len(), |i, j| rows[i][feature_cols[j]]);
    let y = Vector::from_fn(n, |i, _| rows[i][r]);
    Ok(Dataset {
        response_name: headers[r].clone(),
        feature_names: feature_cols.iter().map(|&j| headers[j].clone()).collect(),
        x,
        y,
    })
}

fn csv_error(e: csv::Error, row: Option<usize>) -> CliError {
    let line = e.position().map(|p| p.line());
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("row has {len} fields, header has {expected_len}")
        }
        _ => e.to_string(),
    };
    CliError::parse(message, row, line, None)
}

/// Writes the response first, then the features, with shortest round-trip
/// formatting so a reload reproduces every value bit for bit.
pub fn save_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut file = File::create(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    let mut headers = vec![data.response_name.clone()];
    headers.extend(data.feature_names.iter().cloned());
    let columns: Vec<Vector> = std::iter::once(data.y.clone())
        .chain(data.x.column_iter().map(|c| c.into_owned()))
        .collect();
    write_columns(&mut file, &headers, &columns)
        .map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

/// CSV with one column per entry of `columns`, all of equal length.
pub fn write_columns(out: &mut impl Write, headers: &[String], columns: &[Vector]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(headers)?;
    let n = columns.first().map_or(0, |c| c.len());
    for i in 0..n {
        w.write_record(columns.iter().map(|c| c[i].to_string()))?;
    }
    w.flush()
}
