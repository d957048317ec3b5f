//! CSV ingestion and output.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use contour_sdr::nalgebra::{DMatrix, DVector};

use crate::CliError;

/// A numeric CSV file with a header row.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    /// Row-major cells.
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let file = File::open(path)
            .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
        Self::from_reader(file).map_err(|e| match e {
            CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_reader(reader: impl std::io::Read) -> Result<Self, CliError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| CliError::Input(format!("malformed header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(CliError::Input("missing header row".into()));
        }
        let mut rows = Vec::new();
        for (r, record) in rdr.records().enumerate() {
            // data rows are numbered from 1, after the header
            let line = r + 1;
            let record = record.map_err(|e| CliError::Input(format!("row {line}: {e}")))?;
            let row = record
                .iter()
                .zip(&header)
                .map(|(cell, name)| {
                    cell.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| {
                            CliError::Input(format!(
                                "row {line}, column '{name}': '{cell}' is not a finite number"
                            ))
                        })
                })
                .collect::<Result<Vec<f64>, CliError>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(CliError::Input("no data rows".into()));
        }
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize, CliError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("no column named '{name}'")))
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r[j]))
    }

    /// `n × len(cols)` matrix of the given columns.
    pub fn matrix(&self, cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), cols.len(), |i, j| self.rows[i][cols[j]])
    }
}

/// Writes `header` and `rows` to `path`.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))?;
    let io = |e: csv::Error| CliError::Input(format!("writing {}: {e}", path.display()));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(io)?;
    }
    w.flush()
        .map_err(|e| CliError::Input(format!("writing {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}
