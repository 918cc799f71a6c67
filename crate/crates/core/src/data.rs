//! Minimal column-oriented view over a headed CSV file.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// String cells of a CSV with a required header row.
#[derive(Debug, Clone)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(Error::invalid("empty input: no header row"));
        }
        let mut rows = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                row: k + 1,
                msg: e.to_string(),
            })?;
            rows.push(rec.iter().map(str::to_owned).collect());
        }
        if rows.is_empty() {
            return Err(Error::invalid("input has a header but no data rows"));
        }
        Ok(Table { headers, rows })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.as_ref().display())))?;
        Self::from_reader(file)
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.headers.iter().any(|h| h == name)
    }

    /// Parses a named column as `f64`. Row numbers in errors are 1-based data rows.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::invalid(format!("missing column `{name}`")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let cell = row.get(idx).map(String::as_str).unwrap_or("");
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    row: k + 1,
                    msg: format!("column `{name}`: `{cell}` is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row: k + 1,
                        msg: format!("column `{name}`: non-finite value `{cell}`"),
                    });
                }
                Ok(v)
            })
            .collect()
    }
}
