//! CSV ingestion: header row plus numeric cells, with missing or
//! non-numeric values reported by (row, column).

use lps_core::{LpsError, Result};
use std::path::Path;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub headers: Vec<String>,
    /// Column-major values, one vector per header.
    pub columns: Vec<Vec<f64>>,
    pub rows: usize,
}

impl Dataset {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| LpsError::Config(format!("cannot open {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| LpsError::Config(format!("cannot read the header row: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() {
        return Err(LpsError::Config("the CSV file has no columns".into()));
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| LpsError::Config(format!("malformed CSV record: {e}")))?;
        if record.len() != headers.len() {
            return Err(LpsError::Config(format!(
                "data row {} has {} cells, expected {}",
                row_idx + 1,
                record.len(),
                headers.len()
            )));
        }
        for (col_idx, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(LpsError::Config(format!(
                    "missing value at data row {}, column \"{}\"",
                    row_idx + 1,
                    headers[col_idx]
                )));
            }
            let value: f64 = cell.parse().map_err(|_| {
                LpsError::Config(format!(
                    "non-numeric value \"{}\" at data row {}, column \"{}\"",
                    cell,
                    row_idx + 1,
                    headers[col_idx]
                ))
            })?;
            if !value.is_finite() {
                return Err(LpsError::Config(format!(
                    "non-finite value at data row {}, column \"{}\"",
                    row_idx + 1,
                    headers[col_idx]
                )));
            }
            columns[col_idx].push(value);
        }
    }
    let rows = columns.first().map_or(0, Vec::len);
    if rows == 0 {
        return Err(LpsError::Config("the CSV file has no data rows".into()));
    }
    Ok(Dataset {
        headers,
        columns,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_a_small_file() {
        let f = write_temp("y,x1\n1,0.5\n2,0.25\n0,-0.5\n");
        let d = load_csv(f.path()).unwrap();
        assert_eq!(d.rows, 3);
        assert_eq!(d.headers, vec!["y", "x1"]);
        assert_eq!(d.column("x1").unwrap(), &[0.5, 0.25, -0.5]);
    }

    #[test]
    fn empty_cell_is_reported_with_its_location() {
        let f = write_temp("y,x1\n1,0.5\n2,\n");
        let err = load_csv(f.path()).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("x1"), "{err}");
    }

    #[test]
    fn non_numeric_cell_is_reported_with_its_location() {
        let f = write_temp("y,x1\n1,0.5\nfoo,0.25\n");
        let err = load_csv(f.path()).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("\"y\""), "{err}");
        assert!(err.contains("foo"), "{err}");
    }

    #[test]
    fn round_trips_generated_values() {
        let values = [0.1, -1.5e-7, 3.999999999999999, 42.0, 1.0 / 3.0];
        let mut text = String::from("v\n");
        for v in values {
            text.push_str(&format!("{v}\n"));
        }
        let f = write_temp(&text);
        let d = load_csv(f.path()).unwrap();
        assert_eq!(d.column("v").unwrap(), &values);
    }
}
