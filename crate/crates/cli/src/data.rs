//! CSV ingestion and export.

use std::path::Path;

use dfscreen::{transform_response, DMatrix, DVector, LinkSpec, ScreenError};

use crate::{CliError, CliResult};

/// A numeric table split into features and one response column. Feature
/// order follows the file.
#[derive(Debug, Clone)]
pub struct CsvDataset {
    pub header: Vec<String>,
    pub response_col: String,
    pub feature_cols: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl CsvDataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Checks that every response value is admissible for `link`, naming the
    /// offending data row (1-based, header excluded).
    pub fn check_response(&self, link: LinkSpec) -> CliResult<()> {
        match transform_response(&self.y, link) {
            Ok(_) => Ok(()),
            Err(ScreenError::Domain { row, value, link }) => Err(CliError::Screen(ScreenError::Parameter {
                name: "response",
                reason: format!(
                    "column `{}` has value {value} at data row {} (line {}), outside the {link} link's domain",
                    self.response_col,
                    row + 1,
                    row + 2
                ),
            })),
            Err(e) => Err(e.into()),
        }
    }
}

/// Reads a comma-separated file whose first row is a header.
pub fn read_csv(path: &Path, response: &str) -> CliResult<CsvDataset> {
    let shown = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("cannot open {shown}: {e}")))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::input(format!("{shown}: bad header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    let response_pos = header
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| CliError::input(format!("{shown}: no column named `{response}` in header {header:?}")))?;

    let mut values: Vec<f64> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CliError::input(format!("{shown}: data row {row}: {e}")))?;
        let line = record.position().map_or(row as u64 + 1, |p| p.line());
        if record.len() != header.len() {
            return Err(CliError::input(format!(
                "{shown}: data row {row} (line {line}) has {} fields, header has {}",
                record.len(),
                header.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(CliError::input(format!(
                    "{shown}: missing value in column `{}` at data row {row} (line {line})",
                    header[j]
                )));
            }
            let v: f64 = cell.parse().map_err(|_| {
                CliError::input(format!(
                    "{shown}: cannot parse `{cell}` in column `{}` at data row {row} (line {line})",
                    header[j]
                ))
            })?;
            if j == response_pos {
                y.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let n = y.len();
    let p = header.len() - 1;
    if n < 2 || p < 1 {
        return Err(CliError::input(format!(
            "{shown}: need at least 2 rows and 1 feature, got n={n}, p={p}"
        )));
    }
    let feature_cols = header
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != response_pos)
        .map(|(_, h)| h.clone())
        .collect();
    Ok(CsvDataset {
        header: header.clone(),
        response_col: response.to_owned(),
        feature_cols,
        x: DMatrix::from_row_slice(n, p, &values),
        y: DVector::from_vec(y),
    })
}

/// Writes features `x1..xp` followed by the response column `y`.
pub fn write_design(path: &Path, x: &DMatrix<f64>, y: &DVector<f64>) -> CliResult<()> {
    let err = |e: csv::Error| CliError::input(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    let mut header: Vec<String> = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(err)?;
    for i in 0..x.nrows() {
        let row: Vec<String> = (0..x.ncols())
            .map(|j| x[(i, j)])
            .chain(std::iter::once(y[i]))
            .map(|v| v.to_string())
            .collect();
        w.write_record(row).map_err(err)?;
    }
    w.flush()
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_in_column_order() {
        let f = file("a,y,b\n1,2,3\n4,5,6\n");
        let d = read_csv(f.path(), "y").unwrap();
        assert_eq!(d.feature_cols, vec!["a", "b"]);
        assert_eq!(d.x, DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 4.0, 6.0]));
        assert_eq!(d.y.as_slice(), &[2.0, 5.0]);
    }

    #[test]
    fn missing_cell_names_row() {
        let f = file("a,y\n1,2\n3,\n5,6\n");
        let e = read_csv(f.path(), "y").unwrap_err();
        assert_eq!(e.exit_code(), crate::EXIT_INPUT);
        assert!(e.to_string().contains("data row 2"), "{e}");
    }

    #[test]
    fn bad_number_and_missing_column() {
        let f = file("a,y\n1,2\nx,3\n");
        assert!(read_csv(f.path(), "y").unwrap_err().to_string().contains("`x`"));
        assert!(read_csv(f.path(), "z").is_err());
    }

    #[test]
    fn response_domain_error_names_row() {
        let f = file("a,y\n1,0\n2,1\n3,0.5\n4,1\n5,0\n6,1\n");
        let d = read_csv(f.path(), "y").unwrap();
        let e = d.check_response(LinkSpec::Logit).unwrap_err();
        assert_eq!(e.exit_code(), crate::EXIT_CONTRACT);
        assert!(e.to_string().contains("data row 3"), "{e}");
    }
}
