//! CSV ingestion.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use thiserror::Error;

/// A problem with the data file, located as precisely as possible.
#[derive(Debug, Error)]
#[error("{}: {}{message}", path.display(), locus(*row, column.as_deref()))]
pub struct DataError {
    pub path: PathBuf,
    /// 1-based line number in the file (header is line 1).
    pub row: Option<usize>,
    pub column: Option<String>,
    pub message: String,
}

fn locus(row: Option<usize>, column: Option<&str>) -> String {
    match (row, column) {
        (Some(r), Some(c)) => format!("line {r}, column `{c}`: "),
        (Some(r), None) => format!("line {r}: "),
        (None, Some(c)) => format!("column `{c}`: "),
        (None, None) => String::new(),
    }
}

/// Which columns to read and how.
#[derive(Debug, Clone, Default)]
pub struct DataSpec {
    /// Variables in model order; empty means every non-date column.
    pub variables: Vec<String>,
    /// Name of the date column. When absent, a first column called `date`
    /// (any case) or holding ISO dates is used.
    pub date_column: Option<String>,
    /// Variables replaced by their natural logarithm.
    pub log_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `T × n`, columns in `variables` order.
    pub values: DMatrix<f64>,
    pub variables: Vec<String>,
    pub dates: Option<Vec<String>>,
    /// Full header of the file.
    pub header: Vec<String>,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }
}

/// `YYYY-MM`, `YYYY-MM-DD` or `YYYY-Qn`. Bare years are indistinguishable from numbers.
fn looks_like_date(s: &str) -> bool {
    let parts: Vec<&str> = s.split('-').collect();
    let digits = |p: &str, n: usize| p.len() == n && p.bytes().all(|b| b.is_ascii_digit());
    match parts.as_slice() {
        [y, m] => digits(y, 4) && (digits(m, 2) || (m.len() == 2 && m.starts_with(['Q', 'q']))),
        [y, m, d] => digits(y, 4) && digits(m, 2) && digits(d, 2),
        _ => false,
    }
}

pub fn load_csv(path: &Path, spec: &DataSpec) -> Result<Dataset, DataError> {
    let err = |row: Option<usize>, column: Option<&str>, message: String| DataError {
        path: path.to_path_buf(),
        row,
        column: column.map(str::to_owned),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| err(None, None, e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| err(Some(1), None, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(err(Some(1), None, "empty header".into()));
    }
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| err(Some(line), None, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(err(
                Some(line),
                None,
                format!("ragged row: {} fields, header has {}", rec.len(), header.len()),
            ));
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(err(None, None, "no data rows".into()));
    }

    let position = |name: &str| header.iter().position(|h| h == name);
    let date_col = match &spec.date_column {
        Some(name) => Some(position(name).ok_or_else(|| err(Some(1), Some(name), "date column not found".into()))?),
        None => {
            let first = &header[0];
            (first.eq_ignore_ascii_case("date") || records.iter().all(|r| looks_like_date(&r[0]))).then_some(0)
        }
    };
    let variables: Vec<String> = if spec.variables.is_empty() {
        header
            .iter()
            .enumerate()
            .filter(|(c, _)| Some(*c) != date_col)
            .map(|(_, h)| h.clone())
            .collect()
    } else {
        spec.variables.clone()
    };
    if variables.is_empty() {
        return Err(err(None, None, "no variable columns".into()));
    }
    let cols: Vec<usize> = variables
        .iter()
        .map(|v| position(v).ok_or_else(|| err(Some(1), Some(v), format!("variable `{v}` not found in header"))))
        .collect::<Result<_, _>>()?;
    if let Some(l) = spec.log_columns.iter().find(|l| !variables.contains(l)) {
        return Err(err(None, Some(l), format!("log flag on `{l}`, which is not a model variable")));
    }
    let logged: Vec<bool> = variables.iter().map(|v| spec.log_columns.contains(v)).collect();

    let mut values = DMatrix::zeros(records.len(), variables.len());
    for (r, rec) in records.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            let cell = &rec[c];
            let name = variables[j].as_str();
            let x: f64 = cell
                .parse()
                .map_err(|_| err(Some(r + 2), Some(name), format!("non-numeric cell `{cell}`")))?;
            if !x.is_finite() {
                return Err(err(Some(r + 2), Some(name), format!("non-finite value `{cell}`")));
            }
            values[(r, j)] = if logged[j] {
                if x <= 0.0 {
                    return Err(err(Some(r + 2), Some(name), format!("cannot take the log of {x}")));
                }
                x.ln()
            } else {
                x
            };
        }
    }
    let dates = date_col.map(|c| records.iter().map(|r| r[c].to_owned()).collect());
    Ok(Dataset {
        values,
        variables,
        dates,
        header,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_numeric_matrix() {
        let f = write("a,b\n1,2\n3,4\n5,6\n");
        let d = load_csv(f.path(), &DataSpec::default()).unwrap();
        assert_eq!(d.values, DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        assert_eq!(d.variables, ["a", "b"]);
        assert!(d.dates.is_none());
    }

    #[test]
    fn reorders_logs_and_detects_dates() {
        let f = write("month,x,y\n1979-09,1,2.718281828459045\n1979-10,3,1\n");
        let spec = DataSpec {
            variables: vec!["y".into(), "x".into()],
            log_columns: vec!["y".into()],
            ..DataSpec::default()
        };
        let d = load_csv(f.path(), &spec).unwrap();
        assert_eq!(d.dates.as_deref().unwrap(), ["1979-09", "1979-10"]);
        assert!((d.values[(0, 0)] - 1.0).abs() < 1e-12);
        assert_eq!(d.values[(1, 0)], 0.0);
        assert_eq!(d.values[(1, 1)], 3.0);
    }

    #[test]
    fn errors_carry_locus() {
        let f = write("a,b\n1,2\n3\n");
        let e = load_csv(f.path(), &DataSpec::default()).unwrap_err();
        assert_eq!(e.row, Some(3));
        assert!(e.to_string().contains("ragged"));

        let f = write("a,b\n1,2\n3,x\n");
        let e = load_csv(f.path(), &DataSpec::default()).unwrap_err();
        assert_eq!((e.row, e.column.as_deref()), (Some(3), Some("b")));

        let f = write("a,b\n1,2\n");
        let spec = DataSpec {
            variables: vec!["a".into(), "gdp".into()],
            ..DataSpec::default()
        };
        let e = load_csv(f.path(), &spec).unwrap_err();
        assert!(e.to_string().contains("gdp"));

        let f = write("a,b\n1,-2\n");
        let spec = DataSpec {
            log_columns: vec!["b".into()],
            ..DataSpec::default()
        };
        assert!(load_csv(f.path(), &spec).unwrap_err().to_string().contains("log"));
    }

    #[test]
    fn date_detection() {
        for s in ["1979-10", "1979-10-01", "1980-Q1"] {
            assert!(looks_like_date(s), "{s}");
        }
        for s in ["1979", "1.5", "12", "1979-1", "abc"] {
            assert!(!looks_like_date(s), "{s}");
        }
    }
}
