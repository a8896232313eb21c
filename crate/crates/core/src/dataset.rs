// SPDX-License-Identifier: Apache-2.0

//! Numeric CSV datasets with an optional label column.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("line {line}, column {column}: `{text}` is not a number")]
    NotNumeric { line: u64, column: usize, text: String },
    #[error("line {line}: expected {expected} columns, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("line {line}: label {value} is not a non-negative integer")]
    Label { line: u64, value: f64 },
    #[error("no data rows")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    First,
    None,
}

impl FromStr for LabelColumn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "last" => Ok(LabelColumn::Last),
            "first" => Ok(LabelColumn::First),
            "none" => Ok(LabelColumn::None),
            _ => Err(format!("label column must be last, first or none, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<Vec<f64>>,
}

impl Dataset {
    pub fn num_features(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

pub fn load_csv(path: impl AsRef<Path>, label: LabelColumn, header: bool) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, label, header)
}

pub fn read_csv(input: impl Read, label: LabelColumn, header: bool) -> Result<Dataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| DatasetError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(DatasetError::Ragged {
                line,
                expected,
                found: record.len(),
            });
        }
        let mut values = record
            .iter()
            .enumerate()
            .map(|(column, text)| {
                text.parse::<f64>().map_err(|_| DatasetError::NotNumeric {
                    line,
                    column: column + 1,
                    text: text.to_string(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let y = match label {
            LabelColumn::Last => values.pop(),
            LabelColumn::First if !values.is_empty() => Some(values.remove(0)),
            _ => None,
        };
        if let Some(value) = y {
            if !(value.is_finite() && value >= 0.0 && value.fract() == 0.0) {
                return Err(DatasetError::Label { line, value });
            }
            labels.push(value);
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(Dataset {
        rows,
        labels: (label != LabelColumn::None).then_some(labels),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_positions() {
        let text = "1,2,0\n3,4,1\n";
        let last = read_csv(text.as_bytes(), LabelColumn::Last, false).unwrap();
        assert_eq!(last.rows, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(last.labels, Some(vec![0.0, 1.0]));
        let first = read_csv(text.as_bytes(), LabelColumn::First, false).unwrap();
        assert_eq!(first.rows, vec![vec![2.0, 0.0], vec![4.0, 1.0]]);
        assert_eq!(first.labels, Some(vec![1.0, 3.0]));
        let none = read_csv(text.as_bytes(), LabelColumn::None, false).unwrap();
        assert_eq!(none.num_features(), 3);
        assert_eq!(none.labels, None);
    }

    #[test]
    fn header_is_skipped() {
        let d = read_csv("a, b, y\n0.5, -1, 2\n".as_bytes(), LabelColumn::Last, true).unwrap();
        assert_eq!(d.rows, vec![vec![0.5, -1.0]]);
        assert_eq!(d.labels, Some(vec![2.0]));
    }

    #[test]
    fn errors_carry_positions() {
        let err = read_csv("1,2,0\n1,x,0\n".as_bytes(), LabelColumn::Last, false).unwrap_err();
        assert!(
            matches!(err, DatasetError::NotNumeric { line: 2, column: 2, .. }),
            "{err}"
        );
        let err = read_csv("1,2,0\n1,0\n".as_bytes(), LabelColumn::Last, false).unwrap_err();
        assert!(matches!(err, DatasetError::Ragged { line: 2, .. }), "{err}");
        let err = read_csv("1,2,0.5\n".as_bytes(), LabelColumn::Last, false).unwrap_err();
        assert!(matches!(err, DatasetError::Label { line: 1, .. }), "{err}");
        assert!(matches!(
            read_csv("".as_bytes(), LabelColumn::Last, false),
            Err(DatasetError::Empty)
        ));
    }
}
