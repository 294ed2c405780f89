//! CSV sample tables.
//!
//! Layout: a header row `sample_id,split,label,<named columns...>`, then one
//! row per sample. `split` is `ID`, `OOD` or `UNLABELED`; `label` is the
//! class index for ID rows and `-1` otherwise. Named columns are real
//! valued; an empty cell means "not available" (e.g. the loss of an OOD
//! row). Non-finite values are rejected on load.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScodError};

const RESERVED: [&str; 3] = ["sample_id", "split", "label"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    #[serde(rename = "ID")]
    Id,
    #[serde(rename = "OOD")]
    Ood,
    #[serde(rename = "UNLABELED")]
    Unlabeled,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Id => "ID",
            Split::Ood => "OOD",
            Split::Unlabeled => "UNLABELED",
        })
    }
}

impl FromStr for Split {
    type Err = ScodError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ID" => Ok(Split::Id),
            "OOD" => Ok(Split::Ood),
            "UNLABELED" => Ok(Split::Unlabeled),
            other => Err(ScodError::Data(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub sample_id: String,
    pub split: Split,
    pub label: i64,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleTable {
    columns: Vec<String>,
    rows: Vec<SampleRow>,
}

/// Data-file float format: 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl SampleTable {
    pub fn new(columns: Vec<String>) -> Result<Self> {
        for (i, c) in columns.iter().enumerate() {
            if RESERVED.contains(&c.as_str()) {
                return Err(ScodError::Data(format!("column name '{c}' is reserved")));
            }
            if columns[..i].contains(c) {
                return Err(ScodError::Data(format!("duplicate column '{c}'")));
            }
        }
        Ok(Self {
            columns,
            rows: Vec::new(),
        })
    }

    pub fn push(&mut self, row: SampleRow) -> Result<()> {
        if row.values.len() != self.columns.len() {
            return Err(ScodError::Data(format!(
                "row '{}' has {} values, table has {} columns",
                row.sample_id,
                row.values.len(),
                self.columns.len()
            )));
        }
        if row.split == Split::Id && row.label < 0 {
            return Err(ScodError::Data(format!(
                "ID row '{}' needs a label >= 0",
                row.sample_id
            )));
        }
        for (c, v) in self.columns.iter().zip(&row.values) {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(ScodError::Data(format!(
                        "column '{c}' row '{}' holds non-finite value {v}",
                        row.sample_id
                    )));
                }
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[SampleRow] {
        &self.rows
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| ScodError::Config(format!("table has no column '{name}'")))
    }

    pub fn count(&self, split: Split) -> usize {
        self.rows.iter().filter(|r| r.split == split).count()
    }

    pub fn rows_in(&self, split: Split) -> impl Iterator<Item = &SampleRow> {
        self.rows.iter().filter(move |r| r.split == split)
    }

    /// Values of `column` on rows of `split`; a missing cell is a data error
    /// naming the column and row.
    pub fn column_values(&self, column: &str, split: Split) -> Result<Vec<f64>> {
        let idx = self.column_index(column)?;
        self.rows_in(split)
            .map(|r| {
                r.values[idx].ok_or_else(|| {
                    ScodError::Data(format!(
                        "column '{column}' is empty in row '{}'",
                        r.sample_id
                    ))
                })
            })
            .collect()
    }

    /// Feature vectors built from `columns` on rows of `split`.
    pub fn features(&self, columns: &[String], split: Split) -> Result<Vec<Vec<f64>>> {
        let per_column: Vec<Vec<f64>> = columns
            .iter()
            .map(|c| self.column_values(c, split))
            .collect::<Result<_>>()?;
        let n = self.count(split);
        Ok((0..n)
            .map(|i| per_column.iter().map(|col| col[i]).collect())
            .collect())
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header: Vec<&str> = RESERVED.to_vec();
        header.extend(self.columns.iter().map(String::as_str));
        w.write_record(&header).map_err(csv_err)?;
        for row in &self.rows {
            let mut record = vec![row.sample_id.clone(), row.split.to_string(), row.label.to_string()];
            record.extend(row.values.iter().map(|v| v.map(format_float).unwrap_or_default()));
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| ScodError::Data(e.to_string()))
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = r.headers().map_err(csv_err)?.clone();
        let names: Vec<&str> = header.iter().collect();
        if names.len() < 3 || names[..3] != RESERVED {
            return Err(ScodError::Data(
                "header must start with sample_id,split,label".into(),
            ));
        }
        let mut table = Self::new(names[3..].iter().map(|s| s.to_string()).collect())?;
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let row_no = line + 2;
            let cell = |i: usize| record.get(i).unwrap_or("");
            let split: Split = cell(1)
                .parse()
                .map_err(|e| ScodError::Data(format!("line {row_no}: {e}")))?;
            let label: i64 = cell(2)
                .trim()
                .parse()
                .map_err(|_| ScodError::Data(format!("line {row_no}: bad label '{}'", cell(2))))?;
            let mut values = Vec::with_capacity(table.columns.len());
            for (j, name) in table.columns.iter().enumerate() {
                let raw = cell(j + 3).trim();
                if raw.is_empty() {
                    values.push(None);
                    continue;
                }
                let v: f64 = raw.parse().map_err(|_| {
                    ScodError::Data(format!("column '{name}' line {row_no}: cannot parse '{raw}'"))
                })?;
                if !v.is_finite() {
                    return Err(ScodError::Data(format!(
                        "column '{name}' line {row_no} (row '{}'): non-finite value '{raw}'",
                        cell(0)
                    )));
                }
                values.push(Some(v));
            }
            table.push(SampleRow {
                sample_id: cell(0).to_string(),
                split,
                label,
                values,
            })?;
        }
        Ok(table)
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| ScodError::Data(format!("cannot open {}: {e}", path.display())))?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

fn csv_err(e: csv::Error) -> ScodError {
    ScodError::Data(format!("csv: {e}"))
}
