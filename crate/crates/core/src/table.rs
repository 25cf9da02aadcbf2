//! In-memory relational table model.
//!
//! Tables are immutable values: every operation returns a new table and
//! leaves its input untouched. Cells are loaded as text and only become
//! typed through explicit normalization, mirroring how web-scraped tables
//! arrive untyped.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::tokens;

/// A single cell value. `Float` cells are never NaN; a failed numeric
/// computation yields `Null` plus a recorded cell error instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Text rendering used by markdown/CSV serialization and LIKE matching.
    /// Ints print without a decimal point, floats with the shortest
    /// round-trip form, `Null` as the empty string.
    pub fn render(&self) -> String {
        match self {
            Value::Null => String::new(),
            Value::Bool(b) => b.to_string(),
            Value::Int(i) => i.to_string(),
            Value::Float(f) => f.to_string(),
            Value::Str(s) => s.clone(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Table size class by estimated token count of the full serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SizeBucket {
    Small,
    Medium,
    Large,
}

impl fmt::Display for SizeBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeBucket::Small => f.write_str("small"),
            SizeBucket::Medium => f.write_str("medium"),
            SizeBucket::Large => f.write_str("large"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<Value>,
}

/// An ordered-column table. All columns have equal length; names are unique
/// (case-sensitive); column order is significant and survives serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
}

/// Per-cell failure produced while mapping a function over a column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub row: usize,
    pub message: String,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TableError {
    #[error("row {row_index} has {actual} cells, expected {expected}")]
    RaggedRows {
        row_index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("duplicate header {name:?}")]
    DuplicateHeader { name: String },
    #[error("duplicate column {name:?}")]
    DuplicateColumn { name: String },
    #[error("unknown column {name:?}")]
    UnknownColumn { name: String },
    #[error("column length {actual} does not match row count {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("csv error: {0}")]
    Csv(String),
}

impl Table {
    pub fn empty() -> Table {
        Table {
            name: "w".to_string(),
            columns: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column(name).is_some()
    }

    /// Cell lookup by row index, or `None` when the column is missing.
    pub fn cell(&self, col: &str, row: usize) -> Option<&Value> {
        self.column(col).and_then(|c| c.values.get(row))
    }

    /// The row as a (column, value) sequence in column order.
    pub fn row(&self, row: usize) -> Vec<(&str, &Value)> {
        self.columns
            .iter()
            .map(|c| (c.name.as_str(), &c.values[row]))
            .collect()
    }
}

/// Load a table from a header plus text rows. Every cell starts as `Str`.
///
/// Duplicate header names are suffixed `_2`, `_3`, ... when `dedup_headers`
/// is on; otherwise they are rejected.
pub fn from_rows(
    header: &[String],
    rows: &[Vec<String>],
    dedup_headers: bool,
) -> Result<Table, TableError> {
    let mut names: Vec<String> = Vec::with_capacity(header.len());
    for raw in header {
        if !names.iter().any(|n| n == raw) {
            names.push(raw.clone());
            continue;
        }
        if !dedup_headers {
            return Err(TableError::DuplicateHeader { name: raw.clone() });
        }
        let mut k = 2;
        loop {
            let candidate = format!("{raw}_{k}");
            if !names.iter().any(|n| *n == candidate) {
                names.push(candidate);
                break;
            }
            k += 1;
        }
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(TableError::RaggedRows {
                row_index: i,
                expected: header.len(),
                actual: row.len(),
            });
        }
    }
    let columns = names
        .into_iter()
        .enumerate()
        .map(|(j, name)| Column {
            name,
            values: rows.iter().map(|r| Value::Str(r[j].clone())).collect(),
        })
        .collect();
    Ok(Table {
        name: "w".to_string(),
        columns,
    })
}

/// Apply a fallible per-cell function over one column.
///
/// Cells where `f` fails keep their original value and are reported, so a
/// later inference pass can target exactly the failed rows.
pub fn map_column<F>(t: &Table, col: &str, mut f: F) -> Result<(Table, Vec<CellError>), TableError>
where
    F: FnMut(&Value) -> Result<Value, String>,
{
    if !t.has_column(col) {
        return Err(TableError::UnknownColumn {
            name: col.to_string(),
        });
    }
    let mut out = t.clone();
    let mut errors = Vec::new();
    for c in &mut out.columns {
        if c.name != col {
            continue;
        }
        for (row, v) in c.values.iter_mut().enumerate() {
            match f(v) {
                Ok(new) => *v = new,
                Err(message) => errors.push(CellError { row, message }),
            }
        }
    }
    Ok((out, errors))
}

/// Append a new column at the rightmost position.
pub fn add_column(t: &Table, name: &str, values: Vec<Value>) -> Result<Table, TableError> {
    if t.has_column(name) {
        return Err(TableError::DuplicateColumn {
            name: name.to_string(),
        });
    }
    if values.len() != t.n_rows() && !t.columns.is_empty() {
        return Err(TableError::LengthMismatch {
            expected: t.n_rows(),
            actual: values.len(),
        });
    }
    let mut out = t.clone();
    out.columns.push(Column {
        name: name.to_string(),
        values,
    });
    Ok(out)
}

/// Project to exactly `cols`, in the order given.
pub fn keep_columns(t: &Table, cols: &[String]) -> Result<Table, TableError> {
    let mut columns = Vec::with_capacity(cols.len());
    for name in cols {
        match t.column(name) {
            Some(c) => columns.push(c.clone()),
            None => {
                return Err(TableError::UnknownColumn { name: name.clone() });
            }
        }
    }
    Ok(Table {
        name: t.name.clone(),
        columns,
    })
}

fn escape_cell(text: &str) -> String {
    text.replace('\\', "\\\\").replace('|', "\\|")
}

/// Pipe-delimited rendering: header row, separator row, then up to
/// `max_rows` data rows. Null renders as an empty cell.
pub fn serialize_markdown(t: &Table, max_rows: Option<usize>) -> String {
    let mut out = String::new();
    let header: Vec<String> = t.columns.iter().map(|c| escape_cell(&c.name)).collect();
    out.push_str(&format!("| {} |\n", header.join(" | ")));
    let sep: Vec<&str> = t.columns.iter().map(|_| "---").collect();
    out.push_str(&format!("| {} |\n", sep.join(" | ")));
    let limit = max_rows.unwrap_or(usize::MAX).min(t.n_rows());
    for row in 0..limit {
        let cells: Vec<String> = t
            .columns
            .iter()
            .map(|c| escape_cell(&c.values[row].render()))
            .collect();
        out.push_str(&format!("| {} |\n", cells.join(" | ")));
    }
    out
}

/// Token estimate of the full markdown serialization.
pub fn token_estimate(t: &Table) -> usize {
    tokens::estimate(&serialize_markdown(t, None))
}

/// Bucket thresholds: Small < 2048, Medium 2048..=4096, Large > 4096.
pub fn size_bucket(t: &Table) -> SizeBucket {
    bucket_for_estimate(token_estimate(t))
}

pub fn bucket_for_estimate(estimate: usize) -> SizeBucket {
    if estimate < 2048 {
        SizeBucket::Small
    } else if estimate <= 4096 {
        SizeBucket::Medium
    } else {
        SizeBucket::Large
    }
}

/// Read a table from RFC-4180 CSV; the first record is the header.
pub fn read_csv<R: Read>(reader: R, dedup_headers: bool) -> Result<Table, TableError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header: Vec<String> = match records.next() {
        Some(rec) => rec
            .map_err(|e| TableError::Csv(e.to_string()))?
            .iter()
            .map(|s| s.to_string())
            .collect(),
        None => return from_rows(&[], &[], dedup_headers),
    };
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| TableError::Csv(e.to_string()))?;
        rows.push(rec.iter().map(|s| s.to_string()).collect());
    }
    from_rows(&header, &rows, dedup_headers)
}

/// Write a table as RFC-4180 CSV with a header record.
pub fn write_csv<W: Write>(t: &Table, writer: W) -> Result<(), TableError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(t.columns.iter().map(|c| c.name.as_str()))
        .map_err(|e| TableError::Csv(e.to_string()))?;
    for row in 0..t.n_rows() {
        wtr.write_record(t.columns.iter().map(|c| c.values[row].render()))
            .map_err(|e| TableError::Csv(e.to_string()))?;
    }
    wtr.flush().map_err(|e| TableError::Csv(e.to_string()))?;
    Ok(())
}

pub fn to_csv_string(t: &Table) -> String {
    let mut buf = Vec::new();
    write_csv(t, &mut buf).expect("in-memory csv write cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}
