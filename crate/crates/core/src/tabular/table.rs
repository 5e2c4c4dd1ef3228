use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::filter::FilterCondition;
use super::schema::{ColumnKind, ColumnRole, ColumnSchema, Schema};
use crate::error::{Error, Result};

/// A single cell. Numeric and 0/1 binary cells are `Num`, categorical cells
/// are `Sym`. `Missing` only survives cleaning in ignored columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Sym(String),
    Missing,
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    /// Parses a raw CSV cell for a column of the given kind. `None` means the
    /// cell is missing or unparseable.
    pub fn parse(raw: &str, kind: ColumnKind, is_label: bool) -> Option<Value> {
        let raw = raw.trim();
        if raw.is_empty() {
            return None;
        }
        match kind {
            ColumnKind::Numeric => raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Value::Num),
            ColumnKind::Categorical => Some(Value::Sym(raw.to_string())),
            ColumnKind::Binary => match raw.parse::<f64>() {
                Ok(v) if v == 0.0 || v == 1.0 => Some(Value::Num(v)),
                Ok(_) => None,
                Err(_) if is_label => None,
                Err(_) => Some(Value::Sym(raw.to_string())),
            },
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Sym(s) => f.write_str(s),
            Value::Missing => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    schema: Schema,
    rows: Vec<Vec<Value>>,
}

/// Row accounting from [`load_csv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub rows_dropped: usize,
}

/// Reads a headed CSV file. Rows with a missing or unparseable cell in any
/// non-ignored column are dropped.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<(Table, LoadReport)> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let expected: Vec<String> = schema.columns().iter().map(|c| c.name.clone()).collect();
    let positions: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| (h.as_str(), i))
        .collect();
    let mut source_col = Vec::with_capacity(expected.len());
    for name in &expected {
        match positions.get(name.as_str()) {
            Some(&i) => source_col.push(i),
            None => {
                return Err(Error::HeaderMismatch {
                    expected,
                    found: header,
                })
            }
        }
    }
    if header.len() != expected.len() {
        return Err(Error::HeaderMismatch {
            expected,
            found: header,
        });
    }

    let mut rows = Vec::new();
    let mut read = 0;
    'records: for record in reader.records() {
        let record = record?;
        read += 1;
        let mut row = Vec::with_capacity(expected.len());
        for (col, &src) in schema.columns().iter().zip(&source_col) {
            let raw = record.get(src).unwrap_or("");
            let parsed = Value::parse(raw, col.kind, col.role == ColumnRole::Label);
            match (parsed, col.role) {
                (Some(v), _) => row.push(v),
                (None, ColumnRole::Ignore) => row.push(Value::Missing),
                (None, _) => continue 'records,
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyAfterCleaning(path.display().to_string()));
    }
    let report = LoadReport {
        rows_read: read,
        rows_kept: rows.len(),
        rows_dropped: read - rows.len(),
    };
    Ok((
        Table {
            schema: schema.clone(),
            rows,
        },
        report,
    ))
}

/// Stacks tables with identical schemas, preserving part order.
pub fn concatenate(parts: &[Table]) -> Result<Table> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?;
    if parts.iter().any(|p| p.schema != first.schema) {
        return Err(Error::SchemaMismatch);
    }
    let rows = parts.iter().flat_map(|p| p.rows.iter().cloned()).collect();
    Ok(Table {
        schema: first.schema.clone(),
        rows,
    })
}

impl Table {
    pub fn new(schema: Schema, rows: Vec<Vec<Value>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} cells, schema has {}",
                    row.len(),
                    schema.len()
                )));
            }
            for (v, col) in row.iter().zip(schema.columns()) {
                if let Value::Num(x) = v {
                    if !x.is_finite() {
                        return Err(Error::ColumnType {
                            column: col.name.clone(),
                            message: format!("non-finite value in row {i}"),
                        });
                    }
                }
            }
        }
        Ok(Self { schema, rows })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_values(&self, name: &str) -> Result<impl Iterator<Item = &Value>> {
        let j = self.schema.index_of(name)?;
        Ok(self.rows.iter().map(move |r| &r[j]))
    }

    /// Numeric view of a column; errors on non-numeric cells.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        self.column_values(name)?
            .map(|v| {
                v.as_f64().ok_or_else(|| Error::ColumnType {
                    column: name.to_string(),
                    message: format!("expected numeric value, found `{v}`"),
                })
            })
            .collect()
    }

    /// The 0/1 label column.
    pub fn labels(&self) -> Result<Vec<f64>> {
        let j = self.schema.require_label()?;
        let name = self.schema.columns()[j].name.clone();
        self.numeric_column(&name)
    }

    /// Rows satisfying every clause of `cond`.
    pub fn filter(&self, cond: &FilterCondition) -> Result<Table> {
        self.filter_by(cond, true)
    }

    /// Rows failing at least one clause of `cond` (the complement of
    /// [`Table::filter`]).
    pub fn filter_not(&self, cond: &FilterCondition) -> Result<Table> {
        self.filter_by(cond, false)
    }

    fn filter_by(&self, cond: &FilterCondition, keep: bool) -> Result<Table> {
        let compiled = cond.compile(&self.schema)?;
        let rows = self
            .rows
            .iter()
            .filter(|r| compiled.matches(r) == keep)
            .cloned()
            .collect();
        Ok(Table {
            schema: self.schema.clone(),
            rows,
        })
    }

    /// Row mask for `cond`.
    pub fn mask(&self, cond: &FilterCondition) -> Result<Vec<bool>> {
        let compiled = cond.compile(&self.schema)?;
        Ok(self.rows.iter().map(|r| compiled.matches(r)).collect())
    }

    pub fn select_rows(&self, idx: &[usize]) -> Table {
        Table {
            schema: self.schema.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Shuffles rows with the spec's seed and cuts them into consecutive parts.
    pub fn split(&self, spec: &SplitSpec) -> Result<Vec<Table>> {
        let sizes = spec.part_sizes(self.len())?;
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        idx.shuffle(&mut rng);
        let mut parts = Vec::with_capacity(sizes.len());
        let mut start = 0;
        for size in sizes {
            parts.push(self.select_rows(&idx[start..start + size]));
            start += size;
        }
        Ok(parts)
    }

    /// Replaces one column's values. Values must fit the column's kind.
    pub fn with_column_values(&self, name: &str, values: Vec<Value>) -> Result<Table> {
        let j = self.schema.index_of(name)?;
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        let mut out = self.clone();
        for (row, v) in out.rows.iter_mut().zip(values) {
            row[j] = v;
        }
        Ok(out)
    }

    /// Appends a column, or overwrites it if a column with the same name and
    /// kind already exists.
    pub fn upsert_column(&self, column: ColumnSchema, values: Vec<Value>) -> Result<Table> {
        if let Ok(existing) = self.schema.column(&column.name) {
            if existing.kind != column.kind || existing.role != column.role {
                return Err(Error::ColumnType {
                    column: column.name,
                    message: "existing column has a different kind or role".into(),
                });
            }
            return self.with_column_values(&column.name, values);
        }
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        let schema = self.schema.with_column(column)?;
        let rows = self
            .rows
            .iter()
            .zip(values)
            .map(|(r, v)| {
                let mut r = r.clone();
                r.push(v);
                r
            })
            .collect();
        Ok(Table { schema, rows })
    }

    /// Writes the table as headed CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(self.schema.columns().iter().map(|c| c.name.as_str()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| match v {
                Value::Num(x) => crate::linalg::format_f64(*x),
                other => other.to_string(),
            }))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub fractions: Vec<f64>,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(fractions: Vec<f64>, seed: u64) -> Result<Self> {
        let spec = Self { fractions, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::InvalidSplit("no fractions".into()));
        }
        if let Some(f) = self
            .fractions
            .iter()
            .find(|f| !(f.is_finite() && **f > 0.0 && **f <= 1.0))
        {
            return Err(Error::InvalidSplit(format!("fraction {f} outside (0, 1]")));
        }
        let sum: f64 = self.fractions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSplit(format!("fractions sum to {sum}")));
        }
        Ok(())
    }

    /// `round(fraction * n)` for every part but the last, which takes the
    /// remainder.
    pub fn part_sizes(&self, n: usize) -> Result<Vec<usize>> {
        self.validate()?;
        let mut sizes = Vec::with_capacity(self.fractions.len());
        let mut used = 0usize;
        for f in &self.fractions[..self.fractions.len() - 1] {
            let size = ((f * n as f64).round() as usize).min(n - used);
            used += size;
            sizes.push(size);
        }
        sizes.push(n - used);
        Ok(sizes)
    }
}
