use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::schema::{ColumnKind, ColumnRole};
use super::table::{Table, Value};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// How one source column becomes one or more feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transform", rename_all = "snake_case")]
pub enum ColumnTransform {
    /// `(x - mean) / std`, or 0 when the fit-time std is 0.
    Standardize { mean: f64, std: f64 },
    /// Numeric 0/1 passthrough.
    Binary,
    /// Two-symbol column: the first symbol maps to 0, the second to 1.
    BinarySymbols { symbols: Vec<String> },
    /// One indicator per fit-time category. Unseen categories encode as zeros.
    OneHot { vocabulary: Vec<String> },
}

impl ColumnTransform {
    fn width(&self) -> usize {
        match self {
            ColumnTransform::OneHot { vocabulary } => vocabulary.len(),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    columns: Vec<(String, ColumnTransform)>,
    dropped: Vec<String>,
    fitted: bool,
}

impl Preprocessor {
    /// Learns transforms for every protected/unprotected column not in `drops`.
    pub fn fit(table: &Table, drops: &[String]) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot fit on an empty table".into(),
            ));
        }
        for d in drops {
            table.schema().index_of(d)?;
        }
        let mut columns = Vec::new();
        for (j, col) in table.schema().columns().iter().enumerate() {
            if !matches!(col.role, ColumnRole::Protected | ColumnRole::Unprotected)
                || drops.contains(&col.name)
            {
                continue;
            }
            let values = table.rows().iter().map(|r| &r[j]);
            let transform = match col.kind {
                ColumnKind::Numeric => {
                    let xs = table.numeric_column(&col.name)?;
                    let n = xs.len() as f64;
                    let mean = xs.iter().sum::<f64>() / n;
                    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                    ColumnTransform::Standardize {
                        mean,
                        std: var.sqrt(),
                    }
                }
                ColumnKind::Binary => {
                    let mut has_num = false;
                    let mut symbols = BTreeSet::new();
                    for v in values {
                        match v {
                            Value::Num(_) => has_num = true,
                            Value::Sym(s) => {
                                symbols.insert(s.clone());
                            }
                            Value::Missing => {
                                return Err(Error::ColumnType {
                                    column: col.name.clone(),
                                    message: "missing value".into(),
                                })
                            }
                        }
                    }
                    match (has_num, symbols.len()) {
                        (_, 0) => ColumnTransform::Binary,
                        (false, 1 | 2) => ColumnTransform::BinarySymbols {
                            symbols: symbols.into_iter().collect(),
                        },
                        _ => {
                            return Err(Error::ColumnType {
                                column: col.name.clone(),
                                message: format!(
                                    "binary column has {} distinct symbols{}",
                                    symbols.len(),
                                    if has_num { " mixed with numbers" } else { "" }
                                ),
                            })
                        }
                    }
                }
                ColumnKind::Categorical => {
                    let vocabulary: BTreeSet<String> = values
                        .map(|v| match v {
                            Value::Sym(s) => Ok(s.clone()),
                            other => Err(Error::ColumnType {
                                column: col.name.clone(),
                                message: format!("expected a category, found `{other}`"),
                            }),
                        })
                        .collect::<Result<_>>()?;
                    ColumnTransform::OneHot {
                        vocabulary: vocabulary.into_iter().collect(),
                    }
                }
            };
            columns.push((col.name.clone(), transform));
        }
        if columns.is_empty() {
            return Err(Error::InvalidArgument(
                "no feature columns to encode".into(),
            ));
        }
        Ok(Self {
            columns,
            dropped: drops.to_vec(),
            fitted: true,
        })
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    pub fn transforms(&self) -> &[(String, ColumnTransform)] {
        &self.columns
    }

    /// Width of the encoded feature vector.
    pub fn output_dim(&self) -> usize {
        self.columns.iter().map(|(_, t)| t.width()).sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.output_dim());
        for (name, t) in &self.columns {
            match t {
                ColumnTransform::OneHot { vocabulary } => {
                    names.extend(vocabulary.iter().map(|v| format!("{name}={v}")))
                }
                _ => names.push(name.clone()),
            }
        }
        names
    }

    /// Encodes `table` into a feature matrix, plus its labels when the table
    /// has a label column.
    pub fn apply(&self, table: &Table) -> Result<(Matrix, Option<Vec<f64>>)> {
        if !self.fitted {
            return Err(Error::NotFitted);
        }
        let schema = table.schema();
        let mut plan = Vec::with_capacity(self.columns.len());
        for (name, t) in &self.columns {
            let j = schema.index_of(name)?;
            let lookup: Option<HashMap<&str, usize>> = match t {
                ColumnTransform::OneHot { vocabulary } => Some(
                    vocabulary
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (v.as_str(), i))
                        .collect(),
                ),
                _ => None,
            };
            plan.push((j, name, t, lookup));
        }

        let dim = self.output_dim();
        let mut x = Matrix::zeros(table.len(), dim);
        for (i, row) in table.rows().iter().enumerate() {
            let out = x.row_mut(i);
            let mut offset = 0;
            for (j, name, t, lookup) in &plan {
                let cell = &row[*j];
                let mismatch = || Error::ColumnType {
                    column: (*name).clone(),
                    message: format!("cannot encode `{cell}` in row {i}"),
                };
                match t {
                    ColumnTransform::Standardize { mean, std } => {
                        let v = cell.as_f64().ok_or_else(mismatch)?;
                        out[offset] = if *std > 0.0 { (v - mean) / std } else { 0.0 };
                    }
                    ColumnTransform::Binary => {
                        out[offset] = cell.as_f64().ok_or_else(mismatch)?;
                    }
                    ColumnTransform::BinarySymbols { symbols } => {
                        let s = cell.as_str().ok_or_else(mismatch)?;
                        out[offset] = match symbols.iter().position(|x| x == s) {
                            Some(p) => p as f64,
                            None => return Err(mismatch()),
                        };
                    }
                    ColumnTransform::OneHot { .. } => {
                        let s = cell.as_str().ok_or_else(mismatch)?;
                        if let Some(&k) = lookup.as_ref().and_then(|l| l.get(s)) {
                            out[offset + k] = 1.0;
                        }
                    }
                }
                offset += t.width();
            }
        }

        let labels = match schema.label_index() {
            Some(_) => Some(table.labels()?),
            None => None,
        };
        Ok((x, labels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{ColumnSchema, Schema};

    fn table(rows: Vec<Vec<Value>>) -> Table {
        let schema = Schema::new(vec![
            ColumnSchema::new("num", ColumnKind::Numeric, ColumnRole::Unprotected),
            ColumnSchema::new("sex", ColumnKind::Binary, ColumnRole::Unprotected),
            ColumnSchema::new("cat", ColumnKind::Categorical, ColumnRole::Unprotected),
            ColumnSchema::new("race", ColumnKind::Categorical, ColumnRole::Protected),
            ColumnSchema::new("id", ColumnKind::Numeric, ColumnRole::Ignore),
            ColumnSchema::new("y", ColumnKind::Binary, ColumnRole::Label),
        ])
        .unwrap();
        Table::new(schema, rows).unwrap()
    }

    fn row(num: f64, sex: &str, cat: &str, y: f64) -> Vec<Value> {
        vec![
            Value::Num(num),
            Value::Sym(sex.into()),
            Value::Sym(cat.into()),
            Value::Sym("W".into()),
            Value::Num(99.0),
            Value::Num(y),
        ]
    }

    #[test]
    fn standardizes_with_population_std() {
        let t = table(vec![
            row(1.0, "M", "a", 0.0),
            row(2.0, "F", "b", 1.0),
            row(3.0, "M", "c", 1.0),
        ]);
        let p = Preprocessor::fit(&t, &[]).unwrap();
        let (x, y) = p.apply(&t).unwrap();
        // mean 2, std sqrt(2/3)
        let s = (2.0f64 / 3.0).sqrt();
        assert!((x.get(0, 0) + 1.0 / s).abs() < 1e-12);
        assert!((x.get(0, 0) + 1.224744871391589).abs() < 1e-12);
        assert_eq!(x.get(1, 0), 0.0);
        assert!((x.get(2, 0) - 1.224744871391589).abs() < 1e-12);
        assert_eq!(y.unwrap(), vec![0.0, 1.0, 1.0]);
        // F < M
        assert_eq!(x.get(0, 1), 1.0);
        assert_eq!(x.get(1, 1), 0.0);
        // num, sex, 3 categories, 1 race category
        assert_eq!(p.output_dim(), 6);
        assert_eq!(p.feature_names()[2], "cat=a");
    }

    #[test]
    fn constant_column_encodes_to_zero() {
        let t = table(vec![row(5.0, "M", "a", 0.0), row(5.0, "F", "a", 1.0)]);
        let p = Preprocessor::fit(&t, &[]).unwrap();
        let (x, _) = p.apply(&t).unwrap();
        assert_eq!(x.get(0, 0), 0.0);
        assert_eq!(x.get(1, 0), 0.0);
    }

    #[test]
    fn unseen_category_is_all_zeros() {
        let train = table(vec![row(1.0, "M", "a", 0.0), row(2.0, "F", "b", 1.0)]);
        let p = Preprocessor::fit(&train, &["race".to_string()]).unwrap();
        let test = table(vec![row(1.0, "M", "zzz", 0.0)]);
        let (x, _) = p.apply(&test).unwrap();
        assert_eq!(&x.row(0)[2..4], &[0.0, 0.0]);
        assert_eq!(p.output_dim(), 4);
    }

    #[test]
    fn one_hot_block_width_matches_vocabulary() {
        let rows: Vec<_> = (0..430)
            .map(|i| {
                row(
                    i as f64,
                    if i % 2 == 0 { "M" } else { "F" },
                    &format!("c{i}"),
                    0.0,
                )
            })
            .collect();
        let t = table(rows);
        let p = Preprocessor::fit(&t, &["race".to_string()]).unwrap();
        // 1 numeric + 1 binary + 430 one-hot
        assert_eq!(p.output_dim(), 432);
    }

    #[test]
    fn apply_before_fit_fails() {
        let t = table(vec![row(1.0, "M", "a", 0.0)]);
        assert!(matches!(
            Preprocessor::default().apply(&t),
            Err(Error::NotFitted)
        ));
    }

    #[test]
    fn apply_is_bit_reproducible() {
        let t = table(vec![
            row(0.1, "M", "a", 0.0),
            row(0.7, "F", "b", 1.0),
            row(1.3, "M", "a", 1.0),
        ]);
        let p = Preprocessor::fit(&t, &[]).unwrap();
        let a = p.apply(&t).unwrap();
        let b = p.apply(&t).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn three_symbol_binary_is_rejected() {
        let t = table(vec![
            row(1.0, "M", "a", 0.0),
            row(2.0, "F", "a", 0.0),
            row(3.0, "X", "a", 0.0),
        ]);
        assert!(matches!(
            Preprocessor::fit(&t, &[]),
            Err(Error::ColumnType { .. })
        ));
    }
}
