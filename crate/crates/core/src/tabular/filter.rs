use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::schema::{ColumnKind, Schema};
use super::table::Value;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    NotIn,
}

impl Comparator {
    pub fn negate(self) -> Self {
        match self {
            Comparator::Eq => Comparator::Ne,
            Comparator::Ne => Comparator::Eq,
            Comparator::Lt => Comparator::Ge,
            Comparator::Ge => Comparator::Lt,
            Comparator::Le => Comparator::Gt,
            Comparator::Gt => Comparator::Le,
            Comparator::In => Comparator::NotIn,
            Comparator::NotIn => Comparator::In,
        }
    }

    fn is_ordering(self) -> bool {
        matches!(
            self,
            Comparator::Lt | Comparator::Le | Comparator::Gt | Comparator::Ge
        )
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::In => "in",
            Comparator::NotIn => "not_in",
        }
    }
}

impl FromStr for Comparator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "=" | "==" | "eq" => Comparator::Eq,
            "!=" | "<>" | "ne" => Comparator::Ne,
            "<" | "lt" => Comparator::Lt,
            "<=" | "le" => Comparator::Le,
            ">" | "gt" => Comparator::Gt,
            ">=" | "ge" => Comparator::Ge,
            "in" => Comparator::In,
            "not_in" | "!in" => Comparator::NotIn,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown comparator `{other}`"
                )))
            }
        })
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `column op value`. Set comparators carry several values, the others one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub column: String,
    pub op: Comparator,
    pub values: Vec<Value>,
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Sym(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Sym(s)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Num(v)
    }
}

impl Clause {
    pub fn new(column: impl Into<String>, op: Comparator, value: impl Into<Value>) -> Self {
        Self {
            column: column.into(),
            op,
            values: vec![value.into()],
        }
    }

    pub fn set(column: impl Into<String>, op: Comparator, values: Vec<Value>) -> Self {
        Self {
            column: column.into(),
            op,
            values,
        }
    }

    /// Parses `COL OP VAL` from three command-line tokens. For `in`/`not_in`
    /// the value is a comma separated list.
    pub fn parse(column: &str, op: &str, value: &str) -> Result<Self> {
        let op: Comparator = op.parse()?;
        let values = match op {
            Comparator::In | Comparator::NotIn => value
                .split(',')
                .map(|v| Value::Sym(v.trim().to_string()))
                .collect(),
            _ => vec![Value::Sym(value.trim().to_string())],
        };
        Ok(Self::set(column.trim(), op, values))
    }

    /// Parses `COL=VAL`, the shape of a protected-group flag.
    pub fn parse_equality(spec: &str) -> Result<Self> {
        let (col, val) = spec
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("expected COL=VAL, got `{spec}`")))?;
        Self::parse(col, "=", val)
    }

    pub fn negate(&self) -> Self {
        Self {
            column: self.column.clone(),
            op: self.op.negate(),
            values: self.values.clone(),
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "{} {} {}", self.column, self.op, vals.join(","))
    }
}

/// Conjunction of clauses. The empty condition matches every row.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterCondition {
    pub clauses: Vec<Clause>,
}

impl FilterCondition {
    pub fn new(clauses: Vec<Clause>) -> Self {
        Self { clauses }
    }

    pub fn single(clause: Clause) -> Self {
        Self {
            clauses: vec![clause],
        }
    }

    pub fn and(&self, other: &FilterCondition) -> Self {
        let mut clauses = self.clauses.clone();
        clauses.extend(other.clauses.iter().cloned());
        Self { clauses }
    }

    /// Negation of a single-clause condition.
    pub fn negate_single(&self) -> Result<Self> {
        match self.clauses.as_slice() {
            [c] => Ok(Self::single(c.negate())),
            _ => Err(Error::InvalidArgument(format!(
                "only a single-clause condition can be negated, got {} clauses",
                self.clauses.len()
            ))),
        }
    }

    pub fn columns(&self) -> impl Iterator<Item = &str> {
        self.clauses.iter().map(|c| c.column.as_str())
    }

    pub(crate) fn compile(&self, schema: &Schema) -> Result<Compiled> {
        let clauses = self
            .clauses
            .iter()
            .map(|c| compile_clause(c, schema))
            .collect::<Result<_>>()?;
        Ok(Compiled { clauses })
    }
}

impl fmt::Display for FilterCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return f.write_str("true");
        }
        let parts: Vec<String> = self.clauses.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(" and "))
    }
}

pub(crate) struct Compiled {
    clauses: Vec<CompiledClause>,
}

struct CompiledClause {
    index: usize,
    op: Comparator,
    values: Vec<Value>,
}

impl Compiled {
    pub(crate) fn matches(&self, row: &[Value]) -> bool {
        self.clauses.iter().all(|c| c.matches(&row[c.index]))
    }
}

impl CompiledClause {
    fn matches(&self, cell: &Value) -> bool {
        if cell.is_missing() {
            return false;
        }
        match self.op {
            Comparator::Eq => cell == &self.values[0],
            Comparator::Ne => cell != &self.values[0],
            Comparator::In => self.values.contains(cell),
            Comparator::NotIn => !self.values.contains(cell),
            op => {
                let (Some(x), Some(v)) = (cell.as_f64(), self.values[0].as_f64()) else {
                    return false;
                };
                match op {
                    Comparator::Lt => x < v,
                    Comparator::Le => x <= v,
                    Comparator::Gt => x > v,
                    Comparator::Ge => x >= v,
                    _ => unreachable!(),
                }
            }
        }
    }
}

fn compile_clause(clause: &Clause, schema: &Schema) -> Result<CompiledClause> {
    let index = schema.index_of(&clause.column)?;
    let kind = schema.columns()[index].kind;
    let type_err = |message: String| Error::ColumnType {
        column: clause.column.clone(),
        message,
    };
    let expected = match clause.op {
        Comparator::In | Comparator::NotIn => None,
        _ => Some(1),
    };
    if clause.values.is_empty() || expected.is_some_and(|n| clause.values.len() != n) {
        return Err(type_err(format!(
            "comparator `{}` got {} values",
            clause.op,
            clause.values.len()
        )));
    }
    if clause.op.is_ordering() && kind != ColumnKind::Numeric {
        return Err(type_err(format!(
            "ordering comparator `{}` on a non-numeric column",
            clause.op
        )));
    }
    let values = clause
        .values
        .iter()
        .map(|v| {
            coerce(v, kind).ok_or_else(|| type_err(format!("value `{v}` does not fit column")))
        })
        .collect::<Result<_>>()?;
    Ok(CompiledClause {
        index,
        op: clause.op,
        values,
    })
}

fn coerce(v: &Value, kind: ColumnKind) -> Option<Value> {
    match (v, kind) {
        (Value::Missing, _) => None,
        (Value::Num(_), ColumnKind::Numeric) => Some(v.clone()),
        (Value::Sym(s), ColumnKind::Numeric) => s.trim().parse().ok().map(Value::Num),
        (Value::Num(x), ColumnKind::Categorical) => Some(Value::Sym(x.to_string())),
        (Value::Sym(_), ColumnKind::Categorical) => Some(v.clone()),
        (Value::Num(_), ColumnKind::Binary) => Some(v.clone()),
        (Value::Sym(s), ColumnKind::Binary) => Value::parse(s, ColumnKind::Binary, false),
    }
}
