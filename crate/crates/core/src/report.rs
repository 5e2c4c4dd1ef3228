//! Run reports: a JSON document plus one CSV per table block.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fairness::PipelineReport;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A named table rendered both inside `report.json` and as `<name>.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableBlock {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl TableBlock {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.columns.len(),
                got: row.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell_text))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub command: String,
    pub tool_version: String,
    /// Everything needed to rerun the command.
    pub config: Value,
    /// Scalar and nested results that are not tables.
    pub metrics: Value,
    pub tables: BTreeMap<String, TableBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ReportDocument {
    pub fn new(command: impl Into<String>, config: Value) -> Self {
        Self {
            command: command.into(),
            tool_version: TOOL_VERSION.to_string(),
            config,
            metrics: Value::Object(Default::default()),
            tables: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_metrics(mut self, metrics: Value) -> Self {
        self.metrics = metrics;
        self
    }

    pub fn add_table(&mut self, name: &str, block: TableBlock) -> Result<()> {
        let valid = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
        if !valid {
            return Err(Error::InvalidArgument(format!("bad table name `{name}`")));
        }
        if name == "report" {
            return Err(Error::InvalidArgument(
                "table name `report` is reserved".into(),
            ));
        }
        self.tables.insert(name.to_string(), block);
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Writes `report.json` and `<table>.csv` for every table into `dir`
/// (created if missing). Returns the written paths.
pub fn emit_report(doc: &ReportDocument, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json_path = dir.join("report.json");
    fs::write(&json_path, doc.to_json()?).map_err(|e| Error::io(&json_path, e))?;
    let mut written = vec![json_path];
    for (name, block) in &doc.tables {
        let path = dir.join(format!("{name}.csv"));
        block.write_csv(&path)?;
        written.push(path);
    }
    Ok(written)
}

pub fn read_report(dir: &Path) -> Result<ReportDocument> {
    let path = dir.join("report.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// The twelve-row source x group x filter table of a pipeline run.
pub fn ratio_block(report: &PipelineReport) -> TableBlock {
    let mut block = TableBlock::new(["source", "group", "filter", "rows", "positives", "ratio"]);
    for c in &report.ratios {
        block
            .push(vec![
                c.source.as_str().into(),
                c.group.clone().into(),
                c.filter.clone().into(),
                c.rows.into(),
                c.positives.into(),
                c.ratio.into(),
            ])
            .expect("six columns");
    }
    block
}
