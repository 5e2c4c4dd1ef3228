//! Controlled fairness: positive-label parity between a protected group and
//! its complement, measured inside a filter on unprotected columns, and the
//! two synthetic relabeling schemes that repair it.

mod pipeline;
mod synth;

pub use pipeline::{
    ratio_table, run_pipeline, Algorithm, GapSummary, LabelSource, PipelineConfig, PipelineOutcome,
    PipelineReport, RatioCell, StageMetrics, SyntheticSummary,
};
pub use synth::{
    compute_alpha, compute_delta, label_with_model, round_half_up, score_table, synth_risk_adjust,
    synth_risk_flip, Advantaged, SyntheticResult, SCORE_COLUMN,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{ColumnRole, FilterCondition, Schema, Table};

/// Default parity tolerance for the ratio test.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Which rows are compared and how close their ratios must be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessSpec {
    /// Single clause on a protected column, e.g. `race = White`.
    pub protected: FilterCondition,
    /// Conjunction over unprotected columns; empty means "all rows".
    pub filters: FilterCondition,
    pub epsilon: f64,
}

impl FairnessSpec {
    pub fn new(protected: FilterCondition, filters: FilterCondition, epsilon: f64) -> Self {
        Self {
            protected,
            filters,
            epsilon,
        }
    }

    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if self.protected.clauses.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "protected condition must have exactly one clause, got {}",
                self.protected.clauses.len()
            )));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        for col in self.protected.columns() {
            if schema.column(col)?.role != ColumnRole::Protected {
                return Err(Error::InvalidArgument(format!(
                    "`{col}` is not a protected column"
                )));
            }
        }
        for col in self.filters.columns() {
            if schema.column(col)?.role != ColumnRole::Unprotected {
                return Err(Error::InvalidArgument(format!(
                    "filter column `{col}` is not an unprotected column"
                )));
            }
        }
        Ok(())
    }

    /// `filters and protected`.
    pub fn protected_condition(&self) -> FilterCondition {
        self.filters.and(&self.protected)
    }

    /// `filters and not protected`.
    pub fn unprotected_condition(&self) -> Result<FilterCondition> {
        Ok(self.filters.and(&self.protected.negate_single()?))
    }
}

/// The three row groups every algorithm works with.
#[derive(Debug, Clone)]
pub struct Partition {
    /// Filtered rows inside the protected group.
    pub protected: Table,
    /// Filtered rows outside the protected group.
    pub unprotected: Table,
    /// Rows failing the filter.
    pub outside: Table,
}

impl Partition {
    pub fn new(table: &Table, spec: &FairnessSpec) -> Result<Self> {
        spec.validate(table.schema())?;
        Ok(Self {
            protected: table.filter(&spec.protected_condition())?,
            unprotected: table.filter(&spec.unprotected_condition()?)?,
            outside: table.filter_not(&spec.filters)?,
        })
    }
}

/// Ratio test outcome for one labeling of one table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub ratio_p: f64,
    pub ratio_not_p: f64,
    pub count_p: usize,
    pub count_not_p: usize,
    pub positives_p: usize,
    pub positives_not_p: usize,
    pub epsilon: f64,
    pub fair: bool,
}

impl RatioReport {
    pub fn gap(&self) -> f64 {
        (self.ratio_p - self.ratio_not_p).abs()
    }
}

/// Share of rows labeled 1.
pub fn ratio(labeled: &Table) -> Result<f64> {
    if labeled.is_empty() {
        return Err(Error::EmptyGroup("table has no rows".into()));
    }
    Ok(positives(labeled)? as f64 / labeled.len() as f64)
}

pub(crate) fn positives(labeled: &Table) -> Result<usize> {
    Ok(labeled.labels()?.iter().filter(|v| **v == 1.0).count())
}

/// Compares the positive ratios of the filtered protected group and its
/// filtered complement.
pub fn check_fair(labeled: &Table, spec: &FairnessSpec) -> Result<RatioReport> {
    let part = Partition::new(labeled, spec)?;
    ratio_report(&part.protected, &part.unprotected, spec)
}

pub(crate) fn ratio_report(
    protected: &Table,
    unprotected: &Table,
    spec: &FairnessSpec,
) -> Result<RatioReport> {
    if protected.is_empty() {
        return Err(Error::EmptyGroup(format!(
            "no rows match `{}`",
            spec.protected_condition()
        )));
    }
    if unprotected.is_empty() {
        return Err(Error::EmptyGroup(format!(
            "no rows match `{}`",
            spec.unprotected_condition()?
        )));
    }
    let positives_p = positives(protected)?;
    let positives_not_p = positives(unprotected)?;
    let ratio_p = positives_p as f64 / protected.len() as f64;
    let ratio_not_p = positives_not_p as f64 / unprotected.len() as f64;
    Ok(RatioReport {
        ratio_p,
        ratio_not_p,
        count_p: protected.len(),
        count_not_p: unprotected.len(),
        positives_p,
        positives_not_p,
        epsilon: spec.epsilon,
        fair: (ratio_p - ratio_not_p).abs() <= spec.epsilon,
    })
}
