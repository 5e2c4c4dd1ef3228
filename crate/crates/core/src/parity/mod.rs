//! Accuracy-first fairness for groups defined by a protected column:
//! per-group decision thresholds tuned by particle swarm optimization under
//! an equalized-odds penalty, and logistic training with a soft-histogram
//! penalty that pulls the groups' score distributions together.

mod histogram;
mod odds;
mod pso;
mod train;

pub use histogram::{
    distribution_distance, soft_histogram, HistogramConfig, Kernel, ScoreHistogram,
};
pub use odds::{
    equalized_odds_objective, evaluate_thresholds, GroupRates, ThresholdEvaluation, ThresholdSet,
};
pub use pso::{pso_maximize, tune_thresholds_pso, PsoConfig, PsoResult};
pub use train::{equalized_distribution_objective, train_equalized_distribution, FairTrainConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::Table;

/// Mutually exclusive, exhaustive group assignment for the rows of a table.
/// Group 0 is the reference group every other group is compared against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPartition {
    pub names: Vec<String>,
    pub assignment: Vec<usize>,
}

impl GroupPartition {
    pub fn new(names: Vec<String>, assignment: Vec<usize>) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 groups, got {}",
                names.len()
            )));
        }
        if let Some(g) = assignment.iter().find(|g| **g >= names.len()) {
            return Err(Error::InvalidArgument(format!(
                "group index {g} out of range"
            )));
        }
        for (k, name) in names.iter().enumerate() {
            if !assignment.contains(&k) {
                return Err(Error::EmptyGroup(format!("group `{name}` has no rows")));
            }
        }
        Ok(Self { names, assignment })
    }

    /// One group per distinct value of `column`, sorted, with `reference`
    /// (when given) moved to the front.
    pub fn from_column(table: &Table, column: &str, reference: Option<&str>) -> Result<Self> {
        let keys: Vec<String> = table
            .column_values(column)?
            .map(|v| v.to_string())
            .collect();
        let mut names: Vec<String> = keys.clone();
        names.sort();
        names.dedup();
        if let Some(r) = reference {
            let pos = names
                .iter()
                .position(|n| n == r)
                .ok_or_else(|| Error::InvalidArgument(format!("`{column}` has no value `{r}`")))?;
            let name = names.remove(pos);
            names.insert(0, name);
        }
        let assignment = keys
            .iter()
            .map(|k| {
                names
                    .iter()
                    .position(|n| n == k)
                    .expect("name collected above")
            })
            .collect();
        Self::new(names, assignment)
    }

    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Row indices of each group.
    pub fn indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, g) in self.assignment.iter().enumerate() {
            out[*g].push(i);
        }
        out
    }

    /// Splits per-row scores and labels into per-group [`GroupScores`].
    pub fn group_scores(&self, scores: &[f64], labels: &[f64]) -> Result<Vec<GroupScores>> {
        for len in [scores.len(), labels.len()] {
            if len != self.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.len(),
                    got: len,
                });
            }
        }
        self.indices()
            .into_iter()
            .zip(&self.names)
            .map(|(idx, name)| {
                GroupScores::new(
                    name.clone(),
                    idx.iter().map(|&i| scores[i]).collect(),
                    idx.iter().map(|&i| labels[i]).collect(),
                )
            })
            .collect()
    }
}

/// Scores and 0/1 labels of one group; both classes must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScores {
    pub name: String,
    pub scores: Vec<f64>,
    pub labels: Vec<f64>,
}

impl GroupScores {
    pub fn new(name: impl Into<String>, scores: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if scores.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: scores.len(),
                got: labels.len(),
            });
        }
        let pos = labels.iter().filter(|y| **y == 1.0).count();
        if labels.iter().any(|y| *y != 0.0 && *y != 1.0) {
            return Err(Error::InvalidArgument(format!(
                "group `{name}` has non 0/1 labels"
            )));
        }
        if pos == 0 || pos == labels.len() {
            return Err(Error::Degenerate(format!(
                "group `{name}` needs both classes ({pos} positives of {})",
                labels.len()
            )));
        }
        Ok(Self {
            name,
            scores,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Scores of rows with the given label.
    pub fn class_scores(&self, label: f64) -> Vec<f64> {
        self.scores
            .iter()
            .zip(&self.labels)
            .filter(|(_, y)| **y == label)
            .map(|(s, _)| *s)
            .collect()
    }
}
