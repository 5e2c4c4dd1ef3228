use serde::{Deserialize, Serialize};

use super::GroupScores;
use crate::error::{Error, Result};
use crate::models::Confusion;

/// Tuned per-group thresholds, in group order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub groups: Vec<String>,
    pub thresholds: Vec<f64>,
    pub lambda: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub group: String,
    pub threshold: f64,
    pub accuracy: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub counts: Confusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEvaluation {
    /// Pooled accuracy over all groups.
    pub accuracy: f64,
    /// Summed TPR and FPR gaps to the reference group.
    pub unfairness: f64,
    pub objective: f64,
    pub groups: Vec<GroupRates>,
}

fn check(groups: &[GroupScores], thresholds: &[f64]) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 groups, got {}",
            groups.len()
        )));
    }
    if thresholds.len() != groups.len() {
        return Err(Error::DimensionMismatch {
            expected: groups.len(),
            got: thresholds.len(),
        });
    }
    Ok(())
}

/// Full breakdown of `accuracy - lambda * unfairness` for one threshold
/// vector. Group 0 is the reference.
pub fn evaluate_thresholds(
    groups: &[GroupScores],
    thresholds: &[f64],
    lambda: f64,
) -> Result<ThresholdEvaluation> {
    check(groups, thresholds)?;
    let rates: Vec<GroupRates> = groups
        .iter()
        .zip(thresholds)
        .map(|(g, &t)| {
            let counts = Confusion::count(&g.scores, &g.labels, t);
            GroupRates {
                group: g.name.clone(),
                threshold: t,
                accuracy: counts.accuracy(),
                tpr: counts.tpr(),
                fpr: counts.fpr(),
                counts,
            }
        })
        .collect();
    let correct: usize = rates.iter().map(|r| r.counts.correct()).sum();
    let total: usize = rates.iter().map(|r| r.counts.total()).sum();
    let accuracy = correct as f64 / total as f64;
    let reference = &rates[0];
    let unfairness: f64 = rates[1..]
        .iter()
        .map(|r| (reference.tpr - r.tpr).abs() + (reference.fpr - r.fpr).abs())
        .sum();
    Ok(ThresholdEvaluation {
        accuracy,
        unfairness,
        objective: accuracy - lambda * unfairness,
        groups: rates,
    })
}

/// `accuracy - lambda * sum_k (|TPR_0 - TPR_k| + |FPR_0 - FPR_k|)`.
pub fn equalized_odds_objective(
    groups: &[GroupScores],
    thresholds: &[f64],
    lambda: f64,
) -> Result<f64> {
    Ok(evaluate_thresholds(groups, thresholds, lambda)?.objective)
}
