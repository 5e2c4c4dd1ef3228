use serde::{Deserialize, Serialize};

use super::{ratio_report, FairnessSpec, Partition, RatioReport};
use crate::error::{Error, Result};
use crate::models::RiskScorer;
use crate::tabular::{
    concatenate, ColumnKind, ColumnRole, ColumnSchema, Preprocessor, Table, Value,
};

/// Name of the column holding first-model scores.
pub const SCORE_COLUMN: &str = "risk_score";

/// Label column name used when a table has none.
const DEFAULT_LABEL: &str = "label";

/// Which filtered group had the higher positive ratio and was relabeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Advantaged {
    Protected,
    NotProtected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticResult {
    /// Relabeled copy of the input, ordered as relabeled group, other
    /// filtered group, then rows outside the filter.
    pub table: Table,
    /// Target positive count for the relabeled group.
    pub alpha: Option<f64>,
    /// Score shift of the risk-adjustment scheme.
    pub delta: Option<f64>,
    /// Labels flipped 1 -> 0 by the flipping scheme.
    pub beta: Option<usize>,
    /// `None` when the input was already fair.
    pub advantaged: Option<Advantaged>,
    pub before: RatioReport,
    pub after: RatioReport,
}

/// Round half up, the rounding applied wherever alpha indexes rows.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

fn score_column() -> ColumnSchema {
    ColumnSchema::new(SCORE_COLUMN, ColumnKind::Numeric, ColumnRole::Ignore)
}

/// Adds (or refreshes) the model score column, leaving labels untouched.
pub fn score_table(table: &Table, model: &RiskScorer, prep: &Preprocessor) -> Result<Table> {
    let (x, _) = prep.apply(table)?;
    let scores = model.score_all(&x)?;
    table.upsert_column(score_column(), scores.into_iter().map(Value::Num).collect())
}

/// Scores every row and replaces its label by `score >= threshold`. A label
/// column named `label` is added when the table has none.
pub fn label_with_model(
    table: &Table,
    model: &RiskScorer,
    threshold: f64,
    prep: &Preprocessor,
) -> Result<Table> {
    let scored = score_table(table, model, prep)?;
    let scores = scored.numeric_column(SCORE_COLUMN)?;
    let labels: Vec<Value> = scores
        .iter()
        .map(|s| Value::Num(if *s >= threshold { 1.0 } else { 0.0 }))
        .collect();
    let label = match scored.schema().label_index() {
        Some(j) => scored.schema().columns()[j].clone(),
        None => ColumnSchema::new(DEFAULT_LABEL, ColumnKind::Binary, ColumnRole::Label),
    };
    scored.upsert_column(label, labels)
}

/// Positive count the advantaged group must have to match the other group's
/// ratio: `|advantaged| * positives(other) / |other|`.
pub fn compute_alpha(
    advantaged_len: usize,
    other_positives: usize,
    other_len: usize,
) -> Result<f64> {
    if other_len == 0 {
        return Err(Error::EmptyGroup("comparison group is empty".into()));
    }
    if other_positives > other_len {
        return Err(Error::InvalidArgument(format!(
            "{other_positives} positives in a group of {other_len}"
        )));
    }
    Ok(advantaged_len as f64 * other_positives as f64 / other_len as f64)
}

/// Score shift `delta` such that `score - delta >= threshold` holds for the
/// `round(alpha)` highest scores (plus any rows tied with the last of them).
///
/// The shift is the gap between `threshold` and the `round(alpha)`-th largest
/// score, nudged down by whole ulps until that score itself still passes
/// the shifted test. With `round(alpha) = 0` no row may pass, so the shift
/// is `max(score) - threshold + 1e-12`.
pub fn compute_delta(scores: &[f64], alpha: f64, threshold: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("no scores".into()));
    }
    if !(alpha >= 0.0 && alpha <= scores.len() as f64) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} outside [0, {}]",
            scores.len()
        )));
    }
    let k = round_half_up(alpha).min(scores.len());
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if k == 0 {
        return Ok(sorted[0] - threshold + 1e-12);
    }
    let pivot = sorted[k - 1];
    let mut delta = pivot - threshold;
    while pivot - delta < threshold {
        delta = next_down(delta);
    }
    Ok(delta)
}

fn next_down(x: f64) -> f64 {
    if x.is_nan() || x == f64::NEG_INFINITY {
        return x;
    }
    if x == 0.0 {
        return -f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits - 1)
    } else {
        f64::from_bits(bits + 1)
    }
}

fn label_name(table: &Table) -> Result<String> {
    let j = table.schema().require_label()?;
    Ok(table.schema().columns()[j].name.clone())
}

struct Groups {
    advantaged: Table,
    other: Table,
    outside: Table,
    which: Advantaged,
}

fn orient(part: Partition, report: &RatioReport) -> Groups {
    if report.ratio_p >= report.ratio_not_p {
        Groups {
            advantaged: part.protected,
            other: part.unprotected,
            outside: part.outside,
            which: Advantaged::Protected,
        }
    } else {
        Groups {
            advantaged: part.unprotected,
            other: part.protected,
            outside: part.outside,
            which: Advantaged::NotProtected,
        }
    }
}

fn unchanged(table: &Table, report: RatioReport) -> SyntheticResult {
    SyntheticResult {
        table: table.clone(),
        alpha: None,
        delta: if report.fair { Some(0.0) } else { None },
        beta: None,
        advantaged: None,
        before: report.clone(),
        after: report,
    }
}

/// Selective risk adjustment. `labeled` must carry first-model labels and the
/// score column (see [`label_with_model`]).
///
/// Inside the filter, the group with the higher positive ratio is relabeled
/// by `score - delta >= threshold`, where `delta` is chosen so that its
/// positive count drops to `round(alpha)`. The other group and the rows
/// outside the filter keep their labels.
pub fn synth_risk_adjust(
    labeled: &Table,
    spec: &FairnessSpec,
    threshold: f64,
) -> Result<SyntheticResult> {
    let part = Partition::new(labeled, spec)?;
    let before = ratio_report(&part.protected, &part.unprotected, spec)?;
    if before.fair {
        return Ok(unchanged(labeled, before));
    }
    let label = label_name(labeled)?;
    let g = orient(part, &before);

    let other_scores = g.other.numeric_column(SCORE_COLUMN)?;
    let other_positives = other_scores.iter().filter(|s| **s >= threshold).count();
    let alpha = compute_alpha(g.advantaged.len(), other_positives, g.other.len())?;
    let scores = g.advantaged.numeric_column(SCORE_COLUMN)?;
    let delta = compute_delta(&scores, alpha, threshold)?;
    let labels = scores
        .iter()
        .map(|s| Value::Num(if s - delta >= threshold { 1.0 } else { 0.0 }))
        .collect();
    let relabeled = g.advantaged.with_column_values(&label, labels)?;

    finish(
        &[relabeled, g.other, g.outside],
        spec,
        before,
        g.which,
        alpha,
        Some(delta),
        None,
    )
}

/// Risk-based flipping. `labeled` must carry the true labels and the score
/// column (see [`score_table`]).
///
/// Inside the filter, the `beta = #positives - round(alpha)` positives of the
/// higher-ratio group with the lowest scores are flipped to 0. Nothing else
/// changes.
pub fn synth_risk_flip(labeled: &Table, spec: &FairnessSpec) -> Result<SyntheticResult> {
    let part = Partition::new(labeled, spec)?;
    let before = ratio_report(&part.protected, &part.unprotected, spec)?;
    if before.fair {
        let mut r = unchanged(labeled, before);
        r.delta = None;
        r.beta = Some(0);
        return Ok(r);
    }
    let label = label_name(labeled)?;
    let g = orient(part, &before);

    let other_positives = super::positives(&g.other)?;
    let alpha = compute_alpha(g.advantaged.len(), other_positives, g.other.len())?;
    let labels = g.advantaged.labels()?;
    let scores = g.advantaged.numeric_column(SCORE_COLUMN)?;

    let mut positive_rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1.0).collect();
    let negative_rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 1.0).collect();
    let target = round_half_up(alpha);
    let beta = positive_rows.len().checked_sub(target).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "cannot reach {target} positives from {} by flipping 1 -> 0",
            positive_rows.len()
        ))
    })?;
    // stable: ties keep table order
    positive_rows.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut flipped_labels = labels.clone();
    for &i in &positive_rows[..beta] {
        flipped_labels[i] = 0.0;
    }
    let order: Vec<usize> = positive_rows
        .iter()
        .chain(&negative_rows)
        .copied()
        .collect();
    let relabeled = g
        .advantaged
        .with_column_values(&label, flipped_labels.into_iter().map(Value::Num).collect())?
        .select_rows(&order);

    finish(
        &[relabeled, g.other, g.outside],
        spec,
        before,
        g.which,
        alpha,
        None,
        Some(beta),
    )
}

fn finish(
    parts: &[Table],
    spec: &FairnessSpec,
    before: RatioReport,
    which: Advantaged,
    alpha: f64,
    delta: Option<f64>,
    beta: Option<usize>,
) -> Result<SyntheticResult> {
    let table = concatenate(parts)?;
    let after = super::check_fair(&table, spec)?;
    Ok(SyntheticResult {
        table,
        alpha: Some(alpha),
        delta,
        beta,
        advantaged: Some(which),
        before,
        after,
    })
}
