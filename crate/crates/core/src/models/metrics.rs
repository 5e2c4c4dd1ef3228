use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts under the `score >= threshold` rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn count(scores: &[f64], labels: &[f64], threshold: f64) -> Self {
        let mut c = Confusion::default();
        for (s, y) in scores.iter().zip(labels) {
            match (*s >= threshold, *y == 1.0) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn correct(&self) -> usize {
        self.tp + self.tn
    }

    /// `TP / (TP + FN)`, or 0 with no positives.
    pub fn tpr(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `FP / (FP + TN)`, or 0 with no negatives.
    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.correct(), self.total())
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub auc: f64,
    pub threshold: f64,
    pub accuracy: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub counts: Confusion,
}

fn check(scores: &[f64], labels: &[f64]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let pos = labels.iter().filter(|y| **y == 1.0).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counted
/// one half. Computed exactly from a single sort.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // in units of half a pair
    let mut half_pairs: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut p, mut n) = (0u128, 0u128);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1.0 {
                p += 1;
            } else {
                n += 1;
            }
            i += 1;
        }
        half_pairs += 2 * p * neg_below + p * n;
        neg_below += n;
    }
    Ok(half_pairs as f64 / (2 * pos as u128 * neg as u128) as f64)
}

/// ROC staircase as `(fpr, tpr)` points, sweeping the threshold from above
/// the maximum score down past the minimum. Starts at `(0, 0)`, ends at
/// `(1, 1)`.
pub fn roc_points(scores: &[f64], labels: &[f64]) -> Result<Vec<(f64, f64)>> {
    let (pos, neg) = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(points)
}

pub fn accuracy(scores: &[f64], labels: &[f64], threshold: f64) -> f64 {
    Confusion::count(scores, labels, threshold).accuracy()
}

/// Confusion-derived rates at `threshold`, plus the AUC of the scores.
pub fn tpr_fpr(scores: &[f64], labels: &[f64], threshold: f64) -> Result<MetricReport> {
    let auc = auc(scores, labels)?;
    let counts = Confusion::count(scores, labels, threshold);
    Ok(MetricReport {
        auc,
        threshold,
        accuracy: counts.accuracy(),
        tpr: counts.tpr(),
        fpr: counts.fpr(),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_examples() {
        assert_eq!(
            auc(&[0.1, 0.2, 0.8, 0.9], &[0.0, 0.0, 1.0, 1.0]).unwrap(),
            1.0
        );
        assert_eq!(auc(&[0.5; 4], &[0.0, 1.0, 0.0, 1.0]).unwrap(), 0.5);
        assert!(matches!(
            auc(&[0.1, 0.2], &[1.0, 1.0]),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn five_point_set_matches_pair_count() {
        // pairs (pos, neg): pos {0.9, 0.4, 0.6}, neg {0.4, 0.7}
        // 0.9: beats both (2); 0.4: tie with 0.4 (0.5); 0.6: beats 0.4 (1)
        let scores = [0.9, 0.4, 0.4, 0.7, 0.6];
        let labels = [1.0, 1.0, 0.0, 0.0, 1.0];
        assert_eq!(auc(&scores, &labels).unwrap(), 3.5 / 6.0);
    }

    #[test]
    fn extreme_thresholds() {
        let s = [0.2, 0.4, 0.6, 0.8];
        let y = [0.0, 1.0, 0.0, 1.0];
        let low = tpr_fpr(&s, &y, 0.0).unwrap();
        assert_eq!((low.tpr, low.fpr), (1.0, 1.0));
        let high = tpr_fpr(&s, &y, 0.9).unwrap();
        assert_eq!((high.tpr, high.fpr), (0.0, 0.0));
        assert_eq!(high.counts.total(), 4);
    }

    #[test]
    fn ties_at_threshold_are_positive() {
        let c = Confusion::count(&[0.5, 0.5], &[1.0, 0.0], 0.5);
        assert_eq!((c.tp, c.fp), (1, 1));
    }

    #[test]
    fn roc_endpoints() {
        let pts = roc_points(&[0.3, 0.3, 0.9], &[0.0, 1.0, 1.0]).unwrap();
        assert_eq!(pts.first(), Some(&(0.0, 0.0)));
        assert_eq!(pts.last(), Some(&(1.0, 1.0)));
        assert_eq!(pts.len(), 3);
    }
}
