use serde::{Deserialize, Serialize};

use super::{GroupPartition, HistogramConfig, Kernel};
use crate::error::{Error, Result};
use crate::linalg::{dot, sigmoid, Matrix};
use crate::models::{
    check_training_data, logistic_objective, momentum_descent, RiskScorer, ScorerKind, TrainConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairTrainConfig {
    /// Weight of the likelihood term; `1 - alpha` goes to the histogram term.
    pub alpha: f64,
    pub histogram: HistogramConfig,
    pub optimizer: TrainConfig,
}

impl Default for FairTrainConfig {
    /// Learning rate 1, momentum 0.9, 2000 iterations.
    fn default() -> Self {
        Self {
            alpha: 1.0,
            histogram: HistogramConfig::default(),
            optimizer: TrainConfig {
                learning_rate: 1.0,
                ..TrainConfig::logistic()
            },
        }
    }
}

impl FairTrainConfig {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        self.histogram.validate()?;
        self.optimizer.validate()
    }
}

/// Row bookkeeping shared by every objective evaluation.
struct Layout {
    /// `(group, class)` slot of each row; class 0 is positive.
    slot: Vec<(usize, usize)>,
    counts: Vec<[usize; 2]>,
}

impl Layout {
    fn new(y: &[f64], groups: &GroupPartition) -> Result<Self> {
        if groups.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: groups.len(),
            });
        }
        let mut counts = vec![[0usize; 2]; groups.k()];
        let slot: Vec<(usize, usize)> = groups
            .assignment
            .iter()
            .zip(y)
            .map(|(&g, &yi)| {
                let class = if yi == 1.0 { 0 } else { 1 };
                counts[g][class] += 1;
                (g, class)
            })
            .collect();
        for (name, c) in groups.names.iter().zip(&counts) {
            if c[0] == 0 || c[1] == 0 {
                return Err(Error::Degenerate(format!(
                    "group `{name}` needs both classes ({} positives, {} negatives)",
                    c[0], c[1]
                )));
            }
        }
        Ok(Self { slot, counts })
    }
}

/// Histogram term and its gradient with respect to each row's score.
fn histogram_term(
    scores: &[f64],
    layout: &Layout,
    cfg: &HistogramConfig,
    dscore: &mut [f64],
) -> f64 {
    let bins = cfg.centers.len();
    let k = layout.counts.len();
    let mut hist = vec![[vec![0.0; bins], vec![0.0; bins]]; k];
    for (s, &(g, c)) in scores.iter().zip(&layout.slot) {
        for (b, h) in hist[g][c].iter_mut().enumerate() {
            *h += cfg.weight(*s, b);
        }
    }
    for (h, n) in hist.iter_mut().zip(&layout.counts) {
        for c in 0..2 {
            h[c].iter_mut().for_each(|v| *v /= n[c] as f64);
        }
    }

    // dE/dh for every histogram entry
    let mut coef = vec![[vec![0.0; bins], vec![0.0; bins]]; k];
    let mut loss = 0.0;
    for g in 1..k {
        for c in 0..2 {
            for b in 0..bins {
                let d = hist[0][c][b] - hist[g][c][b];
                loss += d * d;
                coef[0][c][b] += 2.0 * d;
                coef[g][c][b] -= 2.0 * d;
            }
        }
    }

    let inv_var = 1.0 / (cfg.sigma * cfg.sigma);
    for ((s, &(g, c)), ds) in scores.iter().zip(&layout.slot).zip(dscore.iter_mut()) {
        *ds = match cfg.kernel {
            Kernel::Gaussian => {
                let mut acc = 0.0;
                for (b, center) in cfg.centers.iter().enumerate() {
                    let w = cfg.weight(*s, b);
                    acc += coef[g][c][b] * w * (-(s - center) * inv_var);
                }
                acc / layout.counts[g][c] as f64
            }
            Kernel::Rectangular => 0.0,
        };
    }
    loss
}

/// `alpha * (mean NLL + l2 penalty) + (1 - alpha) * histogram distance` for
/// logistic parameters `[w.., b]`, with its gradient written to `grad`.
///
/// At `alpha = 1` this is exactly the plain logistic objective.
pub fn equalized_distribution_objective(
    params: &[f64],
    x: &Matrix,
    y: &[f64],
    groups: &GroupPartition,
    cfg: &FairTrainConfig,
    grad: &mut [f64],
) -> Result<f64> {
    let layout = Layout::new(y, groups)?;
    Ok(objective(params, x, y, &layout, cfg, grad))
}

fn objective(
    params: &[f64],
    x: &Matrix,
    y: &[f64],
    layout: &Layout,
    cfg: &FairTrainConfig,
    grad: &mut [f64],
) -> f64 {
    let nll = logistic_objective(params, x, y, cfg.optimizer.l2, grad);
    if cfg.alpha == 1.0 {
        return nll;
    }
    let d = x.cols();
    grad.iter_mut().for_each(|g| *g *= cfg.alpha);
    let (w, b) = (&params[..d], params[d]);
    let scores: Vec<f64> = x.iter_rows().map(|row| sigmoid(dot(w, row) + b)).collect();
    let mut dscore = vec![0.0; scores.len()];
    let hist = histogram_term(&scores, layout, &cfg.histogram, &mut dscore);
    let beta = 1.0 - cfg.alpha;
    for ((row, s), ds) in x.iter_rows().zip(&scores).zip(&dscore) {
        let dz = beta * ds * s * (1.0 - s);
        if dz == 0.0 {
            continue;
        }
        for (g, v) in grad[..d].iter_mut().zip(row) {
            *g += dz * v;
        }
        grad[d] += dz;
    }
    cfg.alpha * nll + beta * hist
}

/// Logistic regression trained from zero weights on the likelihood plus the
/// group histogram penalty. Group membership is only used here, never at
/// scoring time.
pub fn train_equalized_distribution(
    x: &Matrix,
    y: &[f64],
    groups: &GroupPartition,
    cfg: &FairTrainConfig,
) -> Result<RiskScorer> {
    cfg.validate()?;
    check_training_data(x, y)?;
    let layout = Layout::new(y, groups)?;
    let d = x.cols();
    let mut params = vec![0.0; d + 1];
    momentum_descent(&mut params, &cfg.optimizer, |p, g| {
        objective(p, x, y, &layout, cfg, g)
    })?;
    let mut scorer = RiskScorer::from_params(ScorerKind::Logistic, &[d, 1], &params)?;
    scorer.config = Some(cfg.optimizer.clone());
    Ok(scorer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::train_logistic;
    use crate::parity::distribution_distance;

    fn fixture() -> (Matrix, Vec<f64>, GroupPartition) {
        let rows: Vec<[f64; 3]> = (0..12)
            .map(|i| {
                let t = i as f64;
                [(t * 0.7).sin(), (t * 1.3).cos(), t / 12.0 - 0.5]
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y = vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let groups = GroupPartition::new(
            vec!["a".into(), "b".into()],
            vec![0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1],
        )
        .unwrap();
        (x, y, groups)
    }

    fn wide_bins() -> HistogramConfig {
        HistogramConfig::uniform(10, 0.0, 1.0).with_sigma(0.08)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y, groups) = fixture();
        let cfg = FairTrainConfig {
            alpha: 0.3,
            histogram: wide_bins(),
            ..FairTrainConfig::default()
        };
        let params = [0.8, -1.1, 0.5, 0.2];
        let mut grad = vec![0.0; 4];
        equalized_distribution_objective(&params, &x, &y, &groups, &cfg, &mut grad).unwrap();
        let mut scratch = vec![0.0; 4];
        for j in 0..4 {
            let h = 1e-5;
            let mut p = params;
            p[j] += h;
            let up =
                equalized_distribution_objective(&p, &x, &y, &groups, &cfg, &mut scratch).unwrap();
            p[j] -= 2.0 * h;
            let down =
                equalized_distribution_objective(&p, &x, &y, &groups, &cfg, &mut scratch).unwrap();
            let fd = (up - down) / (2.0 * h);
            let denom = fd.abs().max(grad[j].abs()).max(1e-8);
            assert!(
                (fd - grad[j]).abs() / denom < 1e-3,
                "param {j}: {fd} vs {}",
                grad[j]
            );
        }
    }

    #[test]
    fn value_is_weighted_sum() {
        let (x, y, groups) = fixture();
        let cfg = FairTrainConfig {
            alpha: 0.4,
            histogram: wide_bins(),
            ..FairTrainConfig::default()
        };
        let params = [0.3, 0.2, -0.4, 0.1];
        let mut g = vec![0.0; 4];
        let total =
            equalized_distribution_objective(&params, &x, &y, &groups, &cfg, &mut g).unwrap();
        let nll = logistic_objective(&params, &x, &y, cfg.optimizer.l2, &mut g);
        let model = RiskScorer::logistic(params[..3].to_vec(), params[3]);
        let scores = model.score_all(&x).unwrap();
        let ef = distribution_distance(&groups.group_scores(&scores, &y).unwrap(), &cfg.histogram)
            .unwrap();
        assert!((total - (0.4 * nll + 0.6 * ef)).abs() < 1e-12);
    }

    #[test]
    fn alpha_one_is_plain_logistic() {
        let (x, y, groups) = fixture();
        let cfg = FairTrainConfig {
            optimizer: TrainConfig {
                iterations: 300,
                ..FairTrainConfig::default().optimizer
            },
            ..FairTrainConfig::default()
        };
        let fair = train_equalized_distribution(&x, &y, &groups, &cfg).unwrap();
        let plain = train_logistic(&x, &y, &cfg.optimizer).unwrap();
        for (a, b) in fair.params().iter().zip(plain.params()) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn smaller_alpha_pulls_distributions_together() {
        let (x, y, groups) = fixture();
        let ef = |alpha: f64| {
            let cfg = FairTrainConfig {
                alpha,
                histogram: wide_bins(),
                optimizer: TrainConfig {
                    iterations: 500,
                    learning_rate: 0.5,
                    ..TrainConfig::logistic()
                },
            };
            let m = train_equalized_distribution(&x, &y, &groups, &cfg).unwrap();
            let s = m.score_all(&x).unwrap();
            distribution_distance(&groups.group_scores(&s, &y).unwrap(), &cfg.histogram).unwrap()
        };
        assert!(ef(0.1) < ef(1.0));
    }

    #[test]
    fn rejects_degenerate_groups() {
        let (x, y, _) = fixture();
        let groups = GroupPartition::new(
            vec!["a".into(), "b".into()],
            vec![0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1],
        )
        .unwrap();
        let cfg = FairTrainConfig::default();
        assert!(matches!(
            train_equalized_distribution(&x, &y, &groups, &cfg),
            Err(Error::Degenerate(_))
        ));
        assert!(train_equalized_distribution(&x, &y, &groups, &cfg.with_alpha(1.5)).is_err());
    }
}
