use super::optim::momentum_descent;
use super::scorer::{RiskScorer, ScorerKind};
use super::{check_training_data, TrainConfig};
use crate::error::Result;
use crate::linalg::{dot, Matrix};

/// Mean hinge loss on `{-1, +1}` targets plus `l2/2 * |w|^2`, with a
/// subgradient written into `grad`. Parameters are `[w_1 .. w_d, b]`.
pub fn hinge_objective(params: &[f64], x: &Matrix, y: &[f64], l2: f64, grad: &mut [f64]) -> f64 {
    let d = x.cols();
    let (w, b) = (&params[..d], params[d]);
    let n = x.rows() as f64;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for (row, &yi) in x.iter_rows().zip(y) {
        let t = 2.0 * yi - 1.0;
        let margin = t * (dot(w, row) + b);
        if margin < 1.0 {
            loss += 1.0 - margin;
            for (g, v) in grad[..d].iter_mut().zip(row) {
                *g -= t * v;
            }
            grad[d] -= t;
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    loss /= n;
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    for (g, v) in grad[..d].iter_mut().zip(w) {
        *g += l2 * v;
    }
    loss
}

/// Linear SVM by subgradient descent from zero weights. Scores are raw
/// signed margins with a default threshold of 0.
pub fn train_linear_svm(x: &Matrix, y: &[f64], cfg: &TrainConfig) -> Result<RiskScorer> {
    check_training_data(x, y)?;
    let d = x.cols();
    let mut params = vec![0.0; d + 1];
    momentum_descent(&mut params, cfg, |p, g| hinge_objective(p, x, y, cfg.l2, g))?;
    let mut scorer = RiskScorer::from_params(ScorerKind::LinearSvm, &[d, 1], &params)?;
    scorer.config = Some(cfg.clone());
    Ok(scorer)
}
