use super::optim::momentum_descent;
use super::scorer::{RiskScorer, ScorerKind};
use super::{check_training_data, TrainConfig};
use crate::error::Result;
use crate::linalg::{dot, sigmoid, softplus, Matrix};

/// Mean negative log-likelihood plus `l2/2 * |w|^2` for parameters laid out
/// as `[w_1 .. w_d, b]`. Writes the gradient into `grad` (overwriting it).
pub fn logistic_objective(params: &[f64], x: &Matrix, y: &[f64], l2: f64, grad: &mut [f64]) -> f64 {
    let d = x.cols();
    let (w, b) = (&params[..d], params[d]);
    let n = x.rows() as f64;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for (row, &yi) in x.iter_rows().zip(y) {
        let z = dot(w, row) + b;
        loss += softplus(z) - yi * z;
        let r = sigmoid(z) - yi;
        for (g, v) in grad[..d].iter_mut().zip(row) {
            *g += r * v;
        }
        grad[d] += r;
    }
    grad.iter_mut().for_each(|g| *g /= n);
    loss /= n;
    if l2 > 0.0 {
        loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
        for (g, v) in grad[..d].iter_mut().zip(w) {
            *g += l2 * v;
        }
    }
    loss
}

/// Logistic regression from zero initial weights.
pub fn train_logistic(x: &Matrix, y: &[f64], cfg: &TrainConfig) -> Result<RiskScorer> {
    check_training_data(x, y)?;
    let d = x.cols();
    let mut params = vec![0.0; d + 1];
    momentum_descent(&mut params, cfg, |p, g| {
        logistic_objective(p, x, y, cfg.l2, g)
    })?;
    let mut scorer = RiskScorer::from_params(ScorerKind::Logistic, &[d, 1], &params)?;
    scorer.config = Some(cfg.clone());
    Ok(scorer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::models::auc;

    #[test]
    fn separable_toy_reaches_perfect_auc() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.2, 0.1], [1.0, 1.0], [0.9, 1.2]]).unwrap();
        let y = [0.0, 0.0, 1.0, 1.0];
        let m = train_logistic(&x, &y, &TrainConfig::logistic()).unwrap();
        let scores = m.score_all(&x).unwrap();
        assert_eq!(auc(&scores, &y).unwrap(), 1.0);
        assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));
    }

    #[test]
    fn single_class_is_rejected() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(matches!(
            train_logistic(&x, &[1.0, 1.0], &TrainConfig::logistic()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn huge_learning_rate_reports_divergence() {
        let x = Matrix::from_rows(&[[1e150], [-1e150], [2e150]]).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e200,
            ..TrainConfig::logistic()
        };
        assert!(matches!(
            train_logistic(&x, &[1.0, 0.0, 1.0], &cfg),
            Err(Error::NonFiniteLoss { .. })
        ));
    }

    #[test]
    fn training_is_bit_reproducible() {
        let x = Matrix::from_rows(&[[0.3, 1.0], [1.5, -0.2], [-0.7, 0.4], [0.1, 0.1]]).unwrap();
        let y = [1.0, 0.0, 1.0, 0.0];
        let cfg = TrainConfig::logistic();
        let a = train_logistic(&x, &y, &cfg).unwrap();
        let b = train_logistic(&x, &y, &cfg).unwrap();
        assert_eq!(a.params(), b.params());
    }
}
