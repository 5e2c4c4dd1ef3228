use super::TrainConfig;
use crate::error::{Error, Result};

/// Full-batch heavy-ball descent: `v <- m v - lr g; p <- p + v`.
///
/// `objective` writes the gradient at `params` into its second argument and
/// returns the loss. Returns the loss at the final parameters' last evaluated
/// point (before the final update).
pub fn momentum_descent<F>(params: &mut [f64], cfg: &TrainConfig, mut objective: F) -> Result<f64>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    cfg.validate()?;
    let mut velocity = vec![0.0; params.len()];
    let mut grad = vec![0.0; params.len()];
    let mut loss = f64::NAN;
    for iteration in 0..cfg.iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        loss = objective(params, &mut grad);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss { iteration });
        }
        for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
            *v = cfg.momentum * *v - cfg.learning_rate * g;
            *p += *v;
        }
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_a_quadratic() {
        let cfg = TrainConfig {
            learning_rate: 0.1,
            momentum: 0.5,
            iterations: 500,
            ..TrainConfig::logistic()
        };
        let mut p = vec![5.0, -3.0];
        momentum_descent(&mut p, &cfg, |p, g| {
            g[0] = 2.0 * (p[0] - 1.0);
            g[1] = 2.0 * (p[1] + 2.0);
            (p[0] - 1.0).powi(2) + (p[1] + 2.0).powi(2)
        })
        .unwrap();
        assert!((p[0] - 1.0).abs() < 1e-9);
        assert!((p[1] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn reports_divergence_iteration() {
        let cfg = TrainConfig {
            learning_rate: 10.0,
            momentum: 0.0,
            iterations: 10_000,
            ..TrainConfig::logistic()
        };
        let mut p = vec![1.0];
        let err = momentum_descent(&mut p, &cfg, |p, g| {
            g[0] = 4.0 * p[0].powi(3);
            p[0].powi(4)
        })
        .unwrap_err();
        match err {
            Error::NonFiniteLoss { iteration } => assert!(iteration > 0 && iteration < 100),
            other => panic!("unexpected {other:?}"),
        }
    }
}
