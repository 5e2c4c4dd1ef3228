//! Risk scorers trained from scratch by full-batch momentum gradient descent.
//!
//! All three model families share one representation: a stack of dense
//! layers. Logistic regression and the linear SVM are a single `1 x d` layer
//! (sigmoid output and raw margin respectively); the MLP adds `tanh` hidden
//! layers in front of a sigmoid output unit.

mod logistic;
mod metrics;
mod mlp;
mod optim;
mod scorer;
mod svm;

pub use logistic::{logistic_objective, train_logistic};
pub use metrics::{accuracy, auc, roc_points, tpr_fpr, Confusion, MetricReport};
pub use mlp::{mlp_objective, train_mlp};
pub use optim::momentum_descent;
pub use scorer::{DenseLayer, RiskScorer, ScorerKind};
pub use svm::{hinge_objective, train_linear_svm};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Optimizer and architecture settings shared by every trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub iterations: usize,
    /// Hidden layer widths; only read by the MLP trainer.
    pub hidden_layers: Vec<usize>,
    /// L2 weight on non-bias parameters.
    pub l2: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn logistic() -> Self {
        Self {
            learning_rate: 0.1,
            momentum: 0.9,
            iterations: 2000,
            hidden_layers: Vec::new(),
            l2: 1e-4,
            seed: 0,
        }
    }

    pub fn mlp() -> Self {
        Self {
            hidden_layers: vec![32],
            ..Self::logistic()
        }
    }

    pub fn linear_svm() -> Self {
        Self {
            learning_rate: 0.01,
            l2: 1e-3,
            ..Self::logistic()
        }
    }

    pub fn for_kind(kind: ScorerKind) -> Self {
        match kind {
            ScorerKind::Logistic => Self::logistic(),
            ScorerKind::Mlp => Self::mlp(),
            ScorerKind::LinearSvm => Self::linear_svm(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be >= 1".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "l2 weight must be >= 0, got {}",
                self.l2
            )));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::logistic()
    }
}

/// Trains the requested model family.
pub fn train(kind: ScorerKind, x: &Matrix, y: &[f64], cfg: &TrainConfig) -> Result<RiskScorer> {
    match kind {
        ScorerKind::Logistic => train_logistic(x, y, cfg),
        ScorerKind::Mlp => train_mlp(x, y, cfg),
        ScorerKind::LinearSvm => train_linear_svm(x, y, cfg),
    }
}

/// Shared precondition checks for the supervised trainers.
pub(crate) fn check_training_data(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if y.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 training rows".into(),
        ));
    }
    if let Some(v) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(Error::InvalidArgument(format!("label {v} is not 0/1")));
    }
    let positives = y.iter().filter(|v| **v == 1.0).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}
