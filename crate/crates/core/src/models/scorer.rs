use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TrainConfig;
use crate::error::{Error, Result};
use crate::linalg::{dot, sigmoid, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    Logistic,
    Mlp,
    LinearSvm,
}

impl ScorerKind {
    /// 0.5 for probability outputs, 0 for SVM margins.
    pub fn default_threshold(self) -> f64 {
        match self {
            ScorerKind::Logistic | ScorerKind::Mlp => 0.5,
            ScorerKind::LinearSvm => 0.0,
        }
    }
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lr" | "logistic" => Ok(ScorerKind::Logistic),
            "mlp" => Ok(ScorerKind::Mlp),
            "svm" | "linear_svm" => Ok(ScorerKind::LinearSvm),
            other => Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        }
    }
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScorerKind::Logistic => "logistic",
            ScorerKind::Mlp => "mlp",
            ScorerKind::LinearSvm => "linear_svm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out x in`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    fn param_count(&self) -> usize {
        self.weights.as_slice().len() + self.bias.len()
    }

    pub(crate) fn forward(&self, input: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out.iter_mut().zip(self.weights.iter_rows().zip(&self.bias)) {
            *o = dot(row, input) + b;
        }
    }
}

/// A trained model mapping a feature row to a real score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskScorer {
    pub variant: ScorerKind,
    /// Layer widths from input to output, e.g. `[d, 32, 1]`.
    pub dimensions: Vec<usize>,
    pub layers: Vec<DenseLayer>,
    pub default_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<TrainConfig>,
}

impl RiskScorer {
    /// Single-layer logistic model from explicit weights.
    pub fn logistic(weights: Vec<f64>, bias: f64) -> Self {
        Self::linear(ScorerKind::Logistic, weights, bias)
    }

    /// Single-layer margin model from explicit weights.
    pub fn linear_svm(weights: Vec<f64>, bias: f64) -> Self {
        Self::linear(ScorerKind::LinearSvm, weights, bias)
    }

    fn linear(variant: ScorerKind, weights: Vec<f64>, bias: f64) -> Self {
        let d = weights.len();
        let layer = DenseLayer {
            weights: Matrix::from_vec(1, d, weights).expect("1 x d"),
            bias: vec![bias],
        };
        Self {
            variant,
            dimensions: vec![d, 1],
            layers: vec![layer],
            default_threshold: variant.default_threshold(),
            config: None,
        }
    }

    /// Builds a model from a flat parameter vector laid out layer by layer,
    /// weights (row-major) then biases.
    pub fn from_params(variant: ScorerKind, dimensions: &[usize], params: &[f64]) -> Result<Self> {
        let expected = param_count(dimensions);
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: params.len(),
            });
        }
        let mut layers = Vec::with_capacity(dimensions.len() - 1);
        let mut offset = 0;
        for w in dimensions.windows(2) {
            let (inp, out) = (w[0], w[1]);
            let weights = Matrix::from_vec(out, inp, params[offset..offset + out * inp].to_vec())?;
            offset += out * inp;
            let bias = params[offset..offset + out].to_vec();
            offset += out;
            layers.push(DenseLayer { weights, bias });
        }
        let scorer = Self {
            variant,
            dimensions: dimensions.to_vec(),
            layers,
            default_threshold: variant.default_threshold(),
            config: None,
        };
        scorer.validate()?;
        Ok(scorer)
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layers.iter().map(DenseLayer::param_count).sum());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn input_dim(&self) -> usize {
        self.dimensions[0]
    }

    /// Weights of a single-layer model, or the first layer otherwise.
    pub fn linear_weights(&self) -> (&[f64], f64) {
        let l = &self.layers[0];
        (l.weights.row(0), l.bias[0])
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.dimensions.len() < 2 || *self.dimensions.last().unwrap() != 1 {
            return bad(format!("invalid layer dimensions {:?}", self.dimensions));
        }
        if self.layers.len() != self.dimensions.len() - 1 {
            return bad("layer count does not match dimensions".into());
        }
        for (l, w) in self.layers.iter().zip(self.dimensions.windows(2)) {
            if l.inputs() != w[0] || l.outputs() != w[1] || l.bias.len() != w[1] {
                return bad(format!("layer shape does not match {:?}", self.dimensions));
            }
        }
        match self.variant {
            ScorerKind::Logistic | ScorerKind::LinearSvm if self.layers.len() != 1 => {
                bad(format!("{} model must have a single layer", self.variant))
            }
            ScorerKind::Mlp if self.layers.len() < 2 => {
                bad("mlp needs at least one hidden layer".into())
            }
            _ => Ok(()),
        }
    }

    /// Raw output before the final squashing (the logit, or the SVM margin).
    pub fn logit(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: row.len(),
            });
        }
        let mut current = row.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; layer.outputs()];
            layer.forward(&current, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = v.tanh());
            }
            current = next;
        }
        Ok(current[0])
    }

    /// Score in `[0, 1]` for logistic/MLP, signed margin for the SVM.
    pub fn score(&self, row: &[f64]) -> Result<f64> {
        let z = self.logit(row)?;
        Ok(match self.variant {
            ScorerKind::LinearSvm => z,
            _ => sigmoid(z),
        })
    }

    pub fn score_all(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.cols(),
            });
        }
        x.iter_rows().map(|r| self.score(r)).collect()
    }

    /// 1 iff `score >= threshold`.
    pub fn classify(&self, row: &[f64], threshold: f64) -> Result<u8> {
        Ok(u8::from(self.score(row)? >= threshold))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let scorer: RiskScorer = serde_json::from_str(&text)?;
        scorer.validate()?;
        Ok(scorer)
    }
}

pub(crate) fn param_count(dimensions: &[usize]) -> usize {
    dimensions.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weight_logistic_scores_half() {
        let m = RiskScorer::logistic(vec![0.0; 3], 0.0);
        assert_eq!(m.score(&[1.0, -7.0, 3.0]).unwrap(), 0.5);
        assert_eq!(m.classify(&[1.0, -7.0, 3.0], 0.5).unwrap(), 1);
    }

    #[test]
    fn hand_set_weights() {
        let m = RiskScorer::logistic(vec![1.0, -1.0], 0.0);
        let s = m.score(&[2.0, 1.0]).unwrap();
        assert!((s - 0.7310585786300049).abs() < 1e-15);
    }

    #[test]
    fn classify_thresholds() {
        let m = RiskScorer::logistic(vec![1.0], 0.0);
        let s = m.score(&[0.3]).unwrap();
        assert_eq!(m.classify(&[0.3], s).unwrap(), 1);
        assert_eq!(m.classify(&[0.3], 1.1).unwrap(), 0);
        assert_eq!(m.classify(&[0.3], -0.1).unwrap(), 1);
    }

    #[test]
    fn score_all_matches_per_row() {
        let m = RiskScorer::logistic(vec![0.5, -2.0], 0.1);
        let x = Matrix::from_rows(&[[1.0, 2.0], [0.0, 0.0], [-3.0, 1.0]]).unwrap();
        let all = m.score_all(&x).unwrap();
        for (i, row) in x.iter_rows().enumerate() {
            assert_eq!(all[i], m.score(row).unwrap());
        }
    }

    #[test]
    fn dimension_mismatch() {
        let m = RiskScorer::logistic(vec![0.0; 3], 0.0);
        assert!(matches!(
            m.score(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 1
            })
        ));
        assert!(m.score_all(&Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn default_thresholds() {
        assert_eq!(RiskScorer::logistic(vec![1.0], 0.0).default_threshold, 0.5);
        assert_eq!(
            RiskScorer::linear_svm(vec![1.0], 0.0).default_threshold,
            0.0
        );
    }

    #[test]
    fn params_round_trip_and_validation() {
        let dims = [3, 4, 1];
        let params: Vec<f64> = (0..param_count(&dims)).map(|i| i as f64 * 0.01).collect();
        let m = RiskScorer::from_params(ScorerKind::Mlp, &dims, &params).unwrap();
        assert_eq!(m.params(), params);
        assert!(RiskScorer::from_params(ScorerKind::Logistic, &dims, &params).is_err());
        assert!(RiskScorer::from_params(ScorerKind::Mlp, &[3, 1], &[0.0; 4]).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = RiskScorer::logistic(vec![0.1, 1.0 / 3.0, -2.5e-7], 0.7);
        m.save(&path).unwrap();
        assert_eq!(RiskScorer::load(&path).unwrap(), m);
    }
}
