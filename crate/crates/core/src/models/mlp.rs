use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::optim::momentum_descent;
use super::scorer::{param_count, RiskScorer, ScorerKind};
use super::{check_training_data, TrainConfig};
use crate::error::{Error, Result};
use crate::linalg::{sigmoid, softplus, Matrix};

struct LayerOffsets {
    inputs: usize,
    outputs: usize,
    weights: usize,
    bias: usize,
}

fn offsets(dimensions: &[usize]) -> Vec<LayerOffsets> {
    let mut out = Vec::with_capacity(dimensions.len() - 1);
    let mut at = 0;
    for w in dimensions.windows(2) {
        let (inputs, outputs) = (w[0], w[1]);
        out.push(LayerOffsets {
            inputs,
            outputs,
            weights: at,
            bias: at + inputs * outputs,
        });
        at += inputs * outputs + outputs;
    }
    out
}

/// Mean negative log-likelihood of a `tanh`-hidden, sigmoid-output network
/// plus `l2/2` times the squared weights (biases unpenalized). Parameters are
/// laid out as in [`RiskScorer::from_params`]; the gradient comes from
/// backpropagation and is written into `grad`.
pub fn mlp_objective(
    params: &[f64],
    dimensions: &[usize],
    x: &Matrix,
    y: &[f64],
    l2: f64,
    grad: &mut [f64],
) -> f64 {
    let layers = offsets(dimensions);
    let n = x.rows();
    let last = layers.len() - 1;

    // activations[0] is the input batch, activations[l] the output of layer l
    let mut activations = Vec::with_capacity(layers.len() + 1);
    activations.push(DMatrix::from_row_slice(n, x.cols(), x.as_slice()));
    for (l, lo) in layers.iter().enumerate() {
        let w = DMatrix::from_row_slice(lo.outputs, lo.inputs, &params[lo.weights..lo.bias]);
        let bias = &params[lo.bias..lo.bias + lo.outputs];
        let mut z = &activations[l] * w.transpose();
        for (o, mut col) in z.column_iter_mut().enumerate() {
            if l < last {
                col.apply(|v| *v = (*v + bias[o]).tanh());
            } else {
                col.add_scalar_mut(bias[o]);
            }
        }
        activations.push(z);
    }

    let out = &activations[last + 1];
    let mut loss = 0.0;
    let mut delta = DMatrix::zeros(n, 1);
    for i in 0..n {
        let z = out[(i, 0)];
        loss += softplus(z) - y[i] * z;
        delta[(i, 0)] = sigmoid(z) - y[i];
    }

    grad.iter_mut().for_each(|g| *g = 0.0);
    for l in (0..layers.len()).rev() {
        let lo = &layers[l];
        let gw = delta.transpose() * &activations[l];
        for o in 0..lo.outputs {
            for i in 0..lo.inputs {
                grad[lo.weights + o * lo.inputs + i] = gw[(o, i)];
            }
            grad[lo.bias + o] = delta.column(o).sum();
        }
        if l > 0 {
            let w = DMatrix::from_row_slice(lo.outputs, lo.inputs, &params[lo.weights..lo.bias]);
            let mut below = &delta * w;
            below.zip_apply(&activations[l], |b, a| *b *= 1.0 - a * a);
            delta = below;
        }
    }

    let inv_n = 1.0 / n as f64;
    grad.iter_mut().for_each(|g| *g *= inv_n);
    loss *= inv_n;
    if l2 > 0.0 {
        for lo in &layers {
            let w = &params[lo.weights..lo.bias];
            loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
            for (g, v) in grad[lo.weights..lo.bias].iter_mut().zip(w) {
                *g += l2 * v;
            }
        }
    }
    loss
}

/// Seeded Glorot-uniform weights, zero biases.
pub(crate) fn init_params(dimensions: &[usize], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = vec![0.0; param_count(dimensions)];
    for lo in offsets(dimensions) {
        let limit = (6.0 / (lo.inputs + lo.outputs) as f64).sqrt();
        for p in &mut params[lo.weights..lo.bias] {
            *p = rng.gen_range(-limit..limit);
        }
    }
    params
}

/// Feed-forward network with `tanh` hidden layers and a sigmoid output.
pub fn train_mlp(x: &Matrix, y: &[f64], cfg: &TrainConfig) -> Result<RiskScorer> {
    if cfg.hidden_layers.is_empty() || cfg.hidden_layers.contains(&0) {
        return Err(Error::InvalidArgument(
            "mlp needs at least one non-empty hidden layer".into(),
        ));
    }
    check_training_data(x, y)?;
    let mut dimensions = vec![x.cols()];
    dimensions.extend(&cfg.hidden_layers);
    dimensions.push(1);
    let mut params = init_params(&dimensions, cfg.seed);
    momentum_descent(&mut params, cfg, |p, g| {
        mlp_objective(p, &dimensions, x, y, cfg.l2, g)
    })?;
    let mut scorer = RiskScorer::from_params(ScorerKind::Mlp, &dimensions, &params)?;
    scorer.config = Some(cfg.clone());
    Ok(scorer)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learns_xor() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let y = [0.0, 1.0, 1.0, 0.0];
        let cfg = TrainConfig {
            hidden_layers: vec![4],
            l2: 0.0,
            seed: 3,
            ..TrainConfig::mlp()
        };
        let m = train_mlp(&x, &y, &cfg).unwrap();
        for (row, yi) in x.iter_rows().zip(&y) {
            assert_eq!(m.classify(row, 0.5).unwrap() as f64, *yi);
        }
    }

    #[test]
    fn zero_hidden_layers_is_an_error() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let cfg = TrainConfig {
            hidden_layers: vec![],
            ..TrainConfig::mlp()
        };
        assert!(train_mlp(&x, &[0.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn forward_pass_agrees_with_scorer() {
        let dims = [3, 5, 2, 1];
        let params = init_params(&dims, 11);
        let x = Matrix::from_rows(&[[0.5, -1.0, 2.0], [0.0, 0.3, -0.1]]).unwrap();
        let m = RiskScorer::from_params(ScorerKind::Mlp, &dims, &params).unwrap();
        let mut g = vec![0.0; params.len()];
        let y = [1.0, 0.0];
        let loss = mlp_objective(&params, &dims, &x, &y, 0.0, &mut g);
        let expected: f64 = x
            .iter_rows()
            .zip(&y)
            .map(|(r, yi)| {
                let p = m.score(r).unwrap();
                -(yi * p.ln() + (1.0 - yi) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / 2.0;
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn seeded_training_is_bit_reproducible() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let y = [0.0, 1.0, 1.0, 0.0];
        let cfg = TrainConfig {
            iterations: 50,
            ..TrainConfig::mlp()
        };
        assert_eq!(
            train_mlp(&x, &y, &cfg).unwrap().params(),
            train_mlp(&x, &y, &cfg).unwrap().params()
        );
    }
}
