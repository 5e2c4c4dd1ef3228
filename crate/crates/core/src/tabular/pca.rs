use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Principal components of the population covariance, ordered by decreasing
/// eigenvalue. Each component's largest-magnitude entry is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k x d`, one orthonormal component per row.
    pub components: Matrix,
    /// Variance captured by each component.
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn fit(x: &Matrix, k: usize) -> Result<Self> {
        let (n, d) = (x.rows(), x.cols());
        if k == 0 || k > d {
            return Err(Error::InvalidArgument(format!(
                "PCA dimension {k} must be in 1..={d}"
            )));
        }
        if n < 2 {
            return Err(Error::Degenerate("PCA needs at least 2 rows".into()));
        }

        let mut mean = vec![0.0; d];
        for row in x.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        // upper triangle of sum (x - mean)(x - mean)^T
        let mut cov = vec![0.0; d * d];
        let mut centered = vec![0.0; d];
        for row in x.iter_rows() {
            for ((c, v), m) in centered.iter_mut().zip(row).zip(&mean) {
                *c = v - m;
            }
            for a in 0..d {
                let ca = centered[a];
                if ca == 0.0 {
                    continue;
                }
                let dst = &mut cov[a * d + a..(a + 1) * d];
                for (out, cb) in dst.iter_mut().zip(&centered[a..]) {
                    *out += ca * cb;
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                let v = cov[a * d + b] / n as f64;
                cov[a * d + b] = v;
                cov[b * d + a] = v;
            }
        }
        let trace: f64 = (0..d).map(|a| cov[a * d + a]).sum();
        if trace <= 0.0 {
            return Err(Error::Degenerate("all rows are identical".into()));
        }

        let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &cov));
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let mut components = Matrix::zeros(k, d);
        let mut eigenvalues = Vec::with_capacity(k);
        for (r, &idx) in order.iter().take(k).enumerate() {
            let col = eig.eigenvectors.column(idx);
            let pivot = col
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |best, (i, v)| {
                    if v.abs() > best.1.abs() {
                        (i, *v)
                    } else {
                        best
                    }
                })
                .1;
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            for (dst, v) in components.row_mut(r).iter_mut().zip(col.iter()) {
                *dst = sign * v;
            }
            // tiny negative eigenvalues are round-off
            eigenvalues.push(eig.eigenvalues[idx].max(0.0));
        }
        Ok(Self {
            mean,
            components,
            eigenvalues,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.rows()
    }

    /// Projects centered rows onto the components.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.cols(),
            });
        }
        let k = self.output_dim();
        let mut out = Matrix::zeros(x.rows(), k);
        let mut centered = vec![0.0; self.input_dim()];
        for (i, row) in x.iter_rows().enumerate() {
            for ((c, v), m) in centered.iter_mut().zip(row).zip(&self.mean) {
                *c = v - m;
            }
            for (r, dst) in out.row_mut(i).iter_mut().enumerate() {
                *dst = dot(self.components.row(r), &centered);
            }
        }
        Ok(out)
    }

    /// Maps projected rows back to the input space.
    pub fn reconstruct(&self, z: &Matrix) -> Result<Matrix> {
        if z.cols() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                got: z.cols(),
            });
        }
        let mut out = Matrix::zeros(z.rows(), self.input_dim());
        for (i, zr) in z.iter_rows().enumerate() {
            let dst = out.row_mut(i);
            dst.copy_from_slice(&self.mean);
            for (r, w) in zr.iter().enumerate() {
                for (o, c) in dst.iter_mut().zip(self.components.row(r)) {
                    *o += w * c;
                }
            }
        }
        Ok(out)
    }
}
