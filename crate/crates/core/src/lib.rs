//! Auditing and repair tools for binary classifiers on tabular data.
//!
//! The crate is organised around four areas:
//!
//! * [`tabular`]: the schema-tagged [`Table`](tabular::Table), CSV ingestion,
//!   structured row filters, splitting and feature preprocessing (standardization,
//!   one-hot encoding, PCA).
//! * [`models`]: from-scratch logistic regression, MLP and linear SVM risk
//!   scorers trained by full-batch momentum gradient descent, plus AUC and
//!   TPR/FPR metrics.
//! * [`fairness`]: the filtered ratio test ("controlled fairness") and the two
//!   synthetic relabeling algorithms used to retrain a fairer second model.
//! * [`parity`]: per-group threshold tuning with particle swarm optimization and
//!   equalized-distribution training with a Gaussian soft-histogram loss.

pub mod demo;
pub mod error;
pub mod fairness;
pub mod linalg;
pub mod models;
pub mod parity;
pub mod report;
pub mod tabular;

pub use error::{Error, Result};
