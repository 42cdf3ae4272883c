//! Single-hidden-layer regularized ELM, optionally sample-weighted.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{argmax_rows, rows, Prediction, Standardizer, TrainingSet};
use super::solve::{solve_output_weights, Branch};
use crate::error::{Error, Result};

/// Hyperparameters of the single-layer ELM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElmConfig {
    /// Hidden layer size `L`.
    pub hidden: usize,
    /// Regularization `C`.
    pub c: f64,
    pub branch: Branch,
    pub seed: u64,
}

impl Default for ElmConfig {
    fn default() -> Self {
        Self {
            hidden: 500,
            c: 1024.0,
            branch: Branch::Auto,
            seed: 0,
        }
    }
}

impl ElmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::BadConfig("hidden size must be at least 1".into()));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::BadConfig(format!("C must be positive and finite, got {}", self.c)));
        }
        Ok(())
    }
}

/// Trained single-layer ELM: `Y = tanh(X Win + b) β` on standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleElm {
    pub config: ElmConfig,
    pub standardizer: Standardizer,
    /// `D x L` random input weights.
    #[serde(with = "rows")]
    pub input_weights: DMatrix<f64>,
    pub biases: Vec<f64>,
    /// `L x M` output weights.
    #[serde(with = "rows")]
    pub output: DMatrix<f64>,
}

impl SingleElm {
    /// Trains on `ts`; `weights` holds the diagonal of `W` (one entry per row) or `None`.
    pub fn train(ts: &TrainingSet, cfg: &ElmConfig, weights: Option<&[f64]>) -> Result<Self> {
        cfg.validate()?;
        if let Some(w) = weights {
            if w.len() != ts.x.nrows() || w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::BadInput("sample weights must be positive, one per row".into()));
            }
        }
        let standardizer = Standardizer::fit(&ts.x);
        let x = standardizer.apply(&ts.x)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let d = x.ncols();
        let input_weights = DMatrix::from_fn(d, cfg.hidden, |_, _| rng.random_range(-1.0..1.0));
        let biases: Vec<f64> = (0..cfg.hidden).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = hidden(&x, &input_weights, &biases);
        let output = solve_output_weights(&h, &ts.targets(), weights, cfg.c, cfg.branch);
        if output.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainError("output weights are not finite".into()));
        }
        Ok(Self {
            config: cfg.clone(),
            standardizer,
            input_weights,
            biases,
            output,
        })
    }

    /// Hidden-layer activations for raw (unstandardized) inputs.
    pub fn hidden(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let z = self.standardizer.apply(x)?;
        Ok(hidden(&z, &self.input_weights, &self.biases))
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Prediction> {
        let scores = self.hidden(x)? * &self.output;
        Ok(Prediction {
            classes: argmax_rows(&scores),
            scores,
        })
    }
}

fn hidden(x: &DMatrix<f64>, w: &DMatrix<f64>, b: &[f64]) -> DMatrix<f64> {
    let mut h = x * w;
    let b = DVector::from_column_slice(b).transpose();
    for mut r in h.row_iter_mut() {
        r += &b;
    }
    h.apply(|v| *v = v.tanh());
    h
}
