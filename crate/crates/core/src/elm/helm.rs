//! Hierarchical ELM: sparse auto-encoder layers, an orthogonal random
//! projection with tanh, and a weighted Tikhonov output layer.
//!
//! The sparse layers are linear. Each one maps `G = [H 1]` through
//! `β = αᵀ`, where `α` sparsely reconstructs `G` from a random projection
//! `A = G β_tmp`. Only the projection layer applies a nonlinearity.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fista::{sparse_least_squares, FistaOptions};
use super::model::{argmax_rows, rows, Prediction, Standardizer, TrainingSet};
use super::solve::{solve_output_weights, Branch};
use super::weights::{make_weights, WeightScheme};
use crate::error::{Error, Result};
use crate::linalg::with_bias_column;

/// Hyperparameters of the hierarchical ELM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HelmConfig {
    /// Sizes of the sparse auto-encoder layers.
    pub sparse_sizes: Vec<usize>,
    /// Width of the orthogonal projection layer.
    pub proj_size: usize,
    /// L1 penalty of the sparse layers.
    pub lambda: f64,
    /// Output-layer regularization `C`.
    pub c: f64,
    pub fista_iters: usize,
    /// Root-mean-square of the projection layer's training pre-activations;
    /// the layer is rescaled to this level before tanh.
    pub projection_scale: f64,
    pub branch: Branch,
    pub seed: u64,
}

impl Default for HelmConfig {
    fn default() -> Self {
        Self {
            sparse_sizes: vec![100, 100],
            proj_size: 500,
            lambda: 1e-3,
            c: 1024.0,
            fista_iters: 50,
            projection_scale: 8.0,
            branch: Branch::Auto,
            seed: 0,
        }
    }
}

impl HelmConfig {
    /// Production-scale layer sizes: 1000 and 1000 sparse units, 20000 projection units.
    pub fn large() -> Self {
        Self {
            sparse_sizes: vec![1000, 1000],
            proj_size: 20000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sparse_sizes.contains(&0) || self.proj_size == 0 {
            return Err(Error::BadConfig("layer sizes must be at least 1".into()));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::BadConfig(format!("C must be positive and finite, got {}", self.c)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::BadConfig(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.projection_scale > 0.0 && self.projection_scale.is_finite()) {
            return Err(Error::BadConfig("projection_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Trained hierarchical ELM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmModel {
    pub config: HelmConfig,
    pub scheme: WeightScheme,
    pub standardizer: Standardizer,
    /// `β_1..β_U`, each `(inputs + 1) x N_i`.
    #[serde(with = "rows::list")]
    pub sparse_layers: Vec<DMatrix<f64>>,
    /// `(N_U + 1) x proj_size` with orthonormal columns (tall) or rows (wide).
    #[serde(with = "rows")]
    pub projection: DMatrix<f64>,
    /// Multiplier applied before tanh in the projection layer.
    pub projection_gain: f64,
    /// `(proj_size + 1) x M`.
    #[serde(with = "rows")]
    pub output: DMatrix<f64>,
}

/// Training by-products kept for inspection.
#[derive(Debug, Clone)]
pub struct HelmDiagnostics {
    /// FISTA objective trace of every sparse layer.
    pub fista_objectives: Vec<Vec<f64>>,
    /// Number of projection matrices discarded for rank deficiency.
    pub projection_retries: usize,
}

const MAX_PROJECTION_TRIES: u64 = 8;

/// Trains a hierarchical ELM with the given class weighting.
pub fn helm_train(ts: &TrainingSet, cfg: &HelmConfig, scheme: WeightScheme) -> Result<ElmModel> {
    helm_train_with_diagnostics(ts, cfg, scheme).map(|(m, _)| m)
}

pub fn helm_train_with_diagnostics(
    ts: &TrainingSet,
    cfg: &HelmConfig,
    scheme: WeightScheme,
) -> Result<(ElmModel, HelmDiagnostics)> {
    cfg.validate()?;
    let weights = match scheme {
        WeightScheme::None => None,
        s => Some(make_weights(&ts.labels, ts.n_classes, s)?),
    };
    let standardizer = Standardizer::fit(&ts.x);
    let mut h = standardizer.apply(&ts.x)?;
    let rng_for = |stream: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
        r.set_stream(stream);
        r
    };

    let opts = FistaOptions {
        lambda: cfg.lambda,
        iters: cfg.fista_iters,
        ..FistaOptions::default()
    };
    let mut sparse_layers = Vec::with_capacity(cfg.sparse_sizes.len());
    let mut fista_objectives = Vec::new();
    for (i, &size) in cfg.sparse_sizes.iter().enumerate() {
        let g = with_bias_column(&h);
        let mut rng = rng_for(i as u64);
        let beta_tmp = DMatrix::from_fn(g.ncols(), size, |_, _| rng.random_range(-1.0..1.0));
        let a = &g * &beta_tmp;
        let sol = sparse_least_squares(&a, &g, &opts);
        let beta = sol.alpha.transpose();
        h = &g * &beta;
        fista_objectives.push(sol.objective);
        sparse_layers.push(beta);
    }

    let g = with_bias_column(&h);
    let base = cfg.sparse_sizes.len() as u64;
    let mut projection = None;
    let mut retries = 0;
    for attempt in 0..MAX_PROJECTION_TRIES {
        let mut rng = rng_for(base + attempt);
        let r = DMatrix::from_fn(g.ncols(), cfg.proj_size, |_, _| rng.random_range(-1.0..1.0));
        match orthonormal_basis(r) {
            Some(p) => {
                projection = Some(p);
                break;
            }
            None => {
                log::warn!("projection matrix rank deficient on attempt {attempt}, regenerating");
                retries += 1;
            }
        }
    }
    let projection = projection.ok_or_else(|| {
        Error::DomainError(format!("no full-rank projection after {MAX_PROJECTION_TRIES} attempts"))
    })?;
    let pre = &g * &projection;
    let rms = (pre.norm_squared() / pre.len() as f64).sqrt();
    let projection_gain = if rms > 0.0 { cfg.projection_scale / rms } else { 1.0 };
    let hp = with_bias_column(&pre.map(|v| (v * projection_gain).tanh()));

    let output = solve_output_weights(&hp, &ts.targets(), weights.as_deref(), cfg.c, cfg.branch);
    if output.iter().any(|v| !v.is_finite()) {
        return Err(Error::DomainError("output weights are not finite".into()));
    }
    let model = ElmModel {
        config: cfg.clone(),
        scheme,
        standardizer,
        sparse_layers,
        projection,
        projection_gain,
        output,
    };
    Ok((
        model,
        HelmDiagnostics {
            fista_objectives,
            projection_retries: retries,
        },
    ))
}

/// Orthonormal factor of the compact SVD: `U₁` for tall input, `V₁ᵀ` for wide.
/// Returns `None` when the matrix is numerically rank deficient.
fn orthonormal_basis(r: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (rows, cols) = r.shape();
    let tall = rows >= cols;
    let svd = r.svd(tall, !tall);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * f64::EPSILON * rows.max(cols) as f64) {
        return None;
    }
    if tall {
        svd.u
    } else {
        svd.v_t
    }
}

impl ElmModel {
    /// Activations of the projection layer, `[tanh(gain · G β) 1]`.
    pub fn features(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut h = self.standardizer.apply(x)?;
        for beta in &self.sparse_layers {
            h = with_bias_column(&h) * beta;
        }
        let pre = with_bias_column(&h) * &self.projection;
        Ok(with_bias_column(&pre.map(|v| (v * self.projection_gain).tanh())))
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Prediction> {
        let scores = self.features(x)? * &self.output;
        Ok(Prediction {
            classes: argmax_rows(&scores),
            scores,
        })
    }

    /// Max-abs deviation of `βᵀβ` (tall) or `ββᵀ` (wide) from the identity.
    pub fn orthonormality_residual(&self) -> f64 {
        let p = &self.projection;
        let gram = if p.nrows() >= p.ncols() { p.tr_mul(p) } else { p * p.transpose() };
        let n = gram.nrows();
        (gram - DMatrix::identity(n, n)).amax()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.sparse_layers.iter().map(|b| b.ncols()).collect();
        s.push(self.projection.ncols());
        s.push(self.output.ncols());
        s
    }
}
