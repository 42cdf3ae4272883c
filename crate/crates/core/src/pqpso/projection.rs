//! Learning a linear dimension-reduction matrix with the swarm.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::swarm::{pqpso_minimize_seeded, PqpsoConfig, TraceRow};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Class centroids of `x`, one row per class. Classes without samples get `None`.
pub fn class_centroids(x: &DMatrix<f64>, labels: &[usize], n_classes: usize) -> Vec<Option<Vec<f64>>> {
    let d = x.ncols();
    let mut sums = vec![vec![0.0; d]; n_classes];
    let mut counts = vec![0usize; n_classes];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(x.row(i).iter()) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| (c > 0).then(|| s.into_iter().map(|v| v / c as f64).collect()))
        .collect()
}

/// Assigns each row of `x` to the nearest centroid (Euclidean), ties to the lowest class.
pub fn nearest_centroid(centroids: &[Option<Vec<f64>>], x: &DMatrix<f64>) -> Vec<usize> {
    x.row_iter()
        .map(|row| {
            let mut best = (usize::MAX, f64::INFINITY);
            for (c, cen) in centroids.iter().enumerate() {
                if let Some(cen) = cen {
                    let d: f64 = row.iter().zip(cen).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d < best.1 {
                        best = (c, d);
                    }
                }
            }
            best.0
        })
        .collect()
}

/// Fraction of rows whose predicted class matches the truth.
pub fn accuracy(truth: &[usize], pred: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    truth.iter().zip(pred).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

/// Splits row indices into (train, validation), stratified by class.
///
/// About `fraction` of each class goes to validation, but every class keeps
/// at least one training row.
pub fn stratified_split(fm: &FeatureMatrix, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::BadConfig(format!("validation fraction {fraction} not in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for c in 0..fm.n_classes() {
        let mut rows: Vec<usize> = (0..fm.n_samples()).filter(|&i| fm.labels[i] == c).collect();
        rows.shuffle(&mut rng);
        let n_val = ((rows.len() as f64 * fraction).round() as usize).min(rows.len().saturating_sub(1));
        val.extend_from_slice(&rows[..n_val]);
        train.extend_from_slice(&rows[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

/// Learned projection and its search trace.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    /// `dims x d_out`; features are projected as `X P`.
    pub matrix: DMatrix<f64>,
    /// Validation error `1 - accuracy` of the nearest-centroid classifier.
    pub cost: f64,
    pub trace: Vec<TraceRow>,
}

/// Searches for a `dims x d_out` projection in `[-1, 1]` that minimizes the
/// nearest-centroid validation error.
///
/// Each particle is the row-major flattening of a candidate matrix. The
/// truncated identity is always one of the initial particles.
pub fn learn_projection(
    train: &FeatureMatrix,
    validation: &FeatureMatrix,
    d_out: usize,
    cfg: &PqpsoConfig,
) -> Result<ProjectionResult> {
    let dims = train.n_features();
    if d_out == 0 || d_out > dims {
        return Err(Error::BadConfig(format!("d_out {d_out} must be in 1..={dims}")));
    }
    if validation.n_features() != dims {
        return Err(Error::BadSplit("train and validation have different feature counts".into()));
    }
    if validation.n_samples() == 0 {
        return Err(Error::BadSplit("validation split is empty".into()));
    }
    let counts = train.class_counts();
    for &l in &validation.labels {
        let name = validation.class_names.get(l);
        let in_train = name
            .and_then(|n| train.class_names.iter().position(|c| c == n))
            .map(|c| counts[c] > 0)
            .unwrap_or(false);
        if !in_train {
            return Err(Error::BadSplit(format!(
                "class `{}` has no training samples",
                name.map(String::as_str).unwrap_or("?")
            )));
        }
    }
    // Map validation labels into the training label space.
    let val_labels: Vec<usize> = validation
        .labels
        .iter()
        .map(|&l| {
            let name = &validation.class_names[l];
            train.class_names.iter().position(|c| c == name).expect("checked above")
        })
        .collect();
    let m = train.n_classes();

    let cost = |flat: &[f64]| -> f64 {
        let p = DMatrix::from_row_slice(dims, d_out, flat);
        let tr = &train.data * &p;
        let va = &validation.data * &p;
        let centroids = class_centroids(&tr, &train.labels, m);
        1.0 - accuracy(&val_labels, &nearest_centroid(&centroids, &va))
    };
    let identity: Vec<f64> = (0..dims * d_out)
        .map(|k| if k / d_out == k % d_out { 1.0 } else { 0.0 })
        .collect();
    let res = pqpso_minimize_seeded(cost, dims * d_out, -1.0, 1.0, cfg, &[identity])?;
    Ok(ProjectionResult {
        matrix: DMatrix::from_row_slice(dims, d_out, &res.best_position),
        cost: res.best_cost,
        trace: res.trace,
    })
}
