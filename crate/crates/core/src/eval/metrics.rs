//! Recognition metrics: confusion matrix, WAR, UAR, G-mean, IR and
//! correlated-pair error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `min / max` of the class counts.
pub fn imbalance_ratio(counts: &[usize]) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::Empty("class counts"));
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass(c));
    }
    let min = *counts.iter().min().expect("nonempty") as f64;
    let max = *counts.iter().max().expect("nonempty") as f64;
    Ok(min / max)
}

/// `confusion[c1][c2] / confusion[c2][c2]`: how often `c1` is taken for `c2`,
/// relative to the correct hits on `c2`.
pub fn correlated_pair_error(confusion: &[Vec<usize>], c1: usize, c2: usize) -> Result<f64> {
    let m = confusion.len();
    if c1 >= m || c2 >= m {
        return Err(Error::BadInput(format!("class index out of range for {m} classes")));
    }
    let denom = confusion[c2][c2];
    if denom == 0 {
        return Err(Error::Undefined(format!("class {c2} has no correct predictions")));
    }
    Ok(confusion[c1][c2] as f64 / denom as f64)
}

/// Rows are true classes, columns predicted classes.
pub fn confusion_matrix(truth: &[usize], pred: &[usize], n_classes: usize) -> Result<Vec<Vec<usize>>> {
    if truth.len() != pred.len() {
        return Err(Error::BadInput(format!(
            "{} truth labels but {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    let mut cm = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::BadInput(format!("label outside {n_classes} classes")));
        }
        cm[t][p] += 1;
    }
    Ok(cm)
}

/// One pairwise correlated error; `value` is `None` when undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairError {
    pub true_class: String,
    pub predicted_as: String,
    pub value: Option<f64>,
}

/// Metrics for one set of predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub class_names: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
    /// Per-class recall; `None` for classes absent from the truth.
    pub recalls: Vec<Option<f64>>,
    pub war: f64,
    pub uar: f64,
    pub gmean: f64,
    /// IR of the truth counts; `None` if some class is absent.
    pub ir: Option<f64>,
    pub per_pair_errors: Vec<PairError>,
}

impl EvalReport {
    pub fn from_confusion(confusion: Vec<Vec<usize>>, class_names: &[String]) -> Result<Self> {
        let m = confusion.len();
        if class_names.len() != m || confusion.iter().any(|r| r.len() != m) {
            return Err(Error::BadInput("confusion matrix shape does not match class names".into()));
        }
        let counts: Vec<usize> = confusion.iter().map(|r| r.iter().sum()).collect();
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(Error::Empty("predictions"));
        }
        let correct: usize = (0..m).map(|c| confusion[c][c]).sum();
        let recalls: Vec<Option<f64>> = (0..m)
            .map(|c| (counts[c] > 0).then(|| confusion[c][c] as f64 / counts[c] as f64))
            .collect();
        let present: Vec<f64> = recalls.iter().flatten().copied().collect();
        if present.len() < m {
            let absent: Vec<&str> = (0..m)
                .filter(|&c| counts[c] == 0)
                .map(|c| class_names[c].as_str())
                .collect();
            log::warn!("classes absent from truth, excluded from UAR and G-mean: {absent:?}");
        }
        let k = present.len() as f64;
        let uar = present.iter().sum::<f64>() / k;
        let gmean = if present.contains(&0.0) {
            0.0
        } else {
            (present.iter().map(|r| r.ln()).sum::<f64>() / k).exp()
        };
        let mut per_pair_errors = Vec::new();
        for c1 in 0..m {
            for c2 in 0..m {
                if c1 != c2 {
                    per_pair_errors.push(PairError {
                        true_class: class_names[c1].clone(),
                        predicted_as: class_names[c2].clone(),
                        value: correlated_pair_error(&confusion, c1, c2).ok(),
                    });
                }
            }
        }
        Ok(Self {
            n,
            class_names: class_names.to_vec(),
            ir: imbalance_ratio(&counts).ok(),
            confusion,
            recalls,
            war: correct as f64 / n as f64,
            uar,
            gmean,
            per_pair_errors,
        })
    }

    /// Per-class truth counts (confusion row sums).
    pub fn class_counts(&self) -> Vec<usize> {
        self.confusion.iter().map(|r| r.iter().sum()).collect()
    }
}

/// Builds an [`EvalReport`] from 0-based truth and predicted labels.
pub fn compute_metrics(truth: &[usize], pred: &[usize], class_names: &[String]) -> Result<EvalReport> {
    let cm = confusion_matrix(truth, pred, class_names.len())?;
    EvalReport::from_confusion(cm, class_names)
}
