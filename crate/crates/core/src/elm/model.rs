//! Training sets, input standardization and the on-disk model format.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::helm::ElmModel;
use super::single::SingleElm;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::{column_stats, standardize};

/// Current model file format.
pub const FORMAT_VERSION: u32 = 1;

/// Features, 0-based labels and the class count.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub x: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl TrainingSet {
    pub fn new(x: DMatrix<f64>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Empty("training set"));
        }
        if labels.len() != x.nrows() {
            return Err(Error::BadInput(format!("{} labels for {} rows", labels.len(), x.nrows())));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::BadInput(format!("label {l} outside {n_classes} classes")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadInput("non-finite feature value".into()));
        }
        Ok(Self { x, labels, n_classes })
    }

    pub fn from_features(fm: &FeatureMatrix) -> Result<Self> {
        Self::new(fm.data.clone(), fm.labels.clone(), fm.n_classes())
    }

    /// One-hot target matrix `T`.
    pub fn targets(&self) -> DMatrix<f64> {
        super::solve::one_hot(&self.labels, self.n_classes)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }
}

/// Per-column z-scoring learned on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let (mean, scale) = column_stats(x);
        Self { mean, scale }
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.dims() {
            return Err(Error::BadInput(format!(
                "model expects {} features, got {}",
                self.dims(),
                x.ncols()
            )));
        }
        Ok(standardize(x, &self.mean, &self.scale))
    }
}

/// Predicted classes and the raw score matrix `Y` (`N x M`).
#[derive(Debug, Clone)]
pub struct Prediction {
    pub classes: Vec<usize>,
    pub scores: DMatrix<f64>,
}

/// Row-wise argmax, ties to the lowest class.
pub fn argmax_rows(scores: &DMatrix<f64>) -> Vec<usize> {
    scores
        .row_iter()
        .map(|r| {
            let mut best = 0;
            for j in 1..r.len() {
                if r[j] > r[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Either kind of trained classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Elm(SingleElm),
    Helm(ElmModel),
}

impl TrainedModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Prediction> {
        match self {
            TrainedModel::Elm(m) => m.predict(x),
            TrainedModel::Helm(m) => m.predict(x),
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            TrainedModel::Elm(m) => m.output.ncols(),
            TrainedModel::Helm(m) => m.output.ncols(),
        }
    }
}

/// JSON model document: format version, class names and the model itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub class_names: Vec<String>,
    #[serde(flatten)]
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(model: TrainedModel, class_names: Vec<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            class_names,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(s)?;
        if f.format_version != FORMAT_VERSION {
            return Err(Error::BadInput(format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                f.format_version
            )));
        }
        if f.class_names.len() != f.model.n_classes() {
            return Err(Error::BadInput("class name count does not match the output layer".into()));
        }
        Ok(f)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Serde helpers storing matrices as row-major nested arrays.
pub(crate) mod rows {
    use nalgebra::DMatrix;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::{from_rows, to_rows};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let r = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&r).ok_or_else(|| D::Error::custom("ragged or empty matrix"))
    }

    pub mod list {
        use super::*;

        pub fn serialize<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
            ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<f64>>, D::Error> {
            Vec::<Vec<Vec<f64>>>::deserialize(d)?
                .iter()
                .map(|r| from_rows(r).ok_or_else(|| D::Error::custom("ragged or empty matrix")))
                .collect()
        }
    }
}
