//! Evaluation harness: manifests, leave-one-speaker-out folds, metrics,
//! synthetic data and end-to-end experiment runs.

mod experiment;
mod folds;
mod metrics;
mod synth;

pub use experiment::{
    fold_seeds, load_features, round_floats, run_experiment, run_on_features, train_classifier, ClassifierConfig,
    ClassifierKind, DataConfig, FoldResult, FoldSeeds, ReductionConfig, RunArtifacts, RunConfig, RunResult,
    SelectionConfig,
};
pub use folds::{loso_folds, Fold, Manifest, ManifestEntry};
pub use metrics::{compute_metrics, confusion_matrix, correlated_pair_error, imbalance_ratio, EvalReport, PairError};
pub use synth::{synth_imbalanced, two_moons, SynthConfig, SynthPreset};
