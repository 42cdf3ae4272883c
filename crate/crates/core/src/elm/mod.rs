//! Extreme learning machine classifiers.
//!
//! [`SingleElm`] is the classic single-hidden-layer network with random
//! input weights and a closed-form ridge output layer. [`ElmModel`] is the
//! hierarchical variant trained by [`helm_train`]. Both accept class
//! imbalance weights from [`make_weights`].

mod fista;
mod helm;
mod model;
mod single;
mod solve;
mod weights;

pub use fista::{sparse_least_squares, FistaOptions, SparseSolution};
pub use helm::{helm_train, helm_train_with_diagnostics, ElmModel, HelmConfig, HelmDiagnostics};
pub use model::{argmax_rows, ModelFile, Prediction, Standardizer, TrainedModel, TrainingSet, FORMAT_VERSION};
pub use single::{ElmConfig, SingleElm};
pub use solve::{one_hot, solve_output_weights, Branch};
pub use weights::{class_weights, make_weights, WeightScheme};
