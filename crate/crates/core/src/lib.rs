//! Numerical building blocks for speech emotion recognition.
//!
//! The crate covers an audio front end, spectro-temporal Gabor features,
//! utterance-level functionals, mutual-information and correlation based
//! feature selection, a point-mass quantum-behaved particle swarm optimizer,
//! weighted and hierarchical extreme learning machines, and a
//! leave-one-speaker-out evaluation harness.

pub mod dsp;
pub mod elm;
pub mod error;
pub mod eval;
pub mod extract;
pub mod features;
pub mod gabor;
pub mod functionals;
pub mod linalg;
pub mod pqpso;
pub mod selection;

pub use error::{Error, Result};
pub use features::FeatureMatrix;
