//! Point-mass quantum-behaved particle swarm optimization.
//!
//! Each iteration draws a "lucky global" best from the K best personal
//! bests, then moves every coordinate of every particle by sampling a
//! truncated Laplace distribution centred on a random mix of the particle's
//! personal best and the lucky global. Samples never leave the search box.

mod projection;
mod swarm;
mod tld;

pub use projection::{
    accuracy, class_centroids, learn_projection, nearest_centroid, stratified_split, ProjectionResult,
};
pub use swarm::{
    ce_coefficient, lucky_global, lucky_global_index, lucky_global_probabilities, pqpso_minimize,
    pqpso_minimize_seeded, CeSchedule, Member, PqpsoConfig, PqpsoResult, StopReason, SwarmState, TraceRow,
};
pub use tld::{tld_sample, TruncatedLaplace};
