//! Bayesian finite mixture models whose cluster centres follow a repulsive
//! point process (Strauss or determinantal), fitted with a
//! Metropolis-within-Gibbs sampler.
//!
//! The sampler splits the centres into allocated and non-allocated points.
//! Non-allocated centres move by birth-death Metropolis-Hastings, allocated
//! centres by a two-scale random walk, and the intensity hyperparameter
//! either by a plain Metropolis step (tractable normalizing constant) or by
//! the exchange algorithm backed by dominated coupling from the past.
//!
//! With the `parallel` feature (on by default) the data-parallel loops
//! (allocation weights, spectral lattice sums, distance KDEs, partition
//! summaries) run on rayon. Results are bitwise identical either way.

pub mod diagnostics;
pub mod elicitation;
pub mod error;
pub mod exec;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod model;
pub mod perfect_sim;
pub mod point_process;
pub mod samplers;

pub use error::{Error, Result};
pub use model::{BoundingBox, Component, DataKind, Dataset, Dispersion, MixtureState, Point, PointConfig};
