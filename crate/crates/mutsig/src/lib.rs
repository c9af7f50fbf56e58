//! Mutational signature extraction toolkit.
//!
//! Three factorization engines over a non-negative catalog `V` (mutation
//! types by samples): standard NMF with Lee-Seung multiplicative updates,
//! convex NMF (`V ~= V W1 W2`) with Ding-style updates, and the equivalent
//! shallow non-negative autoencoder trained by Adam. Around them sit the
//! evaluation pipeline: NNLS refitting and test error, Hungarian signature
//! matching with average cosine similarity, exposure distance, PAM
//! consensus clustering, bootstrap model-order selection with a paired
//! Wilcoxon stopping rule, and Poisson catalog simulation.
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability, or the `mutsig` binary for the command-line surface.

pub mod aenmf;
pub mod cli;
pub mod cnmf;
pub mod error;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod nmf;
pub mod refit;
pub mod rng;
pub mod select;
pub mod sim;

pub use error::{Error, Result};
pub use matrix::{
    frobenius_loss, init_uniform, FactorModel, FitConfig, Method, MutationCatalog,
    NonNegMatrix, NonNegScheme,
};
