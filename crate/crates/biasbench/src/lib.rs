//! Cross-dataset evaluation and bias-audit harness for binary text
//! classification.
//!
//! The pipeline mirrors a common evaluation methodology for short-text
//! classifiers: clean raw labeled corpora, harmonize labels to a binary
//! scheme, run stratified cross-validation over a hyperparameter grid,
//! evaluate the top models on the *other* datasets, and analyze how the
//! score drop relates to out-of-vocabulary rates. A dataset-expansion
//! simulator (keyword-driven retrieval with automatic labeling) and a
//! hypergeometric contamination estimator support auditing expansion-induced
//! label bias.

pub mod cleaning;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod dqe;
mod error;
pub mod evaluate;
pub mod model;
pub mod stats;
pub mod synth;
mod util;
pub mod vectorize;

pub use error::{Error, Result};
