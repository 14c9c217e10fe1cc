//! Paragraph-vector embeddings and per-category risk classifiers for legal
//! text, with a human review loop that feeds verdicts back into training.
//!
//! The crate is organized bottom-up:
//!
//! - [`corpus`]: tokenization, vocabulary, noise and subsampling tables,
//!   labeled-record ingestion and splits.
//! - [`embedding`]: PV-DM / PV-DBOW training with negative sampling or
//!   hierarchical softmax, inference for unseen paragraphs, similarity.
//! - [`classify`]: normalized features and one binary classifier per
//!   category with probability calibration.
//! - [`eval`]: confusion counts, metrics, AUC and hyperparameter sweeps.
//! - [`pipeline`]: model registry, document analysis, review feedback,
//!   retraining and report export.
//! - [`server`]: the versioned request/response API over a workspace.

pub mod classify;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod recipe;
pub mod server;
pub mod synthetic;
mod wire;

pub use error::{Error, Result};
