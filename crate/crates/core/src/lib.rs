//! Per-annotator classifiers over fixed text embeddings, label aggregation
//! into subtask targets, and hard-label and soft-label scoring.

pub mod aggregate;
pub mod classifiers;
pub mod corpus;
pub mod embed_store;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod seed;
pub mod synthetic;

pub use error::{Error, Result};
