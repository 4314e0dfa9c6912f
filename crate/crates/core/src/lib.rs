//! Harness for binary comment classification ensembles.
//!
//! The pipeline reads a labeled comment corpus, splits it into stratified
//! train/dev/holdout parts, optionally translates the comments through a
//! cached translation service, collects per-model binary predictions from
//! interchange files or a wire endpoint, combines them by hard majority
//! voting and scores the result with macro-averaged precision, recall and
//! F1. Krippendorff's alpha is provided for inter-annotator agreement.
//!
//! Model training and inference are not part of this crate; models are
//! reached only through their prediction files or the wire protocol
//! described in `docs/wire-protocol.md`.

pub mod backends;
pub mod clock;
pub mod corpus;
pub mod ensemble;
pub mod metrics;
pub mod orchestration;
pub mod retry;
pub mod rng;
pub mod translation;
mod types;

pub use types::{Label, LabelError, SubtaskId};
