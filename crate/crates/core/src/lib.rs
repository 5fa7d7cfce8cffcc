//! Multilingual persuasion-technique detection: taxonomy, corpora and
//! augmentation, a hashed n-gram baseline, threshold/vote ensembles,
//! evaluation metrics and regression analysis of per-label results.

pub mod analysis;
pub mod augment;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod model;
pub mod synthetic;
pub mod taxonomy;

pub use corpus::{Corpus, Paragraph, ParagraphId, Provenance, ProvenanceKind, RecipeName, Span};
pub use ensemble::{EnsembleConfig, Threshold};
pub use error::{Error, Result};
pub use metrics::{EvalReport, PredictionSet};
pub use model::{OvrModel, ScoreMatrix};
pub use taxonomy::{Category, Language, Pipeline, Technique, NUM_TECHNIQUES};
