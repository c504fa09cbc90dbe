//! Traceability of content requirements in financial documents.
//!
//! Given annotated training documents and per-type phrase lists, the crate
//! finds, for each information type, the sentences of a new document that
//! address it and flags types that appear to be missing.
//!
//! The stages are:
//!
//! * [`preprocess`]: sentence splitting, entity generalization, stemming;
//! * [`vectorize`] and [`candidates`]: TF-IDF retrieval of candidate sentences;
//! * [`ir_analysis`] and [`ml_analysis`]: per-candidate similarity scores and
//!   random-forest probabilities;
//! * [`selector`]: the final rule-based selection;
//! * [`pipeline`]: training and identification end to end;
//! * [`baseline_eval`]: keyword baseline and evaluation protocols.

pub mod baseline_eval;
pub mod candidates;
pub mod corpus;
pub mod error;
pub mod ir_analysis;
pub mod ml_analysis;
pub mod pipeline;
pub mod preprocess;
pub mod selector;
pub mod vectorize;

pub use error::{Error, Result};
