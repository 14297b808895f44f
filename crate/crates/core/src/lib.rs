//! Detection of public development projects from repository metadata.
//!
//! The pipeline ingests project records ([`corpus`]), turns descriptions, URLs
//! and counts into keyword feature vectors ([`features`]), fits and applies
//! C4.5-style decision trees ([`tree`]), scores classifiers and baseline
//! selection strategies ([`eval`]) and routes uncertain tree leaves to human
//! review ([`triage`]).
//!
//! Batch work (featurization, classification, cross-validation folds) runs on
//! rayon when the `parallel` feature is enabled; see [`par`].

pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod par;
pub mod tree;
pub mod triage;

mod class;

pub use class::{Class, Decision};
pub use error::{Error, Result};
