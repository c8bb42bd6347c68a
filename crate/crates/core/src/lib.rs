//! Inference of photography expertise from photo-sharing platform records.
//!
//! The crate is organised along the pipeline it implements:
//!
//! * [`dataset`] ingests user, photo and comment tables and applies the
//!   activity filter and outlier trim.
//! * [`textprep`] normalises raw comment text; [`textfeat`] derives the six
//!   per-comment measures (sentiment, readability, entropy, length).
//! * [`labeler`] assigns ground-truth labels from self-reported occupations.
//! * [`features`] aggregates photo and comment measures per user and
//!   assembles the feature sets used for training.
//! * [`learn`] holds the four classifiers, stratified k-fold
//!   cross-validation and the evaluation metrics.
//! * [`stats`] provides Pearson correlation, one-way ANOVA, two-group
//!   MANOVA (Hotelling's T²) and the class characterization report.
//! * [`pipeline`] and [`report`] orchestrate the steps end to end with
//!   content-addressed caching.
//!
//! Data-parallel loops (trees in a forest, folds in cross-validation,
//! per-comment text processing) go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and plain iterators otherwise. Results are
//! identical either way.

pub mod dataset;
pub mod error;
pub mod features;
pub mod labeler;
pub mod learn;
pub mod matrix;
pub mod par;
pub mod pipeline;
pub mod report;
pub mod resources;
pub mod stats;
pub mod synth;
pub mod textfeat;
pub mod textprep;

pub use error::{Error, Result};
