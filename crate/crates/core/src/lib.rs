//! SAMLP core: a semi-automatic machine-learning pipeline for classifying
//! Twitter accounts as bot or human from profile features alone.
//!
//! The crate covers the full path from raw API user objects to a trained,
//! threshold-calibrated, explainable model artifact:
//!
//! 1. [`profile`] / [`dataset`] — parse v1.1/v2 user objects, join labels.
//! 2. [`features`] — the 49-feature profile representation.
//! 3. [`split`] — stratified holdout, K-fold plans, under-sampling.
//! 4. [`lasso`] — L1 feature selection with repeated balanced voting.
//! 5. [`model`] — linear SVM, random forest, gradient-boosted trees.
//! 6. [`tuner`] — random-search model selection and threshold calibration.
//! 7. [`artifact`] — serialized model bundles with schema pinning.
//! 8. [`explain`] — Shapley-value attributions and summary plots.
//! 9. [`synth`] — synthetic labeled corpora for benchmarks and tests.
//! 10. [`harness`] — multi-dataset evaluation scenarios.
//!
//! Every stage that draws random numbers takes an explicit seed derived
//! from one master seed (see [`seeding`]), so whole-pipeline runs are
//! reproducible byte-for-byte.

pub mod artifact;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod features;
pub mod harness;
pub mod lasso;
pub mod metrics;
pub mod model;
pub mod profile;
pub mod seeding;
pub mod split;
pub mod standardize;
pub mod synth;
pub mod tuner;

pub use dataset::{LabeledDataset, Label, LoadStats, RecordFormat};
pub use error::{Error, Result};
pub use features::{FeatureMatrix, FEATURE_COUNT};
pub use profile::UserProfile;
