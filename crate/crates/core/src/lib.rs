//! Benchmark toolkit for wearable-sensor human activity recognition.
//!
//! The crate covers the whole evaluation path:
//!
//! - [`dataset`]: manifests and the canonical CSV trial format.
//! - [`windowing`]: full-non-overlapping, semi-non-overlapping and
//!   leave-one-trial-out window generation, plus fold plans and leakage audits.
//! - [`features`]: the twelve handcrafted window features.
//! - [`preprocess`]: z-score scaling and PCA, fitted on training folds only.
//! - [`model`]: a 128/64/32 Leaky-ReLU network trained with Adam.
//! - [`evaluation`]: K-fold, leave-one-subject-out and hold-out experiments.
//!
//! [`synthetic`] generates labelled trial sets for tests and demos.

pub mod dataset;
pub mod evaluation;
pub mod features;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod synthetic;
pub mod windowing;

pub use dataset::{DatasetManifest, Trial, TrialSet, ValidationReport};
pub use evaluation::{EvalReport, ExperimentConfig, ValidationScheme, Variant};
pub use features::{FeatureLayout, FeatureVector};
pub use linalg::Matrix;
pub use model::{MlpParams, TrainConfig, TrainHistory};
pub use pipeline::PipelineModel;
pub use preprocess::{PcaModel, Scaler};
pub use windowing::{FoldPlan, Grouping, Window, WindowSet, WindowTechnique};
