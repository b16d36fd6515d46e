//! Fitted scaler + PCA basis + network, stored together as one JSON document.
//!
//! Field order in the file is fixed:
//! `format`, `version`, `field_order`, `dataset`, `class_labels`, `layout`,
//! `scaler`, `pca`, `mlp`. The `field_order` entry repeats this list so the
//! file documents itself.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{extract_from_rows, FeatureError, FeatureLayout};
use crate::model::{MlpParams, ModelError};
use crate::preprocess::{PcaModel, PreprocessError, Scaler};

pub const FORMAT: &str = "harbench-pipeline";
pub const VERSION: u32 = 1;
pub const FIELD_ORDER: [&str; 9] = [
    "format",
    "version",
    "field_order",
    "dataset",
    "class_labels",
    "layout",
    "scaler",
    "pca",
    "mlp",
];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed pipeline file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported pipeline file: format {format:?} version {version}")]
    Unsupported { format: String, version: u32 },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineModel {
    pub format: String,
    pub version: u32,
    pub field_order: Vec<String>,
    pub dataset: String,
    /// Source label for each class index.
    pub class_labels: Vec<u32>,
    pub layout: FeatureLayout,
    pub scaler: Scaler,
    pub pca: PcaModel,
    pub mlp: MlpParams,
}

impl PipelineModel {
    pub fn new(
        dataset: impl Into<String>,
        class_labels: Vec<u32>,
        layout: FeatureLayout,
        scaler: Scaler,
        pca: PcaModel,
        mlp: MlpParams,
    ) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            field_order: FIELD_ORDER.iter().map(|s| s.to_string()).collect(),
            dataset: dataset.into(),
            class_labels,
            layout,
            scaler,
            pca,
            mlp,
        }
    }

    /// Classifies one raw row-major `W × C` window. Returns the class index.
    pub fn classify_window(&self, data: &[f64]) -> Result<usize, PipelineError> {
        let features = extract_from_rows(data, &self.layout)?;
        let scaled = self.scaler.apply(features.as_slice())?;
        let projected = self.pca.apply(&scaled)?;
        Ok(self.mlp.predict(&projected)?)
    }

    pub fn to_json(&self) -> Result<String, PipelineError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let model: Self = serde_json::from_str(text)?;
        if model.format != FORMAT || model.version != VERSION {
            return Err(PipelineError::Unsupported {
                format: model.format,
                version: model.version,
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
