//! Run configuration files.
//!
//! ```toml
//! out_dir = "results/mhealth-semi-kfold"   # optional
//! verbosity = "info"                       # optional: error, warn, info, debug, trace
//! save_models = false                      # optional
//!
//! [experiment]
//! manifest = "mhealth.toml"
//! technique = "semi_non_overlapping"
//! scheme = "kfold"
//! k = 10
//! variant = "v1"
//! ```
//!
//! Relative paths are resolved against the config file's directory, then
//! against `$HARBENCH_DATA_DIR`.

use std::path::{Path, PathBuf};

use harbench::dataset::{DatasetManifest, DATA_DIR_ENV};
use harbench::ExperimentConfig;
use serde::{Deserialize, Serialize};

use crate::Failure;

const LEVELS: [&str; 5] = ["error", "warn", "info", "debug", "trace"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub verbosity: Option<String>,
    #[serde(default)]
    pub save_models: bool,
    pub experiment: ExperimentConfig,
    #[serde(skip)]
    pub source: PathBuf,
}

impl RunConfigFile {
    /// Parses and checks a config: schema, verbosity, manifest and the
    /// experiment settings against it. Nothing is run.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut file: RunConfigFile = toml::from_str(&text)
            .map_err(|e| Failure::config(format!("invalid config {}: {e}", path.display())))?;
        file.source = path.to_path_buf();
        if let Some(level) = &file.verbosity {
            if !LEVELS.contains(&level.as_str()) {
                return Err(Failure::config(format!(
                    "{}: verbosity must be one of {}, got {level:?}",
                    path.display(),
                    LEVELS.join(", ")
                )));
            }
        }
        let base = path.parent();
        file.experiment.manifest = resolve_input(&file.experiment.manifest, base);
        if let Some(out) = &file.out_dir {
            if out.is_relative() {
                file.out_dir = Some(base.map_or_else(|| out.clone(), |b| b.join(out)));
            }
        }
        let manifest = file.manifest()?;
        file.experiment
            .validate(&manifest)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        Ok(file)
    }

    pub fn manifest(&self) -> Result<DatasetManifest, Failure> {
        let path = &self.experiment.manifest;
        DatasetManifest::load(path).map_err(|e| Failure::config(format!("manifest {}: {e}", path.display())))
    }

    /// `out_dir` if set, else `<config stem>-results` next to the config.
    pub fn default_out_dir(&self) -> PathBuf {
        if let Some(dir) = &self.out_dir {
            return dir.clone();
        }
        let stem = self
            .source
            .file_stem()
            .map_or_else(|| "run".to_string(), |s| s.to_string_lossy().into_owned());
        self.source
            .parent()
            .unwrap_or(Path::new(""))
            .join(format!("{stem}-results"))
    }
}

/// Resolves an input path: as given if absolute or present under `base`
/// (or the working directory when `base` is `None`), else under
/// `$HARBENCH_DATA_DIR` when it exists there.
pub fn resolve_input(path: &Path, base: Option<&Path>) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    let local = base.map_or_else(|| path.to_path_buf(), |b| b.join(path));
    if local.exists() {
        return local;
    }
    if let Some(root) = std::env::var_os(DATA_DIR_ENV) {
        let candidate = Path::new(&root).join(path);
        if candidate.exists() {
            return candidate;
        }
    }
    local
}
