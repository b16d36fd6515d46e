//! Dataset manifests, the canonical trial format and trial-set validation.
//!
//! A manifest names the channels of a dataset, groups 3-axis sensors into
//! triplets, declares the window length and lists every trial file. Trial
//! files are header-less CSV: one row per time step, one column per channel.
//! Native dataset layouts are converted to this format outside the crate.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::windowing::WindowTechnique;

/// Environment variable consulted when a relative path does not resolve
/// against the manifest directory.
pub const DATA_DIR_ENV: &str = "HARBENCH_DATA_DIR";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse manifest {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid manifest: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("no trials")]
    NoTrials,
    #[error("every trial is shorter than one window ({window} samples)")]
    AllTrialsSkipped { window: usize },
    #[error("duplicate trial_id {0:?}")]
    DuplicateTrialId(String),
    #[error("trial {trial_id:?}: cannot read {path}: {source}")]
    Io {
        trial_id: String,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("trial {trial_id:?}: malformed CSV in {path}: {message}")]
    Csv {
        trial_id: String,
        path: PathBuf,
        message: String,
    },
    #[error(transparent)]
    Trial(#[from] TrialError),
}

#[derive(Debug, Error, PartialEq)]
pub enum TrialError {
    #[error("trial {trial_id:?}: non-finite sample at row {row}, column {column}")]
    NonFinite {
        trial_id: String,
        row: usize,
        column: usize,
    },
    #[error("trial {trial_id:?}: row {row} has {found} columns, expected {expected}")]
    ColumnCount {
        trial_id: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("trial {trial_id:?}: sample rate must be positive")]
    SampleRate { trial_id: String },
}

/// One entry of the manifest's trial list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialSource {
    pub subject_id: String,
    pub activity_id: u32,
    pub trial_id: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    pub sample_rate_hz: f64,
    pub channel_names: Vec<String>,
    /// 3-axis sensor groups, by channel index. Each group contributes one ARA feature.
    #[serde(default)]
    pub triplet_groups: Vec<[usize; 3]>,
    pub window_seconds: f64,
    #[serde(default)]
    pub trial_sources: Vec<TrialSource>,
    pub supported_windowing: Vec<WindowTechnique>,
    /// Directory the manifest was read from; relative trial paths resolve against it.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// Technique support for the six benchmark datasets. Names are matched
/// case-insensitively with separators removed.
pub fn benchmark_support(name: &str) -> Option<&'static [WindowTechnique]> {
    use WindowTechnique::*;
    const ALL: &[WindowTechnique] = &[FullNonOverlapping, SemiNonOverlapping, LeaveOneTrialOut];
    const SEMI_ONLY: &[WindowTechnique] = &[SemiNonOverlapping];
    match normalize_name(name).as_str() {
        "mhealth" | "uschad" | "utd1" | "utd2" | "wharf" | "wisdm" => Some(ALL),
        "opportunity" => Some(SEMI_ONLY),
        _ => None,
    }
}

fn normalize_name(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

impl DatasetManifest {
    /// Parses JSON or TOML (chosen by extension, `.toml` → TOML, anything
    /// else → JSON) and validates the result.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ManifestError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let is_toml = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let mut manifest = if is_toml {
            Self::from_toml_str(&text)
        } else {
            Self::from_json_str(&text)
        }
        .map_err(|message| ManifestError::Parse {
            path: path.to_path_buf(),
            message,
        })?;
        manifest.base_dir = path.parent().map(Path::to_path_buf);
        manifest.validate()?;
        Ok(manifest)
    }

    fn from_json_str(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    fn from_toml_str(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn channel_count(&self) -> usize {
        self.channel_names.len()
    }

    /// Window length in samples: `window_seconds × sample_rate_hz`, rounded
    /// down to an even integer so the half-window stride is integral.
    pub fn window_samples(&self) -> usize {
        let raw = (self.window_seconds * self.sample_rate_hz).floor();
        if !raw.is_finite() || raw < 0.0 {
            return 0;
        }
        let n = raw as usize;
        n - n % 2
    }

    pub fn supports(&self, technique: WindowTechnique) -> bool {
        self.supported_windowing.contains(&technique)
    }

    pub fn validate(&self) -> Result<(), ManifestError> {
        let invalid = |m: String| Err(ManifestError::Invalid(m));
        if self.name.trim().is_empty() {
            return invalid("dataset name is empty".into());
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return invalid(format!(
                "sample_rate_hz must be positive, got {}",
                self.sample_rate_hz
            ));
        }
        if !(self.window_seconds.is_finite() && self.window_seconds > 0.0) {
            return invalid(format!(
                "window_seconds must be positive, got {}",
                self.window_seconds
            ));
        }
        if self.window_samples() < 2 {
            return invalid(format!(
                "window of {} s at {} Hz is shorter than 2 samples",
                self.window_seconds, self.sample_rate_hz
            ));
        }
        let c = self.channel_count();
        if c == 0 {
            return invalid("no channels".into());
        }
        let mut seen = HashSet::new();
        for (g, group) in self.triplet_groups.iter().enumerate() {
            if let Some(&bad) = group.iter().find(|&&i| i >= c) {
                return invalid(format!(
                    "triplet {g} references channel {bad}, but only {c} channels exist"
                ));
            }
            if group[0] == group[1] || group[0] == group[2] || group[1] == group[2] {
                return invalid(format!("duplicate channel in triplet {g}: {group:?}"));
            }
            for &i in group {
                if !seen.insert(i) {
                    return invalid(format!("channel {i} appears in more than one triplet"));
                }
            }
        }
        if self.supported_windowing.is_empty() {
            return invalid("supported_windowing is empty".into());
        }
        if let Some(expected) = benchmark_support(&self.name) {
            let mut declared = self.supported_windowing.clone();
            declared.sort();
            declared.dedup();
            if declared != expected {
                return invalid(format!(
                    "{} supports {:?} in the benchmark support matrix, manifest declares {:?}",
                    self.name, expected, declared
                ));
            }
        }
        Ok(())
    }

    /// Resolves a possibly relative path: manifest directory first, then
    /// `$HARBENCH_DATA_DIR`, then the manifest-relative path as-is.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            return path.to_path_buf();
        }
        let local = match &self.base_dir {
            Some(dir) => dir.join(path),
            None => path.to_path_buf(),
        };
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
}

/// One subject performing one activity: a `T × C` row-major signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub subject_id: String,
    /// Class label. Contiguous `0..K` once the trial is inside a [`TrialSet`].
    pub activity_id: usize,
    pub trial_id: String,
    pub sample_rate_hz: f64,
    channels: usize,
    samples: Vec<f64>,
}

impl Trial {
    pub fn new(
        subject_id: impl Into<String>,
        activity_id: usize,
        trial_id: impl Into<String>,
        sample_rate_hz: f64,
        channels: usize,
        samples: Vec<f64>,
    ) -> Result<Self, TrialError> {
        let trial_id = trial_id.into();
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(TrialError::SampleRate { trial_id });
        }
        if channels == 0 || !samples.len().is_multiple_of(channels) {
            return Err(TrialError::ColumnCount {
                trial_id,
                row: samples.len() / channels.max(1),
                expected: channels,
                found: samples.len() % channels.max(1),
            });
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(TrialError::NonFinite {
                trial_id,
                row: pos / channels,
                column: pos % channels,
            });
        }
        Ok(Self {
            subject_id: subject_id.into(),
            activity_id,
            trial_id,
            sample_rate_hz,
            channels,
            samples,
        })
    }

    /// Number of time steps `T`.
    pub fn len(&self) -> usize {
        self.samples.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Rows `start..start + len` as a contiguous row-major slice.
    pub fn rows(&self, start: usize, len: usize) -> &[f64] {
        &self.samples[start * self.channels..(start + len) * self.channels]
    }

    pub fn value(&self, t: usize, c: usize) -> f64 {
        self.samples[t * self.channels + c]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedTrial {
    pub trial_id: String,
    pub length: usize,
    pub required: usize,
}

/// Immutable collection of trials with contiguous class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    pub manifest: DatasetManifest,
    pub trials: Vec<Trial>,
    pub class_count: usize,
    /// Distinct subjects in order of first appearance.
    pub subject_ids: Vec<String>,
    /// `class_labels[k]` is the source label remapped to class `k`.
    pub class_labels: Vec<u32>,
    pub skipped: Vec<SkippedTrial>,
}

impl TrialSet {
    /// Assembles a trial set from trials whose `activity_id` still holds the
    /// source label. Labels are remapped to `0..K` in ascending source order;
    /// trials shorter than one window are dropped and listed in `skipped`.
    pub fn from_trials(manifest: DatasetManifest, trials: Vec<Trial>) -> Result<Self, LoadError> {
        if trials.is_empty() {
            return Err(LoadError::NoTrials);
        }
        let mut ids = HashSet::new();
        for t in &trials {
            if !ids.insert(t.trial_id.as_str()) {
                return Err(LoadError::DuplicateTrialId(t.trial_id.clone()));
            }
            if t.channels() != manifest.channel_count() {
                return Err(TrialError::ColumnCount {
                    trial_id: t.trial_id.clone(),
                    row: 0,
                    expected: manifest.channel_count(),
                    found: t.channels(),
                }
                .into());
            }
        }

        let window = manifest.window_samples();
        let mut kept = Vec::with_capacity(trials.len());
        let mut skipped = Vec::new();
        for t in trials {
            if t.len() < window {
                warn!(
                    "trial {:?} has {} samples, fewer than one window ({}); skipped",
                    t.trial_id,
                    t.len(),
                    window
                );
                skipped.push(SkippedTrial {
                    trial_id: t.trial_id.clone(),
                    length: t.len(),
                    required: window,
                });
            } else {
                kept.push(t);
            }
        }
        if kept.is_empty() {
            return Err(LoadError::AllTrialsSkipped { window });
        }

        let mut labels: Vec<u32> = kept.iter().map(|t| t.activity_id as u32).collect();
        labels.sort_unstable();
        labels.dedup();
        let remap: HashMap<u32, usize> = labels.iter().enumerate().map(|(k, &l)| (l, k)).collect();
        for t in &mut kept {
            t.activity_id = remap[&(t.activity_id as u32)];
        }

        let mut subject_ids: Vec<String> = Vec::new();
        let mut seen = HashSet::new();
        for t in &kept {
            if seen.insert(t.subject_id.clone()) {
                subject_ids.push(t.subject_id.clone());
            }
        }

        Ok(Self {
            manifest,
            class_count: labels.len(),
            trials: kept,
            subject_ids,
            class_labels: labels,
            skipped,
        })
    }

    /// Reads every trial listed in the manifest. Files are read in parallel;
    /// the resulting order follows the manifest.
    pub fn load(manifest: &DatasetManifest) -> Result<Self, LoadError> {
        if manifest.trial_sources.is_empty() {
            return Err(LoadError::NoTrials);
        }
        let trials = manifest
            .trial_sources
            .par_iter()
            .map(|src| read_trial(manifest, src))
            .collect::<Result<Vec<_>, _>>()?;
        let set = Self::from_trials(manifest.clone(), trials)?;
        info!(
            "{}: {} trials, {} classes, {} subjects ({} skipped)",
            manifest.name,
            set.trials.len(),
            set.class_count,
            set.subject_ids.len(),
            set.skipped.len()
        );
        Ok(set)
    }

    pub fn subject_index(&self, subject_id: &str) -> Option<usize> {
        self.subject_ids.iter().position(|s| s == subject_id)
    }

    pub fn validate(&self) -> ValidationReport {
        ValidationReport::build(self)
    }
}

/// Convenience wrapper: load the manifest at `path` and all its trials.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<TrialSet, LoadError> {
    let manifest = DatasetManifest::load(path)?;
    TrialSet::load(&manifest)
}

fn read_trial(manifest: &DatasetManifest, src: &TrialSource) -> Result<Trial, LoadError> {
    let path = manifest.resolve(&src.path);
    let file = std::fs::File::open(&path).map_err(|source| LoadError::Io {
        trial_id: src.trial_id.clone(),
        path: path.clone(),
        source,
    })?;
    let channels = manifest.channel_count();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));
    let mut samples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| LoadError::Csv {
            trial_id: src.trial_id.clone(),
            path: path.clone(),
            message: e.to_string(),
        })?;
        if record.len() != channels {
            return Err(TrialError::ColumnCount {
                trial_id: src.trial_id.clone(),
                row,
                expected: channels,
                found: record.len(),
            }
            .into());
        }
        for (column, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| LoadError::Csv {
                trial_id: src.trial_id.clone(),
                path: path.clone(),
                message: format!("row {row}, column {column}: {field:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(TrialError::NonFinite {
                    trial_id: src.trial_id.clone(),
                    row,
                    column,
                }
                .into());
            }
            samples.push(v);
        }
    }
    Ok(Trial::new(
        src.subject_id.clone(),
        src.activity_id as usize,
        src.trial_id.clone(),
        manifest.sample_rate_hz,
        channels,
        samples,
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class: usize,
    pub source_label: u32,
    pub trials: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSummary {
    pub subject_id: String,
    pub trials: usize,
    pub samples: usize,
}

/// Conditions worth a reader's attention before running experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flag", rename_all = "snake_case")]
pub enum ValidationFlag {
    /// Class sample count is below half or above twice the median class count.
    ClassImbalance {
        class: usize,
        source_label: u32,
        samples: usize,
        median_samples: f64,
    },
    /// Only one subject: leave-one-subject-out is not applicable.
    LosoNotApplicable,
    /// A class with a single trial cannot sit on both sides of a trial-grouped split.
    LotoNotApplicable { class: usize, source_label: u32 },
    TrialsSkipped { count: usize },
}

impl fmt::Display for ValidationFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ClassImbalance {
                class,
                source_label,
                samples,
                median_samples,
            } => write!(
                f,
                "class imbalance: class {class} (source label {source_label}) has {samples} samples, median is {median_samples}"
            ),
            Self::LosoNotApplicable => write!(f, "leave-one-subject-out not applicable (single subject)"),
            Self::LotoNotApplicable {
                class,
                source_label,
            } => write!(
                f,
                "leave-one-trial-out not applicable: class {class} (source label {source_label}) has a single trial"
            ),
            Self::TrialsSkipped { count } => {
                write!(f, "{count} trial(s) shorter than one window were skipped")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub dataset: String,
    pub trial_count: usize,
    pub class_count: usize,
    pub subject_count: usize,
    pub window_samples: usize,
    pub per_class: Vec<ClassSummary>,
    pub per_subject: Vec<SubjectSummary>,
    pub min_trial_length: usize,
    pub max_trial_length: usize,
    pub skipped_trials: Vec<SkippedTrial>,
    pub flags: Vec<ValidationFlag>,
}

impl ValidationReport {
    fn build(ts: &TrialSet) -> Self {
        let mut per_class: Vec<ClassSummary> = ts
            .class_labels
            .iter()
            .enumerate()
            .map(|(class, &source_label)| ClassSummary {
                class,
                source_label,
                trials: 0,
                samples: 0,
            })
            .collect();
        let mut per_subject: BTreeMap<usize, SubjectSummary> = BTreeMap::new();
        for t in &ts.trials {
            let c = &mut per_class[t.activity_id];
            c.trials += 1;
            c.samples += t.len();
            let idx = ts.subject_index(&t.subject_id).unwrap_or(usize::MAX);
            let s = per_subject.entry(idx).or_insert_with(|| SubjectSummary {
                subject_id: t.subject_id.clone(),
                trials: 0,
                samples: 0,
            });
            s.trials += 1;
            s.samples += t.len();
        }

        let mut flags = Vec::new();
        let mut counts: Vec<usize> = per_class.iter().map(|c| c.samples).collect();
        counts.sort_unstable();
        let median = median_of_sorted(&counts);
        for c in &per_class {
            let s = c.samples as f64;
            if s < 0.5 * median || s > 2.0 * median {
                flags.push(ValidationFlag::ClassImbalance {
                    class: c.class,
                    source_label: c.source_label,
                    samples: c.samples,
                    median_samples: median,
                });
            }
        }
        if ts.subject_ids.len() < 2 {
            flags.push(ValidationFlag::LosoNotApplicable);
        }
        for c in &per_class {
            if c.trials < 2 {
                flags.push(ValidationFlag::LotoNotApplicable {
                    class: c.class,
                    source_label: c.source_label,
                });
            }
        }
        if !ts.skipped.is_empty() {
            flags.push(ValidationFlag::TrialsSkipped {
                count: ts.skipped.len(),
            });
        }

        Self {
            dataset: ts.manifest.name.clone(),
            trial_count: ts.trials.len(),
            class_count: ts.class_count,
            subject_count: ts.subject_ids.len(),
            window_samples: ts.manifest.window_samples(),
            per_class,
            per_subject: per_subject.into_values().collect(),
            min_trial_length: ts.trials.iter().map(Trial::len).min().unwrap_or(0),
            max_trial_length: ts.trials.iter().map(Trial::len).max().unwrap_or(0),
            skipped_trials: ts.skipped.clone(),
            flags,
        }
    }

    pub fn has_imbalance(&self) -> bool {
        self.flags
            .iter()
            .any(|f| matches!(f, ValidationFlag::ClassImbalance { .. }))
    }
}

fn median_of_sorted(v: &[usize]) -> f64 {
    match v.len() {
        0 => 0.0,
        n if n % 2 == 1 => v[n / 2] as f64,
        n => (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use WindowTechnique::*;

    fn manifest(channels: usize) -> DatasetManifest {
        DatasetManifest {
            name: "toy".into(),
            sample_rate_hz: 50.0,
            channel_names: (0..channels).map(|c| format!("ch{c}")).collect(),
            triplet_groups: vec![],
            window_seconds: 0.08,
            trial_sources: vec![],
            supported_windowing: vec![FullNonOverlapping, SemiNonOverlapping, LeaveOneTrialOut],
            base_dir: None,
        }
    }

    fn trial(subject: &str, label: usize, id: &str, len: usize) -> Trial {
        Trial::new(subject, label, id, 50.0, 1, (0..len).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn nine_channel_manifest_accepted() {
        let mut m = manifest(9);
        m.triplet_groups = vec![[0, 1, 2], [3, 4, 5], [6, 7, 8]];
        assert!(m.validate().is_ok());
        assert_eq!(m.window_samples(), 4);
    }

    #[test]
    fn duplicate_channel_in_triplet_rejected() {
        let mut m = manifest(3);
        m.triplet_groups = vec![[0, 0, 1]];
        let err = m.validate().unwrap_err().to_string();
        assert!(err.contains("duplicate channel in triplet"), "{err}");
    }

    #[test]
    fn channel_shared_between_triplets_rejected() {
        let mut m = manifest(5);
        m.triplet_groups = vec![[0, 1, 2], [2, 3, 4]];
        assert!(m.validate().is_err());
    }

    #[test]
    fn out_of_range_triplet_rejected() {
        let mut m = manifest(3);
        m.triplet_groups = vec![[0, 1, 3]];
        assert!(m.validate().is_err());
    }

    #[test]
    fn zero_window_rejected() {
        let mut m = manifest(3);
        m.window_seconds = 0.0;
        assert!(m.validate().is_err());
        let mut m = manifest(3);
        m.sample_rate_hz = -1.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn window_rounds_down_to_even() {
        let mut m = manifest(1);
        m.window_seconds = 0.1; // 5 samples
        assert_eq!(m.window_samples(), 4);
        m.sample_rate_hz = 32.0;
        m.window_seconds = 2.0;
        assert_eq!(m.window_samples(), 64);
    }

    #[test]
    fn benchmark_support_matrix_enforced() {
        let mut m = manifest(3);
        m.name = "OPPORTUNITY".into();
        assert!(m.validate().is_err());
        m.supported_windowing = vec![SemiNonOverlapping];
        assert!(m.validate().is_ok());
        m.name = "UTD-1".into();
        assert!(m.validate().is_err());
        assert_eq!(benchmark_support("MHealth").unwrap().len(), 3);
        assert!(benchmark_support("my-lab-data").is_none());
    }

    #[test]
    fn labels_remapped_contiguously() {
        let ts = TrialSet::from_trials(
            manifest(1),
            vec![
                trial("s1", 7, "a", 10),
                trial("s2", 3, "b", 10),
                trial("s1", 12, "c", 10),
                trial("s2", 7, "d", 10),
            ],
        )
        .unwrap();
        assert_eq!(ts.class_count, 3);
        assert_eq!(ts.class_labels, vec![3, 7, 12]);
        let labels: Vec<usize> = ts.trials.iter().map(|t| t.activity_id).collect();
        assert_eq!(labels, vec![1, 0, 2, 1]);
        assert_eq!(ts.subject_ids, vec!["s1", "s2"]);
    }

    #[test]
    fn short_trials_skipped_not_padded() {
        let ts = TrialSet::from_trials(
            manifest(1),
            vec![trial("s1", 0, "a", 10), trial("s1", 1, "b", 3)],
        )
        .unwrap();
        assert_eq!(ts.trials.len(), 1);
        assert_eq!(ts.skipped.len(), 1);
        assert_eq!(ts.skipped[0].trial_id, "b");
        assert!(ts
            .validate()
            .flags
            .contains(&ValidationFlag::TrialsSkipped { count: 1 }));
    }

    #[test]
    fn empty_and_duplicate_inputs_rejected() {
        assert!(matches!(
            TrialSet::from_trials(manifest(1), vec![]),
            Err(LoadError::NoTrials)
        ));
        assert!(matches!(
            TrialSet::from_trials(manifest(1), vec![trial("s", 0, "a", 8), trial("s", 1, "a", 8)]),
            Err(LoadError::DuplicateTrialId(_))
        ));
        assert!(matches!(TrialSet::load(&manifest(1)), Err(LoadError::NoTrials)));
    }

    #[test]
    fn nan_rejected_with_trial_id() {
        let err = Trial::new("s", 0, "bad-trial", 50.0, 2, vec![1.0, 2.0, f64::NAN, 3.0]).unwrap_err();
        assert_eq!(
            err,
            TrialError::NonFinite {
                trial_id: "bad-trial".into(),
                row: 1,
                column: 0
            }
        );
        assert!(err.to_string().contains("bad-trial"));
    }

    #[test]
    fn balanced_set_has_no_flags() {
        let trials = (0..3)
            .flat_map(|c| (0..2).map(move |s| trial(&format!("s{s}"), c, &format!("t{c}{s}"), 20)))
            .collect();
        let report = TrialSet::from_trials(manifest(1), trials).unwrap().validate();
        assert!(report.flags.is_empty(), "{:?}", report.flags);
        assert!(report.per_class.iter().all(|c| c.samples == 40));
        assert_eq!(report.min_trial_length, 20);
    }

    #[test]
    fn single_subject_flagged() {
        let trials = vec![trial("only", 0, "a", 10), trial("only", 1, "b", 10)];
        let report = TrialSet::from_trials(manifest(1), trials).unwrap().validate();
        assert!(report.flags.contains(&ValidationFlag::LosoNotApplicable));
        assert!(report
            .flags
            .iter()
            .any(|f| f.to_string().contains("leave-one-subject-out not applicable")));
    }

    #[test]
    fn manifest_parses_from_toml_and_json() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("m.toml");
        std::fs::write(
            &toml_path,
            r#"
name = "toy"
sample_rate_hz = 50.0
channel_names = ["x", "y", "z"]
triplet_groups = [[0, 1, 2]]
window_seconds = 1.0
supported_windowing = ["full_non_overlapping", "semi_non_overlapping"]

[[trial_sources]]
subject_id = "s1"
activity_id = 4
trial_id = "s1-a4"
path = "s1-a4.csv"
"#,
        )
        .unwrap();
        let m = DatasetManifest::load(&toml_path).unwrap();
        assert_eq!(m.window_samples(), 50);
        assert_eq!(m.base_dir.as_deref(), Some(dir.path()));

        let json_path = dir.path().join("m.json");
        std::fs::write(&json_path, serde_json::to_string(&m).unwrap()).unwrap();
        let again = DatasetManifest::load(&json_path).unwrap();
        assert_eq!(again, m);

        std::fs::write(&json_path, "{ not json").unwrap();
        assert!(matches!(
            DatasetManifest::load(&json_path),
            Err(ManifestError::Parse { .. })
        ));
        assert!(matches!(
            DatasetManifest::load(dir.path().join("missing.json")),
            Err(ManifestError::Io { .. })
        ));
    }
}
