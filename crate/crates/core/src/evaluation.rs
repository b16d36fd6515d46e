//! Experiment runner: K-fold, leave-one-subject-out and hold-out validation
//! over any (dataset, windowing technique) pair.
//!
//! Per fold the order is fixed: fit the scaler on the train rows, fit PCA on
//! the scaled train rows, train the classifier, then transform and score the
//! test rows. Features are per-window and stateless, so they are computed
//! once for the whole window set before splitting.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetManifest, LoadError, TrialSet};
use crate::features::{extract_all, FeatureError, FeatureLayout, TimingStats};
use crate::linalg::Matrix;
use crate::model::{Classifier, MlpClassifier, ModelError, TrainConfig, DEFAULT_LEAKY_SLOPE, V1_EPOCHS, V2_EPOCHS};
use crate::pipeline::PipelineModel;
use crate::preprocess::{PcaModel, PreprocessError, Scaler};
use crate::windowing::{
    audit_fold, folds_from_assignment, plan_loto_folds, stratified_assignment, Fold, FoldPlan, Grouping,
    LeakageAudit, WindowError, WindowSet, WindowTechnique,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error("cannot split windows: {0}")]
    Split(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: FoldError,
    },
    #[error("i/o error writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl EvalError {
    /// True for errors caused by the configuration or dataset description
    /// rather than by the run itself.
    pub fn is_config_error(&self) -> bool {
        matches!(self, EvalError::Config(_) | EvalError::Load(LoadError::Manifest(_)))
    }
}

#[derive(Debug, Error)]
pub enum FoldError {
    #[error("class {class} is absent from the training split")]
    MissingClass { class: usize },
    #[error("empty {0} split")]
    EmptySide(&'static str),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationScheme {
    Kfold,
    Loso,
    Holdout,
}

impl ValidationScheme {
    pub const ALL: [ValidationScheme; 3] = [Self::Kfold, Self::Loso, Self::Holdout];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Kfold => "kfold",
            Self::Loso => "loso",
            Self::Holdout => "holdout",
        }
    }
}

/// Training-length variant: V1 trains for 250 epochs, V2 for 200.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    V1,
    V2,
}

impl Variant {
    pub fn epochs(self) -> usize {
        match self {
            Self::V1 => V1_EPOCHS,
            Self::V2 => V2_EPOCHS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    #[serde(default)]
    pub split: u64,
    #[serde(default)]
    pub init: u64,
    #[serde(default)]
    pub shuffle: u64,
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Self {
            split: seed,
            init: seed,
            shuffle: seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOptions {
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_leaky_slope")]
    pub leaky_slope: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// Replaces the variant's epoch count when set.
    #[serde(default)]
    pub epochs: Option<usize>,
}

fn default_learning_rate() -> f64 {
    1e-3
}
fn default_leaky_slope() -> f64 {
    DEFAULT_LEAKY_SLOPE
}
fn default_batch_size() -> usize {
    crate::model::DEFAULT_BATCH_SIZE
}
fn default_k() -> usize {
    10
}
fn default_test_fraction() -> f64 {
    0.3
}
fn default_retained_variance() -> f64 {
    0.95
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            learning_rate: default_learning_rate(),
            leaky_slope: default_leaky_slope(),
            batch_size: default_batch_size(),
            epochs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    pub technique: WindowTechnique,
    pub scheme: ValidationScheme,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_test_fraction")]
    pub holdout_test_fraction: f64,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default = "default_retained_variance")]
    pub pca_retained_variance: f64,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub model: ModelOptions,
}

impl ExperimentConfig {
    pub fn new(manifest: impl Into<PathBuf>, technique: WindowTechnique, scheme: ValidationScheme) -> Self {
        Self {
            manifest: manifest.into(),
            technique,
            scheme,
            k: default_k(),
            holdout_test_fraction: default_test_fraction(),
            variant: Variant::V1,
            pca_retained_variance: default_retained_variance(),
            seeds: Seeds::default(),
            model: ModelOptions::default(),
        }
    }

    pub fn epochs(&self) -> usize {
        self.model.epochs.unwrap_or_else(|| self.variant.epochs())
    }

    pub fn train_config(&self, fold: usize) -> TrainConfig {
        TrainConfig {
            batch_size: self.model.batch_size,
            learning_rate: self.model.learning_rate,
            shuffle_seed: self.seeds.shuffle.wrapping_add(fold as u64),
            ..TrainConfig::with_epochs(self.epochs())
        }
    }

    /// Checks the numeric fields and the (dataset, technique) pair.
    pub fn validate(&self, manifest: &DatasetManifest) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::Config(m));
        if self.k < 2 {
            return bad(format!("k must be at least 2, got {}", self.k));
        }
        if !(self.holdout_test_fraction > 0.0 && self.holdout_test_fraction < 1.0) {
            return bad(format!(
                "holdout_test_fraction must be in (0, 1), got {}",
                self.holdout_test_fraction
            ));
        }
        if !(self.pca_retained_variance > 0.0 && self.pca_retained_variance <= 1.0) {
            return bad(format!(
                "pca_retained_variance must be in (0, 1], got {}",
                self.pca_retained_variance
            ));
        }
        if self.epochs() == 0 {
            return bad("epochs must be at least 1".into());
        }
        if let Err(e) = self.train_config(0).validate() {
            return bad(e.to_string());
        }
        if !(self.model.leaky_slope.is_finite() && self.model.leaky_slope >= 0.0) {
            return bad("leaky_slope must be finite and nonnegative".into());
        }
        if !manifest.supports(self.technique) {
            return bad(format!(
                "technique {} is not supported for dataset {} (supported: {})",
                self.technique,
                manifest.name,
                manifest
                    .supported_windowing
                    .iter()
                    .map(|t| t.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
        Ok(())
    }
}

/// Precision, recall and F1 for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when the class never occurs in the true labels; its F1 is 0.
    pub zero_support: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
}

/// Metrics from a `K × K` confusion matrix (rows = true class, columns = predicted).
pub fn metrics(confusion: &[Vec<u64>]) -> Metrics {
    let k = confusion.len();
    let total: u64 = confusion.iter().flatten().sum();
    let correct: u64 = (0..k).map(|i| confusion[i][i]).sum();
    let per_class = (0..k)
        .map(|c| {
            let tp = confusion[c][c] as f64;
            let support: u64 = confusion[c].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
            let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
            let recall = if support == 0 { 0.0 } else { tp / support as f64 };
            let f1 = if support == 0 || precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                class: c,
                precision,
                recall,
                f1,
                support,
                zero_support: support == 0,
            }
        })
        .collect();
    Metrics {
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        per_class,
    }
}

/// Group id per window under `grouping`, with groups numbered in order of
/// first appearance. Returns `None` for [`Grouping::None`].
fn group_ids(ws: &WindowSet, grouping: Grouping) -> Option<(Vec<usize>, usize)> {
    let key = |i: usize| -> &str {
        match grouping {
            Grouping::BySubject => &ws.windows[i].subject_id,
            _ => &ws.windows[i].trial_id,
        }
    };
    if grouping == Grouping::None {
        return None;
    }
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let per_window = (0..ws.len())
        .map(|i| {
            let next = ids.len();
            *ids.entry(key(i)).or_insert(next)
        })
        .collect();
    Some((per_window, ids.len()))
}

/// Class of each group (label of its first window).
fn group_classes(ws: &WindowSet, groups: &[usize], n_groups: usize) -> Vec<usize> {
    let mut classes = vec![usize::MAX; n_groups];
    for (i, &g) in groups.iter().enumerate() {
        if classes[g] == usize::MAX {
            classes[g] = ws.windows[i].activity_id;
        }
    }
    classes
}

/// K folds. Ungrouped folds are stratified by class over windows; trial
/// grouping stratifies whole trials by class (the same assignment
/// [`plan_loto_folds`] makes); subject grouping deals shuffled subjects.
pub fn kfold_splits(ws: &WindowSet, k: usize, seed: u64, grouping: Grouping) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::Split(format!("k must be at least 2, got {k}")));
    }
    let folds = match group_ids(ws, grouping) {
        None => {
            if ws.len() < k {
                return Err(EvalError::Split(format!(
                    "k = {k} exceeds the {} available windows",
                    ws.len()
                )));
            }
            let assignment = stratified_assignment(&ws.labels(), k, seed);
            folds_from_assignment(k, assignment.into_iter())
        }
        Some((groups, n_groups)) => {
            if n_groups < k {
                return Err(EvalError::Split(format!(
                    "k = {k} exceeds the {n_groups} available groups"
                )));
            }
            let strata = match grouping {
                Grouping::ByTrial => group_classes(ws, &groups, n_groups),
                _ => vec![0; n_groups],
            };
            let group_fold = stratified_assignment(&strata, k, seed);
            folds_from_assignment(k, groups.iter().map(|&g| group_fold[g]))
        }
    };
    Ok(FoldPlan { grouping, folds })
}

/// One fold per subject, in order of first appearance.
pub fn loso_splits(ws: &WindowSet) -> Result<FoldPlan, EvalError> {
    let (groups, n) = group_ids(ws, Grouping::BySubject).expect("subject grouping");
    if n < 2 {
        return Err(EvalError::Split(
            "leave-one-subject-out needs at least 2 subjects".into(),
        ));
    }
    Ok(FoldPlan {
        grouping: Grouping::BySubject,
        folds: folds_from_assignment(n, groups.into_iter()),
    })
}

/// A single stratified split with `round(n · test_fraction)` items of each
/// class (windows, or whole groups when grouped) on the test side.
pub fn holdout_split(
    ws: &WindowSet,
    test_fraction: f64,
    seed: u64,
    grouping: Grouping,
) -> Result<FoldPlan, EvalError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(EvalError::Split(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let (item_of_window, strata) = match group_ids(ws, grouping) {
        None => ((0..ws.len()).collect::<Vec<_>>(), ws.labels()),
        Some((groups, n)) => {
            let strata = match grouping {
                Grouping::ByTrial => group_classes(ws, &groups, n),
                _ => vec![0; n],
            };
            (groups, strata)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_stratum: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (item, &s) in strata.iter().enumerate() {
        by_stratum.entry(s).or_default().push(item);
    }
    let mut test_items = HashSet::new();
    for members in by_stratum.values_mut() {
        members.shuffle(&mut rng);
        let n_test = (members.len() as f64 * test_fraction).round() as usize;
        test_items.extend(members.iter().take(n_test).copied());
    }
    let (test, train): (Vec<usize>, Vec<usize>) =
        (0..ws.len()).partition(|&i| test_items.contains(&item_of_window[i]));
    if test.is_empty() || train.is_empty() {
        return Err(EvalError::Split(format!(
            "hold-out with fraction {test_fraction} leaves an empty {} side",
            if test.is_empty() { "test" } else { "train" }
        )));
    }
    Ok(FoldPlan {
        grouping,
        folds: vec![Fold { train, test }],
    })
}

/// Per-fold outcome recorded in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_windows: usize,
    pub test_windows: usize,
    pub pca_components: usize,
    pub explained_variance: f64,
    pub final_train_loss: f64,
    pub accuracy: f64,
    pub audit: LeakageAudit,
    pub valid: bool,
}

/// Modelling choices the run made where the method leaves room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub normalization: String,
    pub moments: String,
    pub kurtosis: String,
    pub quantiles: String,
    pub auc_spacing: String,
    pub fitting: String,
    pub loss: String,
    pub initialization: String,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            normalization: "z-score (population std, std < 1e-12 replaced by 1)".into(),
            moments: "population (1/W)".into(),
            kurtosis: "excess (m4/m2^2 - 3)".into(),
            quantiles: "linear interpolation at (W-1)q".into(),
            auc_spacing: "unit sample spacing".into(),
            fitting: "scaler and PCA fitted per fold on training windows only".into(),
            loss: "categorical cross-entropy".into(),
            initialization: "He uniform, zero biases".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub technique: WindowTechnique,
    pub scheme: ValidationScheme,
    pub classifier: String,
    pub epochs: usize,
    pub window_samples: usize,
    pub window_count: usize,
    pub feature_dim: usize,
    pub class_labels: Vec<u32>,
    pub folds: Vec<FoldReport>,
    /// Mean of the valid folds' accuracies.
    pub mean_accuracy: f64,
    /// False if any fold failed its leakage audit.
    pub valid: bool,
    pub per_class: Vec<ClassMetrics>,
    /// Summed over valid folds; rows are true classes.
    pub confusion: Vec<Vec<u64>>,
    pub conventions: Conventions,
    pub config: ExperimentConfig,
}

/// Everything a run produces. Timing is kept out of [`EvalReport`] so the
/// report is byte-identical across repeated runs.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: EvalReport,
    pub timing: TimingStats,
    pub windows: WindowSet,
    pub plan: FoldPlan,
    pub models: Vec<PipelineModel>,
}

/// Builds a fresh classifier for a fold.
pub type ClassifierFactory<'a> = dyn Fn(usize) -> Box<dyn Classifier> + Sync + 'a;

/// Loads the manifest named by the config and runs the experiment with the
/// 128/64/32 network.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, EvalError> {
    let manifest = DatasetManifest::load(&cfg.manifest).map_err(LoadError::from)?;
    cfg.validate(&manifest)?;
    let ts = TrialSet::load(&manifest)?;
    run_on_trials(cfg, &ts)
}

pub fn run_on_trials(cfg: &ExperimentConfig, ts: &TrialSet) -> Result<RunOutcome, EvalError> {
    let factory = |fold: usize| -> Box<dyn Classifier> {
        Box::new(MlpClassifier::new(
            cfg.seeds.init.wrapping_add(fold as u64),
            cfg.model.leaky_slope,
            cfg.train_config(fold),
        ))
    };
    run_with_classifier(cfg, ts, &factory)
}

/// Windows, splits, featurises and evaluates `ts` with classifiers from `factory`.
pub fn run_with_classifier(
    cfg: &ExperimentConfig,
    ts: &TrialSet,
    factory: &ClassifierFactory<'_>,
) -> Result<RunOutcome, EvalError> {
    cfg.validate(&ts.manifest)?;
    let w = ts.manifest.window_samples();
    let (ws, plan) = match (cfg.technique, cfg.scheme) {
        (WindowTechnique::LeaveOneTrialOut, ValidationScheme::Kfold) => {
            plan_loto_folds(ts, w, cfg.k, cfg.seeds.split)?
        }
        (technique, scheme) => {
            let ws = WindowSet::generate(ts, technique, w)?;
            let grouping = if technique == WindowTechnique::LeaveOneTrialOut {
                Grouping::ByTrial
            } else {
                Grouping::None
            };
            let plan = match scheme {
                ValidationScheme::Kfold => kfold_splits(&ws, cfg.k, cfg.seeds.split, grouping)?,
                ValidationScheme::Loso => loso_splits(&ws)?,
                ValidationScheme::Holdout => {
                    holdout_split(&ws, cfg.holdout_test_fraction, cfg.seeds.split, grouping)?
                }
            };
            (ws, plan)
        }
    };
    plan.check(&ws)
        .map_err(|e| EvalError::Split(format!("fold plan violates its invariants: {e}")))?;

    let layout = FeatureLayout::for_manifest(&ts.manifest);
    let (features, timing) = extract_all(ts, &ws)?;
    let labels = ws.labels();
    info!(
        "{} / {} / {}: {} windows of {} samples, {} features, {} folds",
        ts.manifest.name,
        cfg.technique,
        cfg.scheme.as_str(),
        ws.len(),
        w,
        layout.dim(),
        plan.folds.len()
    );

    let fold_results = (0..plan.folds.len())
        .into_par_iter()
        .map(|f| {
            run_fold(cfg, ts, &ws, &plan, f, &features, &labels, &layout, factory)
                .map_err(|source| EvalError::Fold { fold: f, source })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let k = ts.class_count;
    let mut confusion = vec![vec![0u64; k]; k];
    let mut folds = Vec::with_capacity(fold_results.len());
    let mut models = Vec::with_capacity(fold_results.len());
    let mut classifier = String::new();
    for r in fold_results {
        if r.report.valid {
            for (acc, row) in confusion.iter_mut().zip(&r.confusion) {
                for (a, b) in acc.iter_mut().zip(row) {
                    *a += b;
                }
            }
        }
        classifier = r.classifier;
        folds.push(r.report);
        if let Some(m) = r.model {
            models.push(m);
        }
    }
    let valid_acc: Vec<f64> = folds.iter().filter(|f| f.valid).map(|f| f.accuracy).collect();
    let mean_accuracy = if valid_acc.is_empty() {
        0.0
    } else {
        valid_acc.iter().sum::<f64>() / valid_acc.len() as f64
    };

    let report = EvalReport {
        dataset: ts.manifest.name.clone(),
        technique: cfg.technique,
        scheme: cfg.scheme,
        classifier,
        epochs: cfg.epochs(),
        window_samples: w,
        window_count: ws.len(),
        feature_dim: layout.dim(),
        class_labels: ts.class_labels.clone(),
        valid: folds.iter().all(|f| f.valid),
        folds,
        mean_accuracy,
        per_class: metrics(&confusion).per_class,
        confusion,
        conventions: Conventions::default(),
        config: cfg.clone(),
    };
    Ok(RunOutcome {
        report,
        timing,
        windows: ws,
        plan,
        models,
    })
}

struct FoldResult {
    report: FoldReport,
    confusion: Vec<Vec<u64>>,
    classifier: String,
    model: Option<PipelineModel>,
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    cfg: &ExperimentConfig,
    ts: &TrialSet,
    ws: &WindowSet,
    plan: &FoldPlan,
    f: usize,
    features: &Matrix,
    labels: &[usize],
    layout: &FeatureLayout,
    factory: &ClassifierFactory<'_>,
) -> Result<FoldResult, FoldError> {
    let fold = &plan.folds[f];
    if fold.train.is_empty() {
        return Err(FoldError::EmptySide("train"));
    }
    if fold.test.is_empty() {
        return Err(FoldError::EmptySide("test"));
    }
    let k = ts.class_count;
    let y_train: Vec<usize> = fold.train.iter().map(|&i| labels[i]).collect();
    let mut present = vec![false; k];
    y_train.iter().for_each(|&y| present[y] = true);
    if let Some(class) = present.iter().position(|p| !p) {
        return Err(FoldError::MissingClass { class });
    }

    // Every row handed to a fit call is recorded for the leakage audit.
    let fit_rows = fold.train.clone();
    let x_train = features.select_rows(&fit_rows);
    let scaler = Scaler::fit(&x_train)?;
    let z_train = scaler.transform(&x_train)?;
    let pca = PcaModel::fit(&z_train, cfg.pca_retained_variance)?;
    let p_train = pca.transform(&z_train)?;

    let mut clf = factory(f);
    clf.fit(&p_train, &y_train, k)?;
    let final_train_loss = clf.final_loss().unwrap_or(f64::NAN);

    let p_test = pca.transform(&scaler.transform(&features.select_rows(&fold.test))?)?;
    let predicted = clf.predict(&p_test)?;
    let mut confusion = vec![vec![0u64; k]; k];
    for (&i, &p) in fold.test.iter().zip(&predicted) {
        confusion[labels[i]][p] += 1;
    }
    let correct = fold
        .test
        .iter()
        .zip(&predicted)
        .filter(|(&i, &p)| labels[i] == p)
        .count();

    let audit = audit_fold(ws, plan, f, &fit_rows);
    let model = clf.mlp_params().cloned().map(|mlp| {
        PipelineModel::new(
            ts.manifest.name.clone(),
            ts.class_labels.clone(),
            layout.clone(),
            scaler.clone(),
            pca.clone(),
            mlp,
        )
    });
    Ok(FoldResult {
        report: FoldReport {
            fold: f,
            train_windows: fold.train.len(),
            test_windows: fold.test.len(),
            pca_components: pca.output_dim(),
            explained_variance: pca.explained_variance,
            final_train_loss,
            accuracy: correct as f64 / fold.test.len() as f64,
            valid: audit.passed,
            audit,
        },
        confusion,
        classifier: clf.name().to_string(),
        model,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// One row per fold and a final mean row.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "dataset: {}  technique: {}  scheme: {}  classifier: {}  epochs: {}",
            self.dataset,
            self.technique,
            self.scheme.as_str(),
            self.classifier,
            self.epochs
        );
        let _ = writeln!(
            s,
            "windows: {} x {} samples  features: {}",
            self.window_count, self.window_samples, self.feature_dim
        );
        let _ = writeln!(
            s,
            "{:>5}  {:>7}  {:>6}  {:>4}  {:>9}  audit",
            "fold", "train", "test", "pca", "accuracy"
        );
        for f in &self.folds {
            let _ = writeln!(
                s,
                "{:>5}  {:>7}  {:>6}  {:>4}  {:>8.2}%  {}",
                f.fold,
                f.train_windows,
                f.test_windows,
                f.pca_components,
                100.0 * f.accuracy,
                if f.audit.passed { "pass" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            s,
            "{:>5}  {:>7}  {:>6}  {:>4}  {:>8.2}%  {}",
            "mean",
            "",
            "",
            "",
            100.0 * self.mean_accuracy,
            if self.valid { "valid" } else { "INVALID" }
        );
        s
    }
}

/// Writes `report.json`, `report.txt`, `timing.json` and `windows.json`
/// (window provenance and folds) into `dir`. With `save_models`, also one
/// `model-fold-NN.json` per fold.
pub fn write_outputs(dir: &Path, outcome: &RunOutcome, save_models: bool) -> Result<(), EvalError> {
    let io = |path: PathBuf| move |source| EvalError::Io { path, source };
    std::fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
    let write = |name: &str, text: String| -> Result<(), EvalError> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(io(path))
    };
    write("report.json", outcome.report.to_json())?;
    write("report.txt", outcome.report.to_table())?;
    write(
        "timing.json",
        serde_json::to_string_pretty(&outcome.timing).expect("timing serialises"),
    )?;
    let index = crate::windowing::WindowIndex {
        windows: &outcome.windows,
        plan: &outcome.plan,
    };
    write("windows.json", serde_json::to_string(&index).expect("index serialises"))?;
    if save_models {
        for (f, m) in outcome.models.iter().enumerate() {
            let text = m
                .to_json()
                .map_err(|e| EvalError::Config(format!("cannot serialise model: {e}")))?;
            write(&format!("model-fold-{f:02}.json"), text)?;
        }
    }
    Ok(())
}
