//! Temporal window generation and fold plans.
//!
//! Three generation techniques are supported:
//!
//! - full-non-overlapping: stride `W`, windows never share samples;
//! - semi-non-overlapping: stride `W/2`, consecutive windows share half their samples;
//! - leave-one-trial-out: semi-non-overlapping windows inside each trial, with
//!   folds built from whole trials so no raw sample is on both sides of a split.
//!
//! Trailing samples that do not fill a window are dropped.

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Trial, TrialSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowTechnique {
    FullNonOverlapping,
    SemiNonOverlapping,
    LeaveOneTrialOut,
}

impl WindowTechnique {
    pub const ALL: [WindowTechnique; 3] = [
        WindowTechnique::FullNonOverlapping,
        WindowTechnique::SemiNonOverlapping,
        WindowTechnique::LeaveOneTrialOut,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::FullNonOverlapping => "full_non_overlapping",
            Self::SemiNonOverlapping => "semi_non_overlapping",
            Self::LeaveOneTrialOut => "leave_one_trial_out",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for WindowTechnique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WindowError {
    #[error("window length must be at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("semi-overlap requires even window length, got {0}")]
    OddWindow(usize),
    #[error("class {class} (source label {source_label}) has a single trial; it cannot appear on both sides of a trial-grouped split")]
    SingleTrialClass { class: usize, source_label: u32 },
    #[error("{folds} folds requested but only {groups} groups are available")]
    NotEnoughGroups { folds: usize, groups: usize },
    #[error("fold count must be at least 2, got {0}")]
    FoldCount(usize),
}

/// A fixed-length slice of a trial. Sample data stays in the trial; use
/// [`Window::data`] to view it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    /// Position of the parent trial inside its [`TrialSet`].
    pub trial_index: usize,
    pub trial_id: String,
    pub subject_id: String,
    pub activity_id: usize,
    pub start_index: usize,
    pub length: usize,
}

impl Window {
    pub fn span(&self) -> Range<usize> {
        self.start_index..self.start_index + self.length
    }

    /// Row-major `W × C` view into the parent trial.
    pub fn data<'a>(&self, trial: &'a Trial) -> &'a [f64] {
        trial.rows(self.start_index, self.length)
    }
}

fn windows_at(trial: &Trial, trial_index: usize, w: usize, stride: usize) -> Vec<Window> {
    let t = trial.len();
    if t < w {
        warn!(
            "trial {:?}: {} samples is shorter than the {}-sample window; no windows",
            trial.trial_id, t, w
        );
        return Vec::new();
    }
    (0..=t - w)
        .step_by(stride)
        .map(|start| Window {
            trial_index,
            trial_id: trial.trial_id.clone(),
            subject_id: trial.subject_id.clone(),
            activity_id: trial.activity_id,
            start_index: start,
            length: w,
        })
        .collect()
}

/// Windows at `0, W, 2W, …`; `floor(T/W)` of them.
pub fn full_non_overlapping(trial: &Trial, trial_index: usize, w: usize) -> Result<Vec<Window>, WindowError> {
    if w < 2 {
        return Err(WindowError::TooShort(w));
    }
    Ok(windows_at(trial, trial_index, w, w))
}

/// Windows at `0, W/2, W, …` with the last start `≤ T − W`;
/// `floor((T − W)/(W/2)) + 1` of them.
pub fn semi_overlapping(trial: &Trial, trial_index: usize, w: usize) -> Result<Vec<Window>, WindowError> {
    if w < 2 {
        return Err(WindowError::TooShort(w));
    }
    if !w.is_multiple_of(2) {
        return Err(WindowError::OddWindow(w));
    }
    Ok(windows_at(trial, trial_index, w, w / 2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSet {
    pub technique: WindowTechnique,
    pub window_samples: usize,
    pub windows: Vec<Window>,
}

impl WindowSet {
    /// Windows every trial with the given technique. Leave-one-trial-out uses
    /// semi-overlapping windows inside each trial.
    pub fn generate(ts: &TrialSet, technique: WindowTechnique, w: usize) -> Result<Self, WindowError> {
        let mut windows = Vec::new();
        for (i, trial) in ts.trials.iter().enumerate() {
            let mut per_trial = match technique {
                WindowTechnique::FullNonOverlapping => full_non_overlapping(trial, i, w)?,
                WindowTechnique::SemiNonOverlapping | WindowTechnique::LeaveOneTrialOut => {
                    semi_overlapping(trial, i, w)?
                }
            };
            windows.append(&mut per_trial);
        }
        Ok(Self {
            technique,
            window_samples: w,
            windows,
        })
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.windows.iter().map(|w| w.activity_id).collect()
    }

    pub fn data<'a>(&self, ts: &'a TrialSet, i: usize) -> &'a [f64] {
        let w = &self.windows[i];
        w.data(&ts.trials[w.trial_index])
    }
}

/// Which identity must not be split between train and test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    None,
    ByTrial,
    BySubject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub grouping: Grouping,
    pub folds: Vec<Fold>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanViolation {
    #[error("fold {fold}: window {index} is on both train and test sides")]
    IndexOverlap { fold: usize, index: usize },
    #[error("window {index} is tested in more than one fold")]
    RepeatedTest { index: usize },
    #[error("fold {fold}: window index {index} out of range")]
    OutOfRange { fold: usize, index: usize },
    #[error("fold {fold}: group {group:?} is on both sides")]
    GroupSplit { fold: usize, group: String },
}

impl FoldPlan {
    /// Checks index disjointness, single test membership and the grouping
    /// constraint for every fold.
    pub fn check(&self, ws: &WindowSet) -> Result<(), PlanViolation> {
        let mut tested = HashSet::new();
        for (f, fold) in self.folds.iter().enumerate() {
            let train: HashSet<usize> = fold.train.iter().copied().collect();
            for &i in fold.train.iter().chain(&fold.test) {
                if i >= ws.len() {
                    return Err(PlanViolation::OutOfRange { fold: f, index: i });
                }
            }
            for &i in &fold.test {
                if train.contains(&i) {
                    return Err(PlanViolation::IndexOverlap { fold: f, index: i });
                }
                if !tested.insert(i) {
                    return Err(PlanViolation::RepeatedTest { index: i });
                }
            }
            if let Some(group) = split_group(ws, self.grouping, fold) {
                return Err(PlanViolation::GroupSplit { fold: f, group });
            }
        }
        Ok(())
    }
}

/// First group key found on both sides of the fold, if any.
fn split_group(ws: &WindowSet, grouping: Grouping, fold: &Fold) -> Option<String> {
    let key = |i: usize| -> &str {
        let w = &ws.windows[i];
        match grouping {
            Grouping::BySubject => &w.subject_id,
            _ => &w.trial_id,
        }
    };
    if grouping == Grouping::None {
        return None;
    }
    let train: HashSet<&str> = fold.train.iter().map(|&i| key(i)).collect();
    fold.test
        .iter()
        .map(|&i| key(i))
        .find(|k| train.contains(k))
        .map(str::to_owned)
}

/// Number of raw `(trial, sample index)` pairs covered by windows on both
/// sides of the fold. Brute force over every covered sample.
pub fn shared_samples(ws: &WindowSet, fold: &Fold) -> usize {
    let mut train = HashSet::new();
    for &i in &fold.train {
        let w = &ws.windows[i];
        for t in w.span() {
            train.insert((w.trial_index, t));
        }
    }
    let mut shared = HashSet::new();
    for &i in &fold.test {
        let w = &ws.windows[i];
        for t in w.span() {
            if train.contains(&(w.trial_index, t)) {
                shared.insert((w.trial_index, t));
            }
        }
    }
    shared.len()
}

/// Per-fold leakage verdict recorded in evaluation reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageAudit {
    pub fold: usize,
    pub index_disjoint: bool,
    pub grouping_respected: bool,
    /// Raw samples covered by both train and test windows.
    pub shared_samples: usize,
    /// False only for ungrouped semi-overlapping splits, whose shared
    /// samples are an accepted property of the technique.
    pub sample_disjoint_required: bool,
    /// Every row consumed by a fit call came from the train side.
    pub fit_rows_train_only: bool,
    pub passed: bool,
}

/// Audits one fold. `fit_rows` lists every window index consumed by a fit call.
pub fn audit_fold(ws: &WindowSet, plan: &FoldPlan, fold: usize, fit_rows: &[usize]) -> LeakageAudit {
    let f = &plan.folds[fold];
    let test: HashSet<usize> = f.test.iter().copied().collect();
    let index_disjoint = !f.train.iter().any(|i| test.contains(i));
    let grouping_respected = split_group(ws, plan.grouping, f).is_none();
    let shared = shared_samples(ws, f);
    let sample_disjoint_required =
        !(ws.technique == WindowTechnique::SemiNonOverlapping && plan.grouping == Grouping::None);
    let fit_rows_train_only = !fit_rows.iter().any(|i| test.contains(i));
    let passed = index_disjoint
        && grouping_respected
        && fit_rows_train_only
        && (!sample_disjoint_required || shared == 0);
    LeakageAudit {
        fold,
        index_disjoint,
        grouping_respected,
        shared_samples: shared,
        sample_disjoint_required,
        fit_rows_train_only,
        passed,
    }
}

/// Deals items into `k` folds, class by class: each class's items are
/// shuffled, then dealt round-robin, continuing where the previous class
/// stopped so fold sizes stay within one of each other.
pub(crate) fn stratified_assignment(classes: &[usize], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = classes.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in classes.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut assignment = vec![0; classes.len()];
    let mut next = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = next;
            next = (next + 1) % k;
        }
    }
    assignment
}

/// Leave-one-trial-out plan: semi-overlapping windows inside each trial and
/// `folds` folds of whole trials, stratified by activity.
pub fn plan_loto_folds(
    ts: &TrialSet,
    w: usize,
    folds: usize,
    seed: u64,
) -> Result<(WindowSet, FoldPlan), WindowError> {
    if folds < 2 {
        return Err(WindowError::FoldCount(folds));
    }
    let mut per_class = vec![0usize; ts.class_count];
    for t in &ts.trials {
        per_class[t.activity_id] += 1;
    }
    if let Some(class) = per_class.iter().position(|&n| n < 2) {
        return Err(WindowError::SingleTrialClass {
            class,
            source_label: ts.class_labels[class],
        });
    }
    if ts.trials.len() < folds {
        return Err(WindowError::NotEnoughGroups {
            folds,
            groups: ts.trials.len(),
        });
    }

    let ws = WindowSet::generate(ts, WindowTechnique::LeaveOneTrialOut, w)?;
    let classes: Vec<usize> = ts.trials.iter().map(|t| t.activity_id).collect();
    let trial_fold = stratified_assignment(&classes, folds, seed);
    let plan = FoldPlan {
        grouping: Grouping::ByTrial,
        folds: folds_from_assignment(folds, ws.windows.iter().map(|w| trial_fold[w.trial_index])),
    };
    Ok((ws, plan))
}

/// Builds folds where fold `f` tests every item assigned to `f`.
pub(crate) fn folds_from_assignment(k: usize, assignment: impl Iterator<Item = usize>) -> Vec<Fold> {
    let assignment: Vec<usize> = assignment.collect();
    (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..assignment.len()).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect()
}

/// Provenance-only description of a run's windows and folds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WindowIndex<'a> {
    pub windows: &'a WindowSet,
    pub plan: &'a FoldPlan,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DatasetManifest;

    fn trial(len: usize) -> Trial {
        Trial::new("s", 0, "t", 50.0, 1, vec![0.0; len]).unwrap()
    }

    fn starts(ws: &[Window]) -> Vec<usize> {
        ws.iter().map(|w| w.start_index).collect()
    }

    #[test]
    fn full_drops_remainder() {
        let w = full_non_overlapping(&trial(10), 0, 4).unwrap();
        assert_eq!(starts(&w), vec![0, 4]);
    }

    #[test]
    fn full_exact_partition() {
        let w = full_non_overlapping(&trial(8), 0, 4).unwrap();
        let covered: Vec<usize> = w.iter().flat_map(|w| w.span()).collect();
        assert_eq!(covered, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn short_trial_gives_no_windows() {
        assert!(full_non_overlapping(&trial(3), 0, 4).unwrap().is_empty());
        assert!(semi_overlapping(&trial(3), 0, 4).unwrap().is_empty());
    }

    #[test]
    fn semi_starts() {
        assert_eq!(starts(&semi_overlapping(&trial(10), 0, 4).unwrap()), vec![0, 2, 4, 6]);
        assert_eq!(starts(&semi_overlapping(&trial(4), 0, 4).unwrap()), vec![0]);
        assert_eq!(
            semi_overlapping(&trial(4), 0, 4).unwrap(),
            full_non_overlapping(&trial(4), 0, 4).unwrap()
        );
    }

    #[test]
    fn bad_window_lengths() {
        assert_eq!(semi_overlapping(&trial(10), 0, 5), Err(WindowError::OddWindow(5)));
        assert_eq!(full_non_overlapping(&trial(10), 0, 1), Err(WindowError::TooShort(1)));
        let err = WindowError::OddWindow(5).to_string();
        assert!(err.contains("semi-overlap requires even window length"));
    }

    #[test]
    fn window_copies_parent_identity() {
        let t = Trial::new("subj", 3, "trial-x", 50.0, 2, (0..20).map(f64::from).collect()).unwrap();
        let w = &semi_overlapping(&t, 7, 4).unwrap()[1];
        assert_eq!((w.trial_index, w.activity_id), (7, 3));
        assert_eq!(w.subject_id, "subj");
        assert_eq!(w.data(&t), &[4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0]);
    }

    fn four_trial_set() -> TrialSet {
        let manifest = DatasetManifest {
            name: "toy".into(),
            sample_rate_hz: 10.0,
            channel_names: vec!["x".into()],
            triplet_groups: vec![],
            window_seconds: 0.4,
            trial_sources: vec![],
            supported_windowing: WindowTechnique::ALL.to_vec(),
            base_dir: None,
        };
        let trials = (0..4)
            .map(|i| Trial::new(format!("s{i}"), 0, format!("t{i}"), 10.0, 1, vec![i as f64; 12]).unwrap())
            .collect();
        TrialSet::from_trials(manifest, trials).unwrap()
    }

    #[test]
    fn loto_keeps_trials_whole() {
        let ts = four_trial_set();
        let (ws, plan) = plan_loto_folds(&ts, 4, 2, 42).unwrap();
        assert_eq!(plan.grouping, Grouping::ByTrial);
        plan.check(&ws).unwrap();
        for fold in &plan.folds {
            let test_trials: HashSet<&str> =
                fold.test.iter().map(|&i| ws.windows[i].trial_id.as_str()).collect();
            assert_eq!(test_trials.len(), 2);
            assert_eq!(shared_samples(&ws, fold), 0);
        }
    }

    #[test]
    fn loto_is_seed_deterministic() {
        let ts = four_trial_set();
        assert_eq!(plan_loto_folds(&ts, 4, 2, 9).unwrap(), plan_loto_folds(&ts, 4, 2, 9).unwrap());
    }

    #[test]
    fn loto_rejects_single_trial_class() {
        let mut ts = four_trial_set();
        ts.trials[0].activity_id = 1;
        ts.class_count = 2;
        ts.class_labels = vec![0, 1];
        let err = plan_loto_folds(&ts, 4, 2, 0).unwrap_err();
        assert_eq!(err, WindowError::SingleTrialClass { class: 1, source_label: 1 });
    }

    #[test]
    fn audit_flags_semi_overlap_only_when_required() {
        let ts = four_trial_set();
        let ws = WindowSet::generate(&ts, WindowTechnique::SemiNonOverlapping, 4).unwrap();
        // Windows 0 and 1 of trial 0 share two samples.
        let plan = FoldPlan {
            grouping: Grouping::None,
            folds: vec![Fold { train: vec![0], test: vec![1] }],
        };
        let audit = audit_fold(&ws, &plan, 0, &[0]);
        assert_eq!(audit.shared_samples, 2);
        assert!(audit.passed);

        let grouped = FoldPlan { grouping: Grouping::ByTrial, ..plan.clone() };
        let audit = audit_fold(&ws, &grouped, 0, &[0]);
        assert!(!audit.grouping_respected && !audit.passed);

        let audit = audit_fold(&ws, &plan, 0, &[0, 1]);
        assert!(!audit.fit_rows_train_only && !audit.passed);
    }

    #[test]
    fn check_catches_repeated_test_index() {
        let ts = four_trial_set();
        let ws = WindowSet::generate(&ts, WindowTechnique::FullNonOverlapping, 4).unwrap();
        let plan = FoldPlan {
            grouping: Grouping::None,
            folds: vec![
                Fold { train: vec![1], test: vec![0] },
                Fold { train: vec![1], test: vec![0] },
            ],
        };
        assert_eq!(plan.check(&ws), Err(PlanViolation::RepeatedTest { index: 0 }));
    }

    #[test]
    fn technique_names_round_trip() {
        for t in WindowTechnique::ALL {
            assert_eq!(WindowTechnique::parse(t.as_str()), Some(t));
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(json, format!("\"{}\"", t.as_str()));
        }
    }
}
