//! Labelled synthetic trial sets with known structure.
//!
//! Each class gets its own per-channel offset, oscillation frequency and
//! amplitude, so with enough `separation` the classes are trivially
//! separable from window statistics. Used by tests, the acceptance suite
//! and for trying the CLI without downloading a dataset.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{DatasetManifest, Trial, TrialSet, TrialSource};
use crate::windowing::WindowTechnique;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub name: String,
    pub classes: usize,
    pub subjects: usize,
    pub trials_per_subject_class: usize,
    pub trial_len: usize,
    /// Channels come in 3-axis groups; must be a multiple of 3.
    pub channels: usize,
    pub sample_rate_hz: f64,
    pub window_seconds: f64,
    /// Distance between class offsets, in units of the noise level.
    pub separation: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            classes: 3,
            subjects: 4,
            trials_per_subject_class: 2,
            trial_len: 300,
            channels: 3,
            sample_rate_hz: 50.0,
            window_seconds: 1.0,
            separation: 3.0,
            noise: 0.5,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            name: self.name.clone(),
            sample_rate_hz: self.sample_rate_hz,
            channel_names: (0..self.channels)
                .map(|c| format!("s{}_{}", c / 3, ["x", "y", "z"][c % 3]))
                .collect(),
            triplet_groups: (0..self.channels / 3).map(|g| [3 * g, 3 * g + 1, 3 * g + 2]).collect(),
            window_seconds: self.window_seconds,
            trial_sources: Vec::new(),
            supported_windowing: WindowTechnique::ALL.to_vec(),
            base_dir: None,
        }
    }

    /// Trials in (subject, class, repetition) order, with source labels `0..classes`.
    pub fn trials(&self) -> Vec<Trial> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::new();
        for s in 0..self.subjects {
            let subject_gain = 1.0 + 0.05 * rng.random_range(-1.0..1.0);
            for k in 0..self.classes {
                let freq = 0.5 + 0.7 * k as f64;
                for r in 0..self.trials_per_subject_class {
                    let phase: f64 = rng.random_range(0.0..TAU);
                    let mut samples = Vec::with_capacity(self.trial_len * self.channels);
                    for t in 0..self.trial_len {
                        let time = t as f64 / self.sample_rate_hz;
                        for c in 0..self.channels {
                            let offset = self.separation * self.noise * class_offset(k, c);
                            let wave = (1.0 + 0.3 * k as f64)
                                * (TAU * freq * time + phase + c as f64).sin();
                            let noise = self.noise * rng.random_range(-1.0..1.0);
                            samples.push(subject_gain * (offset + wave) + noise);
                        }
                    }
                    out.push(
                        Trial::new(
                            format!("subject{s}"),
                            k,
                            format!("subject{s}-class{k}-rep{r}"),
                            self.sample_rate_hz,
                            self.channels,
                            samples,
                        )
                        .expect("synthetic samples are finite"),
                    );
                }
            }
        }
        out
    }

    pub fn trial_set(&self) -> TrialSet {
        TrialSet::from_trials(self.manifest(), self.trials()).expect("synthetic trial set is valid")
    }

    /// Writes one CSV per trial plus `manifest.json` into `dir`; returns the manifest path.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let mut manifest = self.manifest();
        for trial in self.trials() {
            let file = format!("{}.csv", trial.trial_id);
            let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join(&file))?);
            for t in 0..trial.len() {
                let row: Vec<String> = trial.rows(t, 1).iter().map(|v| v.to_string()).collect();
                writeln!(w, "{}", row.join(","))?;
            }
            w.flush()?;
            manifest.trial_sources.push(TrialSource {
                subject_id: trial.subject_id.clone(),
                activity_id: trial.activity_id as u32,
                trial_id: trial.trial_id.clone(),
                path: PathBuf::from(file),
            });
        }
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
        std::fs::write(&path, json)?;
        Ok(path)
    }
}

/// Class `k`'s offset on channel `c`: a distinct corner pattern per class.
fn class_offset(k: usize, c: usize) -> f64 {
    let bits = (k + 1) * (c % 3 + 1);
    (bits % 4) as f64 + k as f64
}
