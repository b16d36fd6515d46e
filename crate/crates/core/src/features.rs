//! The twelve handcrafted window features.
//!
//! Eleven are computed per channel: mean (A), standard deviation (SD),
//! average absolute difference (AAD), maximum, minimum, median, skew,
//! kurtosis, interquartile range (IQR), area under the curve (AUC) and area
//! under the squared curve (SqAUC). The twelfth, average resultant
//! acceleration (ARA), is computed once per 3-axis triplet group.
//!
//! Conventions:
//! - moments use `1/W` normalisation;
//! - kurtosis is excess kurtosis (`m4/m2² − 3`);
//! - skew and kurtosis are 0 when SD < 1e-12;
//! - quantiles interpolate linearly at position `(W − 1)·q` of the sorted window;
//! - AUC and SqAUC use the trapezoid rule with unit sample spacing.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetManifest, Trial, TrialSet};
use crate::linalg::Matrix;
use crate::windowing::{Window, WindowSet};

/// Below this standard deviation skew and kurtosis are reported as 0.
pub const DEGENERATE_SD: f64 = 1e-12;

pub const CHANNEL_FEATURE_NAMES: [&str; 11] = [
    "mean", "sd", "aad", "max", "min", "median", "skew", "kurtosis", "iqr", "auc", "sq_auc",
];

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("window must hold at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("triplet axes have different lengths ({0}, {1}, {2})")]
    LengthMismatch(usize, usize, usize),
    #[error("window has {found} values, not a multiple of {channels} channels")]
    ChannelMismatch { found: usize, channels: usize },
    #[error("non-finite feature {name}")]
    NonFinite { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelFeatures {
    pub mean: f64,
    pub sd: f64,
    pub aad: f64,
    pub max: f64,
    pub min: f64,
    pub median: f64,
    pub skew: f64,
    pub kurtosis: f64,
    pub iqr: f64,
    pub auc: f64,
    pub sq_auc: f64,
}

impl ChannelFeatures {
    /// Values in [`CHANNEL_FEATURE_NAMES`] order.
    pub fn to_array(&self) -> [f64; 11] {
        [
            self.mean,
            self.sd,
            self.aad,
            self.max,
            self.min,
            self.median,
            self.skew,
            self.kurtosis,
            self.iqr,
            self.auc,
            self.sq_auc,
        ]
    }
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn channel_features(series: &[f64]) -> Result<ChannelFeatures, FeatureError> {
    let n = series.len();
    if n < 2 {
        return Err(FeatureError::TooShort(n));
    }
    let nf = n as f64;
    let mean = series.iter().sum::<f64>() / nf;

    let (mut m2, mut m3, mut m4, mut abs_dev) = (0.0, 0.0, 0.0, 0.0);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for &x in series {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        abs_dev += d.abs();
        sum += x;
        sum_sq += x * x;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let sd = m2.sqrt();
    let (skew, kurtosis) = if sd < DEGENERATE_SD {
        (0.0, 0.0)
    } else {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    };

    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);

    // Trapezoid with unit spacing: every interior sample counts once, the two ends half.
    let (first, last) = (series[0], series[n - 1]);
    let auc = sum - 0.5 * (first + last);
    let sq_auc = sum_sq - 0.5 * (first * first + last * last);

    Ok(ChannelFeatures {
        mean,
        sd,
        aad: abs_dev / nf,
        max: sorted[n - 1],
        min: sorted[0],
        median: quantile_sorted(&sorted, 0.5),
        skew,
        kurtosis,
        iqr: q3 - q1,
        auc,
        sq_auc,
    })
}

/// Per-sample Euclidean norm of a 3-axis signal.
pub fn resultant_magnitude(x: &[f64], y: &[f64], z: &[f64]) -> Result<Vec<f64>, FeatureError> {
    if x.len() != y.len() || y.len() != z.len() {
        return Err(FeatureError::LengthMismatch(x.len(), y.len(), z.len()));
    }
    Ok(x.iter()
        .zip(y)
        .zip(z)
        .map(|((a, b), c)| (a * a + b * b + c * c).sqrt())
        .collect())
}

/// Average resultant acceleration: mean of [`resultant_magnitude`].
pub fn ara(x: &[f64], y: &[f64], z: &[f64]) -> Result<f64, FeatureError> {
    let r = resultant_magnitude(x, y, z)?;
    if r.is_empty() {
        return Err(FeatureError::TooShort(0));
    }
    Ok(r.iter().sum::<f64>() / r.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSource {
    Channel { index: usize, name: String },
    Group { index: usize, channels: [usize; 3] },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSlot {
    /// Column name, e.g. `chest_acc_x.iqr` or `ara.g0`.
    pub name: String,
    pub feature: String,
    pub source: FeatureSource,
}

/// Position → (feature, channel or group) map, identical for every window of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub slots: Vec<FeatureSlot>,
    pub channels: usize,
    pub groups: Vec<[usize; 3]>,
}

impl FeatureLayout {
    /// Channel features for every channel in manifest order, then one ARA per
    /// triplet group in manifest order. Dimension `11·C + G`.
    pub fn for_manifest(manifest: &DatasetManifest) -> Self {
        let mut slots = Vec::with_capacity(11 * manifest.channel_count() + manifest.triplet_groups.len());
        for (index, ch) in manifest.channel_names.iter().enumerate() {
            for feature in CHANNEL_FEATURE_NAMES {
                slots.push(FeatureSlot {
                    name: format!("{ch}.{feature}"),
                    feature: feature.to_string(),
                    source: FeatureSource::Channel {
                        index,
                        name: ch.clone(),
                    },
                });
            }
        }
        for (index, &channels) in manifest.triplet_groups.iter().enumerate() {
            slots.push(FeatureSlot {
                name: format!("ara.g{index}"),
                feature: "ara".into(),
                source: FeatureSource::Group { index, channels },
            });
        }
        Self {
            slots,
            channels: manifest.channel_count(),
            groups: manifest.triplet_groups.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.slots.len()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.slots.iter().map(|s| s.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Featurises a row-major `W × C` window according to `layout`.
pub fn extract_from_rows(data: &[f64], layout: &FeatureLayout) -> Result<FeatureVector, FeatureError> {
    let c = layout.channels;
    if c == 0 || !data.len().is_multiple_of(c) {
        return Err(FeatureError::ChannelMismatch {
            found: data.len(),
            channels: c,
        });
    }
    let w = data.len() / c;
    let columns: Vec<Vec<f64>> = (0..c)
        .map(|ch| data.iter().skip(ch).step_by(c).copied().collect())
        .collect();

    let mut values = Vec::with_capacity(layout.dim());
    for col in &columns {
        values.extend_from_slice(&channel_features(col)?.to_array());
    }
    for &[a, b, g] in &layout.groups {
        if w < 2 {
            return Err(FeatureError::TooShort(w));
        }
        values.push(ara(&columns[a], &columns[b], &columns[g])?);
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(FeatureError::NonFinite {
            name: layout.slots[pos].name.clone(),
        });
    }
    Ok(FeatureVector(values))
}

pub fn extract_features(
    window: &Window,
    trial: &Trial,
    manifest: &DatasetManifest,
) -> Result<FeatureVector, FeatureError> {
    extract_from_rows(window.data(trial), &FeatureLayout::for_manifest(manifest))
}

/// Wall-clock seconds spent featurising single windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub count: usize,
    pub min_seconds: f64,
    pub mean_seconds: f64,
    pub max_seconds: f64,
}

impl TimingStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self {
                count: 0,
                min_seconds: 0.0,
                mean_seconds: 0.0,
                max_seconds: 0.0,
            };
        }
        Self {
            count: samples.len(),
            min_seconds: samples.iter().copied().fold(f64::INFINITY, f64::min),
            mean_seconds: samples.iter().sum::<f64>() / samples.len() as f64,
            max_seconds: samples.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Featurises every window, in parallel, with rows in window order.
pub fn extract_all(ts: &TrialSet, ws: &WindowSet) -> Result<(Matrix, TimingStats), FeatureError> {
    let layout = FeatureLayout::for_manifest(&ts.manifest);
    let rows: Vec<(FeatureVector, f64)> = (0..ws.len())
        .into_par_iter()
        .map(|i| {
            let start = Instant::now();
            let v = extract_from_rows(ws.data(ts, i), &layout)?;
            Ok((v, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<_, FeatureError>>()?;
    let times: Vec<f64> = rows.iter().map(|(_, t)| *t).collect();
    let mut data = Vec::with_capacity(rows.len() * layout.dim());
    for (v, _) in rows {
        data.extend(v.0);
    }
    Ok((Matrix::from_vec(ws.len(), layout.dim(), data), TimingStats::from_samples(&times)))
}

/// Writes one CSV row per window: provenance columns (`trial_id`,
/// `subject_id`, `label`, `start_index`) followed by the layout's features.
pub fn write_feature_csv<W: Write>(
    out: W,
    layout: &FeatureLayout,
    ws: &WindowSet,
    features: &Matrix,
) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["trial_id", "subject_id", "label", "start_index"];
    header.extend(layout.names());
    writer.write_record(&header)?;
    for (i, w) in ws.windows.iter().enumerate() {
        let mut record = vec![
            w.trial_id.clone(),
            w.subject_id.clone(),
            w.activity_id.to_string(),
            w.start_index.to_string(),
        ];
        record.extend(features.row(i).iter().map(|v| v.to_string()));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
