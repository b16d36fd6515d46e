//! Reference implementations and generators shared by the integration tests
//! and the acceptance suite. Written from the textbook definitions, without
//! reusing any library code paths.
#![allow(dead_code)]

use harbench::dataset::{DatasetManifest, Trial, TrialSet};
use harbench::linalg::Matrix;
use harbench::model::MlpParams;
use harbench::WindowTechnique;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|a − b| / max(|b|, 1)`
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn central_moment(x: &[f64], k: i32) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(k)).sum::<f64>() / x.len() as f64
}

/// Percentile by the "linear" rule: rank `h = (n − 1)q` between order statistics.
fn percentile(x: &[f64], q: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    s[lo] * (1.0 - frac) + s[hi] * frac
}

fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn trapezoid(x: &[f64]) -> f64 {
    x.windows(2).map(|p| (p[0] + p[1]) / 2.0).sum()
}

/// The eleven per-channel features in layout order.
pub fn channel_oracle(x: &[f64]) -> [f64; 11] {
    let sd = central_moment(x, 2).sqrt();
    let m = mean(x);
    let (skew, kurt) = if sd < 1e-12 {
        (0.0, 0.0)
    } else {
        (central_moment(x, 3) / sd.powi(3), central_moment(x, 4) / sd.powi(4) - 3.0)
    };
    let squared: Vec<f64> = x.iter().map(|v| v * v).collect();
    [
        m,
        sd,
        x.iter().map(|v| (v - m).abs()).sum::<f64>() / x.len() as f64,
        x.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        x.iter().cloned().fold(f64::INFINITY, f64::min),
        median(x),
        skew,
        kurt,
        percentile(x, 0.75) - percentile(x, 0.25),
        trapezoid(x),
        trapezoid(&squared),
    ]
}

/// Full feature vector of a row-major `W × C` window: 11 per channel, then
/// one average resultant magnitude per triplet.
pub fn window_oracle(data: &[f64], channels: usize, triplets: &[[usize; 3]]) -> Vec<f64> {
    let w = data.len() / channels;
    let column = |c: usize| -> Vec<f64> { (0..w).map(|t| data[t * channels + c]).collect() };
    let mut out = Vec::new();
    for c in 0..channels {
        out.extend(channel_oracle(&column(c)));
    }
    for g in triplets {
        let (x, y, z) = (column(g[0]), column(g[1]), column(g[2]));
        let mags: Vec<f64> = (0..w).map(|t| (x[t].powi(2) + y[t].powi(2) + z[t].powi(2)).sqrt()).collect();
        out.push(mean(&mags));
    }
    out
}

/// Random window: `W × C` values drawn from one of several shapes
/// (noise, ramps, spikes, constant) with random scale and offset.
pub fn random_window(rng: &mut ChaCha8Rng, w: usize, channels: usize) -> Vec<f64> {
    let mut data = vec![0.0; w * channels];
    for c in 0..channels {
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let offset = rng.random_range(-20.0..20.0);
        let shape = rng.random_range(0..4);
        for t in 0..w {
            let v = match shape {
                0 => rng.random_range(-1.0..1.0),
                1 => t as f64 / w as f64 + 0.1 * rng.random_range(-1.0..1.0),
                2 => {
                    if rng.random_bool(0.1) {
                        5.0
                    } else {
                        0.0
                    }
                }
                _ => 1.0,
            };
            data[t * channels + c] = offset + scale * v;
        }
    }
    data
}

pub fn manifest(name: &str, channels: usize, rate: f64, window_seconds: f64) -> DatasetManifest {
    DatasetManifest {
        name: name.into(),
        sample_rate_hz: rate,
        channel_names: (0..channels).map(|c| format!("c{c}")).collect(),
        triplet_groups: (0..channels / 3).map(|g| [3 * g, 3 * g + 1, 3 * g + 2]).collect(),
        window_seconds,
        trial_sources: Vec::new(),
        supported_windowing: WindowTechnique::ALL.to_vec(),
        base_dir: None,
    }
}

/// Random trial set: 2 to 4 classes, 2 to 4 trials per class (so every
/// class can sit on both sides of a trial-grouped split), random lengths,
/// subjects and an even window of 4 to 20 samples.
pub fn random_trial_set(rng: &mut ChaCha8Rng) -> TrialSet {
    let w = 2 * rng.random_range(2..=10);
    let classes = rng.random_range(2..=4);
    let subjects = rng.random_range(1..=3);
    let channels = 3;
    let m = manifest("random", channels, w as f64, 1.0);
    let mut trials = Vec::new();
    for k in 0..classes {
        for r in 0..rng.random_range(2..=4) {
            let len = rng.random_range(w..=6 * w);
            let samples = (0..len * channels).map(|_| rng.random_range(-1.0..1.0)).collect();
            trials.push(
                Trial::new(
                    format!("s{}", rng.random_range(0..subjects)),
                    k,
                    format!("class{k}-trial{r}"),
                    w as f64,
                    channels,
                    samples,
                )
                .unwrap(),
            );
        }
    }
    TrialSet::from_trials(m, trials).unwrap()
}

/// Central-difference derivative of the batch loss with respect to flat
/// parameter `i`.
pub fn numeric_grad(params: &MlpParams, x: &Matrix, labels: &[usize], i: usize, h: f64) -> f64 {
    let base = params.flat();
    let mut plus = base.clone();
    plus[i] += h;
    let mut minus = base;
    minus[i] -= h;
    let lp = params.with_flat(&plus).loss(x, labels).unwrap();
    let lm = params.with_flat(&minus).loss(x, labels).unwrap();
    (lp - lm) / (2.0 * h)
}

/// `|a − n| / max(|a|, |n|, 1e-6)`
pub fn grad_rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Gradient check points on small random networks: returns the relative
/// error of every checked parameter.
pub fn gradient_check(points: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    let mut errors = Vec::new();
    let mut net = 0;
    while errors.len() < points {
        let d = rng.random_range(2..=6);
        let k = rng.random_range(2..=4);
        let params = MlpParams::init_with_hidden(d, &[8, 6, 5], k, seed + net, 0.01).unwrap();
        net += 1;
        // random biases too, so every parameter kind gets a nonzero gradient
        let flat: Vec<f64> = params
            .flat()
            .iter()
            .map(|&v| v + 0.1 * rng.random_range(-1.0..1.0))
            .collect();
        let params = params.with_flat(&flat);
        let n = rng.random_range(3..=8);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let (_, grads) = params.loss_and_grad(&x, &labels).unwrap();
        let analytic = grads.flat();
        for _ in 0..10 {
            let i = rng.random_range(0..analytic.len());
            let numeric = numeric_grad(&params, &x, &labels, i, 1e-5);
            errors.push(grad_rel_err(analytic[i], numeric));
        }
    }
    errors
}

/// Correlated random data: `n` rows of `d` columns mixed from `d/2` latent factors plus noise.
pub fn correlated_data(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    let latent = (d / 2).max(1);
    let mix: Vec<Vec<f64>> = (0..latent)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..latent).map(|_| rng.random_range(-1.0..1.0)).collect();
            (0..d)
                .map(|j| (0..latent).map(|l| z[l] * mix[l][j]).sum::<f64>() + 0.05 * rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect();
    Matrix::from_rows(&rows).unwrap()
}

/// Covariance with `1/(N−1)`, by the textbook double loop.
pub fn covariance_oracle(x: &Matrix) -> Vec<Vec<f64>> {
    let (n, d) = (x.rows(), x.cols());
    let means: Vec<f64> = (0..d).map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64).collect();
    (0..d)
        .map(|a| {
            (0..d)
                .map(|b| (0..n).map(|i| (x[(i, a)] - means[a]) * (x[(i, b)] - means[b])).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect()
}
