//! Fully connected classifier: `d → 128 → 64 → 32 → K` with Leaky-ReLU
//! hidden activations, softmax output, mean cross-entropy loss and Adam.
//!
//! Everything is `f64` and single-threaded, so a fixed `(seed, shuffle_seed,
//! data)` triple reproduces the trained parameters bit for bit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;

pub const HIDDEN_LAYERS: [usize; 3] = [128, 64, 32];
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;
pub const DEFAULT_BATCH_SIZE: usize = 16;
pub const V1_EPOCHS: usize = 250;
pub const V2_EPOCHS: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("input dimension must be at least 1")]
    EmptyInput,
    #[error("dimension mismatch: expected {expected} columns, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("label {label} out of range for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },
    #[error("{rows} rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("no training rows")]
    NoRows,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("non-finite loss at epoch {epoch}, step {step}; try a learning rate below {learning_rate}")]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        learning_rate: f64,
    },
    #[error("classifier used before fit")]
    NotFitted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `fan_in × fan_out`
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn zeros_like(&self) -> Self {
        Self {
            weights: Matrix::zeros(self.weights.rows(), self.weights.cols()),
            bias: vec![0.0; self.bias.len()],
        }
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.as_slice().iter().chain(&self.bias)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
    pub leaky_slope: f64,
    pub seed: u64,
}

/// Gradient with the same shape as [`MlpParams::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.values().copied()).collect()
    }

    fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.values().all(|v| v.is_finite()))
    }
}

#[inline]
fn leaky(z: f64, slope: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        slope * z
    }
}

#[inline]
fn leaky_grad(z: f64, slope: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        slope
    }
}

struct ForwardCache {
    /// Layer inputs; `inputs[0]` is the batch.
    inputs: Vec<Matrix>,
    /// Pre-activations of every layer.
    pre: Vec<Matrix>,
}

impl MlpParams {
    /// The 128/64/32 architecture with He-uniform weights and zero biases.
    pub fn init(input_dim: usize, classes: usize, seed: u64) -> Result<Self, ModelError> {
        Self::init_with_hidden(input_dim, &HIDDEN_LAYERS, classes, seed, DEFAULT_LEAKY_SLOPE)
    }

    /// Weights drawn from `U(−√(6/fan_in), √(6/fan_in))`, variance `2/fan_in`.
    pub fn init_with_hidden(
        input_dim: usize,
        hidden: &[usize],
        classes: usize,
        seed: u64,
        leaky_slope: f64,
    ) -> Result<Self, ModelError> {
        if classes < 2 {
            return Err(ModelError::TooFewClasses(classes));
        }
        if input_dim == 0 || hidden.contains(&0) {
            return Err(ModelError::EmptyInput);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(classes);
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let limit = (6.0 / fan_in as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..limit))
                    .collect();
                DenseLayer {
                    weights: Matrix::from_vec(fan_in, fan_out, data),
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(Self {
            layers,
            leaky_slope,
            seed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.rows()
    }

    pub fn classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.bias.len())
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.rows() * l.weights.cols() + l.bias.len())
            .sum()
    }

    /// All parameters, layer by layer: weights row-major, then biases.
    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.values().copied()).collect()
    }

    /// Copy with parameters replaced from a [`MlpParams::flat`]-ordered slice.
    pub fn with_flat(&self, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut out = self.clone();
        let mut it = flat.iter().copied();
        for l in &mut out.layers {
            for w in l.weights.as_mut_slice().iter_mut().chain(l.bias.iter_mut()) {
                *w = it.next().unwrap();
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.values().all(|v| v.is_finite()))
    }

    fn check_input(&self, batch: &Matrix) -> Result<(), ModelError> {
        if batch.cols() != self.input_dim() {
            return Err(ModelError::Dimension {
                expected: self.input_dim(),
                found: batch.cols(),
            });
        }
        Ok(())
    }

    fn run(&self, batch: &Matrix) -> (Matrix, ForwardCache) {
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
        };
        let mut a = batch.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.matmul(&layer.weights);
            for r in 0..z.rows() {
                for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            let next = if i == last {
                z.clone()
            } else {
                let mut h = z.clone();
                h.as_mut_slice()
                    .iter_mut()
                    .for_each(|v| *v = leaky(*v, self.leaky_slope));
                h
            };
            cache.inputs.push(a);
            cache.pre.push(z);
            a = next;
        }
        (a, cache)
    }

    /// Output-layer scores before softmax.
    pub fn logits(&self, batch: &Matrix) -> Result<Matrix, ModelError> {
        self.check_input(batch)?;
        Ok(self.run(batch).0)
    }

    /// Row-wise class probabilities.
    pub fn forward(&self, batch: &Matrix) -> Result<Matrix, ModelError> {
        let mut p = self.logits(batch)?;
        for r in 0..p.rows() {
            softmax_in_place(p.row_mut(r));
        }
        Ok(p)
    }

    /// Mean cross-entropy over the batch and its analytic gradient.
    pub fn loss_and_grad(&self, batch: &Matrix, labels: &[usize]) -> Result<(f64, Gradients), ModelError> {
        let (loss, grad, _) = self.loss_grad_correct(batch, labels)?;
        Ok((loss, grad))
    }

    /// Mean cross-entropy only.
    pub fn loss(&self, batch: &Matrix, labels: &[usize]) -> Result<f64, ModelError> {
        self.check_batch(batch, labels)?;
        let logits = self.run(batch).0;
        let mut total = 0.0;
        for (r, &y) in labels.iter().enumerate() {
            total += cross_entropy(logits.row(r), y);
        }
        Ok(total / labels.len() as f64)
    }

    fn check_batch(&self, batch: &Matrix, labels: &[usize]) -> Result<(), ModelError> {
        self.check_input(batch)?;
        if batch.rows() != labels.len() {
            return Err(ModelError::LabelCount {
                rows: batch.rows(),
                labels: labels.len(),
            });
        }
        if batch.rows() == 0 {
            return Err(ModelError::NoRows);
        }
        let k = self.classes();
        if let Some(&label) = labels.iter().find(|&&y| y >= k) {
            return Err(ModelError::InvalidLabel { label, classes: k });
        }
        Ok(())
    }

    /// Loss, gradient and the number of rows whose argmax equals the label.
    fn loss_grad_correct(
        &self,
        batch: &Matrix,
        labels: &[usize],
    ) -> Result<(f64, Gradients, usize), ModelError> {
        self.check_batch(batch, labels)?;
        let b = batch.rows() as f64;
        let (logits, cache) = self.run(batch);

        let mut delta = logits;
        let mut loss = 0.0;
        let mut correct = 0;
        for (r, &y) in labels.iter().enumerate() {
            let row = delta.row_mut(r);
            loss += cross_entropy(row, y);
            if argmax(row) == y {
                correct += 1;
            }
            softmax_in_place(row);
            row[y] -= 1.0;
            row.iter_mut().for_each(|v| *v /= b);
        }

        let mut grads: Vec<DenseLayer> = self.layers.iter().map(DenseLayer::zeros_like).collect();
        for i in (0..self.layers.len()).rev() {
            grads[i].weights = cache.inputs[i].t_matmul(&delta);
            for r in 0..delta.rows() {
                for (g, d) in grads[i].bias.iter_mut().zip(delta.row(r)) {
                    *g += d;
                }
            }
            if i > 0 {
                let mut upstream = delta.matmul_t(&self.layers[i].weights);
                for (u, z) in upstream
                    .as_mut_slice()
                    .iter_mut()
                    .zip(cache.pre[i - 1].as_slice())
                {
                    *u *= leaky_grad(*z, self.leaky_slope);
                }
                delta = upstream;
            }
        }
        Ok((loss / b, Gradients { layers: grads }, correct))
    }

    /// Most probable class; ties go to the lowest index.
    pub fn predict(&self, v: &[f64]) -> Result<usize, ModelError> {
        let x = Matrix::from_vec(1, v.len(), v.to_vec());
        Ok(argmax(self.logits(&x)?.row(0)))
    }

    pub fn predict_batch(&self, x: &Matrix) -> Result<Vec<usize>, ModelError> {
        let logits = self.logits(x)?;
        Ok((0..logits.rows()).map(|r| argmax(logits.row(r))).collect())
    }
}

/// Numerically stable softmax (max subtracted first).
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    row.iter_mut().for_each(|v| *v /= sum);
}

/// `−log softmax(logits)[label]` via log-sum-exp.
fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    lse - (logits[label] - max)
}

/// Index of the first maximum. Softmax is monotone, so logits and
/// probabilities give the same answer.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    pub epochs: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub shuffle_seed: u64,
}

fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}
fn default_learning_rate() -> f64 {
    1e-3
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_epsilon() -> f64 {
    1e-8
}

impl TrainConfig {
    pub fn with_epochs(epochs: usize) -> Self {
        Self {
            batch_size: DEFAULT_BATCH_SIZE,
            epochs,
            learning_rate: default_learning_rate(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
            shuffle_seed: 0,
        }
    }

    pub fn v1() -> Self {
        Self::with_epochs(V1_EPOCHS)
    }

    pub fn v2() -> Self {
        Self::with_epochs(V2_EPOCHS)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.batch_size < 1 {
            return Err(ModelError::Config("batch_size must be at least 1".into()));
        }
        if self.epochs < 1 {
            return Err(ModelError::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ModelError::Config("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(ModelError::Config("Adam betas must be in [0, 1)".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(ModelError::Config("epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub loss: f64,
    pub accuracy: f64,
}

/// Mean training loss and accuracy per epoch, measured on each minibatch
/// before its update.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

struct Adam {
    m: Vec<DenseLayer>,
    v: Vec<DenseLayer>,
    step: i32,
}

impl Adam {
    fn new(params: &MlpParams) -> Self {
        let zeros: Vec<DenseLayer> = params.layers.iter().map(DenseLayer::zeros_like).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    fn update(&mut self, params: &mut MlpParams, grads: &Gradients, cfg: &TrainConfig) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step);
        let c2 = 1.0 - cfg.beta2.powi(self.step);
        for (((p, g), m), v) in params
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            let p_it = p.weights.as_mut_slice().iter_mut().chain(p.bias.iter_mut());
            let g_it = g.weights.as_slice().iter().chain(&g.bias);
            let m_it = m.weights.as_mut_slice().iter_mut().chain(m.bias.iter_mut());
            let v_it = v.weights.as_mut_slice().iter_mut().chain(v.bias.iter_mut());
            for (((p, g), m), v) in p_it.zip(g_it).zip(m_it).zip(v_it) {
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
    }
}

/// Minibatch Adam: `epochs × ceil(N / batch_size)` steps over a seeded
/// shuffle of the rows each epoch. The last batch of an epoch may be short.
pub fn train(
    mut params: MlpParams,
    x: &Matrix,
    labels: &[usize],
    cfg: &TrainConfig,
) -> Result<(MlpParams, TrainHistory), ModelError> {
    cfg.validate()?;
    params.check_batch(x, labels)?;
    let n = x.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut adam = Adam::new(&params);
    let mut history = TrainHistory::default();
    let mut step = 0;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = x.select_rows(chunk);
            let batch_labels: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (loss, grads, ok) = params.loss_grad_correct(&batch, &batch_labels)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(ModelError::NonFiniteLoss {
                    epoch,
                    step,
                    learning_rate: cfg.learning_rate,
                });
            }
            adam.update(&mut params, &grads, cfg);
            loss_sum += loss * chunk.len() as f64;
            correct += ok;
            step += 1;
        }
        history.epochs.push(EpochStats {
            loss: loss_sum / n as f64,
            accuracy: correct as f64 / n as f64,
        });
    }
    Ok((params, history))
}

/// A classifier the evaluation harness can train and test per fold.
pub trait Classifier: Send {
    fn name(&self) -> &str;
    fn fit(&mut self, x: &Matrix, labels: &[usize], classes: usize) -> Result<(), ModelError>;
    fn predict(&self, x: &Matrix) -> Result<Vec<usize>, ModelError>;

    /// Training loss after the last epoch, if the classifier tracks one.
    fn final_loss(&self) -> Option<f64> {
        None
    }

    /// Fitted network parameters, for classifiers that are MLPs.
    fn mlp_params(&self) -> Option<&MlpParams> {
        None
    }
}

/// The 128/64/32 network behind the [`Classifier`] interface.
#[derive(Debug, Clone)]
pub struct MlpClassifier {
    pub init_seed: u64,
    pub leaky_slope: f64,
    pub train: TrainConfig,
    pub params: Option<MlpParams>,
    pub history: TrainHistory,
}

impl MlpClassifier {
    pub fn new(init_seed: u64, leaky_slope: f64, train: TrainConfig) -> Self {
        Self {
            init_seed,
            leaky_slope,
            train,
            params: None,
            history: TrainHistory::default(),
        }
    }
}

impl Classifier for MlpClassifier {
    fn name(&self) -> &str {
        "mlp-128-64-32"
    }

    fn fit(&mut self, x: &Matrix, labels: &[usize], classes: usize) -> Result<(), ModelError> {
        let init = MlpParams::init_with_hidden(x.cols(), &HIDDEN_LAYERS, classes, self.init_seed, self.leaky_slope)?;
        let (params, history) = train(init, x, labels, &self.train)?;
        self.params = Some(params);
        self.history = history;
        Ok(())
    }

    fn predict(&self, x: &Matrix) -> Result<Vec<usize>, ModelError> {
        self.params.as_ref().ok_or(ModelError::NotFitted)?.predict_batch(x)
    }

    fn final_loss(&self) -> Option<f64> {
        self.history.epochs.last().map(|e| e.loss)
    }

    fn mlp_params(&self) -> Option<&MlpParams> {
        self.params.as_ref()
    }
}
