//! Z-score scaling and PCA, both fitted on training rows only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;

/// Standard deviations below this are replaced by 1.
pub const MIN_STD: f64 = 1e-12;
/// Jacobi stops once the off-diagonal Frobenius norm falls below this
/// fraction of the full norm.
pub const JACOBI_TOLERANCE: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("cannot fit on an empty training set")]
    Empty,
    #[error("PCA needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("retained variance must be in (0, 1], got {0}")]
    RetainedVariance(f64),
    #[error("eigendecomposition did not converge after {0} sweeps")]
    NotConverged(usize),
}

/// Per-feature z-score transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    /// Population mean and standard deviation per column.
    pub fn fit(train: &Matrix) -> Result<Self, PreprocessError> {
        let n = train.rows();
        if n == 0 {
            return Err(PreprocessError::Empty);
        }
        let d = train.cols();
        let mut mean = vec![0.0; d];
        for r in 0..n {
            for (m, x) in mean.iter_mut().zip(train.row(r)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for r in 0..n {
            for ((v, x), m) in var.iter_mut().zip(train.row(r)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n as f64).sqrt();
                if s < MIN_STD {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, found: usize) -> Result<(), PreprocessError> {
        if found != self.dim() {
            return Err(PreprocessError::Dimension {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, PreprocessError> {
        self.check(v.len())?;
        Ok(v.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect())
    }

    pub fn inverse(&self, z: &[f64]) -> Result<Vec<f64>, PreprocessError> {
        self.check(z.len())?;
        Ok(z.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((z, m), s)| z * s + m)
            .collect())
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix, PreprocessError> {
        self.check(x.cols())?;
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}

/// Principal directions of the training covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// `D × d`, orthonormal columns.
    pub basis: Matrix,
    /// Retained eigenvalues, nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// Requested variance fraction.
    pub retained_variance: f64,
    /// Achieved fraction of total variance in the retained components.
    pub explained_variance: f64,
}

impl PcaModel {
    /// Eigendecomposition of the `1/(N−1)` covariance of the centred rows;
    /// keeps the smallest number of components whose eigenvalues reach
    /// `retained_variance` of the total. Each basis column is signed so its
    /// largest-magnitude entry is positive.
    pub fn fit(train: &Matrix, retained_variance: f64) -> Result<Self, PreprocessError> {
        if !(retained_variance > 0.0 && retained_variance <= 1.0) {
            return Err(PreprocessError::RetainedVariance(retained_variance));
        }
        let n = train.rows();
        if n < 2 {
            return Err(PreprocessError::TooFewRows(n));
        }
        let cov = covariance(train);
        let (values, vectors) = symmetric_eigen(&cov)?;
        let dim = values.len();

        let total: f64 = values.iter().sum();
        let (keep, explained) = if total <= 0.0 {
            (1, 1.0)
        } else {
            let target = retained_variance * total * (1.0 - 1e-12);
            let mut cum = 0.0;
            let mut keep = dim;
            for (i, v) in values.iter().enumerate() {
                cum += v;
                if cum >= target {
                    keep = i + 1;
                    break;
                }
            }
            let kept: f64 = values[..keep].iter().sum();
            (keep, (kept / total).min(1.0))
        };

        let mut basis = Matrix::zeros(dim, keep);
        for c in 0..keep {
            for r in 0..dim {
                basis[(r, c)] = vectors[(r, c)];
            }
        }
        Ok(Self {
            basis,
            eigenvalues: values[..keep].to_vec(),
            retained_variance,
            explained_variance: explained,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.cols()
    }

    /// `basisᵀ · v`
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, PreprocessError> {
        if v.len() != self.input_dim() {
            return Err(PreprocessError::Dimension {
                expected: self.input_dim(),
                found: v.len(),
            });
        }
        let mut out = vec![0.0; self.output_dim()];
        for (r, &x) in v.iter().enumerate() {
            for (o, b) in out.iter_mut().zip(self.basis.row(r)) {
                *o += x * b;
            }
        }
        Ok(out)
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix, PreprocessError> {
        if x.cols() != self.input_dim() {
            return Err(PreprocessError::Dimension {
                expected: self.input_dim(),
                found: x.cols(),
            });
        }
        Ok(x.matmul(&self.basis))
    }
}

/// Sample covariance (`1/(N−1)`) of the rows of `x`.
pub fn covariance(x: &Matrix) -> Matrix {
    let (n, d) = (x.rows(), x.cols());
    let mut mean = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut centred = x.clone();
    for r in 0..n {
        for (v, m) in centred.row_mut(r).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let mut cov = centred.t_matmul(&centred);
    let scale = 1.0 / (n as f64 - 1.0);
    cov.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
    cov
}

/// Cyclic Jacobi diagonalisation of a symmetric matrix.
///
/// Returns eigenvalues in nonincreasing order (negative round-off clamped to
/// 0) and the matching eigenvectors as columns, each signed so its
/// largest-magnitude entry is positive.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix), PreprocessError> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "symmetric_eigen needs a square matrix");
    let mut a = a.clone();
    let mut v = Matrix::identity(n);
    let full_norm = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= JACOBI_TOLERANCE * full_norm {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > JACOBI_TOLERANCE * full_norm {
        return Err(PreprocessError::NotConverged(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)].max(0.0)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (c, &src) in order.iter().enumerate() {
        let col = v.column(src);
        let pivot = col
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > col[best].abs() { i } else { best });
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (r, x) in col.iter().enumerate() {
            vectors[(r, c)] = sign * x;
        }
    }
    Ok((values, vectors))
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[(p, q)] * a[(p, q)];
            }
        }
    }
    s.sqrt()
}

/// `A ← JᵀAJ`, `V ← VJ` for the plane rotation in (p, q).
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// `max |BᵀB − I|` over all entries.
pub fn orthonormality_error(basis: &Matrix) -> f64 {
    let gram = basis.t_matmul(basis);
    let mut worst: f64 = 0.0;
    for i in 0..gram.rows() {
        for j in 0..gram.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}
