//! Stochastic gradient oracles and the bookkeeping around them.

mod counterexample;
mod data;
mod logistic;
mod mlp;
mod quadratic;

use rand::RngCore;
use thiserror::Error;

pub use counterexample::{counterexample_sample, CounterexampleProblem, RegretLedger};
pub use data::{make_blobs, BlobSpec, Dataset};
pub use logistic::LogisticOracle;
pub use mlp::{MlpLayout, MlpOracle};
pub use quadratic::QuadraticOracle;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("dataset is empty")]
    EmptyData,
    #[error("minibatch must be >= 1")]
    ZeroMinibatch,
    #[error("minibatch {minibatch} exceeds the dataset size {n}")]
    MinibatchTooLarge { minibatch: usize, n: usize },
    #[error("matrix is not positive semidefinite (smallest eigenvalue {0})")]
    NotPsd(f64),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("label {label} in row {row} is not valid here ({reason})")]
    InvalidLabel {
        row: usize,
        label: f64,
        reason: &'static str,
    },
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("finite-difference step h = {0} must be positive")]
    BadStep(f64),
    #[error("oracle has no exact loss")]
    NoExactLoss,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One stochastic evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSample {
    pub loss: f64,
    pub grad: Vec<f64>,
    /// The realized linear coefficient, for online linear problems.
    pub slope: Option<f64>,
}

/// Constants of the smoothness/moment assumptions, where known.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KnownConstants {
    /// Bound on `E ||g||^2`.
    pub g: Option<f64>,
    pub lipschitz: Option<f64>,
    pub f_star: Option<f64>,
}

pub trait GradientOracle: Send + Sync {
    fn dim(&self) -> usize;

    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<OracleSample, ProblemError>;

    /// Noise-free objective, when it can be evaluated.
    fn exact_loss(&self, x: &[f64]) -> Option<f64>;

    /// Gradient of [`GradientOracle::exact_loss`].
    fn full_gradient(&self, x: &[f64]) -> Option<Vec<f64>>;

    fn known_constants(&self) -> KnownConstants {
        KnownConstants::default()
    }

    /// Whether the problem is scored by online regret rather than loss.
    fn is_online(&self) -> bool {
        false
    }
}

pub(crate) fn check_dim(x: &[f64], dim: usize) -> Result<(), ProblemError> {
    if x.len() == dim {
        Ok(())
    } else {
        Err(ProblemError::DimensionMismatch {
            expected: dim,
            got: x.len(),
        })
    }
}

/// Worst coordinate-wise error between central differences of the exact loss
/// and the analytic full gradient, measured as `|fd - g| / max(|fd|, |g|, 1)`.
pub fn finite_diff_check(
    oracle: &dyn GradientOracle,
    x: &[f64],
    h: f64,
) -> Result<f64, ProblemError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(ProblemError::BadStep(h));
    }
    check_dim(x, oracle.dim())?;
    let grad = oracle.full_gradient(x).ok_or(ProblemError::NoExactLoss)?;
    let mut probe = x.to_vec();
    let mut worst = 0.0f64;
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let up = oracle.exact_loss(&probe).ok_or(ProblemError::NoExactLoss)?;
        probe[k] = x[k] - h;
        let down = oracle.exact_loss(&probe).ok_or(ProblemError::NoExactLoss)?;
        probe[k] = x[k];
        let fd = (up - down) / (2.0 * h);
        let err = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
pub(crate) mod testing {
    use super::GradientOracle;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Asserts that the mean of `n` samples at `x` is within `z` standard
    /// errors of the full gradient in every coordinate.
    pub fn assert_unbiased(oracle: &dyn GradientOracle, x: &[f64], n: usize, z: f64, seed: u64) {
        let d = oracle.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sum = vec![0.0; d];
        let mut sum_sq = vec![0.0; d];
        for _ in 0..n {
            let g = oracle.sample(x, &mut rng).unwrap().grad;
            for k in 0..d {
                sum[k] += g[k];
                sum_sq[k] += g[k] * g[k];
            }
        }
        let full = oracle.full_gradient(x).unwrap();
        let nf = n as f64;
        for k in 0..d {
            let mean = sum[k] / nf;
            let var = (sum_sq[k] / nf - mean * mean).max(0.0);
            let se = (var / nf).sqrt();
            assert!(
                (mean - full[k]).abs() <= z * se + 1e-12,
                "coordinate {k}: mean {mean} vs {} (se {se})",
                full[k]
            );
        }
    }
}
