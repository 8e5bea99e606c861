use std::sync::Arc;

use rand::{Rng, RngCore};

use super::{check_dim, Dataset, GradientOracle, KnownConstants, OracleSample, ProblemError};

/// Binary logistic regression with labels in `{0, 1}`. The parameter vector
/// holds one weight per feature followed by the bias.
#[derive(Clone, Debug)]
pub struct LogisticOracle {
    data: Arc<Dataset>,
    minibatch: usize,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticOracle {
    pub fn new(data: Arc<Dataset>, minibatch: usize) -> Result<Self, ProblemError> {
        if data.is_empty() {
            return Err(ProblemError::EmptyData);
        }
        if minibatch == 0 {
            return Err(ProblemError::ZeroMinibatch);
        }
        if minibatch > data.len() {
            return Err(ProblemError::MinibatchTooLarge {
                minibatch,
                n: data.len(),
            });
        }
        for (i, &y) in data.labels().iter().enumerate() {
            if y != 0.0 && y != 1.0 {
                return Err(ProblemError::InvalidLabel {
                    row: i + 1,
                    label: y,
                    reason: "logistic labels must be 0 or 1",
                });
            }
        }
        Ok(LogisticOracle { data, minibatch })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Adds the loss and gradient of example `i` into `grad`.
    fn accumulate(&self, x: &[f64], i: usize, grad: &mut [f64]) -> f64 {
        let row = self.data.row(i);
        let y = self.data.label(i);
        let d = row.len();
        let z = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + x[d];
        let r = sigmoid(z) - y;
        for k in 0..d {
            grad[k] += r * row[k];
        }
        grad[d] += r;
        softplus(z) - y * z
    }

    fn batch(&self, x: &[f64], indices: impl Iterator<Item = usize>, n: usize) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.dim()];
        let mut loss = 0.0;
        for i in indices {
            loss += self.accumulate(x, i, &mut grad);
        }
        let inv = 1.0 / n as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        (loss * inv, grad)
    }
}

impl GradientOracle for LogisticOracle {
    fn dim(&self) -> usize {
        self.data.n_features() + 1
    }

    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<OracleSample, ProblemError> {
        check_dim(x, self.dim())?;
        let n = self.data.len();
        let picks: Vec<usize> = (0..self.minibatch)
            .map(|_| rng.random_range(0..n))
            .collect();
        let (loss, grad) = self.batch(x, picks.into_iter(), self.minibatch);
        Ok(OracleSample {
            loss,
            grad,
            slope: None,
        })
    }

    fn exact_loss(&self, x: &[f64]) -> Option<f64> {
        (x.len() == self.dim()).then(|| self.batch(x, 0..self.data.len(), self.data.len()).0)
    }

    fn full_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (x.len() == self.dim()).then(|| self.batch(x, 0..self.data.len(), self.data.len()).1)
    }

    fn known_constants(&self) -> KnownConstants {
        // the Hessian is bounded by max ||(a, 1)||^2 / 4
        let lipschitz = (0..self.data.len())
            .map(|i| 1.0 + self.data.row(i).iter().map(|a| a * a).sum::<f64>())
            .fold(0.0, f64::max)
            / 4.0;
        KnownConstants {
            g: None,
            lipschitz: Some(lipschitz),
            f_star: None,
        }
    }
}
