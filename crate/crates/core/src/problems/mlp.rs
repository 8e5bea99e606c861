use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_dim, Dataset, GradientOracle, OracleSample, ProblemError};

/// Sizes of a one-hidden-layer network. Parameters are laid out as `W1`
/// (hidden x inputs, row-major), `b1`, `W2` (classes x hidden, row-major), `b2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MlpLayout {
    pub inputs: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl MlpLayout {
    pub fn n_params(&self) -> usize {
        self.hidden * self.inputs + self.hidden + self.classes * self.hidden + self.classes
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.classes * self.hidden;
        (b1, w2, b2)
    }
}

/// `tanh` hidden layer, softmax cross-entropy output.
#[derive(Clone, Debug)]
pub struct MlpOracle {
    data: Arc<Dataset>,
    labels: Vec<usize>,
    layout: MlpLayout,
    minibatch: usize,
}

impl MlpOracle {
    /// The number of classes is one more than the largest label, and at least 2.
    pub fn new(data: Arc<Dataset>, hidden: usize, minibatch: usize) -> Result<Self, ProblemError> {
        if data.is_empty() {
            return Err(ProblemError::EmptyData);
        }
        if minibatch == 0 || hidden == 0 {
            return Err(ProblemError::ZeroMinibatch);
        }
        if minibatch > data.len() {
            return Err(ProblemError::MinibatchTooLarge {
                minibatch,
                n: data.len(),
            });
        }
        let labels = data.class_labels()?;
        let classes = labels.iter().copied().max().unwrap_or(0).max(1) + 1;
        let layout = MlpLayout {
            inputs: data.n_features(),
            hidden,
            classes,
        };
        Ok(MlpOracle {
            data,
            labels,
            layout,
            minibatch,
        })
    }

    pub fn layout(&self) -> MlpLayout {
        self.layout
    }

    /// Uniform initialization on `[-scale/sqrt(fan_in), scale/sqrt(fan_in)]`
    /// with zero biases.
    pub fn init_params(&self, seed: u64, scale: f64) -> Vec<f64> {
        let MlpLayout {
            inputs,
            hidden,
            classes,
        } = self.layout;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = vec![0.0; self.layout.n_params()];
        let (b1, w2, _) = self.layout.offsets();
        let lim1 = scale / (inputs as f64).sqrt();
        for v in &mut p[..b1] {
            *v = rng.random_range(-lim1..=lim1);
        }
        let lim2 = scale / (hidden as f64).sqrt();
        for v in &mut p[w2..w2 + classes * hidden] {
            *v = rng.random_range(-lim2..=lim2);
        }
        p
    }

    /// Loss of example `i`; when `grad` is given, adds the gradient into it.
    fn example(&self, p: &[f64], i: usize, grad: Option<&mut [f64]>) -> f64 {
        let MlpLayout {
            inputs,
            hidden,
            classes,
        } = self.layout;
        let (ob1, ow2, ob2) = self.layout.offsets();
        let a = self.data.row(i);
        let y = self.labels[i];

        let mut h = vec![0.0; hidden];
        for j in 0..hidden {
            let w = &p[j * inputs..(j + 1) * inputs];
            let pre = w.iter().zip(a).map(|(u, v)| u * v).sum::<f64>() + p[ob1 + j];
            h[j] = pre.tanh();
        }
        let mut z = vec![0.0; classes];
        for c in 0..classes {
            let w = &p[ow2 + c * hidden..ow2 + (c + 1) * hidden];
            z[c] = w.iter().zip(&h).map(|(u, v)| u * v).sum::<f64>() + p[ob2 + c];
        }
        let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = z.iter().map(|v| (v - zmax).exp()).sum();
        let log_norm = zmax + sum_exp.ln();
        let loss = log_norm - z[y];

        if let Some(grad) = grad {
            let mut dz = vec![0.0; classes];
            for c in 0..classes {
                dz[c] = (z[c] - log_norm).exp() - if c == y { 1.0 } else { 0.0 };
            }
            let mut dh = vec![0.0; hidden];
            for c in 0..classes {
                for j in 0..hidden {
                    grad[ow2 + c * hidden + j] += dz[c] * h[j];
                    dh[j] += p[ow2 + c * hidden + j] * dz[c];
                }
                grad[ob2 + c] += dz[c];
            }
            for j in 0..hidden {
                let da = dh[j] * (1.0 - h[j] * h[j]);
                for k in 0..inputs {
                    grad[j * inputs + k] += da * a[k];
                }
                grad[ob1 + j] += da;
            }
        }
        loss
    }

    fn batch(&self, p: &[f64], indices: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.layout.n_params()];
        let mut loss = 0.0;
        for &i in indices {
            loss += self.example(p, i, Some(&mut grad));
        }
        let inv = 1.0 / indices.len() as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        (loss * inv, grad)
    }

    fn all(&self) -> Vec<usize> {
        (0..self.data.len()).collect()
    }
}

impl GradientOracle for MlpOracle {
    fn dim(&self) -> usize {
        self.layout.n_params()
    }

    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<OracleSample, ProblemError> {
        check_dim(x, self.dim())?;
        let n = self.data.len();
        let picks: Vec<usize> = (0..self.minibatch)
            .map(|_| rng.random_range(0..n))
            .collect();
        let (loss, grad) = self.batch(x, &picks);
        Ok(OracleSample {
            loss,
            grad,
            slope: None,
        })
    }

    fn exact_loss(&self, x: &[f64]) -> Option<f64> {
        if x.len() != self.dim() {
            return None;
        }
        let n = self.data.len();
        Some((0..n).map(|i| self.example(x, i, None)).sum::<f64>() / n as f64)
    }

    fn full_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (x.len() == self.dim()).then(|| self.batch(x, &self.all()).1)
    }
}
