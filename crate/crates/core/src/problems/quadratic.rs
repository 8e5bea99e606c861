use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, RngCore};

use super::{check_dim, GradientOracle, KnownConstants, OracleSample, ProblemError};

/// `f(x) = x^T A x / 2` with gradient samples `A x + zeta`, where each
/// coordinate of `zeta` is uniform on `[-noise, noise]`.
#[derive(Clone, Debug)]
pub struct QuadraticOracle {
    a: DMatrix<f64>,
    noise: f64,
    max_eigenvalue: f64,
}

impl QuadraticOracle {
    pub fn new(a: DMatrix<f64>, noise: f64) -> Result<Self, ProblemError> {
        if !a.is_square() {
            return Err(ProblemError::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let scale = a.amax().max(1.0);
        if (&a - a.transpose()).amax() > 1e-12 * scale {
            return Err(ProblemError::NotSymmetric);
        }
        if !(noise >= 0.0 && noise.is_finite()) {
            return Err(ProblemError::BadStep(noise));
        }
        let eig = SymmetricEigen::new(a.clone());
        let min = eig.eigenvalues.min();
        if min < -1e-12 * scale {
            return Err(ProblemError::NotPsd(min));
        }
        Ok(QuadraticOracle {
            max_eigenvalue: eig.eigenvalues.max().max(0.0),
            a,
            noise,
        })
    }

    pub fn identity(d: usize, noise: f64) -> Result<Self, ProblemError> {
        Self::new(DMatrix::identity(d, d), noise)
    }

    pub fn diagonal(diag: &[f64], noise: f64) -> Result<Self, ProblemError> {
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
            noise,
        )
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    fn apply(&self, x: &[f64]) -> DVector<f64> {
        &self.a * DVector::from_column_slice(x)
    }
}

impl GradientOracle for QuadraticOracle {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<OracleSample, ProblemError> {
        check_dim(x, self.dim())?;
        let ax = self.apply(x);
        let loss = 0.5 * DVector::from_column_slice(x).dot(&ax);
        let grad = ax
            .iter()
            .map(|&v| {
                if self.noise > 0.0 {
                    v + rng.random_range(-self.noise..=self.noise)
                } else {
                    v
                }
            })
            .collect();
        Ok(OracleSample {
            loss,
            grad,
            slope: None,
        })
    }

    fn exact_loss(&self, x: &[f64]) -> Option<f64> {
        (x.len() == self.dim()).then(|| 0.5 * DVector::from_column_slice(x).dot(&self.apply(x)))
    }

    fn full_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (x.len() == self.dim()).then(|| self.apply(x).iter().copied().collect())
    }

    fn known_constants(&self) -> KnownConstants {
        KnownConstants {
            g: None,
            lipschitz: Some(self.max_eigenvalue),
            f_star: Some(0.0),
        }
    }
}
