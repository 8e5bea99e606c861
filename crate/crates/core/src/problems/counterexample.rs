use rand::{Rng, RngCore};

use super::{check_dim, GradientOracle, KnownConstants, OracleSample, ProblemError};
use crate::numeric::CompensatedSum;
use crate::optimizer::BoxConstraint;

/// Online linear losses `f_t(x) = c_t x` on `[lo, hi]` where `c_t` is the
/// rare slope with probability `rare_prob` and the common slope otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleProblem {
    pub rare_slope: f64,
    pub common_slope: f64,
    pub rare_prob: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Default for CounterexampleProblem {
    fn default() -> Self {
        CounterexampleProblem {
            rare_slope: 1010.0,
            common_slope: 10.0,
            rare_prob: 0.01,
            lo: -1.0,
            hi: 1.0,
        }
    }
}

impl CounterexampleProblem {
    /// Slope for a uniform draw `u` in `[0, 1)`.
    pub fn slope_for_draw(&self, u: f64) -> f64 {
        if u < self.rare_prob {
            self.rare_slope
        } else {
            self.common_slope
        }
    }

    pub fn sample_slope(&self, rng: &mut dyn RngCore) -> f64 {
        self.slope_for_draw(rng.random::<f64>())
    }

    pub fn expected_slope(&self) -> f64 {
        self.rare_prob * self.rare_slope + (1.0 - self.rare_prob) * self.common_slope
    }

    pub fn expected_sq_gradient(&self) -> f64 {
        self.rare_prob * self.rare_slope * self.rare_slope
            + (1.0 - self.rare_prob) * self.common_slope * self.common_slope
    }

    pub fn feasible_set(&self) -> BoxConstraint {
        BoxConstraint::Uniform {
            lo: self.lo,
            hi: self.hi,
        }
    }

    /// `min_{x in [lo, hi]} x * slope_sum`.
    pub fn comparator(&self, slope_sum: f64) -> f64 {
        (self.lo * slope_sum).min(self.hi * slope_sum)
    }
}

pub fn counterexample_sample(
    p: &CounterexampleProblem,
    x: f64,
    rng: &mut dyn RngCore,
) -> OracleSample {
    let c = p.sample_slope(rng);
    OracleSample {
        loss: c * x,
        grad: vec![c],
        slope: Some(c),
    }
}

impl GradientOracle for CounterexampleProblem {
    fn dim(&self) -> usize {
        1
    }

    fn sample(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<OracleSample, ProblemError> {
        check_dim(x, 1)?;
        Ok(counterexample_sample(self, x[0], rng))
    }

    fn exact_loss(&self, x: &[f64]) -> Option<f64> {
        Some(self.expected_slope() * x[0])
    }

    fn full_gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![self.expected_slope()])
    }

    fn known_constants(&self) -> KnownConstants {
        KnownConstants {
            g: Some(self.expected_sq_gradient()),
            lipschitz: Some(0.0),
            f_star: Some(self.comparator(self.expected_slope())),
        }
    }

    fn is_online(&self) -> bool {
        true
    }
}

/// Running totals for the average regret on a box `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct RegretLedger {
    lo: f64,
    hi: f64,
    loss: CompensatedSum,
    slopes: CompensatedSum,
    count: u64,
}

impl RegretLedger {
    pub fn new(lo: f64, hi: f64) -> Self {
        RegretLedger {
            lo,
            hi,
            loss: CompensatedSum::new(),
            slopes: CompensatedSum::new(),
            count: 0,
        }
    }

    pub fn for_problem(p: &CounterexampleProblem) -> Self {
        Self::new(p.lo, p.hi)
    }

    /// Records the point played and the slope revealed at that step.
    pub fn record(&mut self, x: f64, slope: f64) {
        self.loss.add(slope * x);
        self.slopes.add(slope);
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.loss.value()
    }

    pub fn slope_sum(&self) -> f64 {
        self.slopes.value()
    }

    /// `R(T)/T` against the best fixed point in hindsight; `None` before the
    /// first step.
    pub fn average_regret(&self) -> Option<f64> {
        if self.count == 0 {
            return None;
        }
        let s = self.slopes.value();
        let best = (self.lo * s).min(self.hi * s);
        Some((self.loss.value() - best) / self.count as f64)
    }
}
