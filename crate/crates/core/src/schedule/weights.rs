//! Conversions between the theta form and the weight form of the
//! second-moment recursion.
//!
//! Given `theta_t`, the weights are `w_t = (1 - theta_t) * prod_{i<=t} 1/theta_i`
//! with cumulative weight `W_t = prod_{i<=t} 1/theta_i` (and `W_0 = 1`).
//! Conversely `theta_t = W_{t-1} / W_t`. For constant theta the weights grow
//! geometrically and overflow `f64` after a few hundred thousand steps, so
//! they are carried as [`Scaled`] values.

use super::{BaseRate, BetaRule, ParameterSchedule, ScheduleError, Triple};
use crate::numeric::Scaled;

#[derive(Clone, Debug, PartialEq)]
pub struct WeightSequence {
    weights: Vec<Scaled>,
    /// `W_1..W_T`; `W_0 = 1` is implicit.
    cumulative: Vec<Scaled>,
}

impl WeightSequence {
    /// Builds a sequence from plain positive weights, `W_t = W_{t-1} + w_t`.
    pub fn from_weights(w: &[f64]) -> Result<Self, ScheduleError> {
        let scaled = w
            .iter()
            .enumerate()
            .map(|(i, &value)| {
                if value > 0.0 && value.is_finite() {
                    Ok(Scaled::from_f64(value))
                } else {
                    Err(ScheduleError::NonPositiveWeight {
                        index: i + 1,
                        value,
                    })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_scaled(scaled)
    }

    /// Same as [`WeightSequence::from_weights`] for weights given as logarithms.
    pub fn from_ln_weights(ln_w: &[f64]) -> Result<Self, ScheduleError> {
        let scaled = ln_w
            .iter()
            .enumerate()
            .map(|(i, &value)| {
                if value.is_finite() {
                    Ok(Scaled::from_ln(value))
                } else {
                    Err(ScheduleError::NonPositiveWeight {
                        index: i + 1,
                        value: value.exp(),
                    })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_scaled(scaled)
    }

    fn from_scaled(weights: Vec<Scaled>) -> Result<Self, ScheduleError> {
        if weights.is_empty() {
            return Err(ScheduleError::EmptyTable);
        }
        let mut total = Scaled::ONE;
        let cumulative = weights
            .iter()
            .map(|&w| {
                total = total.add(w);
                total
            })
            .collect();
        Ok(WeightSequence {
            weights,
            cumulative,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `w_t` for `t >= 1`.
    pub fn weight(&self, t: usize) -> Scaled {
        self.weights[t - 1]
    }

    /// `W_t` for `t >= 0`.
    pub fn cumulative(&self, t: usize) -> Scaled {
        if t == 0 {
            Scaled::ONE
        } else {
            self.cumulative[t - 1]
        }
    }

    pub fn ln_weight(&self, t: usize) -> f64 {
        self.weight(t).ln()
    }

    /// `theta_t = W_{t-1} / W_t` for every `t`.
    pub fn thetas(&self) -> Vec<f64> {
        (1..=self.len())
            .map(|t| self.cumulative(t - 1).ratio(self.cumulative(t)))
            .collect()
    }
}

/// Streams weights from successive theta values.
#[derive(Clone, Debug)]
pub struct ThetaToWeights {
    cumulative: Scaled,
}

impl Default for ThetaToWeights {
    fn default() -> Self {
        Self::new()
    }
}

impl ThetaToWeights {
    pub fn new() -> Self {
        ThetaToWeights {
            cumulative: Scaled::ONE,
        }
    }

    /// Consumes `theta_t` and returns `(w_t, W_t)`.
    pub fn next(&mut self, theta: f64) -> (Scaled, Scaled) {
        self.cumulative = self.cumulative.div_f64(theta);
        (self.cumulative.mul_f64(1.0 - theta), self.cumulative)
    }
}

/// Weights of the weighted form equivalent to `sched` over `[1, horizon]`.
pub fn weights_from_theta(
    sched: &ParameterSchedule,
    horizon: u64,
) -> Result<WeightSequence, ScheduleError> {
    if horizon == 0 {
        return Err(ScheduleError::EmptyTable);
    }
    let mut stream = ThetaToWeights::new();
    let mut weights = Vec::with_capacity(horizon as usize);
    let mut cumulative = Vec::with_capacity(horizon as usize);
    for t in 1..=horizon {
        let theta = sched.eval(t)?.theta;
        if !(theta > 0.0 && theta < 1.0) {
            return Err(ScheduleError::ThetaViolation { t, theta });
        }
        let (w, big_w) = stream.next(theta);
        weights.push(w);
        cumulative.push(big_w);
    }
    Ok(WeightSequence {
        weights,
        cumulative,
    })
}

/// Tabulated schedule with `theta_t = W_{t-1}/W_t`, the given base rate and
/// momentum rule.
pub fn theta_from_weights(
    w: &WeightSequence,
    base: BaseRate,
    beta: BetaRule,
) -> Result<ParameterSchedule, ScheduleError> {
    let table = w
        .thetas()
        .into_iter()
        .enumerate()
        .map(|(i, theta)| {
            let t = i as u64 + 1;
            Ok(Triple {
                alpha: base.at(t)?,
                beta: beta.at(t),
                theta,
            })
        })
        .collect::<Result<Vec<_>, ScheduleError>>()?;
    ParameterSchedule::tabulated(table)
}
