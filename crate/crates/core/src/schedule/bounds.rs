//! Constants of the high-probability bound
//! `Bound(T) = (C + C' sum_{t<=T} alpha_t sqrt(1 - theta_t)) / (delta T alpha_T)`.

use super::{check_sufficient_condition, ParameterSchedule, ScheduleError};
use crate::numeric::CompensatedSum;

/// Problem-side constants: `E||g||^2 <= G`, `L`-Lipschitz gradient, `v_0 = eps`,
/// dimension `d`, and `f(x_1) - f^*`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemConstants {
    pub g: f64,
    pub lipschitz: f64,
    pub eps: f64,
    pub dim: usize,
    pub f_gap: f64,
}

/// The schedule-only part of the analysis: `theta'`, `gamma = beta^2/theta'`
/// and `C1 = prod_{theta_j < theta'} theta_j / theta'`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisConstants {
    pub beta: f64,
    pub theta_prime: f64,
    pub gamma: f64,
    pub c1: f64,
    /// Largest index with `theta_j < theta'` (0 when none).
    pub n_below: u64,
    pub theta_1: f64,
    pub chi_1: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConstantOptions {
    pub theta_prime: Option<f64>,
    pub c0: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundConstants {
    pub theta_prime: f64,
    pub gamma: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c: f64,
    pub c_prime: f64,
    pub beta: f64,
    pub theta_1: f64,
    pub chi_1: f64,
    pub problem: ProblemConstants,
}

impl BoundConstants {
    /// Evaluates `C2, C3, C4, C, C'` from the remaining fields.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        beta: f64,
        theta_prime: f64,
        c0: f64,
        c1: f64,
        theta_1: f64,
        chi_1: f64,
        problem: ProblemConstants,
    ) -> Self {
        let gamma = beta * beta / theta_prime;
        let ProblemConstants {
            g,
            lipschitz,
            eps,
            dim,
            f_gap,
        } = problem;
        let d = dim as f64;
        let sqrt_gamma = gamma.sqrt();

        let c2_inner = (beta / (1.0 - beta)) / (c1 * (1.0 - gamma) * theta_1).sqrt() + 1.0;
        let c2 = 2.0 * c2_inner * c2_inner;
        let c3 = c0 / (c1.sqrt() * (1.0 - sqrt_gamma))
            * (c0 * c0 * chi_1 * lipschitz / (c1 * (1.0 - sqrt_gamma).powi(2)) + c2 * g);
        let c4 = f_gap;
        let noise = (g * g + eps * d).sqrt();
        let c = 2.0 * c0 * noise / (1.0 - beta)
            * (c4 + c3 * c0 * d * chi_1 * (g * g / (eps * d)).ln_1p());
        let c_prime = 2.0 * c0 * c0 * c3 * d * noise / ((1.0 - beta) * theta_1);
        BoundConstants {
            theta_prime,
            gamma,
            c0,
            c1,
            c2,
            c3,
            c4,
            c,
            c_prime,
            beta,
            theta_1,
            chi_1,
            problem,
        }
    }

    /// Recomputes the derived constants from the stored inputs.
    pub fn recompute(&self) -> Self {
        Self::from_parts(
            self.beta,
            self.theta_prime,
            self.c0,
            self.c1,
            self.theta_1,
            self.chi_1,
            self.problem,
        )
    }
}

/// `theta'` defaults to `theta` for constant-theta schedules and to the
/// midpoint `(beta^2 + theta_H)/2` otherwise.
pub fn analysis_constants(
    sched: &ParameterSchedule,
    horizon: u64,
    theta_prime: Option<f64>,
) -> Result<AnalysisConstants, ScheduleError> {
    let horizon = horizon.max(1);
    let beta = sched.beta_cap();
    if !(0.0..1.0).contains(&beta) {
        return Err(ScheduleError::BetaRange { beta });
    }
    let beta_sq = beta * beta;
    let theta_limit = sched.eval(horizon)?.theta;
    let constant = sched.has_constant_theta(horizon)?;
    if theta_limit <= beta_sq {
        return Err(ScheduleError::NoAdmissibleThetaPrime {
            theta: theta_limit,
            beta_sq,
        });
    }
    let theta_prime = match theta_prime {
        Some(tp) => {
            if !(tp > beta_sq && tp <= theta_limit) {
                return Err(ScheduleError::ThetaPrimeRange {
                    theta_prime: tp,
                    beta_sq,
                    theta_limit,
                });
            }
            tp
        }
        None if constant => theta_limit,
        None => 0.5 * (beta_sq + theta_limit),
    };

    let mut ln_c1 = 0.0;
    let mut n_below = 0;
    for t in 1..=horizon {
        let theta = sched.eval(t)?.theta;
        if theta < theta_prime {
            n_below = t;
        }
    }
    for t in 1..=n_below {
        ln_c1 += (sched.eval(t)?.theta / theta_prime).ln();
    }
    let first = sched.eval(1)?;
    Ok(AnalysisConstants {
        beta,
        theta_prime,
        gamma: beta_sq / theta_prime,
        c1: ln_c1.exp(),
        n_below,
        theta_1: first.theta,
        chi_1: first.chi(),
    })
}

pub fn compute_constants(
    sched: &ParameterSchedule,
    pc: ProblemConstants,
    horizon: u64,
) -> Result<BoundConstants, ScheduleError> {
    compute_constants_with(sched, pc, horizon, ConstantOptions::default())
}

/// [`compute_constants`] with explicit `theta'` and/or `C0`. Without an
/// explicit `C0` it is estimated by the condition-3 diagnostic.
pub fn compute_constants_with(
    sched: &ParameterSchedule,
    pc: ProblemConstants,
    horizon: u64,
    options: ConstantOptions,
) -> Result<BoundConstants, ScheduleError> {
    for (name, value) in [
        ("G", pc.g),
        ("L", pc.lipschitz),
        ("eps", pc.eps),
        ("f_gap", pc.f_gap),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(ScheduleError::NonPositive { name, value });
        }
    }
    if pc.dim == 0 {
        return Err(ScheduleError::NonPositive {
            name: "d",
            value: 0.0,
        });
    }
    let ac = analysis_constants(sched, horizon, options.theta_prime)?;
    let c0 = match options.c0 {
        Some(c0) => c0,
        None => {
            check_sufficient_condition(sched, horizon.max(10))?
                .cond3_chi_almost_nonincreasing
                .c0_estimate
        }
    };
    Ok(BoundConstants::from_parts(
        ac.beta,
        ac.theta_prime,
        c0,
        ac.c1,
        ac.theta_1,
        ac.chi_1,
        pc,
    ))
}

/// `Bound(T)` by direct (compensated) summation.
pub fn bound_at(
    bc: &BoundConstants,
    sched: &ParameterSchedule,
    horizon: u64,
    delta: f64,
) -> Result<f64, ScheduleError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ScheduleError::Delta(delta));
    }
    if horizon == 0 {
        return Err(ScheduleError::ZeroStep);
    }
    let mut sum = CompensatedSum::new();
    for t in 1..=horizon {
        let alpha = sched.eval(t)?.alpha;
        sum.add(alpha * sched.one_minus_theta(t)?.sqrt());
    }
    let alpha_t = sched.eval(horizon)?.alpha;
    Ok((bc.c + bc.c_prime * sum.value()) / (delta * horizon as f64 * alpha_t))
}
