//! Parameter schedules for Generic Adam.
//!
//! A [`ParameterSchedule`] yields the triple `(alpha_t, beta_t, theta_t)` for
//! every step `t >= 1`. Schedules are immutable values: evaluation is pure and
//! they can be shared freely between threads.

mod bounds;
mod condition;
pub mod presets;
mod rate;
mod weights;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use bounds::{
    analysis_constants, bound_at, compute_constants, compute_constants_with, AnalysisConstants,
    BoundConstants, ConstantOptions, ProblemConstants,
};
pub use condition::{
    check_sufficient_condition, ChiCheck, MomentumCheck, MonotoneCheck, RatioCheck, RatioVerdict,
    ScReport,
};
pub use rate::{classify_exponents, classify_rate, RateClass};
pub use weights::{theta_from_weights, weights_from_theta, ThetaToWeights, WeightSequence};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("step index must be >= 1")]
    ZeroStep,
    #[error("step {t} is beyond the table length {len}")]
    OutOfTable { t: u64, len: u64 },
    #[error("base-rate exponent s = {0} must lie in [0, 1)")]
    RateExponent(f64),
    #[error("theta exponent r = {0} must be >= 0")]
    ThetaExponent(f64),
    #[error("theta numerator / cutoff^r = {0} must be < 1")]
    CutoffTooSmall(f64),
    #[error("{name} must be positive and finite (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("beta = {beta} must lie in [0, 1)")]
    BetaRange { beta: f64 },
    #[error("theta = {theta} must lie in (0, 1)")]
    ThetaRange { theta: f64 },
    #[error("beta_{t} = {beta} violates 0 <= beta_t <= beta < 1")]
    BetaViolation { t: u64, beta: f64 },
    #[error("theta_{t} = {theta} is outside (0, 1)")]
    ThetaViolation { t: u64, theta: f64 },
    #[error("theta decreases at step {t}")]
    ThetaDecreasing { t: u64 },
    #[error("alpha_{t} = {alpha} must be positive and finite")]
    AlphaViolation { t: u64, alpha: f64 },
    #[error("weight w_{index} = {value} must be positive and finite")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("horizon {0} is too short (need >= 10)")]
    HorizonTooShort(u64),
    #[error("no admissible theta' : theta at horizon {theta} <= beta^2 = {beta_sq}")]
    NoAdmissibleThetaPrime { theta: f64, beta_sq: f64 },
    #[error(
        "theta' = {theta_prime} must lie in (beta^2, theta_limit] = ({beta_sq}, {theta_limit}]"
    )]
    ThetaPrimeRange {
        theta_prime: f64,
        beta_sq: f64,
        theta_limit: f64,
    },
    #[error("delta = {0} must lie in (0, 1)")]
    Delta(f64),
    #[error("empty table")]
    EmptyTable,
}

/// One evaluation of a schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triple {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
}

impl Triple {
    /// `chi_t = alpha_t / sqrt(1 - theta_t)`.
    pub fn chi(&self) -> f64 {
        self.alpha / (1.0 - self.theta).sqrt()
    }
}

/// Momentum factors `beta_t`.
#[derive(Clone, Debug, PartialEq)]
pub enum BetaRule {
    Constant(f64),
    /// `beta_t = beta * decay^t`, as in AdamNC.
    Geometric {
        beta: f64,
        decay: f64,
    },
}

impl BetaRule {
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            BetaRule::Constant(b) => b,
            BetaRule::Geometric { beta, decay } => beta * decay.powf(t as f64),
        }
    }

    /// The uniform bound on `beta_t` implied by the rule.
    pub fn cap(&self) -> f64 {
        match *self {
            BetaRule::Constant(b) => b,
            BetaRule::Geometric { beta, decay } => {
                if decay <= 1.0 {
                    beta
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Base learning rates, used where `alpha_t` is not part of a power-law family.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseRate {
    Constant(f64),
    /// `eta / t^s`.
    PowerDecay {
        eta: f64,
        s: f64,
    },
    Table(Vec<f64>),
}

impl BaseRate {
    pub fn at(&self, t: u64) -> Result<f64, ScheduleError> {
        if t == 0 {
            return Err(ScheduleError::ZeroStep);
        }
        match self {
            BaseRate::Constant(c) => Ok(*c),
            BaseRate::PowerDecay { eta, s } => Ok(eta / (t as f64).powf(*s)),
            BaseRate::Table(values) => {
                values
                    .get((t - 1) as usize)
                    .copied()
                    .ok_or(ScheduleError::OutOfTable {
                        t,
                        len: values.len() as u64,
                    })
            }
        }
    }

    fn len(&self) -> Option<u64> {
        match self {
            BaseRate::Table(v) => Some(v.len() as u64),
            _ => None,
        }
    }
}

/// `alpha_t = eta / t^s`, `theta_t = 1 - numerator / max(t, cutoff)^r`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerLawFamily {
    pub eta: f64,
    pub s: f64,
    /// The numerator of the theta term.
    pub numerator: f64,
    pub r: f64,
    pub cutoff: u64,
    pub beta_cap: f64,
}

impl PowerLawFamily {
    pub fn new(
        eta: f64,
        s: f64,
        numerator: f64,
        r: f64,
        cutoff: u64,
        beta_cap: f64,
    ) -> Result<Self, ScheduleError> {
        let fam = PowerLawFamily {
            eta,
            s,
            numerator,
            r,
            cutoff,
            beta_cap,
        };
        fam.validate()?;
        Ok(fam)
    }

    /// Same as [`PowerLawFamily::new`] with the smallest cutoff that keeps
    /// `theta_t` strictly positive.
    pub fn with_min_cutoff(
        eta: f64,
        s: f64,
        numerator: f64,
        r: f64,
        beta_cap: f64,
    ) -> Result<Self, ScheduleError> {
        let cutoff = min_cutoff(numerator, r)?;
        Self::new(eta, s, numerator, r, cutoff, beta_cap)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        positive("eta", self.eta)?;
        positive("numerator", self.numerator)?;
        if !(0.0..1.0).contains(&self.s) {
            return Err(ScheduleError::RateExponent(self.s));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(ScheduleError::ThetaExponent(self.r));
        }
        if self.cutoff == 0 {
            return Err(ScheduleError::ZeroStep);
        }
        let head = self.numerator / (self.cutoff as f64).powf(self.r);
        if head >= 1.0 {
            return Err(ScheduleError::CutoffTooSmall(head));
        }
        if !(0.0..1.0).contains(&self.beta_cap) {
            return Err(ScheduleError::BetaRange {
                beta: self.beta_cap,
            });
        }
        Ok(())
    }

    pub fn alpha_at(&self, t: u64) -> f64 {
        self.eta / (t as f64).powf(self.s)
    }

    pub fn theta_at(&self, t: u64) -> f64 {
        1.0 - self.one_minus_theta_at(t)
    }

    /// `1 - theta_t`, computed without cancellation.
    pub fn one_minus_theta_at(&self, t: u64) -> f64 {
        let base = t.max(self.cutoff) as f64;
        self.numerator / base.powf(self.r)
    }
}

fn min_cutoff(numerator: f64, r: f64) -> Result<u64, ScheduleError> {
    positive("numerator", numerator)?;
    if numerator < 1.0 {
        return Ok(1);
    }
    if r <= 0.0 {
        return Err(ScheduleError::CutoffTooSmall(numerator));
    }
    let mut k = numerator.powf(1.0 / r).floor().max(1.0) as u64;
    while numerator / (k as f64).powf(r) >= 1.0 {
        k += 1;
    }
    Ok(k)
}

fn positive(name: &'static str, value: f64) -> Result<(), ScheduleError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ScheduleError::NonPositive { name, value })
    }
}

/// A user-supplied generator. Must be pure: same `t`, same triple.
#[derive(Clone)]
pub struct CustomGenerator(Arc<dyn Fn(u64) -> Triple + Send + Sync>);

impl fmt::Debug for CustomGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomGenerator(..)")
    }
}

#[derive(Clone, Debug)]
pub enum ScheduleKind {
    PowerLaw {
        family: PowerLawFamily,
        beta: BetaRule,
    },
    Tabulated(Vec<Triple>),
    BiasCorrected {
        beta: f64,
        theta: f64,
        base: BaseRate,
    },
    Custom {
        generator: CustomGenerator,
        beta_cap: f64,
    },
}

#[derive(Clone, Debug)]
pub struct ParameterSchedule {
    kind: ScheduleKind,
    horizon_hint: u64,
    label: String,
}

/// Default `horizon_hint` for unbounded schedules.
pub const DEFAULT_HORIZON: u64 = 100_000;

impl ParameterSchedule {
    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn horizon_hint(&self) -> u64 {
        self.horizon_hint
    }

    pub fn with_horizon_hint(mut self, horizon: u64) -> Self {
        self.horizon_hint = horizon.max(1);
        self
    }

    /// Replaces the momentum rule of a power-law schedule. Other kinds are
    /// returned unchanged.
    pub fn with_beta(mut self, rule: BetaRule) -> Self {
        if let ScheduleKind::PowerLaw { beta, .. } = &mut self.kind {
            *beta = rule;
        }
        self
    }

    pub fn tabulated(table: Vec<Triple>) -> Result<Self, ScheduleError> {
        if table.is_empty() {
            return Err(ScheduleError::EmptyTable);
        }
        let len = table.len() as u64;
        Ok(ParameterSchedule {
            kind: ScheduleKind::Tabulated(table),
            horizon_hint: len,
            label: "tabulated".into(),
        })
    }

    pub fn custom<F>(beta_cap: f64, generator: F) -> Self
    where
        F: Fn(u64) -> Triple + Send + Sync + 'static,
    {
        ParameterSchedule {
            kind: ScheduleKind::Custom {
                generator: CustomGenerator(Arc::new(generator)),
                beta_cap,
            },
            horizon_hint: DEFAULT_HORIZON,
            label: "custom".into(),
        }
    }

    /// The uniform bound `beta` with `beta_t <= beta`.
    pub fn beta_cap(&self) -> f64 {
        match &self.kind {
            ScheduleKind::PowerLaw { beta, .. } => beta.cap(),
            ScheduleKind::Tabulated(table) => table
                .iter()
                .map(|tr| tr.beta)
                .fold(f64::NEG_INFINITY, f64::max),
            ScheduleKind::BiasCorrected { beta, .. } => *beta,
            ScheduleKind::Custom { beta_cap, .. } => *beta_cap,
        }
    }

    /// Number of steps a tabulated schedule can serve.
    pub fn table_len(&self) -> Option<u64> {
        match &self.kind {
            ScheduleKind::Tabulated(t) => Some(t.len() as u64),
            ScheduleKind::BiasCorrected { base, .. } => base.len(),
            _ => None,
        }
    }

    pub fn family(&self) -> Option<&PowerLawFamily> {
        match &self.kind {
            ScheduleKind::PowerLaw { family, .. } => Some(family),
            _ => None,
        }
    }

    pub fn eval(&self, t: u64) -> Result<Triple, ScheduleError> {
        if t == 0 {
            return Err(ScheduleError::ZeroStep);
        }
        match &self.kind {
            ScheduleKind::PowerLaw { family, beta } => Ok(Triple {
                alpha: family.alpha_at(t),
                beta: beta.at(t),
                theta: family.theta_at(t),
            }),
            ScheduleKind::Tabulated(table) => {
                table
                    .get((t - 1) as usize)
                    .copied()
                    .ok_or(ScheduleError::OutOfTable {
                        t,
                        len: table.len() as u64,
                    })
            }
            ScheduleKind::BiasCorrected { beta, theta, base } => {
                let tf = t as f64;
                let correction = (1.0 - theta.powf(tf)).sqrt() / (1.0 - beta.powf(tf));
                Ok(Triple {
                    alpha: base.at(t)? * correction,
                    beta: *beta,
                    theta: *theta,
                })
            }
            ScheduleKind::Custom { generator, .. } => Ok((generator.0)(t)),
        }
    }

    /// `1 - theta_t`, exact for power-law families (no cancellation).
    pub fn one_minus_theta(&self, t: u64) -> Result<f64, ScheduleError> {
        match &self.kind {
            ScheduleKind::PowerLaw { family, .. } if t > 0 => Ok(family.one_minus_theta_at(t)),
            _ => self.eval(t).map(|tr| 1.0 - tr.theta),
        }
    }

    /// True when theta_t is the same value for every step in `[1, horizon]`.
    pub fn has_constant_theta(&self, horizon: u64) -> Result<bool, ScheduleError> {
        match &self.kind {
            ScheduleKind::PowerLaw { family, .. } => Ok(family.r == 0.0),
            ScheduleKind::BiasCorrected { .. } => Ok(true),
            _ => {
                let first = self.eval(1)?.theta;
                for t in 2..=horizon {
                    if self.eval(t)?.theta != first {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Checks `0 <= beta_t <= beta_cap < 1`, `0 < theta_t < 1` non-decreasing
    /// and `alpha_t > 0` for every `t` in `[1, horizon]`.
    pub fn validate(&self, horizon: u64) -> Result<(), ScheduleError> {
        let cap = self.beta_cap();
        if !(0.0..1.0).contains(&cap) {
            return Err(ScheduleError::BetaRange { beta: cap });
        }
        if let Some(fam) = self.family() {
            fam.validate()?;
        }
        let mut prev_theta = f64::NEG_INFINITY;
        for t in 1..=horizon {
            let tr = self.eval(t)?;
            if !(tr.beta >= 0.0 && tr.beta <= cap) {
                return Err(ScheduleError::BetaViolation { t, beta: tr.beta });
            }
            if !(tr.theta > 0.0 && tr.theta < 1.0) {
                return Err(ScheduleError::ThetaViolation { t, theta: tr.theta });
            }
            if tr.theta < prev_theta {
                return Err(ScheduleError::ThetaDecreasing { t });
            }
            if !(tr.alpha > 0.0 && tr.alpha.is_finite()) {
                return Err(ScheduleError::AlphaViolation { t, alpha: tr.alpha });
            }
            prev_theta = tr.theta;
        }
        Ok(())
    }
}

/// Builds the power-law schedule with constant `beta_t = fam.beta_cap`.
pub fn power_law_schedule(fam: PowerLawFamily) -> Result<ParameterSchedule, ScheduleError> {
    fam.validate()?;
    let label = format!(
        "power_law(eta={}, s={}, numerator={}, r={}, K={})",
        fam.eta, fam.s, fam.numerator, fam.r, fam.cutoff
    );
    let beta = BetaRule::Constant(fam.beta_cap);
    Ok(ParameterSchedule {
        kind: ScheduleKind::PowerLaw { family: fam, beta },
        horizon_hint: DEFAULT_HORIZON,
        label,
    })
}

pub fn eval_schedule(sched: &ParameterSchedule, t: u64) -> Result<Triple, ScheduleError> {
    sched.eval(t)
}

/// Adam with bias correction rewritten as Generic Adam:
/// `alpha_t = eta_hat_t * sqrt(1 - theta^t) / (1 - beta^t)`.
pub fn bias_corrected_adam_schedule(
    beta: f64,
    theta: f64,
    eta_hat: BaseRate,
) -> Result<ParameterSchedule, ScheduleError> {
    if !(0.0..1.0).contains(&beta) {
        return Err(ScheduleError::BetaRange { beta });
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(ScheduleError::ThetaRange { theta });
    }
    let horizon_hint = eta_hat.len().unwrap_or(DEFAULT_HORIZON);
    Ok(ParameterSchedule {
        kind: ScheduleKind::BiasCorrected {
            beta,
            theta,
            base: eta_hat,
        },
        horizon_hint,
        label: format!("bias_corrected_adam(beta={beta}, theta={theta})"),
    })
}
