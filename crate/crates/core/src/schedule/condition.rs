//! The four-part sufficient condition for convergence of Generic Adam:
//!
//! 1. `beta_t <= beta < 1`;
//! 2. `0 < theta_t < 1`, non-decreasing;
//! 3. `chi_t = alpha_t / sqrt(1 - theta_t)` almost non-increasing, i.e.
//!    `a_t <= chi_t <= C0 a_t` for some non-increasing `a_t`;
//! 4. `sum_{t<=T} alpha_t sqrt(1 - theta_t) / (T alpha_T) -> 0`.
//!
//! Conditions 1 and 2 are checked exactly over the horizon. Condition 3 is
//! estimated with the running-minimum envelope `a_t = min_{i<=t} chi_i`, which
//! is the largest admissible envelope and therefore gives the smallest `C0`.
//! Condition 4 is only certified for power-law families; anything else gets a
//! trend diagnosis over dyadic sample points.

use std::fmt;

use super::{classify_rate, BetaRule, ParameterSchedule, RateClass, ScheduleError, ScheduleKind};
use crate::numeric::CompensatedSum;

#[derive(Clone, Debug, PartialEq)]
pub struct MomentumCheck {
    pub passed: bool,
    /// Largest `beta_t` seen and where.
    pub max_beta: f64,
    pub at: u64,
    pub cap: f64,
    pub symbolic: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneCheck {
    pub passed: bool,
    pub first_violation: Option<u64>,
    pub symbolic: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChiCheck {
    pub passed: bool,
    /// `max_t chi_t / a_t` over the horizon.
    pub c0_estimate: f64,
    /// The same estimate over `[1, H/4]` and `[1, H/2]`.
    pub c0_quarter: f64,
    pub c0_half: f64,
    pub envelope: &'static str,
    /// True when the verdict rests on the finite horizon only.
    pub horizon_limited: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioVerdict {
    /// Proven for the power-law family.
    Certified,
    /// Proven to fail for the power-law family.
    Refuted,
    /// Samples decrease at a visible polynomial rate.
    DiagnosedDecreasing,
    /// Samples do not decrease convincingly.
    DiagnosedStalled,
}

impl RatioVerdict {
    pub fn passes(self) -> bool {
        matches!(
            self,
            RatioVerdict::Certified | RatioVerdict::DiagnosedDecreasing
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RatioVerdict::Certified => "certified",
            RatioVerdict::Refuted => "refuted",
            RatioVerdict::DiagnosedDecreasing => "diagnosed-decreasing",
            RatioVerdict::DiagnosedStalled => "diagnosed-stalled",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioCheck {
    pub verdict: RatioVerdict,
    /// `(T', R(T'))` at `T' = 10 * 2^k <= horizon`.
    pub samples: Vec<(u64, f64)>,
    pub rate: Option<RateClass>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScReport {
    pub horizon: u64,
    pub cond1_momentum_bounded: MomentumCheck,
    pub cond2_theta_monotone: MonotoneCheck,
    pub cond3_chi_almost_nonincreasing: ChiCheck,
    pub cond4_ratio_vanishes: RatioCheck,
    pub overall: bool,
}

/// Growth of the C0 estimate over the last dyadic window must shrink to at
/// most this fraction of the growth over the window before it.
const C0_GROWTH_SHRINK: f64 = 0.9;
/// Relative C0 growth below this counts as flat.
const C0_FLAT: f64 = 1e-12;
/// Fitted log-log slope of the last three ratio samples must be at most this.
const RATIO_MIN_DECAY: f64 = -0.05;

pub fn check_sufficient_condition(
    sched: &ParameterSchedule,
    horizon: u64,
) -> Result<ScReport, ScheduleError> {
    if horizon < 10 {
        return Err(ScheduleError::HorizonTooShort(horizon));
    }
    let cap = sched.beta_cap();
    let quarter = (horizon / 4).max(1);
    let half = (horizon / 2).max(1);

    let mut max_beta = f64::NEG_INFINITY;
    let mut max_beta_at = 1;
    let mut beta_ok = true;
    let mut first_violation = None;
    let mut prev_theta = f64::NEG_INFINITY;

    let mut envelope = f64::INFINITY;
    let mut c0 = 1.0f64;
    let mut c0_quarter = 1.0;
    let mut c0_half = 1.0;

    let mut sum = CompensatedSum::new();
    let mut samples = Vec::new();
    let mut next_sample = 10u64;

    for t in 1..=horizon {
        let tr = sched.eval(t)?;
        if !(tr.beta >= 0.0) {
            beta_ok = false;
        }
        if tr.beta > max_beta || tr.beta.is_nan() {
            max_beta = tr.beta;
            max_beta_at = t;
        }

        if first_violation.is_none()
            && !(tr.theta > 0.0 && tr.theta < 1.0 && tr.theta >= prev_theta)
        {
            first_violation = Some(t);
        }
        prev_theta = tr.theta;

        let one_minus = sched.one_minus_theta(t)?;
        let chi = tr.alpha / one_minus.sqrt();
        if chi.is_finite() && chi > 0.0 {
            envelope = envelope.min(chi);
            c0 = c0.max(chi / envelope);
        } else {
            c0 = f64::INFINITY;
        }
        if t == quarter {
            c0_quarter = c0;
        }
        if t == half {
            c0_half = c0;
        }

        sum.add(tr.alpha * one_minus.max(0.0).sqrt());
        if t == next_sample {
            samples.push((t, sum.value() / (t as f64 * tr.alpha)));
            next_sample *= 2;
        }
    }

    let family = sched.family();

    let cond1 = {
        let (passed, symbolic) = match sched.kind() {
            ScheduleKind::PowerLaw { beta, .. } => (symbolic_beta_ok(beta), true),
            _ => (beta_ok && max_beta <= cap && cap < 1.0, false),
        };
        MomentumCheck {
            passed: passed && beta_ok && max_beta < 1.0,
            max_beta,
            at: max_beta_at,
            cap,
            symbolic,
        }
    };

    let cond2 = MonotoneCheck {
        passed: first_violation.is_none() && family.is_none_or(|f| f.validate().is_ok()),
        first_violation,
        symbolic: family.is_some(),
    };

    let cond3 = {
        let numeric = c0.is_finite() && {
            let early = c0_half - c0_quarter;
            let late = c0 - c0_half;
            late <= C0_FLAT * c0 || late <= C0_GROWTH_SHRINK * early
        };
        let passed = match family {
            Some(f) => f.r <= 2.0 * f.s + 8.0 * f64::EPSILON,
            None => numeric,
        };
        ChiCheck {
            passed,
            c0_estimate: c0,
            c0_quarter,
            c0_half,
            envelope: "a_t = min_{i<=t} chi_i",
            horizon_limited: family.is_none(),
        }
    };

    let cond4 = match family {
        Some(f) => {
            let rate = classify_rate(f);
            let verdict = if rate == RateClass::NotConvergent {
                RatioVerdict::Refuted
            } else {
                RatioVerdict::Certified
            };
            RatioCheck {
                verdict,
                samples,
                rate: Some(rate),
            }
        }
        None => RatioCheck {
            verdict: diagnose_trend(&samples),
            samples,
            rate: None,
        },
    };

    let overall = cond1.passed && cond2.passed && cond3.passed && cond4.verdict.passes();
    Ok(ScReport {
        horizon,
        cond1_momentum_bounded: cond1,
        cond2_theta_monotone: cond2,
        cond3_chi_almost_nonincreasing: cond3,
        cond4_ratio_vanishes: cond4,
        overall,
    })
}

fn symbolic_beta_ok(rule: &BetaRule) -> bool {
    match *rule {
        BetaRule::Constant(b) => (0.0..1.0).contains(&b),
        BetaRule::Geometric { beta, decay } => {
            (0.0..1.0).contains(&beta) && (0.0..=1.0).contains(&decay)
        }
    }
}

fn diagnose_trend(samples: &[(u64, f64)]) -> RatioVerdict {
    if samples.len() < 3 {
        return RatioVerdict::DiagnosedStalled;
    }
    let tail = &samples[samples.len() - 3..];
    let decreasing = tail.windows(2).all(|w| w[1].1 < w[0].1);
    let (t0, r0) = tail[0];
    let (t2, r2) = tail[2];
    let slope = (r2.ln() - r0.ln()) / ((t2 as f64).ln() - (t0 as f64).ln());
    if decreasing && r2 > 0.0 && slope <= RATIO_MIN_DECAY {
        RatioVerdict::DiagnosedDecreasing
    } else {
        RatioVerdict::DiagnosedStalled
    }
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "FAIL"
    }
}

impl fmt::Display for ScReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c1 = &self.cond1_momentum_bounded;
        let c2 = &self.cond2_theta_monotone;
        let c3 = &self.cond3_chi_almost_nonincreasing;
        let c4 = &self.cond4_ratio_vanishes;
        writeln!(f, "horizon: {}", self.horizon)?;
        writeln!(
            f,
            "cond1 momentum bounded      : {} (max beta_t = {} at t = {}, cap = {}{})",
            verdict(c1.passed),
            c1.max_beta,
            c1.at,
            c1.cap,
            if c1.symbolic { ", symbolic" } else { "" }
        )?;
        match c2.first_violation {
            Some(t) => writeln!(
                f,
                "cond2 theta in (0,1), monotone: {} (first violation at t = {t})",
                verdict(c2.passed)
            )?,
            None => writeln!(
                f,
                "cond2 theta in (0,1), monotone: {}{}",
                verdict(c2.passed),
                if c2.symbolic { " (symbolic)" } else { "" }
            )?,
        }
        writeln!(
            f,
            "cond3 chi almost non-incr.  : {} (C0 ~ {:.6} ; H/4: {:.6}, H/2: {:.6}; envelope {}{})",
            verdict(c3.passed),
            c3.c0_estimate,
            c3.c0_quarter,
            c3.c0_half,
            c3.envelope,
            if c3.horizon_limited {
                ", horizon-limited"
            } else {
                ", symbolic"
            }
        )?;
        write!(
            f,
            "cond4 ratio vanishes        : {} ({}",
            verdict(c4.verdict.passes()),
            c4.verdict.as_str()
        )?;
        if let Some(rate) = &c4.rate {
            write!(f, ", rate {rate}")?;
        }
        writeln!(f, ")")?;
        for (t, r) in &c4.samples {
            writeln!(f, "    R({t}) = {r:.6e}")?;
        }
        write!(
            f,
            "overall: {}",
            if self.overall {
                "satisfied"
            } else {
                "NOT satisfied"
            }
        )
    }
}
