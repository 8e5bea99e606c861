//! Generic Adam, its weighted-AdaGrad twin, and the tooling to reason about
//! when the iteration converges.
//!
//! The crate is split into four layers:
//!
//! * [`schedule`]: parameter schedules `(alpha_t, beta_t, theta_t)`, the
//!   theta/weight conversions, the sufficient-condition checker, the bound
//!   constants and the rate classifier for the power-law family.
//! * [`optimizer`]: Generic Adam, Weighted AdaEMA and an AMSGrad baseline,
//!   with optional box projection.
//! * [`problems`]: stochastic gradient oracles (the online counterexample,
//!   a quadratic, logistic regression and a small MLP), regret accounting and
//!   finite-difference gradient checks.
//! * [`harness`]: experiment configuration, runs, sweeps, rate fitting, CSV
//!   export and plot-script emission. The `gadam` binary is a thin shell over
//!   [`cli`].

pub mod cli;
pub mod harness;
pub mod numeric;
pub mod optimizer;
pub mod problems;
pub mod schedule;

pub use optimizer::{AdamState, AmsgradState, BoxConstraint, OptimError, WeightedState};
pub use schedule::{
    BaseRate, BetaRule, BoundConstants, ParameterSchedule, PowerLawFamily, ProblemConstants,
    RateClass, ScReport, ScheduleError, Triple, WeightSequence,
};
