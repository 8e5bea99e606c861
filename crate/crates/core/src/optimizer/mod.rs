//! Optimizer state machines.
//!
//! [`AdamState`] runs Generic Adam in the theta form, [`WeightedState`] runs
//! the same iteration in the weighted (AdaGrad-style) form and
//! [`AmsgradState`] is the max-stabilized comparison baseline.

mod amsgrad;
mod weighted;

use thiserror::Error;

use crate::schedule::{ParameterSchedule, ScheduleError, Triple};

pub use amsgrad::{step_amsgrad, AmsgradState};
pub use weighted::{step_weighted_adaema, WeightedState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("gradient has dimension {got}, state has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gradient component {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("eps = {0} must be positive and finite")]
    InvalidEps(f64),
    #[error("weight w_t = {0} must be positive and finite")]
    InvalidWeight(f64),
    #[error("step parameters alpha = {alpha}, beta = {beta} are out of range")]
    InvalidStep { alpha: f64, beta: f64 },
    #[error("box has lo > hi at component {0}")]
    InvalidBox(usize),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Box `lo <= x <= hi`, either uniform over all coordinates or per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub enum BoxConstraint {
    Uniform { lo: f64, hi: f64 },
    PerCoordinate { lo: Vec<f64>, hi: Vec<f64> },
}

impl BoxConstraint {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self, OptimError> {
        if !(lo <= hi) {
            return Err(OptimError::InvalidBox(0));
        }
        Ok(BoxConstraint::Uniform { lo, hi })
    }

    pub fn per_coordinate(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, OptimError> {
        if lo.len() != hi.len() {
            return Err(OptimError::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if let Some(k) = lo.iter().zip(&hi).position(|(l, h)| !(l <= h)) {
            return Err(OptimError::InvalidBox(k));
        }
        Ok(BoxConstraint::PerCoordinate { lo, hi })
    }

    /// Clamps `x` in place.
    pub fn project(&self, x: &mut [f64]) {
        match self {
            BoxConstraint::Uniform { lo, hi } => {
                for xk in x.iter_mut() {
                    *xk = xk.clamp(*lo, *hi);
                }
            }
            BoxConstraint::PerCoordinate { lo, hi } => {
                for ((xk, l), h) in x.iter_mut().zip(lo).zip(hi) {
                    *xk = xk.clamp(*l, *h);
                }
            }
        }
    }
}

pub fn project_box(x: &[f64], c: &BoxConstraint) -> Vec<f64> {
    let mut out = x.to_vec();
    c.project(&mut out);
    out
}

/// Iterate of Generic Adam. `t` counts completed steps.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn init_state(x1: Vec<f64>, eps: f64) -> Result<AdamState, OptimError> {
    AdamState::new(x1, eps)
}

pub(crate) fn check_gradient(g: &[f64], dim: usize) -> Result<(), OptimError> {
    if g.len() != dim {
        return Err(OptimError::DimensionMismatch {
            expected: dim,
            got: g.len(),
        });
    }
    match g.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(OptimError::NonFinite {
            index,
            value: g[index],
        }),
        None => Ok(()),
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<(), OptimError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(OptimError::InvalidEps(eps))
    }
}

/// `x - alpha * m / sqrt(denom)`, leaving `x` in place when `m = 0` so that an
/// underflowed denominator never produces `0/0`.
#[inline]
pub(crate) fn descend(x: f64, alpha: f64, m: f64, denom: f64) -> f64 {
    if m == 0.0 {
        x
    } else {
        x - alpha * m / denom.sqrt()
    }
}

impl AdamState {
    /// `m_0 = 0`, `v_0 = eps`.
    pub fn new(x1: Vec<f64>, eps: f64) -> Result<Self, OptimError> {
        check_eps(eps)?;
        let d = x1.len();
        Ok(AdamState {
            t: 0,
            x: x1,
            m: vec![0.0; d],
            v: vec![eps; d],
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// One step with the schedule evaluated at `t + 1`; returns that triple.
    pub fn step(
        &mut self,
        g: &[f64],
        sched: &ParameterSchedule,
        constraint: Option<&BoxConstraint>,
    ) -> Result<Triple, OptimError> {
        let tr = sched.eval(self.t + 1)?;
        self.step_with(g, tr, constraint)?;
        Ok(tr)
    }

    /// One step with explicit `(alpha, beta, theta)`.
    pub fn step_with(
        &mut self,
        g: &[f64],
        tr: Triple,
        constraint: Option<&BoxConstraint>,
    ) -> Result<(), OptimError> {
        check_gradient(g, self.dim())?;
        let Triple { alpha, beta, theta } = tr;
        for k in 0..g.len() {
            let gk = g[k];
            self.v[k] = theta * self.v[k] + (1.0 - theta) * gk * gk;
            self.m[k] = beta * self.m[k] + (1.0 - beta) * gk;
            self.x[k] = descend(self.x[k], alpha, self.m[k], self.v[k]);
        }
        if let Some(c) = constraint {
            c.project(&mut self.x);
        }
        self.t += 1;
        Ok(())
    }
}

/// Value-style wrapper around [`AdamState::step`].
pub fn step_generic_adam(
    state: &AdamState,
    g: &[f64],
    sched: &ParameterSchedule,
    constraint: Option<&BoxConstraint>,
) -> Result<AdamState, OptimError> {
    let mut next = state.clone();
    next.step(g, sched, constraint)?;
    Ok(next)
}

/// `min_k v_k / (c1 (1 - gamma) (1 - theta_t)) - m_k^2`, which the analysis
/// shows is never negative.
pub fn lemma_margin(m: &[f64], v: &[f64], c1: f64, gamma: f64, one_minus_theta: f64) -> f64 {
    let scale = c1 * (1.0 - gamma) * one_minus_theta;
    m.iter()
        .zip(v)
        .map(|(mk, vk)| vk / scale - mk * mk)
        .fold(f64::INFINITY, f64::min)
}

/// Coarse per-step bound `|x_{t+1,k} - x_{t,k}| <= chi_t / sqrt(c1 (1 - gamma))`.
pub fn step_bound(chi: f64, c1: f64, gamma: f64) -> f64 {
    chi / (c1 * (1.0 - gamma)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{analysis_constants, presets};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn make(alpha: f64, beta: f64, theta: f64) -> Triple {
        Triple { alpha, beta, theta }
    }

    #[test]
    fn init_sets_moments() {
        let s = init_state(vec![0.0], 1e-8).unwrap();
        assert_eq!(s.v, vec![1e-8]);
        assert_eq!(s.t, 0);
        let s = init_state(vec![0.0; 3], 1e-8).unwrap();
        assert_eq!(s.m, vec![0.0; 3]);
        assert_eq!(init_state(vec![0.0], 0.0), Err(OptimError::InvalidEps(0.0)));
    }

    #[test]
    fn single_step_by_hand() {
        let mut s = init_state(vec![0.0], 1e-8).unwrap();
        s.step_with(&[2.0], make(0.1, 0.5, 0.5), None).unwrap();
        assert_relative_eq!(s.v[0], 2.000000005, max_relative = 1e-15);
        assert_eq!(s.m[0], 1.0);
        assert_relative_eq!(s.x[0], -0.1 / 2.000000005f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(s.x[0], -0.070710678030266, max_relative = 1e-12);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_momentum_keeps_last_gradient() {
        let sched = presets::rmsprop(0.1, 1.0).unwrap();
        let mut s = init_state(vec![0.3, -0.2], 1e-8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let g = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            s.step(&g, &sched, None).unwrap();
            assert_eq!(s.m[0].to_bits(), g[0].to_bits());
            assert_eq!(s.m[1].to_bits(), g[1].to_bits());
        }
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut s = init_state(vec![0.7], 1e-8).unwrap();
        s.step_with(&[0.0], make(0.1, 0.9, 0.5), None).unwrap();
        assert_eq!(s.x, vec![0.7]);
        assert_eq!(s.v, vec![0.5e-8]);
        for _ in 0..2000 {
            s.step_with(&[0.0], make(0.1, 0.9, 0.5), None).unwrap();
        }
        assert_eq!(s.v[0], 0.0);
        assert_eq!(s.x, vec![0.7]);
    }

    #[test]
    fn rejects_bad_gradients() {
        let mut s = init_state(vec![0.0; 2], 1e-8).unwrap();
        let tr = make(0.1, 0.5, 0.5);
        assert_eq!(
            s.step_with(&[1.0], tr, None),
            Err(OptimError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
        assert!(matches!(
            s.step_with(&[1.0, f64::NAN], tr, None),
            Err(OptimError::NonFinite { index: 1, .. })
        ));
        assert!(matches!(
            s.step_with(&[f64::INFINITY, 0.0], tr, None),
            Err(OptimError::NonFinite { index: 0, .. })
        ));
        assert_eq!(s.t, 0);
    }

    #[test]
    fn box_projection() {
        let b = BoxConstraint::uniform(-1.0, 1.0).unwrap();
        assert_eq!(project_box(&[1.5], &b), vec![1.0]);
        assert_eq!(project_box(&[-0.3], &b), vec![-0.3]);
        assert_eq!(project_box(&[-2.0, 0.0, 2.0], &b), vec![-1.0, 0.0, 1.0]);
        let once = project_box(&[3.0, -4.0], &b);
        assert_eq!(project_box(&once, &b), once);
        assert!(BoxConstraint::uniform(1.0, -1.0).is_err());
        let pc = BoxConstraint::per_coordinate(vec![0.0, -2.0], vec![1.0, -1.0]).unwrap();
        assert_eq!(project_box(&[5.0, 5.0], &pc), vec![1.0, -1.0]);
        assert_eq!(
            BoxConstraint::per_coordinate(vec![0.0, 2.0], vec![1.0, 1.0]),
            Err(OptimError::InvalidBox(1))
        );
    }

    #[test]
    fn projected_step_stays_in_box() {
        let b = BoxConstraint::uniform(-1.0, 1.0).unwrap();
        let mut s = init_state(vec![0.99], 1e-8).unwrap();
        s.step_with(&[-100.0], make(1.0, 0.0, 0.5), Some(&b))
            .unwrap();
        assert_eq!(s.x, vec![1.0]);
    }

    #[test]
    fn value_wrapper_matches_in_place() {
        let sched = presets::ada_ema(0.5, 0.9).unwrap();
        let s0 = init_state(vec![1.0, 2.0], 1e-8).unwrap();
        let s1 = step_generic_adam(&s0, &[0.5, -0.5], &sched, None).unwrap();
        let mut s = s0.clone();
        s.step(&[0.5, -0.5], &sched, None).unwrap();
        assert_eq!(s, s1);
        assert_eq!(s0.t, 0);
    }

    #[test]
    fn positivity_of_second_moment() {
        let sched = presets::ada_ema(0.5, 0.9).unwrap();
        let eps = 1e-8;
        let mut s = init_state(vec![0.0; 3], eps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut prod = 1.0;
        for _ in 0..5000 {
            let g: Vec<f64> = (0..3)
                .map(|_| {
                    if rng.random_bool(0.3) {
                        0.0
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect();
            let tr = s.step(&g, &sched, None).unwrap();
            prod *= tr.theta;
            for &vk in &s.v {
                assert!(vk > 0.0);
                assert!(vk >= eps * prod * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn lemma_margin_and_step_bound_hold_on_random_streams() {
        let sched = presets::ada_ema(0.5, 0.9).unwrap();
        let ac = analysis_constants(&sched, 10_000, None).unwrap();
        let mut s = init_state(vec![0.0; 4], 1e-8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let g: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let before = s.x.clone();
            let tr = s.step(&g, &sched, None).unwrap();
            let omt = sched.one_minus_theta(s.t).unwrap();
            assert!(lemma_margin(&s.m, &s.v, ac.c1, ac.gamma, omt) >= -1e-12);
            let bound = step_bound(tr.chi(), ac.c1, ac.gamma);
            for k in 0..4 {
                let dx = (s.x[k] - before[k]).abs();
                assert!(dx <= bound * (1.0 + 1e-12));
                if g[k] != 0.0 {
                    let fine = tr.alpha * s.m[k].abs() / (omt * g[k] * g[k]).sqrt();
                    assert!(dx <= fine * (1.0 + 1e-12));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn projection_is_idempotent(x in prop::collection::vec(-10.0f64..10.0, 1..16),
                                    lo in -2.0f64..0.0, width in 0.0f64..4.0) {
            let b = BoxConstraint::uniform(lo, lo + width).unwrap();
            let once = project_box(&x, &b);
            prop_assert_eq!(project_box(&once, &b), once.clone());
            for v in once {
                prop_assert!(v >= lo && v <= lo + width);
            }
        }
    }
}
