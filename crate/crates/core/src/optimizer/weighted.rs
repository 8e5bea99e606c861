use super::{check_eps, check_gradient, descend, BoxConstraint, OptimError};
use crate::numeric::{ldexp, Scaled};

// Renormalize once the cumulative weight passes 2^512.
const RESCALE_EXP: i64 = 512;

/// Weighted AdaEMA iterate.
///
/// `V` and `W` are stored as `v_acc * 2^scale_exp` and `w_acc * 2^scale_exp`
/// with a shared exponent, so `V / W` is unaffected by rescaling.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedState {
    pub t: u64,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    v_acc: Vec<f64>,
    w_acc: f64,
    scale_exp: i64,
}

impl WeightedState {
    /// `m_0 = 0`, `V_0 = eps`, `W_0 = 1`.
    pub fn new(x1: Vec<f64>, eps: f64) -> Result<Self, OptimError> {
        check_eps(eps)?;
        let d = x1.len();
        Ok(WeightedState {
            t: 0,
            x: x1,
            m: vec![0.0; d],
            v_acc: vec![eps; d],
            w_acc: 1.0,
            scale_exp: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn cumulative_weight(&self) -> Scaled {
        Scaled::from_f64(self.w_acc).mul_pow2(self.scale_exp)
    }

    pub fn accumulated_squares(&self) -> Vec<Scaled> {
        self.v_acc
            .iter()
            .map(|&v| Scaled::from_f64(v).mul_pow2(self.scale_exp))
            .collect()
    }

    /// `V_t / W_t`, the quantity matching `v_t` of the theta form.
    pub fn second_moment(&self) -> Vec<f64> {
        self.v_acc.iter().map(|v| v / self.w_acc).collect()
    }

    pub fn step(
        &mut self,
        g: &[f64],
        w: f64,
        alpha: f64,
        beta: f64,
        constraint: Option<&BoxConstraint>,
    ) -> Result<(), OptimError> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(OptimError::InvalidWeight(w));
        }
        self.step_scaled(g, Scaled::from_f64(w), alpha, beta, constraint)
    }

    /// Same as [`WeightedState::step`] with a weight beyond the `f64` range.
    pub fn step_scaled(
        &mut self,
        g: &[f64],
        w: Scaled,
        alpha: f64,
        beta: f64,
        constraint: Option<&BoxConstraint>,
    ) -> Result<(), OptimError> {
        check_gradient(g, self.dim())?;
        if w.is_zero() {
            return Err(OptimError::InvalidWeight(0.0));
        }
        if !(alpha > 0.0 && alpha.is_finite() && (0.0..=1.0).contains(&beta)) {
            return Err(OptimError::InvalidStep { alpha, beta });
        }
        let mut wl = w.relative_to(self.scale_exp);
        if !wl.is_finite() || wl > ldexp(1.0, RESCALE_EXP) {
            self.shift_to(w.exponent());
            wl = w.relative_to(self.scale_exp);
        }
        self.w_acc += wl;
        for k in 0..g.len() {
            let gk = g[k];
            self.v_acc[k] += wl * gk * gk;
            self.m[k] = beta * self.m[k] + (1.0 - beta) * gk;
            self.x[k] = descend(self.x[k], alpha, self.m[k], self.v_acc[k] / self.w_acc);
        }
        if self.w_acc > ldexp(1.0, RESCALE_EXP) {
            let e = self.w_acc.log2().floor() as i64;
            self.shift_to(self.scale_exp + e);
        }
        if let Some(c) = constraint {
            c.project(&mut self.x);
        }
        self.t += 1;
        Ok(())
    }

    fn shift_to(&mut self, new_exp: i64) {
        let delta = new_exp - self.scale_exp;
        if delta <= 0 {
            return;
        }
        self.w_acc = ldexp(self.w_acc, -delta);
        for v in &mut self.v_acc {
            *v = ldexp(*v, -delta);
        }
        self.scale_exp = new_exp;
    }
}

/// Value-style wrapper around [`WeightedState::step`].
pub fn step_weighted_adaema(
    state: &WeightedState,
    g: &[f64],
    w: f64,
    alpha: f64,
    beta: f64,
    constraint: Option<&BoxConstraint>,
) -> Result<WeightedState, OptimError> {
    let mut next = state.clone();
    next.step(g, w, alpha, beta, constraint)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::AdamState;
    use crate::schedule::{presets, ThetaToWeights, Triple};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_step() {
        let mut s = WeightedState::new(vec![0.25], 1.0).unwrap();
        s.step(&[1.0], 1.0, 1.0, 0.0, None).unwrap();
        assert_eq!(s.second_moment(), vec![1.0]);
        assert_eq!(s.cumulative_weight().to_f64(), 2.0);
        assert_eq!(s.accumulated_squares()[0].to_f64(), 2.0);
        assert_eq!(s.x, vec![0.25 - 1.0]);
    }

    #[test]
    fn unit_weights_give_adagrad() {
        let eta = 0.3;
        let eps = 1e-8;
        let mut s = WeightedState::new(vec![1.0, -1.0], eps).unwrap();
        let mut x = [1.0f64, -1.0];
        let mut sum_sq = [eps, eps];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for t in 1..=500u64 {
            let g = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let alpha = eta / ((t + 1) as f64).sqrt();
            s.step(&g, 1.0, alpha, 0.0, None).unwrap();
            for k in 0..2 {
                sum_sq[k] += g[k] * g[k];
                // AdaGrad with the (t+1)-normalized step
                x[k] -= eta * g[k] / sum_sq[k].sqrt();
                assert_relative_eq!(s.x[k], x[k], max_relative = 1e-12, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut s = WeightedState::new(vec![0.0], 1e-8).unwrap();
        assert_eq!(
            s.step(&[1.0], 0.0, 0.1, 0.0, None),
            Err(OptimError::InvalidWeight(0.0))
        );
        assert!(s.step(&[f64::NAN], 1.0, 0.1, 0.0, None).is_err());
        assert!(s.step(&[1.0, 1.0], 1.0, 0.1, 0.0, None).is_err());
        assert!(WeightedState::new(vec![0.0], -1.0).is_err());
    }

    #[test]
    fn rescaling_preserves_ratio() {
        // w_t = 1.5^t overflows f64 long before the end; the reference tracks
        // only u_t = w_t / W_t, which stays in range.
        let mut a = WeightedState::new(vec![0.0], 1e-8).unwrap();
        let mut b = a.clone();
        let mut reference = AdamState::new(vec![0.0], 1e-8).unwrap();
        let mut w = Scaled::ONE;
        let mut u = 1.0f64;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..3000 {
            let g = [rng.random_range(-1.0..1.0)];
            w = w.mul_f64(1.5);
            u = 1.0 / (1.0 / (1.5 * u) + 1.0);
            a.step_scaled(&g, w, 0.01, 0.5, None).unwrap();
            b.step_scaled(&g, w.mul_pow2(-7), 0.01, 0.5, None).unwrap();
            let tr = Triple {
                alpha: 0.01,
                beta: 0.5,
                theta: 1.0 - u,
            };
            reference.step_with(&g, tr, None).unwrap();
        }
        assert!(a.cumulative_weight().to_f64().is_infinite());
        assert!(a.scale_exp > 0);
        assert_relative_eq!(a.x[0], reference.x[0], max_relative = 1e-9);
        let (va, vb) = (a.second_moment()[0], b.second_moment()[0]);
        assert_relative_eq!(va, vb, max_relative = 1e-12);
    }

    #[test]
    fn constant_theta_long_run_matches_theta_form() {
        let sched = presets::constant_theta_adam(0.001, 0.5, 0.999, 0.9).unwrap();
        let mut adam = AdamState::new(vec![0.5], 1e-8).unwrap();
        let mut wst = WeightedState::new(vec![0.5], 1e-8).unwrap();
        let mut weights = ThetaToWeights::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..800_000 {
            let g = [rng.random_range(-1.0..1.0)];
            let tr = adam.step(&g, &sched, None).unwrap();
            let (w, _) = weights.next(tr.theta);
            wst.step_scaled(&g, w, tr.alpha, tr.beta, None).unwrap();
        }
        assert!(wst.cumulative_weight().ln() > 700.0);
        assert_relative_eq!(wst.second_moment()[0], adam.v[0], max_relative = 1e-9);
        assert!((wst.x[0] - adam.x[0]).abs() <= 1e-9 * (1.0 + adam.x[0].abs()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn matches_theta_form(d in 1usize..=16, seed in any::<u64>(),
                              r in 0.0f64..1.0, s in 0.0f64..0.9, beta in 0.0f64..0.95) {
            let sched = presets::interpolated_family(0.5, s, r, 0.99, beta).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x1: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut adam = AdamState::new(x1.clone(), 1e-8).unwrap();
            let mut wst = WeightedState::new(x1, 1e-8).unwrap();
            let mut weights = ThetaToWeights::new();
            for _ in 0..1000 {
                let g: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
                let tr = adam.step(&g, &sched, None).unwrap();
                let (w, _) = weights.next(tr.theta);
                wst.step_scaled(&g, w, tr.alpha, tr.beta, None).unwrap();
                for k in 0..d {
                    prop_assert!((adam.x[k] - wst.x[k]).abs() <= 1e-9 * (1.0 + adam.x[k].abs()));
                }
            }
        }
    }
}
