use super::{check_eps, check_gradient, descend, BoxConstraint, OptimError};
use crate::schedule::{ParameterSchedule, Triple};

/// AMSGrad: Generic Adam whose denominator uses the running maximum `v_hat`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmsgradState {
    pub t: u64,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub v_hat: Vec<f64>,
}

impl AmsgradState {
    pub fn new(x1: Vec<f64>, eps: f64) -> Result<Self, OptimError> {
        check_eps(eps)?;
        let d = x1.len();
        Ok(AmsgradState {
            t: 0,
            x: x1,
            m: vec![0.0; d],
            v: vec![eps; d],
            v_hat: vec![eps; d],
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

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
            self.v_hat[k] = self.v_hat[k].max(self.v[k]);
            self.m[k] = beta * self.m[k] + (1.0 - beta) * gk;
            self.x[k] = descend(self.x[k], alpha, self.m[k], self.v_hat[k]);
        }
        if let Some(c) = constraint {
            c.project(&mut self.x);
        }
        self.t += 1;
        Ok(())
    }
}

pub fn step_amsgrad(
    state: &AmsgradState,
    g: &[f64],
    sched: &ParameterSchedule,
    constraint: Option<&BoxConstraint>,
) -> Result<AmsgradState, OptimError> {
    let mut next = state.clone();
    next.step(g, sched, constraint)?;
    Ok(next)
}
