use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, OptimizerKind, ProblemKind};
use super::record::{TrajectoryRecord, TrajectoryRow};
use super::HarnessError;
use crate::numeric::CompensatedSum;
use crate::optimizer::{lemma_margin, AdamState, AmsgradState, BoxConstraint, WeightedState};
use crate::problems::{
    make_blobs, BlobSpec, CounterexampleProblem, Dataset, GradientOracle, LogisticOracle,
    MlpOracle, QuadraticOracle, RegretLedger,
};
use crate::schedule::{
    analysis_constants, bias_corrected_adam_schedule, power_law_schedule, presets,
    theta_from_weights, BaseRate, BetaRule, ParameterSchedule, PowerLawFamily, ThetaToWeights,
    Triple, WeightSequence,
};

/// End-of-run figures that do not fit the per-row schema.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub steps: u64,
    pub seed: u64,
    pub final_x: Vec<f64>,
    /// Mean of `x0` over all iterates.
    pub mean_x0: Option<f64>,
    /// Largest `x0` over the last 10% of steps.
    pub max_x0_last_tenth: Option<f64>,
    pub final_avg_regret: Option<f64>,
    pub final_loss: Option<f64>,
    pub initial_loss: Option<f64>,
    pub min_lemma_margin: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub record: TrajectoryRecord,
    pub summary: RunSummary,
}

fn read_schedule_table(path: &Path) -> Result<Vec<Triple>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        match vals {
            Ok(v) if v.len() == 3 => rows.push(Triple {
                alpha: v[0],
                beta: v[1],
                theta: v[2],
            }),
            Err(_) if rows.is_empty() && i == 0 => continue,
            _ => {
                return Err(HarnessError::InvalidValue {
                    key: "schedule_table".into(),
                    value: path.display().to_string(),
                    reason: format!("line {}: expected alpha,beta,theta", i + 1),
                })
            }
        }
    }
    Ok(rows)
}

/// The schedule named by `cfg.schedule`, built for `horizon` steps.
pub fn build_schedule(
    cfg: &ExperimentConfig,
    horizon: u64,
) -> Result<ParameterSchedule, HarnessError> {
    let horizon = horizon.max(1);
    let beta_rule = if cfg.beta_decay == 1.0 {
        BetaRule::Constant(cfg.beta)
    } else {
        BetaRule::Geometric {
            beta: cfg.beta,
            decay: cfg.beta_decay,
        }
    };
    let sched = match cfg.schedule.as_str() {
        "family" => {
            let numerator = cfg.numerator();
            let fam = match cfg.cutoff {
                Some(k) => PowerLawFamily::new(cfg.eta, cfg.s, numerator, cfg.r, k, cfg.beta)?,
                None => {
                    PowerLawFamily::with_min_cutoff(cfg.eta, cfg.s, numerator, cfg.r, cfg.beta)?
                }
            };
            power_law_schedule(fam)?.with_beta(beta_rule)
        }
        "table" => {
            let path = cfg
                .schedule_table
                .as_deref()
                .ok_or_else(|| HarnessError::InvalidValue {
                    key: "schedule_table".into(),
                    value: String::new(),
                    reason: "schedule = table needs a schedule_table path".into(),
                })?;
            ParameterSchedule::tabulated(read_schedule_table(path)?)?
                .with_label(format!("table({})", path.display()))
        }
        "weights" => {
            let w: Vec<f64> = (1..=horizon)
                .map(|t| (t as f64).powf(cfg.weight_exp))
                .collect();
            let base = BaseRate::PowerDecay {
                eta: cfg.eta,
                s: cfg.s,
            };
            theta_from_weights(&WeightSequence::from_weights(&w)?, base, beta_rule)?.with_label(
                format!(
                    "weights(t^{}, eta={}, s={})",
                    cfg.weight_exp, cfg.eta, cfg.s
                ),
            )
        }
        "bias-corrected" => bias_corrected_adam_schedule(
            cfg.beta,
            cfg.theta,
            BaseRate::PowerDecay {
                eta: cfg.eta,
                s: cfg.s,
            },
        )?,
        "adaema" => presets::ada_ema(cfg.eta, cfg.beta)?,
        "adamnc" => presets::adam_nc(cfg.eta, cfg.beta, cfg.beta_decay)?,
        "rmsprop" => presets::rmsprop(cfg.eta, cfg.theta_num.unwrap_or(1.0))?,
        "adam" => presets::constant_theta_adam(cfg.eta, cfg.s, cfg.theta, cfg.beta)?,
        "nosadam-hh" => presets::nosadam_hh(cfg.eta, cfg.r, cfg.beta, horizon)?,
        "weighted-poly" => presets::polynomial_weights(cfg.eta, cfg.weight_exp, cfg.beta, horizon)?,
        "beta-one" => presets::beta_one(cfg.eta),
        other => {
            return Err(HarnessError::InvalidValue {
                key: "schedule".into(),
                value: other.into(),
                reason: "unknown schedule".into(),
            })
        }
    };
    Ok(sched.with_horizon_hint(horizon))
}

fn load_dataset(cfg: &ExperimentConfig) -> Result<Arc<Dataset>, HarnessError> {
    let ds = if cfg.data == "blobs" {
        make_blobs(BlobSpec::default())?
    } else {
        Dataset::load_csv(&cfg.data)?
    };
    Ok(Arc::new(ds))
}

fn counterexample(cfg: &ExperimentConfig) -> CounterexampleProblem {
    CounterexampleProblem {
        rare_slope: cfg.rare_slope,
        common_slope: cfg.common_slope,
        rare_prob: cfg.rare_prob,
        ..CounterexampleProblem::default()
    }
}

pub fn build_oracle(cfg: &ExperimentConfig) -> Result<Box<dyn GradientOracle>, HarnessError> {
    Ok(match cfg.problem {
        ProblemKind::Counterexample => Box::new(counterexample(cfg)),
        ProblemKind::Quadratic => {
            let diag: Vec<f64> = (1..=cfg.dim).map(|k| k as f64).collect();
            Box::new(QuadraticOracle::diagonal(&diag, cfg.noise)?)
        }
        ProblemKind::Logistic => Box::new(LogisticOracle::new(load_dataset(cfg)?, cfg.minibatch)?),
        ProblemKind::Mlp => Box::new(MlpOracle::new(
            load_dataset(cfg)?,
            cfg.hidden,
            cfg.minibatch,
        )?),
    })
}

enum Engine {
    Adam(AdamState),
    Weighted(WeightedState, ThetaToWeights),
    Ams(AmsgradState),
}

impl Engine {
    fn new(kind: OptimizerKind, x1: Vec<f64>, eps: f64) -> Result<Self, HarnessError> {
        let err = |source| HarnessError::Step { step: 0, source };
        Ok(match kind {
            OptimizerKind::GenericAdam => Engine::Adam(AdamState::new(x1, eps).map_err(err)?),
            OptimizerKind::WeightedAdaema => Engine::Weighted(
                WeightedState::new(x1, eps).map_err(err)?,
                ThetaToWeights::new(),
            ),
            OptimizerKind::Amsgrad => Engine::Ams(AmsgradState::new(x1, eps).map_err(err)?),
        })
    }

    fn x(&self) -> &[f64] {
        match self {
            Engine::Adam(s) => &s.x,
            Engine::Weighted(s, _) => &s.x,
            Engine::Ams(s) => &s.x,
        }
    }

    fn step(
        &mut self,
        t: u64,
        g: &[f64],
        sched: &ParameterSchedule,
        bx: Option<&BoxConstraint>,
    ) -> Result<Triple, HarnessError> {
        let wrap = |source| HarnessError::Step { step: t, source };
        match self {
            Engine::Adam(s) => s.step(g, sched, bx).map_err(wrap),
            Engine::Ams(s) => s.step(g, sched, bx).map_err(wrap),
            Engine::Weighted(s, weights) => {
                let tr = sched.eval(t).map_err(|e| wrap(e.into()))?;
                let (w, _) = weights.next(tr.theta);
                s.step_scaled(g, w, tr.alpha, tr.beta, bx).map_err(wrap)?;
                Ok(tr)
            }
        }
    }

    /// The smallest per-component margin and its index.
    fn margin(&self, c1: f64, gamma: f64, one_minus_theta: f64) -> (f64, usize) {
        let per = |m: &[f64], v: &[f64]| {
            let mut best = (f64::INFINITY, 0);
            for k in 0..m.len() {
                let value = lemma_margin(&m[k..=k], &v[k..=k], c1, gamma, one_minus_theta);
                if value < best.0 {
                    best = (value, k);
                }
            }
            best
        };
        match self {
            Engine::Adam(s) => per(&s.m, &s.v),
            Engine::Ams(s) => per(&s.m, &s.v),
            Engine::Weighted(s, _) => per(&s.m, &s.second_moment()),
        }
    }
}

fn initial_point(
    cfg: &ExperimentConfig,
    dim: usize,
    mlp: Option<&MlpOracle>,
) -> Result<Vec<f64>, HarnessError> {
    if let Some(x1) = &cfg.x1 {
        return match x1.len() {
            1 => Ok(vec![x1[0]; dim]),
            n if n == dim => Ok(x1.clone()),
            n => Err(HarnessError::InvalidValue {
                key: "x1".into(),
                value: format!("{n} values"),
                reason: format!("problem has dimension {dim}"),
            }),
        };
    }
    Ok(match (cfg.problem, mlp) {
        (ProblemKind::Counterexample, _) => vec![0.0],
        (ProblemKind::Quadratic, _) => vec![1.0; dim],
        (ProblemKind::Mlp, Some(mlp)) => {
            let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            init_rng.set_stream(1);
            mlp.init_params(init_rng.next_u64(), cfg.init_scale)
        }
        _ => vec![0.0; dim],
    })
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Runs one configured experiment.
///
/// The gradient stream uses ChaCha8 seeded with `cfg.seed` on stream 0; the
/// MLP initializer uses stream 1.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    let started = Instant::now();
    let dataset = if cfg.problem.is_data() {
        Some(load_dataset(cfg)?)
    } else {
        None
    };
    let steps = match &dataset {
        Some(ds) if cfg.epochs > 0 => cfg.epochs * (ds.len() as u64).div_ceil(cfg.minibatch as u64),
        _ => cfg.steps,
    };
    let sched = build_schedule(cfg, steps)?;
    sched.validate(steps)?;
    let (oracle, mlp): (Box<dyn GradientOracle>, Option<MlpOracle>) = match (cfg.problem, dataset) {
        (ProblemKind::Mlp, Some(ds)) => {
            let mlp = MlpOracle::new(ds, cfg.hidden, cfg.minibatch)?;
            (Box::new(mlp.clone()), Some(mlp))
        }
        (ProblemKind::Logistic, Some(ds)) => {
            (Box::new(LogisticOracle::new(ds, cfg.minibatch)?), None)
        }
        _ => (build_oracle(cfg)?, None),
    };
    let dim = oracle.dim();
    let x1 = initial_point(cfg, dim, mlp.as_ref())?;

    let online = oracle.is_online();
    let problem = counterexample(cfg);
    let bx = online.then(|| problem.feasible_set());
    let mut ledger = RegretLedger::for_problem(&problem);

    let lemma = if steps > 0 {
        analysis_constants(&sched, steps, cfg.theta_prime).ok()
    } else {
        None
    };

    let mut header = cfg.to_pairs();
    header.push(("schedule_label".into(), sched.label().to_string()));
    header.push(("dim".into(), dim.to_string()));
    header.push(("resolved_steps".into(), steps.to_string()));
    header.push(("x1_resolved".into(), format!("{:?}", x1)));
    match &lemma {
        Some(ac) => {
            header.push(("lemma_theta_prime".into(), ac.theta_prime.to_string()));
            header.push(("lemma_gamma".into(), ac.gamma.to_string()));
            header.push(("lemma_c1".into(), ac.c1.to_string()));
        }
        None => header.push(("lemma".into(), "unavailable".into())),
    }

    let mut engine = Engine::new(cfg.optimizer, x1.clone(), cfg.eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0);

    let initial_loss = if online { None } else { oracle.exact_loss(&x1) };
    let mut rows = Vec::new();
    let mut x0_sum = CompensatedSum::new();
    let tenth_start = steps - steps / 10;
    let mut max_tail = None::<f64>;
    let mut min_margin = None::<f64>;
    let mut min_grad_sq = None::<f64>;

    for t in 1..=steps {
        let played = engine.x().to_vec();
        let sample = oracle
            .sample(&played, &mut rng)
            .map_err(|source| HarnessError::Oracle { step: t, source })?;
        if let Some(c) = sample.slope {
            ledger.record(played[0], c);
        }
        engine.step(t, &sample.grad, &sched, bx.as_ref())?;

        let margin = match &lemma {
            Some(ac) if cfg.invariant_checks || t % cfg.record_stride == 0 || t == steps => {
                let omt = sched.one_minus_theta(t)?;
                let (value, component) = engine.margin(ac.c1, ac.gamma, omt);
                if cfg.invariant_checks && value < -1e-12 {
                    return Err(HarnessError::Invariant {
                        step: t,
                        component,
                        margin: value,
                    });
                }
                min_margin = Some(min_margin.map_or(value, |m: f64| m.min(value)));
                Some(value)
            }
            _ => None,
        };

        let x0 = engine.x()[0];
        x0_sum.add(x0);
        if t > tenth_start {
            max_tail = Some(max_tail.map_or(x0, |m| m.max(x0)));
        }

        if t % cfg.record_stride == 0 || t == steps {
            let (loss, grad_sq) = if online {
                (None, None)
            } else {
                let loss = oracle.exact_loss(engine.x());
                let gsq = oracle.full_gradient(engine.x()).map(|g| norm_sq(&g));
                if let Some(v) = gsq {
                    min_grad_sq = Some(min_grad_sq.map_or(v, |m| m.min(v)));
                }
                (loss, min_grad_sq)
            };
            rows.push(TrajectoryRow {
                t,
                x0,
                avg_regret: ledger.average_regret(),
                loss,
                grad_norm: Some(norm_sq(&sample.grad).sqrt()),
                min_grad_sq: grad_sq,
                lemma_margin: margin,
            });
        }
    }

    let final_loss = rows.last().and_then(|r| r.loss);
    let summary = RunSummary {
        steps,
        seed: cfg.seed,
        final_x: engine.x().to_vec(),
        mean_x0: (steps > 0).then(|| x0_sum.value() / steps as f64),
        max_x0_last_tenth: max_tail,
        final_avg_regret: ledger.average_regret(),
        final_loss,
        initial_loss,
        min_lemma_margin: min_margin,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok(RunOutput {
        record: TrajectoryRecord { header, rows },
        summary,
    })
}
