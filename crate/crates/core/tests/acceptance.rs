use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use generic_adam::harness::{run_experiment, ExperimentConfig, RunOutput};
use generic_adam::problems::{
    finite_diff_check, make_blobs, BlobSpec, GradientOracle, LogisticOracle, MlpOracle,
    QuadraticOracle,
};
use generic_adam::schedule::{
    bound_at, classify_exponents, classify_rate, compute_constants_with, presets, ConstantOptions,
    ThetaToWeights,
};
use generic_adam::{AdamState, ProblemConstants, RateClass, WeightedState};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EQUIVALENCE_TOL: f64 = 1e-9;
const EQUIVALENCE_BUDGET_S: f64 = 1.0;
const CONVERGED_X: f64 = -0.9;
const REGRET_SHRINK: f64 = 0.2;
const DIVERGED_X: f64 = -0.5;
const DIVERGED_REGRET_FACTOR: f64 = 5.0;
const MARGIN_TOL: f64 = -1e-12;
const SANDWICH_TOL: f64 = 1e-10;
const FD_TOL: f64 = 1e-5;
const LOSS_FRACTION: f64 = 0.5;
const HORIZON: u64 = 1_000_000;
const SEED: u64 = 7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn counterexample_run(pairs: &[(&str, String)]) -> RunOutput {
    let mut cfg = ExperimentConfig::default();
    let seed = SEED.to_string();
    let steps = HORIZON.to_string();
    let base = [
        ("problem", "counterexample"),
        ("optimizer", "generic_adam"),
        ("schedule", "family"),
        ("eta", "0.5"),
        ("s", "0.5"),
        ("theta_bar", "0.99"),
        ("beta", "0.9"),
        ("steps", steps.as_str()),
        ("seed", seed.as_str()),
        ("record_stride", "1000"),
        ("invariant_checks", "true"),
    ];
    cfg.apply_overrides(base).unwrap();
    cfg.apply_overrides(pairs.iter().map(|(k, v)| (*k, v.as_str())))
        .unwrap();
    run_experiment(&cfg).expect("counterexample run")
}

fn regret_at(run: &RunOutput, t: u64) -> f64 {
    run.record
        .row_at(t)
        .and_then(|r| r.avg_regret)
        .unwrap_or(f64::NAN)
}

fn equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let s = rng.random_range(0.3..0.9);
        let r = rng.random_range(0.05..=1.0f64).min(2.0 * s);
        let sched = presets::interpolated_family(
            rng.random_range(0.01..1.0),
            s,
            r,
            rng.random_range(0.5..0.999),
            rng.random_range(0.0..0.95),
        )
        .unwrap();
        let x1: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut adam = AdamState::new(x1.clone(), 1e-8).unwrap();
        let mut weighted = WeightedState::new(x1, 1e-8).unwrap();
        let mut weights = ThetaToWeights::new();
        for t in 1..=10_000u64 {
            let g: Vec<f64> = (0..8).map(|_| rng.random_range(-3.0..3.0)).collect();
            let tr = sched.eval(t).unwrap();
            adam.step_with(&g, tr, None).unwrap();
            let (w, _) = weights.next(tr.theta);
            weighted
                .step_scaled(&g, w, tr.alpha, tr.beta, None)
                .unwrap();
            for (a, b) in adam.x.iter().zip(&weighted.x) {
                worst = worst.max((a - b).abs() / (1.0 + a.abs()));
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    outcome(
        worst <= EQUIVALENCE_TOL && elapsed < EQUIVALENCE_BUDGET_S,
        format!("max scaled deviation {worst:.3e}, {elapsed:.3} s"),
    )
}

fn convergent(runs: &[(f64, RunOutput)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (r, run) in runs {
        let x = run.summary.final_x[0];
        let (early, late) = (regret_at(run, 10_000), regret_at(run, HORIZON));
        let ok = x <= CONVERGED_X && late <= REGRET_SHRINK * early;
        pass &= ok;
        parts.push(format!(
            "r={r}: x={x:.4} R(1e4)={early:.3e} R(1e6)={late:.3e}"
        ));
    }
    let finals: Vec<f64> = runs.iter().map(|(_, o)| regret_at(o, HORIZON)).collect();
    let ordered = finals.windows(2).all(|w| w[1] <= w[0]);
    pass &= ordered;
    parts.push(format!("non-increasing in r: {ordered}"));
    outcome(pass, parts.join("; "))
}

fn divergent(r0: &RunOutput, r1: &RunOutput) -> Outcome {
    let tail = r0.summary.max_x0_last_tenth.unwrap_or(f64::NAN);
    let (a, b) = (regret_at(r0, HORIZON), regret_at(r1, HORIZON));
    outcome(
        tail >= DIVERGED_X && a >= DIVERGED_REGRET_FACTOR * b,
        format!("max x over last 10% = {tail:.4}, R0/R1 = {:.3}", a / b),
    )
}

fn fixed_numerator(run: &RunOutput) -> Outcome {
    let rs: Vec<f64> = [10_000, 100_000, HORIZON]
        .iter()
        .map(|&t| regret_at(run, t))
        .collect();
    outcome(
        rs[0] > rs[1] && rs[1] > rs[2],
        format!("R = {:.3e}, {:.3e}, {:.3e}", rs[0], rs[1], rs[2]),
    )
}

fn lemma(runs: &[&RunOutput]) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut missing = 0;
    let mut rows = 0;
    for run in runs {
        for row in &run.record.rows {
            rows += 1;
            match row.lemma_margin {
                Some(m) => worst = worst.min(m),
                None => missing += 1,
            }
        }
        if let Some(m) = run.summary.min_lemma_margin {
            worst = worst.min(m);
        }
    }
    outcome(
        missing == 0 && worst >= MARGIN_TOL,
        format!("{rows} rows, worst margin {worst:.3e}, missing {missing}"),
    )
}

fn expected_class(i: i64, j: i64, den: i64) -> RateClass {
    // r = i/den, s = j/den
    if i <= 0 || i > 2 * j || j >= den {
        return RateClass::NotConvergent;
    }
    let (r, s) = (i as f64 / den as f64, j as f64 / den as f64);
    match (i + 2 * j).cmp(&(2 * den)) {
        std::cmp::Ordering::Less => RateClass::PolyHalfR { exponent: -r / 2.0 },
        std::cmp::Ordering::Equal => RateClass::LogOverPower {
            exponent: -(1.0 - s),
        },
        std::cmp::Ordering::Greater => RateClass::Poly {
            exponent: -(1.0 - s),
        },
    }
}

fn classifier() -> Outcome {
    let den = 24;
    let mut points = 0;
    let mut mismatches = Vec::new();
    for i in 0..40 {
        for j in 0..25 {
            points += 1;
            let got = classify_exponents(i as f64 / den as f64, j as f64 / den as f64);
            let want = expected_class(i, j, den);
            if got != want {
                mismatches.push(format!("(r={i}/{den}, s={j}/{den}) {got} != {want}"));
            }
        }
    }
    let log_half = RateClass::LogOverPower { exponent: -0.5 };
    let named = [
        ("adaema", presets::ada_ema(0.5, 0.9).unwrap(), log_half),
        (
            "adamnc",
            presets::adam_nc(0.5, 0.9, 0.99).unwrap(),
            log_half,
        ),
        ("rmsprop", presets::rmsprop(0.5, 1.0).unwrap(), log_half),
        (
            "r=0",
            presets::constant_theta_adam(0.5, 0.5, 0.99, 0.9).unwrap(),
            RateClass::NotConvergent,
        ),
        (
            "interpolated r=0.5",
            presets::interpolated_family(0.5, 0.5, 0.5, 0.99, 0.9).unwrap(),
            RateClass::PolyHalfR { exponent: -0.25 },
        ),
    ];
    for (name, sched, want) in named {
        points += 1;
        let got = sched.family().map(classify_rate);
        if got != Some(want) {
            mismatches.push(format!("{name}: {got:?} != {want}"));
        }
    }
    let pass = mismatches.is_empty();
    outcome(
        pass,
        if pass {
            format!("{points} points agree")
        } else {
            mismatches.join("; ")
        },
    )
}

fn sandwich() -> Outcome {
    let pc = ProblemConstants {
        g: 4.0,
        lipschitz: 2.0,
        eps: 1e-8,
        dim: 3,
        f_gap: 1.5,
    };
    let delta = 0.1;
    let eta = 0.5;
    let grid: Vec<u64> = (0..=18)
        .map(|k| 10f64.powf(k as f64 / 3.0).round() as u64)
        .collect();
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for theta in [0.9, 0.99, 0.999] {
        for s in [0.0, 0.5] {
            let sched = presets::constant_theta_adam(eta, s, theta, 0.5).unwrap();
            let bc = compute_constants_with(
                &sched,
                pc,
                HORIZON,
                ConstantOptions {
                    theta_prime: None,
                    c0: Some(1.0),
                },
            )
            .unwrap();
            for &t in &grid {
                let b = bound_at(&bc, &sched, t, delta).unwrap();
                let head = bc.c / (delta * eta * (t as f64).powf(1.0 - s));
                let lower = head + bc.c_prime * (1.0 - theta).sqrt() / delta;
                let upper = head + bc.c_prime * (1.0 - theta).sqrt() / (delta * (1.0 - s));
                worst = worst.max((lower - b) / b).max((b - upper) / b);
                checked += 1;
            }
        }
    }
    outcome(
        worst <= SANDWICH_TOL,
        format!("{checked} grid points, worst relative excess {worst:.3e}"),
    )
}

fn worst_fd(oracle: &dyn GradientOracle, seed: u64, spread: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..100)
        .map(|_| {
            let x: Vec<f64> = (0..oracle.dim())
                .map(|_| rng.random_range(-spread..spread))
                .collect();
            finite_diff_check(oracle, &x, 1e-6).unwrap()
        })
        .fold(0.0, f64::max)
}

fn gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let b = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-1.0..1.0));
    let quad = QuadraticOracle::new(b.transpose() * &b, 0.1).unwrap();
    let data = Arc::new(
        make_blobs(BlobSpec {
            n: 300,
            dim: 5,
            ..BlobSpec::default()
        })
        .unwrap(),
    );
    let logistic = LogisticOracle::new(data.clone(), 16).unwrap();
    let mlp = MlpOracle::new(data, 6, 16).unwrap();
    let errs = [
        ("quadratic", worst_fd(&quad, 1, 2.0)),
        ("logistic", worst_fd(&logistic, 2, 2.0)),
        ("mlp", worst_fd(&mlp, 3, 1.0)),
    ];
    outcome(
        errs.iter().all(|(_, e)| *e <= FD_TOL),
        errs.iter()
            .map(|(n, e)| format!("{n} {e:.2e}"))
            .collect::<Vec<_>>()
            .join(", "),
    )
}

fn mlp_training() -> Outcome {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_overrides([
        ("problem", "mlp"),
        ("schedule", "adaema"),
        ("eta", "0.01"),
        ("beta", "0.9"),
        ("epochs", "50"),
        ("seed", "7"),
        ("record_stride", "100"),
    ])
    .unwrap();
    let out = run_experiment(&cfg).unwrap();
    let (a, b) = (
        out.summary.initial_loss.unwrap(),
        out.summary.final_loss.unwrap(),
    );
    outcome(
        b <= LOSS_FRACTION * a,
        format!("loss {a:.4} -> {b:.4} over {} steps", out.summary.steps),
    )
}

fn checker() -> Outcome {
    let expect = [
        ("adaema", 0),
        ("adamnc", 0),
        ("nosadam-hh", 0),
        ("weighted-poly", 0),
        ("adam", 1),
        ("beta-one", 1),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, want) in expect {
        let code = Command::new(env!("CARGO_BIN_EXE_gadam"))
            .args(["check", name])
            .output()
            .expect("spawn gadam")
            .status
            .code();
        pass &= code == Some(want);
        parts.push(format!(
            "{name}={}",
            code.map_or("signal".into(), |c| c.to_string())
        ));
    }
    outcome(pass, parts.join(" "))
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "weighted form matches generic form", equivalence()));

    let family: Vec<(f64, RunOutput)> = [1.0, 0.75, 0.5]
        .iter()
        .map(|&r| (r, counterexample_run(&[("r", r.to_string())])))
        .collect();
    let r0 = counterexample_run(&[("r", "0".into())]);
    let fixed = counterexample_run(&[("r", "0.25".into()), ("theta_num", "0.01".into())]);

    results.push((
        2,
        "counterexample converges for r in {1, 0.75, 0.5}",
        convergent(&family),
    ));
    results.push((
        3,
        "counterexample diverges for r = 0",
        divergent(&r0, &family[0].1),
    ));
    results.push((
        4,
        "fixed numerator r = 0.25 recovers",
        fixed_numerator(&fixed),
    ));
    let mut all: Vec<&RunOutput> = family.iter().map(|(_, o)| o).collect();
    all.push(&r0);
    all.push(&fixed);
    results.push((5, "lemma margin stays non-negative", lemma(&all)));
    results.push((6, "rate classifier table", classifier()));
    results.push((7, "constant-theta bound sandwich", sandwich()));
    results.push((8, "finite-difference gradient checks", gradients()));
    results.push((9, "blob MLP training halves the loss", mlp_training()));
    results.push((10, "check exit codes on presets", checker()));

    let mut failed = 0;
    for (id, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2}: {name} ({})", o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
