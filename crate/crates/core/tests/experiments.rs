use generic_adam::harness::{parse_csv, run_experiment, sweep, write_csv, ExperimentConfig};

fn cfg(pairs: &[(&str, &str)]) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.apply_overrides(pairs.iter().copied()).unwrap();
    c
}

fn render(c: &ExperimentConfig) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&run_experiment(c).unwrap().record, &mut buf).unwrap();
    buf
}

#[test]
fn adaema_preset_reaches_the_left_end() {
    let out = run_experiment(&cfg(&[
        ("schedule", "adaema"),
        ("steps", "100000"),
        ("seed", "7"),
    ]))
    .unwrap();
    assert!(out.summary.final_x[0] < -0.9, "{:?}", out.summary.final_x);
}

#[test]
fn constant_theta_with_zero_steps_is_header_only() {
    let c = cfg(&[("schedule", "adam"), ("steps", "0")]);
    let bytes = render(&c);
    let rec = parse_csv(bytes.as_slice()).unwrap();
    assert!(rec.rows.is_empty());
    assert_eq!(rec.header_value("schedule"), Some("adam"));
}

#[test]
fn every_optimizer_and_problem_gives_schema_valid_output() {
    for problem in ["counterexample", "quadratic", "logistic", "mlp"] {
        for optimizer in ["generic_adam", "weighted_adaema", "amsgrad"] {
            let c = cfg(&[
                ("problem", problem),
                ("optimizer", optimizer),
                ("steps", "400"),
                ("record_stride", "50"),
                ("eta", "0.05"),
            ]);
            let bytes = render(&c);
            let rec = parse_csv(bytes.as_slice())
                .unwrap_or_else(|e| panic!("{problem}/{optimizer}: {e}"));
            assert_eq!(rec.rows.len(), 8, "{problem}/{optimizer}");
        }
    }
}

#[test]
fn single_cell_sweep_equals_a_run() {
    let base = cfg(&[("steps", "5000"), ("record_stride", "250")]);
    let mut alone = base.clone();
    alone.r = 0.25;
    alone.s = 0.4;
    let grid = sweep(&base, &[0.25], &[0.4]).unwrap();
    assert_eq!(
        grid.cells[0].output.record,
        run_experiment(&alone).unwrap().record
    );
}

#[test]
fn sweep_is_independent_of_scheduling() {
    let base = cfg(&[("steps", "3000"), ("record_stride", "300")]);
    let a = sweep(&base, &[0.0, 0.5, 1.0], &[0.5, 0.8]).unwrap();
    let b = sweep(&base, &[0.0, 0.5, 1.0], &[0.5, 0.8]).unwrap();
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert_eq!(x.output.record, y.output.record);
    }
}

#[test]
fn config_echo_round_trips() {
    let c = cfg(&[
        ("r", "0.25"),
        ("theta_num", "0.01"),
        ("x1", "0.5"),
        ("steps", "10"),
    ]);
    let rec = run_experiment(&c).unwrap().record;
    let text: String = c
        .to_pairs()
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect();
    assert_eq!(ExperimentConfig::parse_str(&text).unwrap(), c);
    assert_eq!(rec.header_value("theta_num"), Some("0.01"));
}

#[test]
fn unreachable_theta_prime_drops_the_margin_column() {
    let rec = run_experiment(&cfg(&[
        ("steps", "1000"),
        ("record_stride", "100"),
        ("theta_prime", "0.9999999"),
    ]))
    .unwrap()
    .record;
    assert_eq!(rec.header_value("lemma"), Some("unavailable"));
    assert!(rec.rows.iter().all(|r| r.lemma_margin.is_none()));
    let ok = run_experiment(&cfg(&[("steps", "1000"), ("record_stride", "100")])).unwrap();
    assert!(ok.summary.min_lemma_margin.unwrap() >= -1e-12);
}
