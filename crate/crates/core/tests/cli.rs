use std::path::Path;
use std::process::{Command, Output};

use generic_adam::harness::{parse_csv, validate_csv, CSV_HEADER, OUTPUT_DIR_ENV};

fn gadam(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gadam"))
        .args(args)
        .env(OUTPUT_DIR_ENV, dir)
        .current_dir(dir)
        .output()
        .expect("spawn gadam")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = gadam(dir.path(), &["check", "adaema", "--horizon", "5000"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = stdout(&ok);
    assert!(text.contains("overall: satisfied"), "{text}");
    for cond in ["cond1", "cond2", "cond3", "cond4"] {
        assert!(text.contains(cond));
    }
    let bad = gadam(dir.path(), &["check", "adam", "--horizon", "5000"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("NOT satisfied"));
    let err = gadam(dir.path(), &["check", "unknown-thing"]);
    assert_eq!(err.status.code(), Some(2));
}

#[test]
fn check_accepts_config_files_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("family.cfg");
    std::fs::write(
        &cfg,
        "# interpolated family\nschedule = family\nr = 0.5\ns = 0.5\nsteps = 4000\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(gadam(dir.path(), &["check", cfg]).status.code(), Some(0));
    assert_eq!(
        gadam(dir.path(), &["check", cfg, "--r", "0"]).status.code(),
        Some(1)
    );
}

#[test]
fn run_writes_a_valid_csv_under_the_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = gadam(
        dir.path(),
        &[
            "run",
            "--steps",
            "20000",
            "--record_stride",
            "1000",
            "--output",
            "runs/a.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("runs/a.csv")).unwrap();
    validate_csv(&text).unwrap();
    assert!(text.lines().any(|l| l == CSV_HEADER));
    let rec = parse_csv(text.as_bytes()).unwrap();
    assert_eq!(rec.rows.len(), 20);
    assert_eq!(rec.header_value("steps"), Some("20000"));
    assert_eq!(rec.header_value("seed"), Some("7"));
    let row = &rec.rows[0];
    assert!(row.avg_regret.is_some() && row.loss.is_none() && row.min_grad_sq.is_none());

    let again = gadam(
        dir.path(),
        &[
            "run",
            "--steps",
            "20000",
            "--record_stride",
            "1000",
            "--output",
            "runs/b.csv",
        ],
    );
    assert!(again.status.success());
    let strip = |name: &str| -> Vec<String> {
        std::fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("# output ="))
            .map(str::to_owned)
            .collect()
    };
    assert_eq!(strip("runs/a.csv"), strip("runs/b.csv"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "steps = 500\nrecord_stride = 100\nseed = 3\noutput = from_file.csv\n",
    )
    .unwrap();
    let out = gadam(dir.path(), &["run", cfg.to_str().unwrap(), "--seed", "4"]);
    assert!(out.status.success());
    let rec = parse_csv(
        std::fs::read_to_string(dir.path().join("from_file.csv"))
            .unwrap()
            .as_bytes(),
    )
    .unwrap();
    assert_eq!(rec.header_value("seed"), Some("4"));
    assert_eq!(rec.rows.len(), 5);
}

#[test]
fn sweep_writes_every_cell_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = gadam(
        dir.path(),
        &[
            "sweep",
            "--r",
            "0,0.5,1",
            "--s",
            "0.5",
            "--steps",
            "3000",
            "--record_stride",
            "500",
            "--output",
            "grid",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for r in ["0", "0.5", "1"] {
        let text = std::fs::read_to_string(dir.path().join(format!("grid/r{r}_s0.5.csv"))).unwrap();
        validate_csv(&text).unwrap();
    }
    let summary = std::fs::read_to_string(dir.path().join("grid/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.starts_with("r,s,final_avg_regret"));
}

#[test]
fn fit_reads_a_recorded_column() {
    let dir = tempfile::tempdir().unwrap();
    assert!(gadam(
        dir.path(),
        &["run", "--steps", "100000", "--output", "fit.csv"]
    )
    .status
    .success());
    let out = gadam(
        dir.path(),
        &[
            "fit",
            "fit.csv",
            "--column",
            "avg_regret",
            "--window",
            "0.5",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let exponent: f64 = text
        .split("fitted exponent ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .and_then(|s| s.parse().ok())
        .unwrap();
    // the regret total is settled, so the average decays like 1/T
    assert!((exponent + 1.0).abs() < 0.05, "{text}");
    assert_eq!(
        gadam(dir.path(), &["fit", "fit.csv", "--column", "loss"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn export_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        gadam(dir.path(), &["run", "--steps", "2000", "--output", "a.csv"])
            .status
            .success()
    );
    let plot = gadam(
        dir.path(),
        &[
            "export",
            "plot",
            "a.csv:r = 1:0",
            "a.csv:again:2",
            "--out",
            "fig.py",
        ],
    );
    assert!(plot.status.success());
    let script = std::fs::read_to_string(dir.path().join("fig.py")).unwrap();
    assert!(script.contains("plt.subplots(2, 3"));

    let table = gadam(
        dir.path(),
        &[
            "export", "schedule", "adaema", "--rows", "50", "--out", "tab.csv",
        ],
    );
    assert!(table.status.success());
    let text = std::fs::read_to_string(dir.path().join("tab.csv")).unwrap();
    assert_eq!(text.lines().count(), 51);
    let replay = gadam(
        dir.path(),
        &[
            "check",
            "table",
            "--schedule_table",
            "tab.csv",
            "--horizon",
            "50",
        ],
    );
    assert!(
        matches!(replay.status.code(), Some(0 | 1)),
        "{}",
        String::from_utf8_lossy(&replay.stderr)
    );

    let blobs = gadam(
        dir.path(),
        &[
            "export", "blobs", "--n", "40", "--dim", "3", "--out", "b.csv",
        ],
    );
    assert!(blobs.status.success());
    let text = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(text.lines().count(), 41);
    let ran = gadam(
        dir.path(),
        &[
            "run",
            "--problem",
            "logistic",
            "--data",
            "b.csv",
            "--epochs",
            "2",
            "--minibatch",
            "8",
            "--record_stride",
            "5",
            "--output",
            "l.csv",
        ],
    );
    assert!(
        ran.status.success(),
        "{}",
        String::from_utf8_lossy(&ran.stderr)
    );
    let rec = parse_csv(
        std::fs::read_to_string(dir.path().join("l.csv"))
            .unwrap()
            .as_bytes(),
    )
    .unwrap();
    assert!(rec
        .rows
        .iter()
        .all(|r| r.loss.is_some() && r.min_grad_sq.is_some() && r.avg_regret.is_none()));
}

#[test]
fn empty_plot_list_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = gadam(dir.path(), &["export", "plot", "--out", "fig.py"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("fig.py").exists());
}
