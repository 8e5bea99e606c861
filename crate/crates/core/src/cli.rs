//! Command-line front end of the `gadam` binary.
//!
//! Every configuration key is also a `--key value` flag on `check`, `run` and
//! `sweep`; flags are applied after the config file.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgMatches, Args, Command, FromArgMatches, Parser, Subcommand};

use crate::harness::{
    build_schedule, emit_plot_script, export_csv, fit_rate, parse_csv, resolve_output,
    run_experiment, sweep, ExperimentConfig, HarnessError, PlotLayout, PlotSeries, RunOutput,
    CONFIG_KEYS, OUTPUT_DIR_ENV,
};
use crate::problems::{make_blobs, BlobSpec};
use crate::schedule::{check_sufficient_condition, presets, DEFAULT_HORIZON};

/// Config-key flags. With `SWEEP` set, `r` and `s` are left to the sweep's own
/// list-valued flags.
#[derive(Clone, Debug, Default)]
pub struct Overrides<const SWEEP: bool> {
    pub pairs: Vec<(String, String)>,
}

impl<const SWEEP: bool> Overrides<SWEEP> {
    fn keys() -> impl Iterator<Item = &'static (&'static str, &'static str)> {
        CONFIG_KEYS
            .iter()
            .filter(|(k, _)| !(SWEEP && (*k == "r" || *k == "s")))
    }

    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), HarnessError> {
        cfg.apply_overrides(self.pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }
}

impl<const SWEEP: bool> FromArgMatches for Overrides<SWEEP> {
    fn from_arg_matches(matches: &ArgMatches) -> Result<Self, clap::Error> {
        let mut out = Self::default();
        out.update_from_arg_matches(matches)?;
        Ok(out)
    }

    fn update_from_arg_matches(&mut self, matches: &ArgMatches) -> Result<(), clap::Error> {
        for (key, _) in Self::keys() {
            if let Some(v) = matches.get_one::<String>(key) {
                self.pairs.push((key.to_string(), v.clone()));
            }
        }
        Ok(())
    }
}

impl<const SWEEP: bool> Args for Overrides<SWEEP> {
    fn augment_args(mut cmd: Command) -> Command {
        for (key, help) in Self::keys() {
            cmd = cmd.arg(
                Arg::new(*key)
                    .long(*key)
                    .value_name("VALUE")
                    .help(*help)
                    .allow_hyphen_values(true)
                    .help_heading("Config overrides"),
            );
        }
        cmd
    }

    fn augment_args_for_update(cmd: Command) -> Command {
        Self::augment_args(cmd)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gadam",
    version,
    about = "Generic Adam schedules, convergence checks and counterexample experiments",
    after_help = format!("Relative output paths are resolved against ${OUTPUT_DIR_ENV} when it is set.")
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Commands,
}

#[derive(Debug, Subcommand)]
pub enum Commands {
    /// Check the sufficient condition on a schedule; exit 0 if it holds, 1 if not.
    Check {
        /// A preset name, a schedule kind understood by the config `schedule`
        /// key, or a config file path.
        #[arg(id = "target", value_name = "SCHEDULE")]
        schedule: String,
        /// Number of steps to inspect.
        #[arg(long)]
        horizon: Option<u64>,
        #[command(flatten)]
        overrides: Overrides<false>,
    },
    /// Run one experiment and write its trajectory CSV.
    Run {
        /// Config file; the defaults are used when omitted.
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides<false>,
    },
    /// Run the Cartesian (r, s) grid of a base config.
    Sweep {
        config: Option<PathBuf>,
        /// Comma-separated r values.
        #[arg(
            long = "r",
            value_delimiter = ',',
            required = true,
            allow_hyphen_values = true
        )]
        r_values: Vec<f64>,
        /// Comma-separated s values.
        #[arg(
            long = "s",
            value_delimiter = ',',
            required = true,
            allow_hyphen_values = true
        )]
        s_values: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides<true>,
    },
    /// Fit the log-log decay exponent of one column of a trajectory CSV.
    Fit {
        csv: PathBuf,
        #[arg(long, default_value = "avg_regret")]
        column: String,
        /// Trailing fraction of the rows used by the fit.
        #[arg(long, default_value_t = 0.5)]
        window: f64,
    },
    /// Write plot scripts, schedule tables or the synthetic dataset.
    #[command(subcommand)]
    Export(ExportCommand),
}

#[derive(Debug, Subcommand)]
pub enum ExportCommand {
    /// Emit a matplotlib script over trajectory CSVs.
    Plot {
        /// `path[:label[:group]]`; group selects the fig1 column (0-2).
        #[arg(required = true)]
        series: Vec<String>,
        #[arg(long, default_value = "fig1")]
        layout: PlotLayout,
        #[arg(long, default_value = "plot.py")]
        out: PathBuf,
    },
    /// Tabulate a schedule as `alpha,beta,theta` rows, usable as `schedule_table`.
    Schedule {
        #[arg(id = "target", value_name = "SCHEDULE")]
        schedule: String,
        /// Number of rows to tabulate.
        #[arg(long, default_value_t = 1000)]
        rows: u64,
        #[arg(long, default_value = "schedule.csv")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides<false>,
    },
    /// Write the synthetic two-class blob dataset.
    Blobs {
        #[arg(long, default_value = "blobs.csv")]
        out: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// The config behind a `check` or `export schedule` argument.
fn schedule_config(
    spec: &str,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig, HarnessError> {
    let path = Path::new(spec);
    let mut cfg = if path.is_file() {
        ExperimentConfig::load(path)?
    } else {
        let mut cfg = ExperimentConfig::default();
        cfg.set("schedule", spec)?;
        cfg
    };
    cfg.apply_overrides(overrides.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    Ok(cfg)
}

fn resolve_schedule(
    spec: &str,
    horizon: Option<u64>,
    overrides: &[(String, String)],
) -> Result<(crate::schedule::ParameterSchedule, u64), HarnessError> {
    if overrides.is_empty() && !Path::new(spec).is_file() {
        let horizon = horizon.unwrap_or(DEFAULT_HORIZON);
        if let Some(s) = presets::by_name(spec, horizon)? {
            return Ok((s, horizon));
        }
    }
    let cfg = schedule_config(spec, overrides)?;
    let horizon = horizon.unwrap_or(if Path::new(spec).is_file() {
        cfg.steps
    } else {
        DEFAULT_HORIZON
    });
    Ok((build_schedule(&cfg, horizon)?, horizon))
}

fn load_config<const S: bool>(
    path: Option<&Path>,
    overrides: &Overrides<S>,
) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into())
}

fn print_summary(out: &mut dyn Write, run: &RunOutput, path: &Path) -> std::io::Result<()> {
    let s = &run.summary;
    writeln!(
        out,
        "wrote {} ({} rows)",
        path.display(),
        run.record.rows.len()
    )?;
    writeln!(out, "steps            : {}", s.steps)?;
    writeln!(out, "seed             : {}", s.seed)?;
    writeln!(
        out,
        "final x0         : {}",
        opt(s.final_x.first().copied())
    )?;
    writeln!(out, "mean x0          : {}", opt(s.mean_x0))?;
    writeln!(out, "max x0 last 10%  : {}", opt(s.max_x0_last_tenth))?;
    writeln!(out, "final avg regret : {}", opt(s.final_avg_regret))?;
    writeln!(out, "initial loss     : {}", opt(s.initial_loss))?;
    writeln!(out, "final loss       : {}", opt(s.final_loss))?;
    writeln!(out, "min lemma margin : {}", opt(s.min_lemma_margin))?;
    writeln!(out, "wall time        : {:.3} s", s.wall_time_s)
}

fn cell_name(r: f64, s: f64) -> String {
    format!("r{r}_s{s}.csv")
}

fn parse_series(spec: &str) -> PlotSeries {
    let mut parts = spec.splitn(3, ':');
    let path = PathBuf::from(parts.next().unwrap_or_default());
    let label = parts
        .next()
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        });
    let group = parts.next().and_then(|g| g.parse().ok()).unwrap_or(0);
    PlotSeries { path, label, group }
}

/// Executes a parsed command. `Ok(false)` means the command ran but reported
/// failure (only `check` does this).
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<bool, HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    match cli.command {
        Commands::Check {
            schedule,
            horizon,
            overrides,
        } => {
            let (sched, horizon) = resolve_schedule(&schedule, horizon, &overrides.pairs)?;
            let report = check_sufficient_condition(&sched, horizon)?;
            writeln!(out, "schedule: {}", sched.label()).map_err(io)?;
            writeln!(out, "{report}").map_err(io)?;
            Ok(report.overall)
        }
        Commands::Run { config, overrides } => {
            let cfg = load_config(config.as_deref(), &overrides)?;
            let run = run_experiment(&cfg)?;
            let path = resolve_output(cfg.output.as_deref().unwrap_or(Path::new("trajectory.csv")));
            export_csv(&run.record, &path)?;
            print_summary(out, &run, &path).map_err(io)?;
            Ok(true)
        }
        Commands::Sweep {
            config,
            r_values,
            s_values,
            overrides,
        } => {
            let cfg = load_config(config.as_deref(), &overrides)?;
            let result = sweep(&cfg, &r_values, &s_values)?;
            let dir = resolve_output(cfg.output.as_deref().unwrap_or(Path::new("sweep")));
            for cell in &result.cells {
                export_csv(&cell.output.record, &dir.join(cell_name(cell.r, cell.s)))?;
            }
            let table = result.to_string();
            let summary = dir.join("summary.csv");
            std::fs::write(&summary, &table).map_err(HarnessError::io(&summary))?;
            write!(out, "{table}").map_err(io)?;
            writeln!(
                out,
                "wrote {} cells to {}",
                result.cells.len(),
                dir.display()
            )
            .map_err(io)?;
            Ok(true)
        }
        Commands::Fit {
            csv,
            column,
            window,
        } => {
            let file = std::fs::File::open(&csv).map_err(HarnessError::io(&csv))?;
            let record = parse_csv(std::io::BufReader::new(file))?;
            let series = record
                .series(&column)
                .ok_or_else(|| HarnessError::InvalidValue {
                    key: "column".into(),
                    value: column.clone(),
                    reason: "not a trajectory column".into(),
                })?;
            let slope = fit_rate(&series, window)?;
            writeln!(
                out,
                "{column}: fitted exponent {slope:.6} over the last {window} of {} points",
                series.len()
            )
            .map_err(io)?;
            Ok(true)
        }
        Commands::Export(cmd) => {
            match cmd {
                ExportCommand::Plot {
                    series,
                    layout,
                    out: target,
                } => {
                    let series: Vec<PlotSeries> = series.iter().map(|s| parse_series(s)).collect();
                    let target = resolve_output(&target);
                    emit_plot_script(&series, layout, &target)?;
                    writeln!(out, "wrote {}", target.display()).map_err(io)?;
                }
                ExportCommand::Schedule {
                    schedule,
                    rows: steps,
                    out: target,
                    overrides,
                } => {
                    let (sched, _) = resolve_schedule(&schedule, Some(steps), &overrides.pairs)?;
                    let mut text = String::from("alpha,beta,theta\n");
                    for t in 1..=steps {
                        let tr = sched.eval(t)?;
                        text.push_str(&format!("{:?},{:?},{:?}\n", tr.alpha, tr.beta, tr.theta));
                    }
                    let target = resolve_output(&target);
                    if let Some(dir) = target.parent().filter(|d| !d.as_os_str().is_empty()) {
                        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
                    }
                    std::fs::write(&target, text).map_err(HarnessError::io(&target))?;
                    writeln!(out, "wrote {} ({steps} rows)", target.display()).map_err(io)?;
                }
                ExportCommand::Blobs {
                    out: target,
                    n,
                    dim,
                    seed,
                } => {
                    let mut spec = BlobSpec::default();
                    spec.n = n.unwrap_or(spec.n);
                    spec.dim = dim.unwrap_or(spec.dim);
                    spec.seed = seed.unwrap_or(spec.seed);
                    let target = resolve_output(&target);
                    make_blobs(spec)?.save_csv(&target)?;
                    writeln!(out, "wrote {}", target.display()).map_err(io)?;
                }
            }
            Ok(true)
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 when `check` finds the condition violated, 2 on errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}
