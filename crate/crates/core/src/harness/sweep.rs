use std::fmt;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::record::format_number;
use super::run::{run_experiment, RunOutput};
use super::HarnessError;

#[derive(Clone, Debug)]
pub struct SweepCell {
    pub r: f64,
    pub s: f64,
    pub output: RunOutput,
}

/// Results in grid order: `r` varies slowest.
#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub cells: Vec<SweepCell>,
}

impl SweepOutput {
    pub fn cell(&self, r: f64, s: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.r == r && c.s == s)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

impl fmt::Display for SweepOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "r,s,final_avg_regret,final_x0,max_x0_last_tenth,final_loss,wall_time_s"
        )?;
        for c in &self.cells {
            let sm = &c.output.summary;
            writeln!(
                f,
                "{},{},{},{},{},{},{:.3}",
                c.r,
                c.s,
                opt(sm.final_avg_regret),
                opt(sm.final_x.first().copied()),
                opt(sm.max_x0_last_tenth),
                opt(sm.final_loss),
                sm.wall_time_s
            )?;
        }
        Ok(())
    }
}

/// Runs `base` once per `(r, s)` pair, in parallel.
///
/// Each cell keeps the base seed, so a cell is identical to the stand-alone
/// run with the same overrides.
pub fn sweep(base: &ExperimentConfig, rs: &[f64], ss: &[f64]) -> Result<SweepOutput, HarnessError> {
    if rs.is_empty() || ss.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }
    let grid: Vec<(f64, f64)> = rs
        .iter()
        .flat_map(|&r| ss.iter().map(move |&s| (r, s)))
        .collect();
    let configs = grid
        .iter()
        .map(|&(r, s)| {
            let mut cfg = base.clone();
            cfg.r = r;
            cfg.s = s;
            cfg.validate().map(|_| cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let cells = configs
        .par_iter()
        .zip(grid.par_iter())
        .map(|(cfg, &(r, s))| run_experiment(cfg).map(|output| SweepCell { r, s, output }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepOutput { cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.apply_overrides([("steps", "2000"), ("record_stride", "500")])
            .unwrap();
        c
    }

    #[test]
    fn empty_grids_are_rejected() {
        assert!(matches!(
            sweep(&base(), &[], &[0.5]),
            Err(HarnessError::EmptyGrid)
        ));
        assert!(matches!(
            sweep(&base(), &[1.0], &[]),
            Err(HarnessError::EmptyGrid)
        ));
    }

    #[test]
    fn single_cell_matches_a_plain_run() {
        let mut cfg = base();
        cfg.r = 0.5;
        cfg.s = 0.5;
        let alone = run_experiment(&cfg).unwrap();
        let out = sweep(&base(), &[0.5], &[0.5]).unwrap();
        assert_eq!(out.cells.len(), 1);
        assert_eq!(out.cells[0].output.record, alone.record);
    }

    #[test]
    fn grid_order_is_row_major() {
        let out = sweep(&base(), &[0.0, 1.0], &[0.25, 0.5]).unwrap();
        let keys: Vec<(f64, f64)> = out.cells.iter().map(|c| (c.r, c.s)).collect();
        assert_eq!(keys, vec![(0.0, 0.25), (0.0, 0.5), (1.0, 0.25), (1.0, 0.5)]);
        assert!(out.cell(1.0, 0.5).is_some());
        let table = out.to_string();
        assert_eq!(table.lines().count(), 5);
    }
}
