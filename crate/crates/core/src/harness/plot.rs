use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::HarnessError;

/// Panel arrangement of the generated script.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotLayout {
    /// Two rows and three columns: average regret on top, `x0` below. Each
    /// series goes into the column given by its `group` (0, 1 or 2).
    Fig1,
    /// Two side-by-side panels, training loss and the running minimum of the
    /// squared full-gradient norm, every series overlaid.
    Fig2Style,
}

impl std::str::FromStr for PlotLayout {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fig1" => Ok(Self::Fig1),
            "fig2" | "fig2-style" => Ok(Self::Fig2Style),
            other => Err(HarnessError::InvalidValue {
                key: "layout".into(),
                value: other.into(),
                reason: "expected fig1 or fig2".into(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSeries {
    pub path: PathBuf,
    pub label: String,
    pub group: usize,
}

fn py_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\x{:02x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

const PRELUDE: &str = r##"import csv
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(path, column):
    ts, ys = [], []
    with open(path, newline="") as fh:
        rows = csv.DictReader(line for line in fh if not line.startswith("#"))
        for row in rows:
            if row[column]:
                ts.append(int(row["t"]))
                ys.append(float(row[column]))
    return ts, ys

"##;

const FIG1_BODY: &str = r##"
fig, axes = plt.subplots(2, 3, figsize=(15, 8), sharex="col")
for path, label, group in SERIES:
    top, bottom = axes[0][group], axes[1][group]
    ts, regret = load(path, "avg_regret")
    top.plot(ts, regret, label=label)
    ts, xs = load(path, "x0")
    bottom.plot(ts, xs, label=label)
for col in range(3):
    axes[0][col].set_yscale("log")
    axes[0][col].set_ylabel("average regret")
    axes[1][col].set_ylabel("x")
    axes[1][col].set_xlabel("iteration")
    axes[1][col].set_ylim(-1.05, 1.05)
    for ax in (axes[0][col], axes[1][col]):
        ax.set_xscale("log")
        if ax.has_data():
            ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig(OUTPUT, dpi=150)
"##;

const FIG2_BODY: &str = r##"
fig, axes = plt.subplots(1, 2, figsize=(12, 4.5))
for path, label, _group in SERIES:
    ts, loss = load(path, "loss")
    axes[0].plot(ts, loss, label=label)
    ts, gsq = load(path, "min_grad_sq")
    axes[1].plot(ts, gsq, label=label)
axes[0].set_ylabel("training loss")
axes[1].set_ylabel("min squared gradient norm")
for ax in axes:
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.legend(fontsize="small")
fig.tight_layout()
fig.savefig(OUTPUT, dpi=150)
"##;

/// Renders a matplotlib script that draws the given trajectory CSVs into
/// `image`.
pub fn render_plot_script(
    series: &[PlotSeries],
    layout: PlotLayout,
    image: &Path,
) -> Result<String, HarnessError> {
    if series.is_empty() {
        return Err(HarnessError::NothingToExport);
    }
    if layout == PlotLayout::Fig1 {
        if let Some(bad) = series.iter().find(|s| s.group > 2) {
            return Err(HarnessError::InvalidValue {
                key: "group".into(),
                value: bad.group.to_string(),
                reason: "fig1 has three columns (0, 1, 2)".into(),
            });
        }
    }
    let mut out = String::from("#!/usr/bin/env python3\n");
    out.push_str(PRELUDE);
    out.push_str("SERIES = [\n");
    for s in series {
        let _ = writeln!(
            out,
            "    ({}, {}, {}),",
            py_str(&s.path.to_string_lossy()),
            py_str(&s.label),
            s.group
        );
    }
    out.push_str("]\n");
    let _ = writeln!(
        out,
        "OUTPUT = sys.argv[1] if len(sys.argv) > 1 else {}",
        py_str(&image.to_string_lossy())
    );
    out.push_str(match layout {
        PlotLayout::Fig1 => FIG1_BODY,
        PlotLayout::Fig2Style => FIG2_BODY,
    });
    Ok(out)
}

/// Writes the script from [`render_plot_script`] to `out_path`; the image
/// defaults to the same path with a `.png` extension.
pub fn emit_plot_script(
    series: &[PlotSeries],
    layout: PlotLayout,
    out_path: &Path,
) -> Result<(), HarnessError> {
    let script = render_plot_script(series, layout, &out_path.with_extension("png"))?;
    if let Some(dir) = out_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    std::fs::write(out_path, script).map_err(HarnessError::io(out_path))
}
