use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

use super::HarnessError;

pub const CSV_HEADER: &str = "t,x0,avg_regret,loss,grad_norm,min_grad_sq,lemma_margin";

const MARGIN_TOLERANCE: f64 = -1e-12;

/// One recorded step. Columns that do not apply to the problem are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: u64,
    pub x0: f64,
    pub avg_regret: Option<f64>,
    pub loss: Option<f64>,
    pub grad_norm: Option<f64>,
    pub min_grad_sq: Option<f64>,
    pub lemma_margin: Option<f64>,
}

/// Header metadata (`# key = value` lines) plus the recorded rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub header: Vec<(String, String)>,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecord {
    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// `(t, column)` pairs where the column is present.
    pub fn series(&self, column: &str) -> Option<Vec<(f64, f64)>> {
        let pick: fn(&TrajectoryRow) -> Option<f64> = match column {
            "x0" => |r| Some(r.x0),
            "avg_regret" => |r| r.avg_regret,
            "loss" => |r| r.loss,
            "grad_norm" => |r| r.grad_norm,
            "min_grad_sq" => |r| r.min_grad_sq,
            "lemma_margin" => |r| r.lemma_margin,
            _ => return None,
        };
        Some(
            self.rows
                .iter()
                .filter_map(|r| pick(r).map(|v| (r.t as f64, v)))
                .collect(),
        )
    }

    pub fn row_at(&self, t: u64) -> Option<&TrajectoryRow> {
        self.rows
            .binary_search_by_key(&t, |r| r.t)
            .ok()
            .map(|i| &self.rows[i])
    }
}

/// 17 significant digits in scientific notation.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn field(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

pub fn write_csv<W: Write>(record: &TrajectoryRecord, mut out: W) -> std::io::Result<()> {
    for (k, v) in &record.header {
        writeln!(out, "# {k} = {v}")?;
    }
    writeln!(out, "{CSV_HEADER}")?;
    for r in &record.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.t,
            format_number(r.x0),
            field(r.avg_regret),
            field(r.loss),
            field(r.grad_norm),
            field(r.min_grad_sq),
            field(r.lemma_margin)
        )?;
    }
    out.flush()
}

/// Writes the record to `path`; the file is only created once the record has
/// been rendered.
pub fn export_csv(record: &TrajectoryRecord, path: &Path) -> Result<(), HarnessError> {
    let mut buf = Vec::new();
    write_csv(record, &mut buf).map_err(HarnessError::io(path))?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    std::fs::write(path, buf).map_err(HarnessError::io(path))
}

#[derive(Debug, Error, PartialEq)]
pub enum SchemaError {
    #[error("missing header line `{CSV_HEADER}`")]
    MissingHeader,
    #[error("line {line}: expected header `{CSV_HEADER}`, found `{found}`")]
    WrongHeader { line: usize, found: String },
    #[error("line {line}: expected 7 fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: column {column} value `{value}` is not a number")]
    BadNumber {
        line: usize,
        column: &'static str,
        value: String,
    },
    #[error("line {line}: column {column} must not be empty")]
    Required { line: usize, column: &'static str },
    #[error("line {line}: t = {t} does not increase")]
    NotIncreasing { line: usize, t: u64 },
    #[error("line {line}: lemma margin {margin:e} below tolerance")]
    NegativeMargin { line: usize, margin: f64 },
    #[error("line {line}: malformed metadata `{text}`")]
    BadMetadata { line: usize, text: String },
    #[error("read failed: {0}")]
    Read(String),
}

const COLUMNS: [&str; 7] = [
    "t",
    "x0",
    "avg_regret",
    "loss",
    "grad_norm",
    "min_grad_sq",
    "lemma_margin",
];

fn number(line: usize, column: &'static str, text: &str) -> Result<Option<f64>, SchemaError> {
    if text.is_empty() {
        return Ok(None);
    }
    text.parse::<f64>()
        .map(Some)
        .map_err(|_| SchemaError::BadNumber {
            line,
            column,
            value: text.into(),
        })
}

/// Parses and validates a trajectory CSV.
pub fn parse_csv<R: BufRead>(input: R) -> Result<TrajectoryRecord, SchemaError> {
    let mut record = TrajectoryRecord::default();
    let mut in_body = false;
    let mut last_t: Option<u64> = None;
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| SchemaError::Read(e.to_string()))?;
        if !in_body {
            if let Some(meta) = line.strip_prefix('#') {
                let (k, v) = meta.split_once('=').ok_or(SchemaError::BadMetadata {
                    line: lineno,
                    text: line.clone(),
                })?;
                record
                    .header
                    .push((k.trim().to_string(), v.trim().to_string()));
                continue;
            }
            if line != CSV_HEADER {
                return Err(SchemaError::WrongHeader {
                    line: lineno,
                    found: line,
                });
            }
            in_body = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != COLUMNS.len() {
            return Err(SchemaError::FieldCount {
                line: lineno,
                found: fields.len(),
            });
        }
        let t: u64 = fields[0].parse().map_err(|_| SchemaError::BadNumber {
            line: lineno,
            column: "t",
            value: fields[0].into(),
        })?;
        if last_t.is_some_and(|prev| t <= prev) {
            return Err(SchemaError::NotIncreasing { line: lineno, t });
        }
        last_t = Some(t);
        let mut vals = [None; 7];
        for (c, text) in fields.iter().enumerate().skip(1) {
            vals[c] = number(lineno, COLUMNS[c], text)?;
        }
        let x0 = vals[1].ok_or(SchemaError::Required {
            line: lineno,
            column: "x0",
        })?;
        if let Some(m) = vals[6] {
            if m < MARGIN_TOLERANCE {
                return Err(SchemaError::NegativeMargin {
                    line: lineno,
                    margin: m,
                });
            }
        }
        record.rows.push(TrajectoryRow {
            t,
            x0,
            avg_regret: vals[2],
            loss: vals[3],
            grad_norm: vals[4],
            min_grad_sq: vals[5],
            lemma_margin: vals[6],
        });
    }
    if !in_body {
        return Err(SchemaError::MissingHeader);
    }
    Ok(record)
}

/// Checks a CSV text against the schema.
pub fn validate_csv(text: &str) -> Result<(), SchemaError> {
    parse_csv(text.as_bytes()).map(|_| ())
}
