//! Report rows, their CSV round-trip, and markdown rendering.
//!
//! CSV is the machine-readable artifact: floats use Rust's shortest
//! round-trip `Display` form, so `parse(render(report)) == report` holds
//! bit-for-bit (NaN included). Markdown is the human-readable artifact and
//! bolds the larger of the two mapped-overlap columns per row.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use mnno_core::{LossKind, ProbeMapping, ProbeRow, SimilarityMeasure};

use crate::config::{Direction, ModelKind};
use crate::error::{runtime, validation, CliResult};

/// Rendered report flavor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = crate::error::CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(validation(format!(
                "unknown report format `{other}` (expected csv or markdown)"
            ))),
        }
    }
}

/// Whether a report row's training pipeline completed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    Failed,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowStatus::Ok => write!(f, "ok"),
            RowStatus::Failed => write!(f, "failed"),
        }
    }
}

impl FromStr for RowStatus {
    type Err = crate::error::CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "ok" => Ok(RowStatus::Ok),
            "failed" => Ok(RowStatus::Failed),
            other => Err(validation(format!("unknown row status `{other}`"))),
        }
    }
}

/// One row of the mapping-experiment report: a direction × model × loss
/// combination with its mean overlap metrics across replicates.
#[derive(Clone, Debug)]
pub struct Exp1Row {
    pub dataset: String,
    pub direction: Direction,
    pub model: ModelKind,
    pub loss: LossKind,
    pub measure: SimilarityMeasure,
    pub k: usize,
    /// Mean test mNNO(X, f(X)): overlap between input space and mapped space.
    pub mnno_x_fx: f64,
    /// Mean test mNNO(Y, f(X)): overlap between target space and mapped space.
    pub mnno_y_fx: f64,
    /// Mean test mNNO(X, Y): baseline overlap between the raw spaces.
    pub mnno_xy: f64,
    /// Bonferroni-adjusted two-sided Wilcoxon p comparing the two mapped
    /// overlap columns across replicates; NaN when not computable.
    pub p_value: f64,
    /// True when the adjusted p is below the configured threshold.
    pub significant: bool,
    pub status: RowStatus,
}

fn f64_eq(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a == b
}

impl PartialEq for Exp1Row {
    fn eq(&self, other: &Self) -> bool {
        self.dataset == other.dataset
            && self.direction == other.direction
            && self.model == other.model
            && self.loss == other.loss
            && self.measure == other.measure
            && self.k == other.k
            && f64_eq(self.mnno_x_fx, other.mnno_x_fx)
            && f64_eq(self.mnno_y_fx, other.mnno_y_fx)
            && f64_eq(self.mnno_xy, other.mnno_xy)
            && f64_eq(self.p_value, other.p_value)
            && self.significant == other.significant
            && self.status == other.status
    }
}

/// The full mapping-experiment report.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Exp1Report {
    pub rows: Vec<Exp1Row>,
}

pub const EXP1_CSV_HEADER: &str =
    "dataset,direction,model,loss,measure,k,mnno_x_fx,mnno_y_fx,mnno_xy,p_value,significant,status";

impl Exp1Report {
    pub fn to_csv(&self) -> CliResult<String> {
        if self.rows.is_empty() {
            return Err(validation("cannot render an empty report"));
        }
        let mut out = String::from(EXP1_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.dataset,
                r.direction,
                r.model,
                r.loss,
                r.measure,
                r.k,
                r.mnno_x_fx,
                r.mnno_y_fx,
                r.mnno_xy,
                r.p_value,
                r.significant,
                r.status,
            ));
        }
        Ok(out)
    }

    pub fn from_csv(text: &str) -> CliResult<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(header) if header == EXP1_CSV_HEADER => {}
            _ => return Err(validation("report CSV is missing the expected header")),
        }
        let mut rows = Vec::new();
        for (idx, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 12 {
                return Err(validation(format!(
                    "report CSV line {}: expected 12 fields, got {}",
                    idx + 2,
                    fields.len()
                )));
            }
            let num = |i: usize| -> CliResult<f64> {
                fields[i].parse().map_err(|_| {
                    validation(format!(
                        "report CSV line {}: bad number `{}`",
                        idx + 2,
                        fields[i]
                    ))
                })
            };
            rows.push(Exp1Row {
                dataset: fields[0].to_string(),
                direction: fields[1].parse()?,
                model: fields[2].parse()?,
                loss: fields[3]
                    .parse()
                    .map_err(|e| validation(format!("report CSV line {}: {e}", idx + 2)))?,
                measure: fields[4]
                    .parse()
                    .map_err(|e| validation(format!("report CSV line {}: {e}", idx + 2)))?,
                k: fields[5].parse().map_err(|_| {
                    validation(format!("report CSV line {}: bad k `{}`", idx + 2, fields[5]))
                })?,
                mnno_x_fx: num(6)?,
                mnno_y_fx: num(7)?,
                mnno_xy: num(8)?,
                p_value: num(9)?,
                significant: fields[10].parse().map_err(|_| {
                    validation(format!(
                        "report CSV line {}: bad flag `{}`",
                        idx + 2,
                        fields[10]
                    ))
                })?,
                status: fields[11].parse()?,
            });
        }
        Ok(Exp1Report { rows })
    }

    pub fn to_markdown(&self) -> CliResult<String> {
        if self.rows.is_empty() {
            return Err(validation("cannot render an empty report"));
        }
        let mut out = String::from(
            "| dataset | direction | model | loss | measure | K | mNNO(X,f(X)) | mNNO(Y,f(X)) | mNNO(X,Y) | p | sig | status |\n\
             |---|---|---|---|---|---|---|---|---|---|---|---|\n",
        );
        for r in &self.rows {
            let (x_cell, y_cell) = bold_larger(r.mnno_x_fx, r.mnno_y_fx);
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                r.dataset,
                r.direction,
                r.model,
                r.loss,
                r.measure,
                r.k,
                x_cell,
                y_cell,
                fmt_metric(r.mnno_xy),
                fmt_p(r.p_value),
                if r.significant { "*" } else { "" },
                match r.status {
                    RowStatus::Ok => "ok",
                    RowStatus::Failed => "FAILED",
                },
            ));
        }
        Ok(out)
    }
}

fn fmt_metric(v: f64) -> String {
    if v.is_nan() {
        "—".into()
    } else {
        format!("{v:.4}")
    }
}

fn fmt_p(v: f64) -> String {
    if v.is_nan() {
        "—".into()
    } else {
        format!("{v:.3e}")
    }
}

/// Formats the two mapped-overlap cells, bolding the strictly larger one.
fn bold_larger(x: f64, y: f64) -> (String, String) {
    let (xs, ys) = (fmt_metric(x), fmt_metric(y));
    if x.is_nan() || y.is_nan() || x == y {
        (xs, ys)
    } else if x > y {
        (format!("**{xs}**"), ys)
    } else {
        (xs, format!("**{ys}**"))
    }
}

pub const PROBE_CSV_HEADER: &str = "benchmark,measure,mapping,mean_rho,p_vs_raw,coverage";

/// Long-format CSV of the untrained-probe report.
pub fn probe_to_csv(rows: &[ProbeRow]) -> CliResult<String> {
    if rows.is_empty() {
        return Err(validation("cannot render an empty report"));
    }
    let mut out = String::from(PROBE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let p = r.p_vs_raw.map(|p| p.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.benchmark, r.measure, r.mapping, r.mean_rho, p, r.coverage
        ));
    }
    Ok(out)
}

/// Markdown pivot of the probe report: one row per mapping, one column per
/// benchmark × measure, mirroring a similarity-benchmark results table.
pub fn probe_to_markdown(rows: &[ProbeRow]) -> CliResult<String> {
    if rows.is_empty() {
        return Err(validation("cannot render an empty report"));
    }
    let mut columns: Vec<(String, SimilarityMeasure)> = Vec::new();
    for r in rows {
        let col = (r.benchmark.clone(), r.measure);
        if !columns.contains(&col) {
            columns.push(col);
        }
    }
    let mut out = String::from("| mapping |");
    for (bench, measure) in &columns {
        out.push_str(&format!(" {bench} ({measure}) |"));
    }
    out.push('\n');
    out.push_str("|---|");
    out.push_str(&"---|".repeat(columns.len()));
    out.push('\n');
    for mapping in [ProbeMapping::Raw, ProbeMapping::Lin, ProbeMapping::Nn] {
        out.push_str(&format!("| {mapping} |"));
        for (bench, measure) in &columns {
            let cell = rows
                .iter()
                .find(|r| r.mapping == mapping && &r.benchmark == bench && r.measure == *measure);
            match cell {
                None => out.push_str(" — |"),
                Some(r) => match r.p_vs_raw {
                    None => out.push_str(&format!(" {:.3} |", r.mean_rho)),
                    Some(p) => out.push_str(&format!(" {:.3} (p={:.2e}) |", r.mean_rho, p)),
                },
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes `content` to `path`, classifying failures as runtime errors.
pub fn write_artifact(path: &Path, content: &str) -> CliResult<()> {
    fs::write(path, content)
        .map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}
