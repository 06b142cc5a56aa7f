//! report.json, solution.csv and stages.csv.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use bisolve_core::solver::{SolveOutcome, SolveReport};
use bisolve_core::{RadialProfile, TruncatedOperator};
use serde::Serialize;

use crate::config::Config;
use crate::error::CliError;

pub const SOLUTION_HEADER: &str = "r,u,du,flux";

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && v.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Nodes, values, slopes and fluxes `a_θ(|u′|²)u′`. The slope at node `i` is that of cell
/// `i`; the last node repeats the last cell's.
pub fn solution_csv(u: &RadialProfile, trunc: &TruncatedOperator) -> String {
    let du = u.derivative();
    let mut out = String::from(SOLUTION_HEADER);
    out.push('\n');
    for (i, (r, v)) in u.grid.nodes().iter().zip(&u.values).enumerate() {
        let d = du[i.min(du.len() - 1)];
        let _ = writeln!(out, "{},{},{},{}", fmt_num(*r), fmt_num(*v), fmt_num(d), fmt_num(trunc.flux(d)));
    }
    out
}

#[derive(Serialize)]
struct ReportDocument<'a> {
    #[serde(flatten)]
    report: &'a SolveReport,
    config: &'a Config,
    /// Seconds since the Unix epoch; the only field that differs between identical runs.
    timestamp: u64,
}

pub fn report_json(report: &SolveReport, config: &Config, timestamp: u64) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(&ReportDocument { report, config, timestamp })?;
    text.push('\n');
    Ok(text)
}

pub fn stages_csv(report: &SolveReport) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in &report.stages {
        w.serialize(s)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Paths written by [`write_report`].
#[derive(Debug, Clone)]
pub struct WrittenFiles {
    pub report: PathBuf,
    pub stages: PathBuf,
    pub solution: Option<PathBuf>,
}

/// Writes report.json, stages.csv and, when a profile exists, solution.csv into `dir`.
pub fn write_report(outcome: &SolveOutcome, config: &Config, dir: &Path) -> Result<WrittenFiles, CliError> {
    if outcome.report.stages.is_empty() {
        return Err(CliError::EmptyStages);
    }
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let write = |name: &str, text: &str| -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        fs::write(&path, text).map_err(CliError::io(&path))?;
        Ok(path)
    };
    let report = write("report.json", &report_json(&outcome.report, config, timestamp)?)?;
    let stages = write("stages.csv", &stages_csv(&outcome.report)?)?;
    let solution = match (&outcome.profile, &outcome.trunc) {
        (Some(u), Some(trunc)) => Some(write("solution.csv", &solution_csv(u, trunc))?),
        _ => None,
    };
    Ok(WrittenFiles { report, stages, solution })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, -0.5, 1e-300, 3.0e-7, 1.0 / 3.0, 40.0, 123456789.123, 2e20, f64::MIN_POSITIVE] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(1e-9), "1e-9");
    }
}
