//! One-parameter sweeps over `θ`, the shooting height `ξ`, or the exponent `p`.

use std::str::FromStr;

use bisolve_core::solver::{prepare, screen_problem, shoot, solve_full, stage_truncation, SolveStatus, SolverOptions};
use bisolve_core::{BisolveError, Nonlinearity, OperatorFamily, RadialGrid};
use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

use crate::config::{Config, NonlinearityConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Theta,
    Xi,
    P,
}

impl FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "theta" => Ok(SweepParam::Theta),
            "xi" => Ok(SweepParam::Xi),
            "p" => Ok(SweepParam::P),
            other => Err(format!("unknown sweep parameter `{other}` (expected theta, xi or p)")),
        }
    }
}

/// `a:b:n`, `n` equally spaced values from `a` to `b` inclusive.
pub fn parse_range(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("range `{text}` is not of the form a:b:n"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

#[derive(Debug, Serialize)]
struct XiRow {
    xi: f64,
    outcome: String,
    event_radius: Option<f64>,
    floor_value: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PRow {
    p: f64,
    status: String,
    theta_bar: Option<f64>,
    q_bar: Option<f64>,
    u0: Option<f64>,
    m_theta: Option<f64>,
    sup_du: Option<f64>,
    nehari: Option<f64>,
    pohozaev: Option<f64>,
    el: Option<f64>,
    energy_id: Option<f64>,
    flux_bound_max: Option<f64>,
    stages: usize,
}

impl PRow {
    fn empty(p: f64, status: String) -> Self {
        PRow {
            p,
            status,
            theta_bar: None,
            q_bar: None,
            u0: None,
            m_theta: None,
            sup_du: None,
            nehari: None,
            pohozaev: None,
            el: None,
            energy_id: None,
            flux_bound_max: None,
            stages: 0,
        }
    }
}

fn csv_table<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn status_label(s: SolveStatus) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

/// Runs the sweep and returns the CSV table. `theta` is the truncation used by the `ξ`
/// sweep (default `θ₁`).
pub fn run_sweep(cfg: &Config, param: SweepParam, values: &[f64], theta: Option<f64>) -> Result<String, CliError> {
    let fam = cfg.operator()?;
    let nl = cfg.nonlinearity()?;
    let grid = cfg.grid()?;
    let opts = cfg.solver_options();
    match param {
        SweepParam::Theta => sweep_theta(&fam, &nl, grid, &opts, values),
        SweepParam::Xi => sweep_xi(&fam, &nl, &grid, &opts, values, theta.unwrap_or(opts.theta1)),
        SweepParam::P => sweep_p(cfg, &fam, grid, &opts, values),
    }
}

fn sweep_theta(fam: &OperatorFamily, nl: &Nonlinearity, grid: Arc<RadialGrid>, opts: &SolverOptions, values: &[f64]) -> Result<String, CliError> {
    if let Some(t) = values.iter().find(|t| !(**t > 0.0 && **t <= opts.theta1)) {
        return Err(CliError::Usage(format!("theta = {t} outside (0, theta1 = {}]", opts.theta1)));
    }
    let problem = prepare(fam, nl, grid, opts)?;
    let rows = values.par_iter().map(|t| problem.run_stage(*t).map(|s| s.record)).collect::<Result<Vec<_>, BisolveError>>()?;
    csv_table(&rows)
}

fn sweep_xi(fam: &OperatorFamily, nl: &Nonlinearity, grid: &RadialGrid, opts: &SolverOptions, values: &[f64], theta: f64) -> Result<String, CliError> {
    let (regime, _) = screen_problem(fam, nl, opts)?;
    let (trunc, _, _) = stage_truncation(fam, nl, regime, opts, theta)?;
    let r_max = grid.r_max();
    let rows = values
        .par_iter()
        .map(|xi| {
            shoot(&trunc, nl, *xi, r_max).map(|rec| XiRow {
                xi: *xi,
                outcome: serde_json::to_value(rec.outcome).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                event_radius: Some(rec.event_radius),
                floor_value: rec.floor_value,
            })
        })
        .collect::<Result<Vec<_>, BisolveError>>()?;
    csv_table(&rows)
}

fn sweep_p(cfg: &Config, fam: &OperatorFamily, grid: Arc<RadialGrid>, opts: &SolverOptions, values: &[f64]) -> Result<String, CliError> {
    if matches!(cfg.nonlinearity, NonlinearityConfig::Tabulated { .. }) {
        return Err(CliError::key("nonlinearity.kind", "a p sweep needs the power or power_minus_mass nonlinearity"));
    }
    let rows: Vec<PRow> = values
        .par_iter()
        .map(|p| {
            let mut c = cfg.clone();
            match &mut c.nonlinearity {
                NonlinearityConfig::Power { p: q, .. } | NonlinearityConfig::PowerMinusMass { p: q, .. } => *q = *p,
                NonlinearityConfig::Tabulated { .. } => unreachable!(),
            }
            if let Err(e) = c.validate() {
                return PRow::empty(*p, format!("rejected: {e}"));
            }
            let nl = match c.nonlinearity() {
                Ok(nl) => nl,
                Err(e) => return PRow::empty(*p, format!("rejected: {e}")),
            };
            match solve_full(fam, &nl, grid.clone(), opts) {
                Err(e) => PRow::empty(*p, format!("rejected: {e}")),
                Ok(out) => {
                    let r = &out.report;
                    PRow {
                        p: *p,
                        status: status_label(r.status),
                        theta_bar: r.theta_bar,
                        q_bar: r.q_bar,
                        u0: out.profile.as_ref().map(|u| u.values[0]),
                        m_theta: r.energies.map(|e| e.m_theta),
                        sup_du: r.sup_du,
                        nehari: r.residuals.map(|x| x.nehari),
                        pohozaev: r.residuals.map(|x| x.pohozaev),
                        el: r.residuals.map(|x| x.el),
                        energy_id: r.residuals.map(|x| x.energy_id),
                        flux_bound_max: Some(r.flux_bound_max),
                        stages: r.stages.len(),
                    }
                }
            }
        })
        .collect();
    csv_table(&rows)
}
