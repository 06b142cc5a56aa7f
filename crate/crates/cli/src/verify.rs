//! Re-evaluation of a stored profile: rebuilds the grid from the CSV nodes and recomputes
//! every solution-derived report number.

use std::path::Path;
use std::sync::Arc;

use bisolve_core::solver::{
    residuals_ok, screen_problem, shooting_cross_check, solution_fields, stage_truncation, theta_schedule, OracleAgreement, OriginFlux,
    QRule, ResidualSet, SolutionFields, SolverOptions,
};
use bisolve_core::{Nonlinearity, OperatorFamily, RadialGrid, RadialProfile};
use serde::Serialize;

use crate::error::CliError;
use crate::output::SOLUTION_HEADER;

pub const VERIFY_SCHEMA: &str = "bisolve-verify-1";

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    /// "pass", "fail" or "trivial solution".
    pub status: &'static str,
    pub theta: f64,
    pub q_rule: QRule,
    pub gradient_certified: bool,
    pub residuals_within_tolerance: bool,
    #[serde(flatten)]
    pub fields: SolutionFields,
    pub origin_flux: Option<OriginFlux>,
    pub oracle: Option<OracleAgreement>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.status != "fail"
    }
}

/// Nodes and values from a solution CSV with the `r,u,du,flux` header.
pub fn read_profile(path: &Path, n: usize) -> Result<RadialProfile, CliError> {
    let bad = |reason: String| CliError::Profile { path: path.to_path_buf(), reason };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.iter().collect::<Vec<_>>().join(",");
    if header != SOLUTION_HEADER {
        return Err(bad(format!("expected header `{SOLUTION_HEADER}`, found `{header}`")));
    }
    let mut r = Vec::new();
    let mut u = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| bad(format!("row {}: column {} is not a number", line + 2, i + 1)))
        };
        r.push(field(0)?);
        u.push(field(1)?);
    }
    let grid = RadialGrid::from_nodes(n.max(3), r).map_err(|e| bad(e.to_string()))?;
    RadialProfile::new(Arc::new(grid), u).map_err(|e| bad(e.to_string()))
}

/// The `θ` a profile is judged at: `theta` when given, otherwise the first schedule entry
/// whose gradient bound the profile meets, otherwise the last entry.
pub fn judging_theta(u: &RadialProfile, opts: &SolverOptions, theta: Option<f64>) -> f64 {
    if let Some(t) = theta {
        return t;
    }
    let schedule = theta_schedule(opts);
    let sup = u.sup_derivative();
    schedule.iter().copied().find(|t| sup <= 1.0 - t).unwrap_or(*schedule.last().expect("non-empty schedule"))
}

pub fn verify_profile(
    fam: &OperatorFamily,
    nl: &Nonlinearity,
    opts: &SolverOptions,
    u: &RadialProfile,
    theta: Option<f64>,
    cross_check: bool,
) -> Result<VerifyReport, CliError> {
    let (regime, _) = screen_problem(fam, nl, opts)?;
    let theta = judging_theta(u, opts, theta);
    let (trunc, _, q_rule) = stage_truncation(fam, nl, regime, opts, theta)?;
    if u.values.iter().all(|v| *v == 0.0) {
        let zero = ResidualSet { nehari: 0.0, pohozaev: 0.0, el: 0.0, energy_id: 0.0 };
        let mut fields = solution_fields(fam, nl, &trunc, u);
        fields.residuals = zero;
        return Ok(VerifyReport {
            schema: VERIFY_SCHEMA,
            status: "trivial solution",
            theta,
            q_rule,
            gradient_certified: true,
            residuals_within_tolerance: true,
            fields,
            origin_flux: None,
            oracle: None,
        });
    }
    let fields = solution_fields(fam, nl, &trunc, u);
    let gradient_certified = opts.validation_mode || fields.sup_du <= 1.0 - theta;
    let residuals_within_tolerance = residuals_ok(&fields.residuals, opts);
    let (origin_flux, oracle) = if cross_check {
        let (o, a) = shooting_cross_check(&trunc, nl, u)?;
        (Some(o), Some(a))
    } else {
        (None, None)
    };
    Ok(VerifyReport {
        schema: VERIFY_SCHEMA,
        status: if gradient_certified && residuals_within_tolerance { "pass" } else { "fail" },
        theta,
        q_rule,
        gradient_certified,
        residuals_within_tolerance,
        fields,
        origin_flux,
        oracle,
    })
}
