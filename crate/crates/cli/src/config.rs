//! The JSON problem description: operator, nonlinearity, dimension, grid and solver keys.

use std::path::Path;
use std::sync::Arc;

use bisolve_core::interp::Pchip;
use bisolve_core::nonlinearity::TabulatedSource;
use bisolve_core::operators::TabulatedOperator;
use bisolve_core::solver::{MountainPassOptions, SolverOptions};
use bisolve_core::{Nonlinearity, OperatorFamily, RadialGrid};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub operator: OperatorConfig,
    pub nonlinearity: NonlinearityConfig,
    #[serde(alias = "N")]
    pub dimension: usize,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Worker threads for the solver; 0 lets the pool pick.
    #[serde(default)]
    pub threads: usize,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    #[default]
    BornInfeld,
    Power {
        alpha: f64,
    },
    TwoTerm {
        beta: f64,
        gamma_c: f64,
    },
    Laplacian,
    Tabulated {
        s: Vec<f64>,
        a: Vec<f64>,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearityConfig {
    Power {
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    PowerMinusMass {
        m: f64,
        gamma: f64,
        p: f64,
    },
    Tabulated {
        s: Vec<f64>,
        g: Vec<f64>,
        m: f64,
        gamma: f64,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub r_max: f64,
    pub m: usize,
    pub grading: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { r_max: 40.0, m: 2048, grading: 1.5 }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub theta1: f64,
    pub max_stages: usize,
    pub newton_max_iter: usize,
    pub cross_check: bool,
    pub residual_tol: f64,
    pub energy_id_tol: f64,
    pub el_tol: f64,
    pub xi_search_max: f64,
    pub handoff_tol: f64,
    pub validation_mode: bool,
    pub mountain_pass: MountainPassConfig,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct MountainPassConfig {
    pub nodes: usize,
    pub max_nodes: usize,
    pub tol: f64,
    pub max_sweeps: usize,
    pub level_increase_tol: f64,
    pub dilation_steps: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        SolverConfig {
            theta1: o.theta1,
            max_stages: o.max_stages,
            newton_max_iter: o.newton_max_iter,
            cross_check: o.cross_check,
            residual_tol: o.residual_tol,
            energy_id_tol: o.energy_id_tol,
            el_tol: o.el_tol,
            xi_search_max: o.xi_search_max,
            handoff_tol: o.handoff_tol,
            validation_mode: o.validation_mode,
            mountain_pass: MountainPassConfig::default(),
        }
    }
}

impl Default for MountainPassConfig {
    fn default() -> Self {
        let o = MountainPassOptions::default();
        MountainPassConfig {
            nodes: o.nodes,
            max_nodes: o.max_nodes,
            tol: o.tol,
            max_sweeps: o.max_sweeps,
            level_increase_tol: o.level_increase_tol,
            dilation_steps: o.dilation_steps,
        }
    }
}

/// Reads and validates a config file. Syntax and type errors carry line and column;
/// range errors name the offending key.
pub fn load_config(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_config(&text).map_err(|e| match e {
        CliError::Json(source) => CliError::ConfigSyntax { path: path.to_path_buf(), source },
        other => other,
    })
}

pub fn parse_config(text: &str) -> Result<Config, CliError> {
    let cfg: Config = serde_json::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::key(key, format!("must be a positive finite number, got {v}")))
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), CliError> {
        match &self.operator {
            OperatorConfig::Power { alpha } if !(*alpha < 0.0) => {
                return Err(CliError::key("operator.alpha", format!("must be negative, got {alpha}")));
            }
            OperatorConfig::TwoTerm { beta, .. } => positive("operator.beta", *beta)?,
            _ => {}
        }
        match &self.nonlinearity {
            NonlinearityConfig::Power { p, gamma } => {
                if !(*p > 2.0) {
                    return Err(CliError::key("nonlinearity.p", format!("must exceed 2, got {p}")));
                }
                if let Some(g) = gamma {
                    positive("nonlinearity.gamma", *g)?;
                }
            }
            NonlinearityConfig::PowerMinusMass { m, gamma, p } => {
                if !(*m >= 0.0) {
                    return Err(CliError::key("nonlinearity.m", format!("must be non-negative, got {m}")));
                }
                positive("nonlinearity.gamma", *gamma)?;
                if !(*p > *gamma) {
                    return Err(CliError::key("nonlinearity.p", format!("must exceed gamma = {gamma}, got {p}")));
                }
            }
            NonlinearityConfig::Tabulated { m, gamma, .. } => {
                if !(*m >= 0.0) {
                    return Err(CliError::key("nonlinearity.m", format!("must be non-negative, got {m}")));
                }
                positive("nonlinearity.gamma", *gamma)?;
            }
        }
        if self.dimension == 0 {
            return Err(CliError::key("dimension", "must be a positive integer"));
        }
        if !(self.grid.r_max >= 10.0) {
            return Err(CliError::key("grid.r_max", format!("must be at least 10, got {}", self.grid.r_max)));
        }
        if self.grid.m < 256 {
            return Err(CliError::key("grid.m", format!("must be at least 256, got {}", self.grid.m)));
        }
        if !(self.grid.grading >= 1.0) {
            return Err(CliError::key("grid.grading", format!("must be at least 1, got {}", self.grid.grading)));
        }
        let s = &self.solver;
        if !(s.theta1 > 0.0 && s.theta1 < 1.0) {
            return Err(CliError::key("solver.theta1", format!("must lie in (0, 1), got {}", s.theta1)));
        }
        if s.max_stages == 0 {
            return Err(CliError::key("solver.max_stages", "must be at least 1"));
        }
        positive("solver.residual_tol", s.residual_tol)?;
        positive("solver.energy_id_tol", s.energy_id_tol)?;
        positive("solver.el_tol", s.el_tol)?;
        positive("solver.xi_search_max", s.xi_search_max)?;
        positive("solver.handoff_tol", s.handoff_tol)?;
        let mp = &s.mountain_pass;
        if mp.nodes < 2 {
            return Err(CliError::key("solver.mountain_pass.nodes", "must be at least 2"));
        }
        if mp.max_nodes < mp.nodes {
            return Err(CliError::key("solver.mountain_pass.max_nodes", "must be at least solver.mountain_pass.nodes"));
        }
        positive("solver.mountain_pass.tol", mp.tol)?;
        positive("solver.mountain_pass.level_increase_tol", mp.level_increase_tol)?;
        Ok(())
    }

    pub fn operator(&self) -> Result<OperatorFamily, CliError> {
        Ok(match &self.operator {
            OperatorConfig::BornInfeld => OperatorFamily::born_infeld(),
            OperatorConfig::Power { alpha } => OperatorFamily::Power { alpha: *alpha },
            OperatorConfig::TwoTerm { beta, gamma_c } => OperatorFamily::TwoTerm { beta: *beta, gamma_c: *gamma_c },
            OperatorConfig::Laplacian => OperatorFamily::Laplacian,
            OperatorConfig::Tabulated { s, a } => OperatorFamily::Tabulated(
                TabulatedOperator::from_table(s.clone(), a.clone()).map_err(|e| CliError::key("operator.s", e.to_string()))?,
            ),
        })
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity, CliError> {
        let n = self.dimension;
        Ok(match &self.nonlinearity {
            NonlinearityConfig::Power { p, gamma } => {
                let nl = Nonlinearity::power(*p, n);
                match gamma {
                    Some(g) => nl.with_gamma(*g),
                    None => nl,
                }
            }
            NonlinearityConfig::PowerMinusMass { m, gamma, p } => Nonlinearity::power_minus_mass(*m, *gamma, *p, n),
            NonlinearityConfig::Tabulated { s, g, m, gamma } => Nonlinearity::tabulated(tabulated_source(s, g)?, *m, *gamma, n),
        })
    }

    /// The graded grid; dimensions below 3 are left to the admissibility screen.
    pub fn grid(&self) -> Result<Arc<RadialGrid>, CliError> {
        let g = &self.grid;
        RadialGrid::graded(self.dimension.max(3), g.r_max, g.m, g.grading)
            .map(Arc::new)
            .map_err(|e| CliError::key("grid", e.to_string()))
    }

    pub fn solver_options(&self) -> SolverOptions {
        let s = &self.solver;
        let mp = &s.mountain_pass;
        SolverOptions {
            theta1: s.theta1,
            max_stages: s.max_stages,
            mountain_pass: MountainPassOptions {
                nodes: mp.nodes,
                max_nodes: mp.max_nodes,
                tol: mp.tol,
                max_sweeps: mp.max_sweeps,
                mass: 0.0,
                level_increase_tol: mp.level_increase_tol,
                dilation_steps: mp.dilation_steps,
            },
            newton_max_iter: s.newton_max_iter,
            cross_check: s.cross_check,
            residual_tol: s.residual_tol,
            energy_id_tol: s.energy_id_tol,
            el_tol: s.el_tol,
            xi_search_max: s.xi_search_max,
            validation_mode: s.validation_mode,
            handoff_tol: s.handoff_tol,
        }
    }
}

/// Monotone cubic through `(s_i, g_i)`, continued by the power laws through the first two
/// and the last two knots (straight lines in log-log coordinates), and extended oddly.
pub fn tabulated_source(s: &[f64], g: &[f64]) -> Result<TabulatedSource, CliError> {
    let n = s.len();
    if n < 3 || g.len() != n {
        return Err(CliError::key("nonlinearity.s", "needs at least 3 knots and one g value per knot"));
    }
    if !(s[0] > 0.0) || s.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::key("nonlinearity.s", "knots must be positive and strictly increasing"));
    }
    let law = |i: usize, j: usize, key: &str| -> Result<(f64, f64, f64), CliError> {
        if !(g[i] * g[j] > 0.0) {
            return Err(CliError::key(key, "the two end knots on each side need nonzero g of one sign"));
        }
        let k = (g[j] / g[i]).ln() / (s[j] / s[i]).ln();
        Ok((s[i], g[i], k))
    };
    let (s_lo, g_lo, k_lo) = law(0, 1, "nonlinearity.g")?;
    let (s_hi, g_hi, k_hi) = law(n - 1, n - 2, "nonlinearity.g")?;
    let table = Pchip::new(s.to_vec(), g.to_vec());
    Ok(TabulatedSource::from_fn(move |t| {
        let x = t.abs();
        let v = if x == 0.0 {
            0.0
        } else if x < s_lo {
            g_lo * (x / s_lo).powf(k_lo)
        } else if x > s_hi {
            g_hi * (x / s_hi).powf(k_hi)
        } else {
            table.eval(x)
        };
        if t < 0.0 {
            -v
        } else {
            v
        }
    }))
}

/// Every config key with its default, for `--help`.
pub fn key_reference() -> String {
    let g = GridConfig::default();
    let s = SolverConfig::default();
    let mp = &s.mountain_pass;
    let rows: Vec<(&str, String, &str)> = vec![
        ("operator.kind", "born_infeld".into(), "born_infeld | power | two_term | laplacian | tabulated"),
        ("operator.alpha", "required for power".into(), "a(s) = (1-s)^alpha, alpha < 0"),
        ("operator.beta, operator.gamma_c", "required for two_term".into(), "a(s) = beta(1-s)^(-1/2) - gamma_c(1+s)^(-1/2)"),
        ("operator.s, operator.a", "required for tabulated".into(), "knots on [0,1) and positive values of a"),
        ("nonlinearity.kind", "required".into(), "power | power_minus_mass | tabulated"),
        ("nonlinearity.p", "required for power, power_minus_mass".into(), "exponent of the |s|^(p-2)s term"),
        ("nonlinearity.gamma", "p - 1 for power".into(), "growth exponent used by the regime screen"),
        ("nonlinearity.m", "required for power_minus_mass, tabulated".into(), "mass coefficient"),
        ("nonlinearity.s, nonlinearity.g", "required for tabulated".into(), "positive knots and g values; odd extension"),
        ("dimension (alias N)", "required".into(), "space dimension, at least 3"),
        ("grid.r_max", g.r_max.to_string(), "outer radius"),
        ("grid.m", g.m.to_string(), "number of cells"),
        ("grid.grading", g.grading.to_string(), "r_i = r_max (i/m)^grading"),
        ("solver.theta1", s.theta1.to_string(), "first truncation parameter; the schedule halves it"),
        ("solver.max_stages", s.max_stages.to_string(), "length of the theta schedule"),
        ("solver.newton_max_iter", s.newton_max_iter.to_string(), "Newton polish iterations"),
        ("solver.cross_check", s.cross_check.to_string(), "shoot for the ground state at every stage"),
        ("solver.residual_tol", s.residual_tol.to_string(), "Nehari and Pohozaev residual tolerance"),
        ("solver.energy_id_tol", s.energy_id_tol.to_string(), "energy identity tolerance"),
        ("solver.el_tol", s.el_tol.to_string(), "Euler-Lagrange residual tolerance"),
        ("solver.xi_search_max", s.xi_search_max.to_string(), "upper end of the xi0 and shooting searches"),
        ("solver.handoff_tol", s.handoff_tol.to_string(), "mountain-pass gradient norm that starts Newton"),
        ("solver.validation_mode", s.validation_mode.to_string(), "a = 1 without truncation (laplacian only)"),
        ("solver.mountain_pass.nodes", mp.nodes.to_string(), "initial path nodes"),
        ("solver.mountain_pass.max_nodes", mp.max_nodes.to_string(), "path nodes after refinement"),
        ("solver.mountain_pass.tol", mp.tol.to_string(), "gradient norm at the path maximizer"),
        ("solver.mountain_pass.max_sweeps", mp.max_sweeps.to_string(), "deformation sweeps"),
        ("solver.mountain_pass.level_increase_tol", mp.level_increase_tol.to_string(), "allowed relative rise per sweep"),
        ("solver.mountain_pass.dilation_steps", mp.dilation_steps.to_string(), "also descend in the dilation variable"),
        ("threads", "0".into(), "solver worker threads; 0 picks the core count"),
    ];
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let mut out = String::from("Config keys (JSON) and defaults:\n");
    for (key, default, what) in rows {
        out.push_str(&format!("  {key:<width$}  [{default}]  {what}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = parse_config(r#"{"nonlinearity":{"kind":"power","p":8.0},"N":3}"#).unwrap();
        assert!(matches!(cfg.operator, OperatorConfig::BornInfeld));
        assert_eq!(cfg.grid.m, 2048);
        assert_eq!(cfg.solver.theta1, 0.5);
        assert_eq!(cfg.nonlinearity().unwrap().gamma, 7.0);
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let err = parse_config("{\n  \"nonlinearity\": {\"kind\":\"power\",\"p\":8.0},\n  \"dimension\": 3,\n  \"gird\": {}\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gird") && msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn range_error_names_the_key() {
        let err = parse_config(r#"{"nonlinearity":{"kind":"power","p":8.0},"dimension":3,"grid":{"m":10}}"#).unwrap_err();
        assert!(err.to_string().contains("grid.m"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn tabulated_source_interpolates_and_extends_oddly() {
        let s: Vec<f64> = (1..=40).map(|i| i as f64 * 0.1).collect();
        let g: Vec<f64> = s.iter().map(|x| x * x * x).collect();
        let src = tabulated_source(&s, &g).unwrap();
        let nl = Nonlinearity::tabulated(src, 0.0, 4.0, 3);
        assert!((nl.g(1.55) - 1.55f64.powi(3)).abs() < 1e-3);
        assert!((nl.g(0.01) - 1e-6).abs() < 1e-12);
        assert!((nl.g(8.0) - 512.0).abs() < 1e-6);
        assert_eq!(nl.g(-2.0), -nl.g(2.0));
    }

    #[test]
    fn key_reference_lists_every_solver_key() {
        let text = key_reference();
        let json = serde_json::to_value(SolverConfig::default()).unwrap();
        for k in json.as_object().unwrap().keys() {
            assert!(text.contains(&format!("solver.{k}")), "{k}");
        }
        for k in serde_json::to_value(MountainPassConfig::default()).unwrap().as_object().unwrap().keys() {
            assert!(text.contains(&format!("solver.mountain_pass.{k}")), "{k}");
        }
    }
}
