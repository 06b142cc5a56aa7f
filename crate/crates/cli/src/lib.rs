//! Command-line front end of the bisolve radial ground-state solver.
//!
//! Exit codes: 0 certified or passed, 1 malformed input, 2 rejected by an admissibility
//! screen, 3 numerical failure (nonconvergence, exhausted schedule, failed verification).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod sweep;
pub mod verify;

use std::path::PathBuf;

use bisolve_core::nonlinearity::{classify_regime, find_xi0};
use bisolve_core::operators::screen_operator;
use bisolve_core::solver::{screen_problem, solve_full};
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::json;

pub use config::{load_config, parse_config, Config};
pub use error::CliError;
pub use output::write_report;

#[derive(Debug, Parser)]
#[command(name = "bisolve", version, about = "Radial ground states of Born-Infeld type equations, with verification reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write report.json, solution.csv and stages.csv.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Recompute every residual of a stored profile.
    Verify {
        /// A solution.csv written by `solve`.
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Truncation parameter to judge at; defaults to the first schedule entry whose
        /// gradient bound the profile meets.
        #[arg(long)]
        theta: Option<f64>,
        /// Also shoot for the ground state and report the agreement.
        #[arg(long)]
        cross_check: bool,
        /// Write the JSON here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate stages, shooting outcomes or full solves across one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// theta, xi or p.
        #[arg(long)]
        param: sweep::SweepParam,
        /// a:b:n, n equally spaced values from a to b.
        #[arg(long)]
        range: String,
        /// Truncation parameter for the xi sweep; defaults to solver.theta1.
        #[arg(long)]
        theta: Option<f64>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Admissibility screens only.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

fn command() -> clap::Command {
    let keys = config::key_reference();
    Cli::command()
        .after_long_help(keys.clone())
        .mut_subcommand("solve", |c| c.after_long_help(keys.clone()))
        .mut_subcommand("verify", |c| c.after_long_help(keys.clone()))
        .mut_subcommand("sweep", |c| c.after_long_help(keys.clone()))
        .mut_subcommand("check", |c| c.after_long_help(keys.clone()))
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("bisolve: {e}");
            e.exit_code()
        }
    }
}

// Standard output may be a closed pipe (`bisolve check … | head`); that is not an error.
fn stdout(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(CliError::io(p)),
        None => {
            stdout(text);
            Ok(())
        }
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

fn dispatch(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Solve { config, out_dir } => {
            let cfg = load_config(&config)?;
            let (fam, nl, grid, opts) = (cfg.operator()?, cfg.nonlinearity()?, cfg.grid()?, cfg.solver_options());
            let outcome = with_threads(cfg.threads, || solve_full(&fam, &nl, grid, &opts))??;
            let files = write_report(&outcome, &cfg, &out_dir)?;
            let r = &outcome.report;
            let status = serde_json::to_value(r.status)?;
            stdout(&format!(
                "status {} theta_bar {} u0 {} ({} stages) -> {}\n",
                status.as_str().unwrap_or("?"),
                r.theta_bar.map(|t| t.to_string()).unwrap_or_else(|| "none".into()),
                outcome.profile.as_ref().map(|u| u.values[0].to_string()).unwrap_or_else(|| "none".into()),
                r.stages.len(),
                files.report.display()
            ));
            if let Some(reason) = &r.failure_reason {
                eprintln!("bisolve: {reason}");
            }
            Ok(if r.status.success() { 0 } else { 3 })
        }
        Command::Verify { profile, config, theta, cross_check, out } => {
            let cfg = load_config(&config)?;
            let (fam, nl, opts) = (cfg.operator()?, cfg.nonlinearity()?, cfg.solver_options());
            let u = verify::read_profile(&profile, cfg.dimension)?;
            let rep = with_threads(cfg.threads, || verify::verify_profile(&fam, &nl, &opts, &u, theta, cross_check))??;
            let mut text = serde_json::to_string_pretty(&rep)?;
            text.push('\n');
            emit(out.as_ref(), &text)?;
            Ok(if rep.passed() { 0 } else { 3 })
        }
        Command::Sweep { config, param, range, theta, out } => {
            let cfg = load_config(&config)?;
            let values = sweep::parse_range(&range)?;
            let table = with_threads(cfg.threads, || sweep::run_sweep(&cfg, param, &values, theta))??;
            emit(out.as_ref(), &table)?;
            Ok(0)
        }
        Command::Check { config } => {
            let cfg = load_config(&config)?;
            check(&cfg)
        }
    }
}

// Operator screen, regime classification and the ξ₀ search; prints a JSON verdict.
fn check(cfg: &Config) -> Result<i32, CliError> {
    let fam = cfg.operator()?;
    let nl = cfg.nonlinearity()?;
    let opts = cfg.solver_options();
    let screen = screen_operator(&fam);
    let verdict = screen_problem(&fam, &nl, &opts).and_then(|(regime, m)| {
        let xi0 = find_xi0(&nl, opts.xi_search_max)?;
        let report = if opts.validation_mode { None } else { Some(classify_regime(&nl)?) };
        Ok((regime, m, xi0, report))
    });
    let (value, code) = match verdict {
        Ok((regime, m, xi0, report)) => (
            json!({
                "status": "admissible",
                "operator": fam.name(),
                "nonlinearity": nl.name(),
                "N": nl.n,
                "regime": regime.label(),
                "m_estimate": m,
                "xi0": xi0,
                "operator_screen": screen,
                "regime_report": report,
            }),
            0,
        ),
        Err(e) => {
            let err = CliError::from(e);
            let code = err.exit_code();
            eprintln!("bisolve: {err}");
            (
                json!({
                    "status": "rejected",
                    "operator": fam.name(),
                    "nonlinearity": nl.name(),
                    "N": nl.n,
                    "reason": err.to_string(),
                    "operator_screen": screen,
                }),
                code,
            )
        }
    };
    stdout(&format!("{}\n", serde_json::to_string_pretty(&value)?));
    Ok(code)
}
