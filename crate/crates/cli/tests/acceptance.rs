//! Acceptance run: one PASS/FAIL line per criterion, with its measurements and runtime.
//! The pipelines run once from the shipped configs and are shared by the later criteria.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use bisolve_cli::{load_config, run_cli, write_report};
use bisolve_core::energy::{functional, j_and_dsigma, j_gradient_u, j_value};
use bisolve_core::operators::{check_sandwich, q_lower_bound, sandwich_constants};
use bisolve_core::radial_space::{build_plateau, dilate};
use bisolve_core::solver::{ground_state_shoot, solve_full, stage_q, SolveOutcome, SolveStatus};
use bisolve_core::{MassRegime, Nonlinearity, OperatorFamily, RadialGrid, RadialProfile, TruncatedOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Height of the classical ground state of `−Δu = −u + u³` quoted for `N = 3`.
const CLASSICAL_HEIGHT_N3: f64 = 4.3374;

struct Line {
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn solve_config(name: &str) -> (SolveOutcome, bisolve_cli::Config, Duration) {
    let cfg = load_config(&config_path(name)).expect("shipped config parses");
    let (fam, nl, grid, opts) = (cfg.operator().unwrap(), cfg.nonlinearity().unwrap(), cfg.grid().unwrap(), cfg.solver_options());
    let t = Instant::now();
    let out = solve_full(&fam, &nl, grid, &opts).expect("pipeline runs");
    (out, cfg, t.elapsed())
}

// Fixed-step RK4 shooting for −u″ − (N−1)u′/r = −u + u³ with bisection on the height,
// written independently of the solver's integrator and event logic.
fn rk4_classical_height(n: f64, h: f64) -> f64 {
    let overshoots = |xi: f64| {
        let f = |r: f64, y: [f64; 2]| [y[1], -(n - 1.0) / r * y[1] + y[0] - y[0].powi(3)];
        let mut r = 1e-8;
        let mut y = [xi, 0.0];
        while r < 30.0 {
            let k1 = f(r, y);
            let k2 = f(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = f(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for c in 0..2 {
                y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
            r += h;
            if y[0] < 0.0 {
                return true;
            }
            if y[1] > 0.0 {
                return false;
            }
        }
        false
    };
    let (mut lo, mut hi) = (2.0, 6.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if overshoots(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn validation_ground_state() -> Line {
    let oracle = rk4_classical_height(3.0, 2.5e-4);
    let tr = TruncatedOperator::validation(OperatorFamily::Laplacian);
    let nl = Nonlinearity::power_minus_mass(1.0, 2.0, 4.0, 3);
    let grid = Arc::new(RadialGrid::graded(3, 40.0, 2048, 1.5).unwrap());
    let t = Instant::now();
    let gs = ground_state_shoot(&tr, &nl, grid).expect("validation shoot");
    let elapsed = t.elapsed();
    let rel = (gs.xi - oracle).abs() / oracle;
    Line {
        name: "validation ground state (a = 1, -u+u^3, N = 3)",
        pass: rel < 5e-3 && (oracle - CLASSICAL_HEIGHT_N3).abs() < 5e-3 * CLASSICAL_HEIGHT_N3 && elapsed < Duration::from_secs(5),
        detail: format!("u(0) = {:.6}, RK4 oracle {:.6} (rel diff {rel:.2e}, limit 5e-3), quoted {CLASSICAL_HEIGHT_N3}", gs.xi, oracle),
        elapsed,
    }
}

fn truncation_suite() -> Line {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_junction = 0f64;
    let mut convexity_failures = 0;
    let mut sandwich_failures = 0;
    let mut worst_q = 0f64;
    let families = [OperatorFamily::born_infeld(), OperatorFamily::TwoTerm { beta: 2.0, gamma_c: 1.0 }];
    for fam in &families {
        for theta in [0.5, 0.25, 0.1] {
            let (q, _) = stage_q(fam, theta, MassRegime::PositiveMass, 2.0, 4).unwrap();
            let tr = TruncatedOperator::new(fam.clone(), theta, 0.5, q).unwrap();
            let j = 1.0 - theta;
            worst_junction = worst_junction.max((tr.power_branch(j) - fam.a(j)).abs() / fam.a(j));
            worst_junction = worst_junction.max((tr.a_theta(j) - fam.a(j)).abs() / fam.a(j));
            let phi = |s: f64| tr.a_theta(s) * s;
            for _ in 0..1000 {
                let s1 = rng.gen_range(0.0..=j);
                let s2 = j + rng.gen_range(1e-12..=(4.0 - j));
                if !(phi(0.5 * (s1 + s2)) < 0.5 * (phi(s1) + phi(s2))) {
                    convexity_failures += 1;
                }
            }
            let c = sandwich_constants(&tr).unwrap();
            for _ in 0..1000 {
                if check_sandwich(&tr, &c, rng.gen_range(0.0..10.0)).is_err() {
                    sandwich_failures += 1;
                }
            }
        }
    }
    for theta in [0.5, 0.25, 0.1] {
        let q = q_lower_bound(&families[0], theta).unwrap();
        worst_q = worst_q.max((q - ((1.0 - theta) / theta + 2.0)).abs());
    }
    let elapsed = t.elapsed();
    Line {
        name: "truncation suite (Born-Infeld, two-term; theta = 0.5, 0.25, 0.1)",
        pass: worst_junction < 1e-12 && convexity_failures == 0 && sandwich_failures == 0 && worst_q < 1e-10 && elapsed < Duration::from_secs(1),
        detail: format!(
            "junction gap {worst_junction:.1e}, convexity failures {convexity_failures}/6000, sandwich failures {sandwich_failures}/6000, q_lower_bound error {worst_q:.1e}"
        ),
        elapsed,
    }
}

fn random_profile(g: Arc<RadialGrid>, rng: &mut ChaCha8Rng, amp: f64) -> RadialProfile {
    let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.5..4.0)).collect();
    let r_max = g.r_max();
    RadialProfile::from_fn(g, |r| {
        let base: f64 = c.iter().zip(&w).map(|(c, w)| c * (-(r / w).powi(2)).exp()).sum();
        amp * (base + 0.3) * (1.0 - r / r_max)
    })
}

fn central_difference<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h)
}

fn calculus_suite() -> Line {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let nl = Nonlinearity::power_minus_mass(1.0, 2.0, 4.0, 4);
    let tr = TruncatedOperator::new(OperatorFamily::born_infeld(), 0.25, 0.5, 5.0).unwrap();
    let g = Arc::new(RadialGrid::graded(4, 40.0, 512, 1.5).unwrap());
    let (mut worst_el, mut worst_sigma) = (0f64, 0f64);
    for _ in 0..20 {
        let u = random_profile(g.clone(), &mut rng, 1.5);
        let dir = random_profile(g.clone(), &mut rng, 1.0);
        let grad = j_gradient_u(&tr, &nl, 0.0, &u);
        let exact: f64 = grad.iter().zip(&dir.values).map(|(a, b)| a * b).sum();
        let moved = |h: f64| functional(&tr, &nl, &u.with_values(u.values.iter().zip(&dir.values).map(|(a, b)| a + h * b).collect()));
        worst_el = worst_el.max((central_difference(moved, 1e-4) - exact).abs() / exact.abs());
        let sigma = rng.gen_range(-0.3..0.3);
        let (_, ds) = j_and_dsigma(&tr, &nl, sigma, &u);
        worst_sigma = worst_sigma.max((central_difference(|h| j_value(&tr, &nl, sigma + h, &u), 1e-4) - ds).abs() / ds.abs());
    }
    // The plateau kinks rarely sit on nodes, so I(dilate(u, σ)) carries an O(h) error
    // against the exact scaling in J; the identity is judged on a refined grid and the
    // default-grid figure is printed alongside.
    let samples: Vec<(f64, f64, f64)> = (0..20).map(|_| (rng.gen_range(1.6..2.5), rng.gen_range(3.0..8.0), rng.gen_range(-0.5..0.5))).collect();
    let dilation_gap = |cells: usize| {
        let g = Arc::new(RadialGrid::graded(4, 40.0, cells, 1.5).unwrap());
        samples.iter().fold(0f64, |worst, &(xi, radius, sigma)| {
            let u = build_plateau(xi, radius, g.clone()).unwrap();
            let moved = dilate(&u, sigma).unwrap();
            let (j, i) = (j_value(&tr, &nl, sigma, &u), functional(&tr, &nl, &moved));
            worst.max((j - i).abs() / i.abs())
        })
    };
    let coarse_dilation = dilation_gap(2048);
    let worst_dilation = dilation_gap(16384);
    let elapsed = t.elapsed();
    Line {
        name: "calculus suite (exact derivatives, dilated functional)",
        pass: worst_el < 1e-5 && worst_sigma < 1e-5 && worst_dilation < 1e-2 && elapsed < Duration::from_secs(10),
        detail: format!(
            "el_gradient rel err {worst_el:.1e}, dJ/dsigma rel err {worst_sigma:.1e} (limit 1e-5); J vs I(dilate) rel err {worst_dilation:.1e} on 16384 cells (limit 1e-2), {coarse_dilation:.1e} on 2048 cells"
        ),
        elapsed,
    }
}

fn finite_energies(out: &SolveOutcome) -> bool {
    out.report.energies.map(|e| e.int_big_a.is_finite() && e.int_a_grad_sq.is_finite() && e.int_abs_big_g.is_finite()).unwrap_or(false)
}

// Certification, gradient bound and residual thresholds shared by both pipelines.
fn certified_checks(out: &SolveOutcome) -> (bool, String) {
    let r = &out.report;
    let (Some(theta), Some(sup), Some(res)) = (r.theta_bar, r.sup_du, r.residuals) else {
        return (false, format!("status {:?}: {}", r.status, r.failure_reason.clone().unwrap_or_default()));
    };
    let ok = r.status == SolveStatus::Certified
        && sup <= 1.0 - theta
        && res.nehari.abs() < 1e-4
        && res.pohozaev.abs() < 1e-4
        && res.energy_id.abs() < 1e-3;
    (
        ok,
        format!(
            "theta_bar {theta}, sup|u'| {sup:.5} <= {:.5}, nehari {:.1e}, pohozaev {:.1e}, energy_id {:.1e}",
            1.0 - theta,
            res.nehari,
            res.pohozaev,
            res.energy_id
        ),
    )
}

fn positive_mass(out: &SolveOutcome, elapsed: Duration) -> Line {
    let (ok, detail) = certified_checks(out);
    let rel = out.report.oracle.as_ref().map(|o| o.rel_diff).unwrap_or(f64::INFINITY);
    let finite = finite_energies(out);
    Line {
        name: "positive-mass pipeline (Born-Infeld, -s+s^3, N = 4)",
        pass: ok && rel < 1e-2 && finite && elapsed < Duration::from_secs(120),
        detail: format!("{detail}, u(0) vs shooting {rel:.1e} (limit 1e-2), finite-energy integrals finite: {finite}"),
        elapsed,
    }
}

fn zero_mass(out: &SolveOutcome, elapsed: Duration) -> Line {
    let (ok, detail) = certified_checks(out);
    let n = out.report.problem.n as f64;
    let slope = out.report.decay.map(|d| d.slope).unwrap_or(f64::NAN);
    let ratio = out.report.origin_flux.map(|o| o.ratio.abs()).unwrap_or(f64::INFINITY);
    let slope_limit = -(n - 2.0) / 2.0 + 0.1;
    Line {
        name: "zero-mass pipeline (Born-Infeld, |s|^6 s, N = 3)",
        pass: ok && slope <= slope_limit && ratio < 1e-8 && elapsed < Duration::from_secs(120),
        detail: format!("{detail}, decay slope {slope:.3} (limit {slope_limit}), origin flux ratio {ratio:.1e} (limit 1e-8)"),
        elapsed,
    }
}

fn level_bound(runs: &[&SolveOutcome]) -> Line {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for out in runs {
        let cap = out.report.plateau.level_cap;
        let levels: Vec<f64> = out.report.stages.iter().map(|s| s.m_theta).collect();
        let ok = !levels.is_empty() && levels.iter().all(|m| *m > 0.0 && *m <= cap);
        pass &= ok;
        let lo = levels.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        parts.push(format!("{} stages, m_theta in [{lo:.4}, {hi:.4}], cap {cap:.4}", levels.len()));
    }
    Line { name: "level bound 0 < m_theta <= max_t I(t u_bar)", pass, detail: parts.join("; "), elapsed: t.elapsed() }
}

// Reads the flux-bound column back from the written stages.csv.
fn flux_bound(runs: &[(&SolveOutcome, &bisolve_cli::Config)]) -> Line {
    let t = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut overall = 0f64;
    let mut parts = Vec::new();
    for (k, (out, cfg)) in runs.iter().enumerate() {
        let sub = dir.path().join(k.to_string());
        let files = write_report(out, cfg, &sub).unwrap();
        let mut rdr = csv::Reader::from_path(&files.stages).unwrap();
        let col = rdr.headers().unwrap().iter().position(|h| h == "flux_bound").expect("flux_bound column");
        let history: Vec<f64> = rdr.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
        let first = history[0];
        let max = history.iter().cloned().fold(0f64, f64::max);
        // As theta halves the bound must not run away; allow 50% over the first stage.
        let ok = history.iter().all(|b| b.is_finite()) && max <= 1.5 * first;
        pass &= ok;
        overall = overall.max(max);
        parts.push(format!("{} stages, first {first:.4}, max {max:.4}", history.len()));
    }
    Line {
        name: "flux bound max|a(|u'|^2)u'| uniform across stages",
        pass,
        detail: format!("{}; common constant {overall:.4}", parts.join("; ")),
        elapsed: t.elapsed(),
    }
}

fn regime_screens() -> Line {
    let t = Instant::now();
    let codes: Vec<i32> = ["positive_mass_n4.json", "zero_mass_n3.json", "cubic_n3_rejected.json"]
        .iter()
        .map(|c| run_cli(["bisolve", "check", "--config", config_path(c).to_str().unwrap()]))
        .collect();
    Line {
        name: "regime screens (-s+s^3 N=4, |s|^6 s N=3, s^3 N=3 gamma=7)",
        pass: codes == [0, 0, 2],
        detail: format!("exit codes {codes:?} (expected [0, 0, 2])"),
        elapsed: t.elapsed(),
    }
}

fn main() {
    let mut lines = vec![validation_ground_state(), truncation_suite(), calculus_suite()];
    let (pm, pm_cfg, pm_time) = solve_config("positive_mass_n4.json");
    let (zm, zm_cfg, zm_time) = solve_config("zero_mass_n3.json");
    lines.push(positive_mass(&pm, pm_time));
    lines.push(zero_mass(&zm, zm_time));
    lines.push(level_bound(&[&pm, &zm]));
    lines.push(flux_bound(&[(&pm, &pm_cfg), (&zm, &zm_cfg)]));
    lines.push(regime_screens());

    println!();
    for l in &lines {
        println!("{} {} ({:.2} s): {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.elapsed.as_secs_f64(), l.detail);
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
