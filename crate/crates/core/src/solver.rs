//! Critical points of the truncated functional computed two ways, by shooting on the radial
//! ODE and by mountain-pass path deformation, and the θ-continuation loop that certifies
//! `sup|u′| ≤ 1 − θ`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{self, hessian_tridiagonal, j_and_dsigma, j_dsigma2, j_gradient_u, j_value};
use crate::error::{BisolveError, Result};
use crate::nonlinearity::{classify_regime, find_xi0, MassRegime, Nonlinearity};
use crate::ode::{self, Control, Solution, Tolerances};
use crate::operators::{q_lower_bound, select_q, OperatorFamily, TruncatedOperator};
use crate::radial_space::{build_plateau, decay_check, dilate, DecayFit, RadialGrid, RadialProfile};
use crate::rootfind::{bisect, golden_max};

// ---------------------------------------------------------------------------------------
// Shooting

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShootOutcome {
    /// `u` reaches 0 while decreasing.
    Crossing,
    /// `u′` returns to 0 with `u > 0`, or the trajectory reaches `r_max` still positive.
    PositiveFloor,
    /// `|u|` and `|w|` drop below `10⁻⁸`.
    Converged,
}

/// One trajectory of the initial value problem `u(0) = ξ`, `u′(0) = 0`.
#[derive(Debug, Clone)]
pub struct ShootRecord {
    pub xi: f64,
    pub outcome: ShootOutcome,
    /// Radius of the crossing, the floor, or the end of integration.
    pub event_radius: f64,
    /// `u` at the floor.
    pub floor_value: Option<f64>,
    /// States `(u, w)` with `w = a_θ(|u′|²)u′`, starting at the series radius `r₁`.
    pub trajectory: Solution,
    pub n: usize,
}

impl ShootRecord {
    /// `(u, w)` at radius `r` inside the integrated range.
    pub fn state(&self, r: f64) -> (f64, f64) {
        let s = self.trajectory.eval(r);
        (s[0], s[1])
    }

    pub fn start_radius(&self) -> f64 {
        self.trajectory.t[0]
    }

    /// `|r₁^{N−1} w(r₁)|` at the first integration radius.
    pub fn origin_flux(&self) -> f64 {
        let r1 = self.trajectory.t[0];
        (r1.powi(self.n as i32 - 1) * self.trajectory.y[0][1]).abs()
    }

    pub fn max_flux(&self) -> f64 {
        self.trajectory.y.iter().fold(0f64, |m, y| m.max(y[1].abs()))
    }
}

/// Starting radius of the series expansion: `10⁻⁶ R_max`, capped at `10⁻⁴`.
pub fn series_radius(r_max: f64) -> f64 {
    (1e-6 * r_max).min(1e-4)
}

/// Integrates `u′ = flux⁻¹(w)`, `w′ = −(N−1)w/r − g(u)` from `u(0) = ξ`, `w(0) = 0`.
pub fn shoot(trunc: &TruncatedOperator, nl: &Nonlinearity, xi: f64, r_max: f64) -> Result<ShootRecord> {
    let n = nl.n;
    let nf = n as f64;
    if xi == 0.0 {
        let trajectory = Solution { t: vec![0.0, r_max], y: vec![[0.0; 2]; 2], dy: vec![[0.0; 2]; 2] };
        return Ok(ShootRecord { xi, outcome: ShootOutcome::Converged, event_radius: 0.0, floor_value: None, trajectory, n });
    }
    if !(xi > 0.0) || !(r_max > 0.0) {
        return Err(BisolveError::Domain(format!("shoot needs xi > 0 and r_max > 0 (got {xi}, {r_max})")));
    }
    let r1 = series_radius(r_max);
    let g0 = nl.g(xi);
    let a0 = trunc.a_theta(0.0);
    let y0 = [xi - g0 * r1 * r1 / (2.0 * nf * a0), -g0 * r1 / nf];
    if g0 <= 0.0 {
        // u″(0) = −g(ξ)/(N a(0)) ≥ 0: the profile never starts to decrease.
        let trajectory = Solution { t: vec![r1], y: vec![y0], dy: vec![[0.0; 2]] };
        return Ok(ShootRecord {
            xi,
            outcome: ShootOutcome::PositiveFloor,
            event_radius: 0.0,
            floor_value: Some(xi),
            trajectory,
            n,
        });
    }
    let rhs = |r: f64, y: &ode::State| [trunc.flux_invert(y[1]), -(nf - 1.0) / r * y[1] - nl.g(y[0])];
    let mut event: Option<(ShootOutcome, f64, Option<f64>)> = None;
    let sol = ode::integrate(rhs, r1, y0, r_max, 1e-3 * r1, Tolerances::default(), |s| {
        let k = s.t.len() - 1;
        let (prev, cur) = (s.y[k - 1], s.y[k]);
        let (t0, t1) = (s.t[k - 1], s.t[k]);
        let at = |t: f64| ode::hermite(t0, t1, &prev, &cur, &s.dy[k - 1], &s.dy[k], t);
        if prev[0] > 0.0 && cur[0] <= 0.0 {
            let r = bisect(t0, t1, 1e-14 * t1, |t| at(t)[0]);
            event = Some((ShootOutcome::Crossing, r, None));
            return Control::Stop;
        }
        if prev[1] < 0.0 && cur[1] >= 0.0 && cur[0] > 0.0 {
            let r = bisect(t0, t1, 1e-14 * t1, |t| at(t)[1]);
            event = Some((ShootOutcome::PositiveFloor, r, Some(at(r)[0])));
            return Control::Stop;
        }
        if cur[0].abs() < 1e-8 && cur[1].abs() < 1e-8 {
            event = Some((ShootOutcome::Converged, t1, None));
            return Control::Stop;
        }
        Control::Continue
    })?;
    let (outcome, event_radius, floor_value) = match event {
        Some(e) => e,
        None => {
            let last = *sol.y.last().unwrap();
            (ShootOutcome::PositiveFloor, *sol.t.last().unwrap(), Some(last[0]))
        }
    };
    Ok(ShootRecord { xi, outcome, event_radius, floor_value, trajectory: sol, n })
}

/// A ground state found by bisection on the shooting height.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub xi: f64,
    pub bracket: (f64, f64),
    pub profile: RadialProfile,
    /// Final undershooting trajectory.
    pub record: ShootRecord,
    /// Radius where the bracketing trajectories separate; the tail is glued beyond it.
    pub glue_radius: f64,
    /// Classification re-checked at 5 interior points of the final bracket.
    pub bracket_monotone: bool,
}

const SCAN_CEILING: f64 = 10.0;

// Bound on the per-node dilation; J is nearly flat along dilation orbits and σ otherwise drifts.
const MAX_DILATION: f64 = 1.0;

fn undershoots(o: ShootOutcome) -> bool {
    !matches!(o, ShootOutcome::Crossing)
}

/// Scans `ξ ∈ [ξ₀/8, max(64ξ₀, 10)]` for an undershoot/overshoot pair, bisects to `10⁻¹²`, and
/// resamples the final trajectory onto `grid` with a far-field tail.
pub fn ground_state_shoot(trunc: &TruncatedOperator, nl: &Nonlinearity, grid: Arc<RadialGrid>) -> Result<GroundState> {
    let r_max = grid.r_max();
    let xi0 = find_xi0(nl, SCAN_CEILING).unwrap_or(SCAN_CEILING);
    // When G > 0 everywhere ξ₀ sits at the bottom of its search grid; the ceiling keeps the
    // scan reaching heights of order one.
    let (lo, hi) = (xi0 / 8.0, (64.0 * xi0).max(SCAN_CEILING));
    let count = 48;
    let xs: Vec<f64> = (0..count).map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64)).collect();
    let outcomes: Vec<Result<ShootOutcome>> = xs.par_iter().map(|&x| shoot(trunc, nl, x, r_max).map(|s| s.outcome)).collect();
    let mut bracket = None;
    for k in 0..count - 1 {
        if let (Ok(a), Ok(b)) = (&outcomes[k], &outcomes[k + 1]) {
            if undershoots(*a) && !undershoots(*b) {
                bracket = Some((xs[k], xs[k + 1]));
                break;
            }
        }
    }
    let (mut a, mut b) = bracket.ok_or(BisolveError::BracketNotFound { lo, hi })?;
    for _ in 0..200 {
        if b - a <= 1e-12 {
            break;
        }
        let mid = 0.5 * (a + b);
        if undershoots(shoot(trunc, nl, mid, r_max)?.outcome) {
            a = mid;
        } else {
            b = mid;
        }
    }
    let interior: Vec<bool> = (1..=5)
        .into_par_iter()
        .map(|k| shoot(trunc, nl, a + (b - a) * k as f64 / 6.0, r_max).map(|s| undershoots(s.outcome)).unwrap_or(false))
        .collect();
    let mut seen_cross = false;
    let mut bracket_monotone = true;
    for u in interior {
        if !u {
            seen_cross = true;
        } else if seen_cross {
            bracket_monotone = false;
        }
    }
    let low = shoot(trunc, nl, a, r_max)?;
    let high = shoot(trunc, nl, b, r_max)?;
    let glue_radius = separation_radius(&low, &high);
    let profile = glue_profile(trunc, nl, &low, glue_radius, grid);
    Ok(GroundState { xi: a, bracket: (a, b), profile, record: low, glue_radius, bracket_monotone })
}

// First radius where the two bracketing trajectories differ by more than 0.1%.
fn separation_radius(low: &ShootRecord, high: &ShootRecord) -> f64 {
    let end = low.trajectory.t.last().unwrap().min(*high.trajectory.t.last().unwrap());
    let mut last_ok = low.trajectory.t[0];
    for (r, y) in low.trajectory.t.iter().zip(&low.trajectory.y) {
        if *r > end {
            break;
        }
        let other = high.trajectory.eval(*r)[0];
        if y[0] <= 0.0 || (y[0] - other).abs() > 1e-3 * y[0].abs() {
            break;
        }
        last_ok = *r;
    }
    last_ok
}

fn glue_profile(trunc: &TruncatedOperator, nl: &Nonlinearity, rec: &ShootRecord, r_g: f64, grid: Arc<RadialGrid>) -> RadialProfile {
    let nf = nl.n as f64;
    let r1 = rec.start_radius();
    let (u_g, w_g) = rec.state(r_g);
    let du_g = trunc.flux_invert(w_g);
    let g0 = nl.g(rec.xi);
    let a0 = trunc.a_theta(0.0);
    let positive_mass = nl.m > 0.0;
    let kappa = (-du_g / u_g - (nf - 1.0) / (2.0 * r_g)).max(1e-3);
    RadialProfile::from_fn(grid, |r| {
        if r < r1 {
            rec.xi - g0 * r * r / (2.0 * nf * a0)
        } else if r <= r_g {
            rec.state(r).0
        } else if positive_mass {
            u_g * (-kappa * (r - r_g)).exp() * (r_g / r).powf(0.5 * (nf - 1.0))
        } else {
            u_g * (r_g / r).powf(nf - 2.0)
        }
    })
}

// ---------------------------------------------------------------------------------------
// Newton polish

#[derive(Debug, Clone)]
pub struct PolishResult {
    pub profile: RadialProfile,
    pub iterations: usize,
    /// `‖∇I_θ‖` in the weighted dual norm at exit.
    pub residual: f64,
    pub converged: bool,
}

fn dual_norm(grad: &[f64], weights: &[f64]) -> f64 {
    grad.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(g, w)| g * g / w).sum::<f64>().sqrt()
}

/// Newton's method on the discrete Euler–Lagrange system with residual backtracking.
pub fn newton_polish(trunc: &TruncatedOperator, nl: &Nonlinearity, start: &RadialProfile, max_iter: usize) -> PolishResult {
    let m = start.grid.cells();
    let weights = start.grid.node_weights().to_vec();
    let mut u = start.clone();
    let mut grad = j_gradient_u(trunc, nl, 0.0, &u);
    let mut res = dual_norm(&grad, &weights);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let hess = hessian_tridiagonal(trunc, nl, 0.0, &u, None);
        let rhs: Vec<f64> = grad[..m].iter().map(|g| -g).collect();
        let Some(delta) = hess.solve(&rhs) else { break };
        let mut t = 1.0;
        let mut accepted = None;
        while t >= 1e-6 {
            let mut v = u.values.clone();
            for i in 0..m {
                v[i] += t * delta[i];
            }
            let cand = u.with_values(v);
            let g2 = j_gradient_u(trunc, nl, 0.0, &cand);
            let r2 = dual_norm(&g2, &weights);
            if r2.is_finite() && r2 < (1.0 - 1e-4 * t) * res {
                accepted = Some((cand, g2, r2));
                break;
            }
            t *= 0.5;
        }
        let step = t * delta.iter().fold(0f64, |a, d| a.max(d.abs()));
        match accepted {
            Some((cand, g2, r2)) => {
                u = cand;
                grad = g2;
                res = r2;
            }
            None => {
                // No decrease possible: either at machine precision already or stuck.
                converged = step <= 1e-10 * u.sup().max(1.0);
                break;
            }
        }
        if step <= 1e-13 * u.sup().max(1.0) {
            converged = true;
            break;
        }
    }
    PolishResult { profile: u, iterations, residual: res, converged }
}

// ---------------------------------------------------------------------------------------
// Mountain pass

#[derive(Debug, Clone, Serialize)]
pub struct MountainPassOptions {
    /// Initial path nodes `K` (the path has `K + 1` profiles).
    pub nodes: usize,
    /// Upper bound on the path length after insertions.
    pub max_nodes: usize,
    /// Termination threshold on the preconditioned `(σ, u)`-gradient norm at the maximizer.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Mass term in the preconditioner; `m` in the positive-mass case, 0 otherwise.
    pub mass: f64,
    /// Relative rise of the path maximum across one deformation step treated as a failure.
    pub level_increase_tol: f64,
    /// Let the maximizer move in `σ` as well as in `u`.
    pub dilation_steps: bool,
}

impl Default for MountainPassOptions {
    fn default() -> Self {
        MountainPassOptions { nodes: 16, max_nodes: 40, tol: 1e-5, max_sweeps: 10_000, mass: 0.0, level_increase_tol: 1e-12, dilation_steps: false }
    }
}

/// The discrete path from 0 to `ū` with per-node dilations.
#[derive(Debug, Clone)]
pub struct MountainPassState {
    pub path: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub levels: Vec<f64>,
    pub max_index: usize,
    pub level: f64,
}

#[derive(Debug, Clone)]
pub struct MountainPassResult {
    /// The maximizer pulled back to `σ = 0`.
    pub profile: RadialProfile,
    /// `J_θ` at the maximizer.
    pub m_theta: f64,
    pub sigma: f64,
    pub sweeps: usize,
    pub grad_norm: f64,
    pub converged: bool,
    /// Sweeps whose path refinement raised the level estimate, and the largest relative rise.
    pub level_increases: usize,
    pub max_level_increase: f64,
    pub state: MountainPassState,
}

/// Path deformation: the highest node descends along the preconditioned `(σ, u)`-gradient,
/// segments next to it are re-maximized, and a node is inserted where the path rises
/// above it. Returns an error unless the gradient norm drops below `opts.tol`.
pub fn mountain_pass(
    trunc: &TruncatedOperator,
    nl: &Nonlinearity,
    u_bar: &RadialProfile,
    k: usize,
    opts: &MountainPassOptions,
) -> Result<MountainPassResult> {
    let res = mountain_pass_run(trunc, nl, u_bar, k, opts)?;
    if !res.converged {
        return Err(BisolveError::Nonconvergence { iterations: res.sweeps, residual: res.grad_norm });
    }
    Ok(res)
}

/// Like [`mountain_pass`] but returns the last state even without convergence.
pub fn mountain_pass_run(
    trunc: &TruncatedOperator,
    nl: &Nonlinearity,
    u_bar: &RadialProfile,
    k: usize,
    opts: &MountainPassOptions,
) -> Result<MountainPassResult> {
    let grid = u_bar.grid.clone();
    let m = grid.cells();
    let end_level = energy::functional(trunc, nl, u_bar);
    if !(end_level < 0.0) {
        return Err(BisolveError::Domain(format!("path end must have negative energy, I(u_bar) = {end_level}")));
    }
    if !trunc.is_validation() && !(u_bar.sup_derivative() < 1.0 - trunc.theta1) {
        return Err(BisolveError::Domain("path end must satisfy |u_bar'| < 1 - theta1".into()));
    }
    if k < 2 {
        return Err(BisolveError::Domain("mountain pass needs at least 2 path segments".into()));
    }
    let profile = |v: Vec<f64>| RadialProfile { grid: grid.clone(), values: v };
    let jv = |s: f64, v: &[f64]| j_value(trunc, nl, s, &profile(v.to_vec()));
    let mix = |a: &[f64], b: &[f64], lam: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| (1.0 - lam) * x + lam * y).collect() };

    let mut path: Vec<Vec<f64>> = (0..=k).map(|i| u_bar.values.iter().map(|v| v * i as f64 / k as f64).collect()).collect();
    let mut sigma = vec![0.0; k + 1];
    let mut levels: Vec<f64> = path.iter().map(|v| jv(0.0, v)).collect();
    let mut step = 1.0f64;
    let mut prev_level = f64::INFINITY;
    let mut increases = 0;
    let mut max_increase = 0f64;
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    let mut failures = 0;
    let mut sweeps = 0;
    let mut ks = 1;

    for sweep in 0..opts.max_sweeps {
        sweeps = sweep + 1;
        // Highest interior node; ties go to the lowest index.
        ks = 1;
        for i in 2..path.len() - 1 {
            if levels[i] > levels[ks] + 1e-12 * levels[ks].abs() {
                ks = i;
            }
        }
        // Re-maximize the two adjacent segments and insert a node where the path is higher.
        let mut best: Option<(f64, usize, f64)> = None;
        let mut best_val = levels[ks];
        for (a, b) in [(ks - 1, ks), (ks, ks + 1)] {
            let (pa, pb, sa, sb) = (&path[a], &path[b], sigma[a], sigma[b]);
            let (lam, val) = golden_max(0.0, 1.0, 1e-4, |lam| jv((1.0 - lam) * sa + lam * sb, &mix(pa, pb, lam)));
            if val > best_val + 1e-12 * best_val.abs() && lam > 1e-3 && lam < 1.0 - 1e-3 {
                best = Some((lam, b, val));
                best_val = val;
            }
        }
        if let Some((lam, b, val)) = best {
            let a = b - 1;
            let node = mix(&path[a], &path[b], lam);
            let s = (1.0 - lam) * sigma[a] + lam * sigma[b];
            path.insert(b, node);
            sigma.insert(b, s);
            levels.insert(b, val);
            ks = b;
        }
        // Refinement may raise the estimate; deformation below may not.
        let level = levels[ks];
        if level > prev_level {
            let rise = (level - prev_level) / prev_level.abs().max(1e-300);
            if rise > 1e-9 {
                increases += 1;
                max_increase = max_increase.max(rise);
            }
        }

        if !(level > 0.0) {
            // The barrier around 0 is positive; a nonpositive maximum means the path broke through it.
            return Err(BisolveError::Nonconvergence { iterations: sweeps, residual: grad_norm });
        }
        // Preconditioned gradient of J at the maximizer.
        let node = profile(path[ks].clone());
        let s0 = sigma[ks];
        let gu = j_gradient_u(trunc, nl, s0, &node);
        let (_, gs) = j_and_dsigma(trunc, nl, s0, &node);
        let prec = hessian_tridiagonal(trunc, nl, s0, &node, Some(opts.mass));
        let Some(du) = prec.solve(&gu[..m]) else {
            return Err(BisolveError::Nonconvergence { iterations: sweeps, residual: grad_norm });
        };
        let nf = grid.n as f64;
        let kin_scale = nf * (nf * s0).exp() * energy::energy(trunc, nl, &node).kinetic;
        let c_sigma = j_dsigma2(trunc, nl, s0, &node).abs() + kin_scale;
        let mut dsig = if opts.dilation_steps { gs / c_sigma } else { 0.0 };
        // Projected gradient: the dilation is confined to [−MAX_DILATION, MAX_DILATION].
        if (s0 <= -MAX_DILATION && dsig > 0.0) || (s0 >= MAX_DILATION && dsig < 0.0) {
            dsig = 0.0;
        }
        let gd_u = gu[..m].iter().zip(&du).map(|(a, b)| a * b).sum::<f64>();
        let gd = gd_u + gs * dsig;
        let upu: f64 = prec.matvec(&node.values[..m]).iter().zip(&node.values[..m]).map(|(a, b)| a * b).sum();
        grad_norm = gd.max(0.0).sqrt() / upu.max(1e-300).sqrt();
        if grad_norm < opts.tol {
            converged = true;
            break;
        }
        step = (2.0 * step).min(1.0);
        let mut accepted = false;
        while step >= 1e-12 {
            let ns = (s0 - step * dsig).clamp(-MAX_DILATION, MAX_DILATION);
            let mut v = node.values.clone();
            for i in 0..m {
                v[i] -= step * du[i];
            }
            let jn = jv(ns, &v);
            if jn.is_finite() && jn <= level - 1e-4 * (step * gd_u + gs * (s0 - ns)) {
                path[ks] = v;
                sigma[ks] = ns;
                levels[ks] = jn;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        let after = levels.iter().skip(1).take(levels.len() - 2).fold(f64::NEG_INFINITY, |a, b| a.max(*b));
        if after > level + opts.level_increase_tol * level.abs() {
            return Err(BisolveError::LevelIncrease { from: level, to: after });
        }
        prev_level = after.min(level);
        if !accepted {
            failures += 1;
            step = 1.0;
            if failures >= 3 {
                break;
            }
        } else {
            failures = 0;
        }
        // Prune the lowest nodes away from the maximizer.
        while path.len() > opts.max_nodes {
            let j = (1..path.len() - 1)
                .filter(|j| (*j as isize - ks as isize).abs() > 1)
                .min_by(|a, b| levels[*a].partial_cmp(&levels[*b]).unwrap())
                .unwrap();
            path.remove(j);
            sigma.remove(j);
            levels.remove(j);
            if j < ks {
                ks -= 1;
            }
        }
    }
    let s_star = sigma[ks];
    let pulled = dilate(&profile(path[ks].clone()), s_star)?;
    let state = MountainPassState { level: levels[ks], max_index: ks, path, sigma, levels };
    Ok(MountainPassResult {
        profile: pulled,
        m_theta: state.level,
        sigma: s_star,
        sweeps,
        grad_norm,
        converged,
        level_increases: increases,
        max_level_increase: max_increase,
        state,
    })
}

// ---------------------------------------------------------------------------------------
// Path endpoint and level cap

/// The plateau `ū` used as path endpoint and the cap `max_t I_{θ₁}(tū)`.
#[derive(Debug, Clone, Serialize)]
pub struct PlateauChoice {
    #[serde(skip)]
    pub profile: Option<RadialProfile>,
    pub xi: f64,
    pub radius: f64,
    pub energy: f64,
    pub level_cap: f64,
    pub t_at_cap: f64,
}

/// Smallest plateau radius (then smallest height `≥ ξ₀`) with `I_{θ₁}(ū) < 0` and
/// `sup|ū′| < 1 − θ₁`.
pub fn choose_plateau(trunc1: &TruncatedOperator, nl: &Nonlinearity, grid: Arc<RadialGrid>, xi0: f64, s_max: f64) -> Result<PlateauChoice> {
    let limit = if trunc1.is_validation() { f64::INFINITY } else { 1.0 - trunc1.theta1 };
    let mut radius = 1.0f64;
    while radius + radius.sqrt() < grid.r_max() {
        let mut xi = xi0;
        while xi <= s_max && xi / radius.sqrt() < limit {
            let u = build_plateau(xi, radius, grid.clone())?;
            if u.sup_derivative() < limit {
                let e = energy::functional(trunc1, nl, &u);
                if e < 0.0 {
                    let (t_at_cap, level_cap) = ray_max(trunc1, nl, &u);
                    return Ok(PlateauChoice { profile: Some(u), xi, radius, energy: e, level_cap, t_at_cap });
                }
            }
            xi *= 1.05;
        }
        radius *= 1.1;
    }
    Err(BisolveError::Domain("no plateau with negative energy fits on the grid".into()))
}

/// `max_{t∈[0,1]} I(t u)` by sampling and golden-section refinement.
pub fn ray_max(trunc: &TruncatedOperator, nl: &Nonlinearity, u: &RadialProfile) -> (f64, f64) {
    let f = |t: f64| energy::functional(trunc, nl, &u.with_values(u.values.iter().map(|v| t * v).collect()));
    let samples = 400;
    let vals: Vec<f64> = (0..=samples).map(|i| f(i as f64 / samples as f64)).collect();
    let imax = (0..=samples).max_by(|a, b| vals[*a].partial_cmp(&vals[*b]).unwrap()).unwrap();
    let lo = (imax.max(1) - 1) as f64 / samples as f64;
    let hi = ((imax + 1).min(samples)) as f64 / samples as f64;
    let (t, v) = golden_max(lo, hi, 1e-10, f);
    if v >= vals[imax] {
        (t, v)
    } else {
        (imax as f64 / samples as f64, vals[imax])
    }
}

// ---------------------------------------------------------------------------------------
// θ-continuation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QRule {
    /// The regime's interval rule.
    Selected,
    /// The interval was empty; `max(q_lower_bound, N + 1)` was used instead.
    RelaxedFallback,
    /// Validation mode: no truncation.
    None,
}

/// `q` for one stage, falling back to `max(q_lower_bound, N + 1)` when the regime's
/// interval is empty.
pub fn stage_q(fam: &OperatorFamily, theta: f64, regime: MassRegime, gamma: f64, n: usize) -> Result<(f64, QRule)> {
    match select_q(fam, theta, regime, gamma, n) {
        Ok(q) => Ok((q, QRule::Selected)),
        Err(BisolveError::Infeasible { .. }) => Ok((q_lower_bound(fam, theta)?.max(n as f64 + 1.0), QRule::RelaxedFallback)),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverOptions {
    pub theta1: f64,
    pub max_stages: usize,
    pub mountain_pass: MountainPassOptions,
    pub newton_max_iter: usize,
    pub cross_check: bool,
    /// Tolerance on the Nehari and Pohozaev residuals.
    pub residual_tol: f64,
    pub energy_id_tol: f64,
    pub el_tol: f64,
    /// Upper end of the `ξ₀` search.
    pub xi_search_max: f64,
    /// Run the a ≡ 1 check without truncation.
    pub validation_mode: bool,
    /// Mountain-pass gradient norm at which Newton polishing is first attempted.
    pub handoff_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            theta1: 0.5,
            max_stages: 8,
            mountain_pass: MountainPassOptions::default(),
            newton_max_iter: 60,
            cross_check: true,
            residual_tol: 1e-4,
            energy_id_tol: 1e-3,
            el_tol: 1e-3,
            xi_search_max: 10.0,
            validation_mode: false,
            handoff_tol: 1e-3,
        }
    }
}

/// Everything recorded for one θ.
#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub theta: f64,
    pub q: f64,
    pub q_rule: QRule,
    pub m_theta: f64,
    pub path_level: f64,
    pub u0: f64,
    pub sup_du: f64,
    pub flux_bound: f64,
    pub nehari: f64,
    pub pohozaev: f64,
    pub el: f64,
    pub energy_id: f64,
    pub gradient_certified: bool,
    pub mp_sweeps: usize,
    pub mp_grad_norm: f64,
    pub mp_converged: bool,
    pub level_increases: usize,
    pub newton_iterations: usize,
    pub newton_converged: bool,
    pub shoot_u0: Option<f64>,
    pub oracle_rel_diff: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Certified,
    Validation,
    ResidualsAboveTolerance,
    ScheduleExhausted,
    Nonconverged,
}

impl SolveStatus {
    pub fn success(&self) -> bool {
        matches!(self, SolveStatus::Certified | SolveStatus::Validation)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProblemEcho {
    pub operator: String,
    pub nonlinearity: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub regime: MassRegime,
    pub gamma: f64,
    pub m: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualSet {
    pub nehari: f64,
    pub pohozaev: f64,
    pub el: f64,
    pub energy_id: f64,
}

/// Energies of the certified solution; the last three use the untruncated `a`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergySet {
    pub m_theta: f64,
    pub kinetic: f64,
    #[serde(rename = "G1_int")]
    pub g1_int: f64,
    #[serde(rename = "G2_int")]
    pub g2_int: f64,
    pub total: f64,
    pub int_big_a: f64,
    pub int_a_grad_sq: f64,
    pub int_abs_big_g: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleAgreement {
    pub shoot_u0: f64,
    pub mp_u0: f64,
    pub rel_diff: f64,
    pub bracket_monotone: bool,
    pub glue_radius: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OriginFlux {
    pub r1: f64,
    pub value: f64,
    pub max_flux: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelBound {
    pub cap: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub schema: String,
    pub status: SolveStatus,
    pub problem: ProblemEcho,
    pub grid: GridEcho,
    pub theta1: f64,
    pub theta_bar: Option<f64>,
    pub q_bar: Option<f64>,
    pub sup_du: Option<f64>,
    pub stages: Vec<StageRecord>,
    pub residuals: Option<ResidualSet>,
    pub energies: Option<EnergySet>,
    pub energy: Option<energy::EnergyBreakdown>,
    pub decay: Option<DecayFit>,
    pub origin_flux: Option<OriginFlux>,
    pub oracle: Option<OracleAgreement>,
    pub level_bound: LevelBound,
    pub flux_bound_max: f64,
    pub plateau: PlateauChoice,
    pub failure_reason: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridEcho {
    pub r_max: f64,
    pub cells: usize,
    pub grading: f64,
}

/// The report together with the certified profile and its truncation; without
/// certification, the profile of the last completed stage.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub report: SolveReport,
    pub profile: Option<RadialProfile>,
    pub trunc: Option<TruncatedOperator>,
}

/// Residuals and energies of a profile under one truncation, with `m_θ = I_θ(u)`.
pub fn evaluate_profile(trunc: &TruncatedOperator, nl: &Nonlinearity, u: &RadialProfile) -> (energy::EnergyBreakdown, ResidualSet) {
    let e = energy::energy(trunc, nl, u);
    let ids = energy::identity_residuals(trunc, nl, u, e.total);
    (e, ResidualSet { nehari: ids.nehari, pohozaev: ids.pohozaev, el: e.el_residual_sup, energy_id: ids.energy_id })
}

/// `max_c |a_θ(|u′|²)u′|`.
pub fn flux_bound(trunc: &TruncatedOperator, u: &RadialProfile) -> f64 {
    u.derivative().iter().fold(0f64, |m, d| m.max(trunc.flux(*d).abs()))
}

/// Finite-energy integrals with the untruncated operator; `None` when `sup|u′| ≥ 1`.
pub fn finite_energy_integrals(fam: &OperatorFamily, nl: &Nonlinearity, u: &RadialProfile) -> Option<(f64, f64, f64)> {
    if fam.bounded_domain_check(u.sup_derivative()) {
        let a_int = u.integrate_cells(|x| fam.primitive(x));
        let work = u.integrate_cells(|x| fam.a(x) * x);
        let g_abs = u.integrate_nodal(|s| nl.big_g(s).abs());
        Some((a_int, work, g_abs))
    } else {
        None
    }
}

impl OperatorFamily {
    fn bounded_domain_check(&self, sup_du: f64) -> bool {
        matches!(self, OperatorFamily::Laplacian) || sup_du * sup_du < 1.0
    }
}

/// Whether the residuals meet the configured tolerances.
pub fn residuals_ok(r: &ResidualSet, o: &SolverOptions) -> bool {
    r.nehari.abs() <= o.residual_tol && r.pohozaev.abs() <= o.residual_tol && r.energy_id.abs() <= o.energy_id_tol && r.el.abs() <= o.el_tol
}

// Mountain pass to the handoff tolerance, then Newton. Falls back to the full mountain-pass
// tolerance when Newton fails or lands on a different level.
fn stage_critical_point(
    trunc: &TruncatedOperator,
    nl: &Nonlinearity,
    u_bar: &RadialProfile,
    mp_opts: &MountainPassOptions,
    opts: &SolverOptions,
) -> Result<(MountainPassResult, PolishResult)> {
    let accept = |mp: &MountainPassResult, p: &PolishResult| {
        let level = energy::functional(trunc, nl, &p.profile);
        p.converged && p.profile.sup() > 0.0 && (level - mp.m_theta).abs() <= 0.05 * mp.m_theta.abs()
    };
    if opts.handoff_tol > mp_opts.tol {
        let quick = MountainPassOptions { tol: opts.handoff_tol, ..mp_opts.clone() };
        if let Ok(mp) = mountain_pass_run(trunc, nl, u_bar, quick.nodes, &quick) {
            let polish = newton_polish(trunc, nl, &mp.profile, opts.newton_max_iter);
            if accept(&mp, &polish) {
                return Ok((mp, polish));
            }
        }
    }
    let mp = mountain_pass_run(trunc, nl, u_bar, mp_opts.nodes, mp_opts)?;
    let polish = newton_polish(trunc, nl, &mp.profile, opts.newton_max_iter);
    Ok((mp, polish))
}

/// Operator screen and mass regime; validation mode only requires `a ≡ 1`.
pub fn screen_problem(fam: &OperatorFamily, nl: &Nonlinearity, opts: &SolverOptions) -> Result<(MassRegime, f64)> {
    if opts.validation_mode {
        // The growth screen guards the truncated problem; the classical equation only needs
        // the mass sign to pick the far field.
        if !matches!(fam, OperatorFamily::Laplacian) {
            return Err(BisolveError::Domain("validation mode requires the laplacian operator".into()));
        }
        let r = if nl.m > 0.0 { MassRegime::PositiveMass } else { MassRegime::ZeroMassLargeGamma };
        return Ok((r, nl.m));
    }
    let screen = crate::operators::screen_operator(fam);
    if !screen.accepted() {
        return Err(BisolveError::Admissibility(format!(
            "operator screen failed: positive={}, convex={}, divergent={}",
            screen.positive, screen.flux_convex_increasing, screen.divergent
        )));
    }
    let rep = classify_regime(nl)?;
    Ok((rep.regime, rep.m_estimate))
}

/// The truncated operator at `theta` with its `q` (`a` itself in validation mode).
pub fn stage_truncation(
    fam: &OperatorFamily,
    nl: &Nonlinearity,
    regime: MassRegime,
    opts: &SolverOptions,
    theta: f64,
) -> Result<(TruncatedOperator, f64, QRule)> {
    if opts.validation_mode {
        return Ok((TruncatedOperator::validation(fam.clone()), 2.0, QRule::None));
    }
    let (q, rule) = stage_q(fam, theta, regime, nl.gamma, nl.n)?;
    Ok((TruncatedOperator::new(fam.clone(), theta, opts.theta1, q)?, q, rule))
}

/// The `θ` values tried by the pipeline, largest first.
pub fn theta_schedule(opts: &SolverOptions) -> Vec<f64> {
    if opts.validation_mode {
        vec![0.0]
    } else {
        (0..opts.max_stages).map(|k| opts.theta1 / 2f64.powi(k as i32)).collect()
    }
}

/// Shoots for the ground state of `trunc` and compares its height with `u(0)`.
pub fn shooting_cross_check(trunc: &TruncatedOperator, nl: &Nonlinearity, u: &RadialProfile) -> Result<(OriginFlux, OracleAgreement)> {
    let gs = ground_state_shoot(trunc, nl, u.grid.clone())?;
    let s = GroundStateSummary::from(&gs);
    Ok((s.origin, s.agreement(u.values[0])))
}

/// Screens, regime and path endpoint shared by all stages of one problem.
#[derive(Debug, Clone)]
pub struct PreparedProblem {
    pub family: OperatorFamily,
    pub nonlinearity: Nonlinearity,
    pub grid: Arc<RadialGrid>,
    pub regime: MassRegime,
    pub m_estimate: f64,
    pub plateau: PlateauChoice,
    pub u_bar: RadialProfile,
    pub options: SolverOptions,
    mp_options: MountainPassOptions,
}

/// Runs the operator and growth screens and picks the path endpoint `ū`.
pub fn prepare(fam: &OperatorFamily, nl: &Nonlinearity, grid: Arc<RadialGrid>, opts: &SolverOptions) -> Result<PreparedProblem> {
    let (regime, m_estimate) = screen_problem(fam, nl, opts)?;
    if grid.n != nl.n {
        return Err(BisolveError::Domain(format!("grid dimension {} differs from N = {}", grid.n, nl.n)));
    }
    let xi0 = find_xi0(nl, opts.xi_search_max)?;
    let mut prepared = PreparedProblem {
        family: fam.clone(),
        nonlinearity: nl.clone(),
        grid: grid.clone(),
        regime,
        m_estimate,
        plateau: PlateauChoice { profile: None, xi: 0.0, radius: 0.0, energy: 0.0, level_cap: 0.0, t_at_cap: 0.0 },
        u_bar: RadialProfile::zeros(grid.clone()),
        options: opts.clone(),
        mp_options: MountainPassOptions {
            mass: if regime == MassRegime::PositiveMass { m_estimate } else { 0.0 },
            ..opts.mountain_pass.clone()
        },
    };
    let (trunc1, _, _) = prepared.truncation(opts.theta1)?;
    let plateau = choose_plateau(&trunc1, nl, grid, xi0, opts.xi_search_max)?;
    prepared.u_bar = plateau.profile.clone().expect("plateau profile");
    prepared.plateau = plateau;
    Ok(prepared)
}

impl PreparedProblem {
    /// `θ₁, θ₁/2, …` (a single untruncated stage in validation mode).
    pub fn schedule(&self) -> Vec<f64> {
        theta_schedule(&self.options)
    }

    /// The truncated operator used at `theta`, with its `q` and how `q` was chosen.
    pub fn truncation(&self, theta: f64) -> Result<(TruncatedOperator, f64, QRule)> {
        stage_truncation(&self.family, &self.nonlinearity, self.regime, &self.options, theta)
    }

    /// Mountain pass, polish, shooting cross-check and the gradient test at one `θ`.
    pub fn run_stage(&self, theta: f64) -> Result<StageOutcome> {
        let nl = &self.nonlinearity;
        let opts = &self.options;
        let (trunc, q, q_rule) = self.truncation(theta)?;
        let (mp, polish) = match stage_critical_point(&trunc, nl, &self.u_bar, &self.mp_options, opts) {
            Ok(r) => r,
            Err(e) => {
                return Ok(StageOutcome { record: failed_stage(theta, q, q_rule, Some(e.to_string())), trunc, profile: None, oracle: None })
            }
        };
        let mut note = None;
        let u = polish.profile;
        let (e, res) = evaluate_profile(&trunc, nl, &u);
        let sup_du = u.sup_derivative();
        let oracle = if opts.cross_check {
            match ground_state_shoot(&trunc, nl, self.grid.clone()) {
                Ok(gs) => Some(GroundStateSummary::from(&gs)),
                Err(err) => {
                    note = Some(format!("shooting cross-check failed: {err}"));
                    None
                }
            }
        } else {
            None
        };
        let converged = polish.converged && u.sup() > 0.0;
        if !converged && note.is_none() {
            note = Some(format!("newton polish stopped at residual {:e}", polish.residual));
        }
        let u0 = u.values[0];
        let record = StageRecord {
            theta,
            q,
            q_rule,
            m_theta: e.total,
            path_level: mp.m_theta,
            u0,
            sup_du,
            flux_bound: flux_bound(&trunc, &u),
            nehari: res.nehari,
            pohozaev: res.pohozaev,
            el: res.el,
            energy_id: res.energy_id,
            gradient_certified: opts.validation_mode || sup_du <= 1.0 - theta,
            mp_sweeps: mp.sweeps,
            mp_grad_norm: mp.grad_norm,
            mp_converged: mp.converged,
            level_increases: mp.level_increases,
            newton_iterations: polish.iterations,
            newton_converged: converged,
            shoot_u0: oracle.as_ref().map(|o| o.xi),
            oracle_rel_diff: oracle.as_ref().map(|o| (u0 - o.xi).abs() / o.xi),
            note,
        };
        Ok(StageOutcome { record, trunc, profile: Some(u), oracle })
    }
}

/// One stage: its record, the truncation, and the polished profile when one was found.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub record: StageRecord,
    pub trunc: TruncatedOperator,
    pub profile: Option<RadialProfile>,
    oracle: Option<GroundStateSummary>,
}

/// The full pipeline: regime screen, path endpoint, then for `θ = θ₁, θ₁/2, …` a mountain
/// pass, Newton polish, shooting cross-check and the gradient test `sup|u′| ≤ 1 − θ`.
pub fn solve_full(fam: &OperatorFamily, nl: &Nonlinearity, grid: Arc<RadialGrid>, opts: &SolverOptions) -> Result<SolveOutcome> {
    let problem = prepare(fam, nl, grid.clone(), opts)?;
    let mut stages = Vec::new();
    let mut status = SolveStatus::ScheduleExhausted;
    let mut failure_reason = None;
    let mut last: Option<StageOutcome> = None;
    for theta in problem.schedule() {
        let stage = problem.run_stage(theta)?;
        stages.push(stage.record.clone());
        let rec = &stage.record;
        let has_profile = stage.profile.is_some();
        if has_profile {
            last = Some(stage.clone());
        }
        if rec.gradient_certified && rec.newton_converged {
            let res = ResidualSet { nehari: rec.nehari, pohozaev: rec.pohozaev, el: rec.el, energy_id: rec.energy_id };
            if residuals_ok(&res, opts) {
                status = if opts.validation_mode { SolveStatus::Validation } else { SolveStatus::Certified };
            } else {
                status = SolveStatus::ResidualsAboveTolerance;
                failure_reason = Some(format!("gradient bound holds at theta = {theta} but residuals exceed tolerances: {res:?}"));
            }
            break;
        }
    }
    if !status.success() && failure_reason.is_none() {
        if stages.iter().all(|s| !s.newton_converged) {
            status = SolveStatus::Nonconverged;
            failure_reason = Some(format!("no stage produced a converged critical point ({} stages)", stages.len()));
        } else {
            failure_reason = Some(format!("no theta in the schedule certified sup|u'| <= 1 - theta ({} stages)", stages.len()));
        }
    }

    let flux_bound_max = stages.iter().map(|s| s.flux_bound).filter(|b| b.is_finite()).fold(0f64, f64::max);
    let level_bound = LevelBound {
        cap: problem.plateau.level_cap,
        holds: stages
            .iter()
            .filter(|s| s.m_theta.is_finite())
            .all(|s| s.m_theta > 0.0 && s.m_theta <= problem.plateau.level_cap * (1.0 + 1e-12)),
    };
    let mut report = SolveReport {
        schema: REPORT_SCHEMA.into(),
        status,
        problem: ProblemEcho {
            operator: fam.name(),
            nonlinearity: nl.name(),
            n: nl.n,
            regime: problem.regime,
            gamma: nl.gamma,
            m: problem.m_estimate,
        },
        grid: GridEcho { r_max: grid.r_max(), cells: grid.cells(), grading: grid.grading },
        theta1: opts.theta1,
        theta_bar: None,
        q_bar: None,
        sup_du: None,
        stages,
        residuals: None,
        energies: None,
        energy: None,
        decay: None,
        origin_flux: None,
        oracle: None,
        level_bound,
        flux_bound_max,
        plateau: problem.plateau.clone(),
        failure_reason,
    };
    let Some(StageOutcome { trunc, profile: Some(u), oracle, .. }) = last else {
        return Ok(SolveOutcome { report, profile: None, trunc: None });
    };
    // Solution-derived numbers describe the certified profile, or the last one computed.
    if status.success() {
        report.theta_bar = Some(trunc.theta);
    }
    fill_solution_fields(&mut report, fam, nl, &trunc, &u);
    if let Some(o) = oracle {
        report.origin_flux = Some(o.origin);
        report.oracle = Some(o.agreement(u.values[0]));
    }
    Ok(SolveOutcome { report, profile: Some(u), trunc: Some(trunc) })
}

pub const REPORT_SCHEMA: &str = "bisolve-report-1";

/// Every report number that is a function of the profile and its truncation alone.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionFields {
    pub q_bar: f64,
    pub sup_du: f64,
    pub flux_bound: f64,
    pub residuals: ResidualSet,
    pub energies: EnergySet,
    pub energy: energy::EnergyBreakdown,
    pub decay: Option<DecayFit>,
}

pub fn solution_fields(fam: &OperatorFamily, nl: &Nonlinearity, trunc: &TruncatedOperator, u: &RadialProfile) -> SolutionFields {
    let (e, residuals) = evaluate_profile(trunc, nl, u);
    let (int_big_a, int_a_grad_sq, int_abs_big_g) = finite_energy_integrals(fam, nl, u).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    SolutionFields {
        q_bar: trunc.q,
        sup_du: u.sup_derivative(),
        flux_bound: flux_bound(trunc, u),
        residuals,
        energies: EnergySet {
            m_theta: e.total,
            kinetic: e.kinetic,
            g1_int: e.g1_int,
            g2_int: e.g2_int,
            total: e.total,
            int_big_a,
            int_a_grad_sq,
            int_abs_big_g,
        },
        energy: e,
        decay: decay_check(u, 2.0).ok(),
    }
}

fn fill_solution_fields(report: &mut SolveReport, fam: &OperatorFamily, nl: &Nonlinearity, trunc: &TruncatedOperator, u: &RadialProfile) {
    let f = solution_fields(fam, nl, trunc, u);
    report.q_bar = Some(f.q_bar);
    report.sup_du = Some(f.sup_du);
    report.residuals = Some(f.residuals);
    report.energies = Some(f.energies);
    report.energy = Some(f.energy);
    report.decay = f.decay;
}

// What the report keeps from a shooting cross-check.
#[derive(Debug, Clone, Copy)]
struct GroundStateSummary {
    xi: f64,
    bracket_monotone: bool,
    glue_radius: f64,
    origin: OriginFlux,
}

impl Default for GroundStateSummary {
    fn default() -> Self {
        GroundStateSummary { xi: 0.0, bracket_monotone: false, glue_radius: 0.0, origin: OriginFlux { r1: 0.0, value: 0.0, max_flux: 0.0, ratio: 0.0 } }
    }
}

impl GroundStateSummary {
    fn agreement(&self, mp_u0: f64) -> OracleAgreement {
        OracleAgreement {
            shoot_u0: self.xi,
            mp_u0,
            rel_diff: (mp_u0 - self.xi).abs() / self.xi,
            bracket_monotone: self.bracket_monotone,
            glue_radius: self.glue_radius,
        }
    }
}

impl From<&GroundState> for GroundStateSummary {
    fn from(gs: &GroundState) -> Self {
        let value = gs.record.origin_flux();
        let max_flux = gs.record.max_flux();
        GroundStateSummary {
            xi: gs.xi,
            bracket_monotone: gs.bracket_monotone,
            glue_radius: gs.glue_radius,
            origin: OriginFlux { r1: gs.record.start_radius(), value, max_flux, ratio: value / max_flux },
        }
    }
}

fn failed_stage(theta: f64, q: f64, q_rule: QRule, note: Option<String>) -> StageRecord {
    StageRecord {
        theta,
        q,
        q_rule,
        m_theta: f64::NAN,
        path_level: f64::NAN,
        u0: f64::NAN,
        sup_du: f64::NAN,
        flux_bound: f64::NAN,
        nehari: f64::NAN,
        pohozaev: f64::NAN,
        el: f64::NAN,
        energy_id: f64::NAN,
        gradient_certified: false,
        mp_sweeps: 0,
        mp_grad_norm: f64::NAN,
        mp_converged: false,
        level_increases: 0,
        newton_iterations: 0,
        newton_converged: false,
        shoot_u0: None,
        oracle_rel_diff: None,
        note,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::TabulatedSource;

    fn cubic_validation() -> (TruncatedOperator, Nonlinearity) {
        (TruncatedOperator::validation(OperatorFamily::Laplacian), Nonlinearity::power_minus_mass(1.0, 2.0, 4.0, 3))
    }

    #[test]
    fn zero_height_is_the_trivial_trajectory() {
        let (tr, nl) = cubic_validation();
        let rec = shoot(&tr, &nl, 0.0, 40.0).unwrap();
        assert_eq!(rec.outcome, ShootOutcome::Converged);
        assert!(rec.trajectory.y.iter().all(|y| y[0] == 0.0 && y[1] == 0.0));
    }

    #[test]
    fn validation_heights_undershoot_and_overshoot() {
        let (tr, nl) = cubic_validation();
        assert_eq!(shoot(&tr, &nl, 1.0, 40.0).unwrap().outcome, ShootOutcome::PositiveFloor);
        let over = shoot(&tr, &nl, 10.0, 40.0).unwrap();
        assert_eq!(over.outcome, ShootOutcome::Crossing);
        assert!(over.event_radius > 0.0 && over.event_radius < 40.0);
    }

    #[test]
    fn negative_height_is_a_domain_error() {
        let (tr, nl) = cubic_validation();
        assert!(matches!(shoot(&tr, &nl, -1.0, 40.0), Err(BisolveError::Domain(_))));
    }

    #[test]
    fn pure_mass_term_has_no_bracket() {
        let tr = TruncatedOperator::validation(OperatorFamily::Laplacian);
        let nl = Nonlinearity::tabulated(TabulatedSource::from_fn(|s| -s), 1.0, 2.0, 3);
        let grid = Arc::new(RadialGrid::graded(3, 40.0, 512, 2.0).unwrap());
        assert!(matches!(ground_state_shoot(&tr, &nl, grid), Err(BisolveError::BracketNotFound { .. })));
    }

    #[test]
    fn series_radius_is_capped() {
        assert!((series_radius(40.0) - 4e-5).abs() < 1e-20);
        assert_eq!(series_radius(1e4), 1e-4);
    }

    #[test]
    fn relaxed_q_when_interval_is_empty() {
        let bi = OperatorFamily::born_infeld();
        // q_lb(0.125) = 9 exceeds γ = 7: the zero-mass interval is empty.
        let (q, rule) = stage_q(&bi, 0.125, MassRegime::ZeroMassLargeGamma, 7.0, 3).unwrap();
        assert_eq!(rule, QRule::RelaxedFallback);
        assert!((q - 9.0).abs() < 1e-12);
        let (q, rule) = stage_q(&bi, 0.5, MassRegime::ZeroMassLargeGamma, 7.0, 3).unwrap();
        assert_eq!(rule, QRule::Selected);
        assert!((q - 5.0).abs() < 1e-12);
    }

    #[test]
    fn polishing_a_critical_point_is_a_no_op() {
        let (tr, nl) = cubic_validation();
        let grid = Arc::new(RadialGrid::graded(3, 40.0, 1024, 2.0).unwrap());
        let gs = ground_state_shoot(&tr, &nl, grid).unwrap();
        let once = newton_polish(&tr, &nl, &gs.profile, 60);
        assert!(once.converged);
        let twice = newton_polish(&tr, &nl, &once.profile, 60);
        assert!(twice.converged);
        let drift = once.profile.values.iter().zip(&twice.profile.values).fold(0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(drift < 1e-10, "drift {drift}");
    }

    #[test]
    fn ray_maximum_of_a_plateau_is_positive() {
        let nl = Nonlinearity::power_minus_mass(1.0, 2.0, 4.0, 4);
        let tr = TruncatedOperator::new(OperatorFamily::born_infeld(), 0.5, 0.5, 5.0).unwrap();
        let grid = Arc::new(RadialGrid::graded(4, 40.0, 1024, 2.0).unwrap());
        let u = build_plateau(1.9, 12.0, grid).unwrap();
        let (t, cap) = ray_max(&tr, &nl, &u);
        assert!(cap > 0.0 && t > 0.0 && t < 1.0);
        assert!(energy::functional(&tr, &nl, &u) < 0.0);
    }

    #[test]
    fn mountain_pass_rejects_bad_endpoint() {
        let nl = Nonlinearity::power_minus_mass(1.0, 2.0, 4.0, 4);
        let tr = TruncatedOperator::new(OperatorFamily::born_infeld(), 0.5, 0.5, 5.0).unwrap();
        let grid = Arc::new(RadialGrid::graded(4, 40.0, 512, 2.0).unwrap());
        let small = build_plateau(0.5, 2.0, grid).unwrap();
        let res = mountain_pass(&tr, &nl, &small, 16, &MountainPassOptions::default());
        assert!(matches!(res, Err(BisolveError::Domain(_))));
    }
}
