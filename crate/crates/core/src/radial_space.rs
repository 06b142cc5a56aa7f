//! Radial grids on `[0, R_max]`, piecewise-linear profiles, the weighted quadrature used
//! by every integral, dilations `u ↦ u(e^{−σ}·)`, plateau test functions and decay fits.
//!
//! Quadrature: a cell `[r_c, r_{c+1}]` carries the exact shell volume
//! `ω_{N−1}(r_{c+1}^N − r_c^N)/N`, so gradient integrals of piecewise-linear profiles are
//! exact. Nodal integrals use lumped weights chosen so that the discrete energy gradient
//! divided by the weight is a consistent approximation of the radial operator, including at
//! the origin.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{BisolveError, Result};
use crate::interp::Pchip;

/// Surface area of the unit sphere in `ℝ^N`, `2π^{N/2}/Γ(N/2)`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n)
}

// Γ(n/2) for a positive integer n.
fn gamma_half(n: usize) -> f64 {
    let (mut value, mut k) = if n.is_multiple_of(2) { (1.0, 2usize) } else { (std::f64::consts::PI.sqrt(), 1usize) };
    while k < n {
        value *= k as f64 / 2.0;
        k += 2;
    }
    value
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialGrid {
    pub n: usize,
    pub grading: f64,
    nodes: Vec<f64>,
    #[serde(skip)]
    omega: f64,
    #[serde(skip)]
    widths: Vec<f64>,
    #[serde(skip)]
    cell_volumes: Vec<f64>,
    #[serde(skip)]
    node_weights: Vec<f64>,
}

impl RadialGrid {
    /// `r_i = R_max (i/M)^grading`, `i = 0..M`.
    pub fn graded(n: usize, r_max: f64, m: usize, grading: f64) -> Result<Self> {
        if !(grading >= 1.0) {
            return Err(BisolveError::Domain(format!("grading exponent {grading} must be at least 1")));
        }
        let nodes: Vec<f64> = (0..=m)
            .map(|i| if i == m { r_max } else { r_max * (i as f64 / m as f64).powf(grading) })
            .collect();
        let mut g = Self::from_nodes(n, nodes)?;
        g.grading = grading;
        Ok(g)
    }

    /// Grid through explicit nodes; requires `r_0 = 0`, strictly increasing nodes,
    /// `R_max ≥ 10` and at least 256 cells.
    pub fn from_nodes(n: usize, nodes: Vec<f64>) -> Result<Self> {
        if n < 3 {
            return Err(BisolveError::Domain(format!("dimension N = {n} must be at least 3")));
        }
        if nodes.len() < 257 {
            return Err(BisolveError::Domain(format!("grid needs M >= 256 cells, got {}", nodes.len().saturating_sub(1))));
        }
        if nodes[0] != 0.0 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(BisolveError::Domain("grid nodes must start at 0 and increase strictly".into()));
        }
        let r_max = *nodes.last().unwrap();
        if !(r_max >= 10.0) {
            return Err(BisolveError::Domain(format!("R_max = {r_max} must be at least 10")));
        }
        let nf = n as f64;
        let omega = sphere_area(n);
        let m = nodes.len() - 1;
        let widths: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        let shells: Vec<f64> = nodes.windows(2).map(|w| (w[1].powi(n as i32) - w[0].powi(n as i32)) / nf).collect();
        let flux_weights: Vec<f64> = (0..m).map(|c| shells[c] * (nodes[c] + nodes[c + 1]) / widths[c]).collect();
        let mut node_weights = vec![0.0; m + 1];
        node_weights[0] = omega * flux_weights[0] / (2.0 * nf);
        for i in 1..m {
            node_weights[i] = omega * (flux_weights[i] - flux_weights[i - 1]) / (2.0 * nf);
        }
        let cell_volumes = shells.iter().map(|v| omega * v).collect();
        Ok(RadialGrid { n, grading: 1.0, nodes, omega, widths, cell_volumes, node_weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// `ω_{N−1}(r_{c+1}^N − r_c^N)/N` per cell.
    pub fn cell_volumes(&self) -> &[f64] {
        &self.cell_volumes
    }

    /// Lumped nodal weights; the last (Dirichlet) node has weight 0.
    pub fn node_weights(&self) -> &[f64] {
        &self.node_weights
    }
}

/// Nodal values on a grid, linear between nodes, vanishing at `R_max`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes.len() {
            return Err(BisolveError::Domain(format!("{} values for {} nodes", values.len(), grid.nodes.len())));
        }
        if *values.last().unwrap() != 0.0 {
            return Err(BisolveError::Domain("profile must vanish at R_max".into()));
        }
        Ok(RadialProfile { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.nodes.len()];
        RadialProfile { grid, values }
    }

    /// Samples `f` at the nodes and forces the last value to 0.
    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<RadialGrid>, f: F) -> Self {
        let mut values: Vec<f64> = grid.nodes.iter().map(|&r| f(r)).collect();
        *values.last_mut().unwrap() = 0.0;
        RadialProfile { grid, values }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        RadialProfile { grid: self.grid.clone(), values }
    }

    /// Cell slopes `(u_{c+1} − u_c)/(r_{c+1} − r_c)`.
    pub fn derivative(&self) -> Vec<f64> {
        self.values.windows(2).zip(self.grid.widths()).map(|(w, h)| (w[1] - w[0]) / h).collect()
    }

    pub fn sup_derivative(&self) -> f64 {
        self.derivative().iter().fold(0f64, |m, d| m.max(d.abs()))
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0f64, |m, v| m.max(v.abs()))
    }

    /// Largest node radius carrying a nonzero value, or the start of the first zero cell after it.
    pub fn support_radius(&self) -> f64 {
        match self.values.iter().rposition(|v| *v != 0.0) {
            None => 0.0,
            Some(i) => self.grid.nodes[(i + 1).min(self.grid.cells())],
        }
    }

    /// `∫ f(u)` with the lumped nodal weights.
    pub fn integrate_nodal<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.values.iter().zip(self.grid.node_weights()).map(|(u, w)| w * f(*u)).sum()
    }

    /// `∫ f(|∇u|²)` over cells.
    pub fn integrate_cells<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.derivative().iter().zip(self.grid.cell_volumes()).map(|(d, v)| v * f(d * d)).sum()
    }
}

/// `|∇u|_e` and `|u|_e` for one exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormPair {
    pub exponent: f64,
    pub grad: f64,
    pub value: f64,
}

/// Lebesgue norms of the gradient and the profile for each exponent.
pub fn norms(p: &RadialProfile, exponents: &[f64]) -> Result<Vec<NormPair>> {
    let d = p.derivative();
    exponents
        .iter()
        .map(|&e| {
            if !(e >= 1.0) {
                return Err(BisolveError::Domain(format!("norm exponent {e} must be at least 1")));
            }
            let grad: f64 = d.iter().zip(p.grid.cell_volumes()).map(|(d, v)| v * d.abs().powf(e)).sum();
            let value = p.integrate_nodal(|u| u.abs().powf(e));
            Ok(NormPair { exponent: e, grad: grad.powf(1.0 / e), value: value.powf(1.0 / e) })
        })
        .collect()
}

/// `‖u‖₀ = (|∇u|₂² + |∇u|_q²)^{1/2}`, or `‖u‖` with `|u|_γ²` added when `gamma` is given.
pub fn space_norm(p: &RadialProfile, q: f64, gamma: Option<f64>) -> Result<f64> {
    let mut exps = vec![2.0, q];
    if let Some(g) = gamma {
        exps.push(g);
    }
    let n = norms(p, &exps)?;
    let mut sq = n[0].grad.powi(2) + n[1].grad.powi(2);
    if gamma.is_some() {
        sq += n[2].value.powi(2);
    }
    Ok(sq.sqrt())
}

/// `r ↦ u(e^{−σ} r)` on the same grid by monotone cubic interpolation; zero beyond the
/// original support. Logs a warning when the dilated support leaves the grid.
pub fn dilate(p: &RadialProfile, sigma: f64) -> Result<RadialProfile> {
    if !(sigma.abs() <= 2.0) {
        return Err(BisolveError::Domain(format!("dilation |sigma| = {} exceeds 2", sigma.abs())));
    }
    if sigma == 0.0 {
        return Ok(p.clone());
    }
    let r_max = p.grid.r_max();
    if sigma.exp() * p.support_radius() > r_max * (1.0 + 1e-12) {
        log::warn!("dilation by sigma = {sigma} pushes the support beyond R_max = {r_max}");
    }
    let interp = Pchip::new(p.grid.nodes().to_vec(), p.values.clone());
    let scale = (-sigma).exp();
    Ok(RadialProfile::from_fn(p.grid.clone(), |r| {
        let x = r * scale;
        if x >= r_max {
            0.0
        } else {
            interp.eval(x)
        }
    }))
}

/// Plateau `u = ξ₀` on `[0, R]`, linear down to 0 at `R + √R`, zero beyond.
pub fn build_plateau(xi0: f64, radius: f64, grid: Arc<RadialGrid>) -> Result<RadialProfile> {
    let outer = radius + radius.sqrt();
    if !(radius > 0.0) || outer >= grid.r_max() {
        return Err(BisolveError::Domain(format!("plateau ramp ends at {outer}, beyond R_max = {}", grid.r_max())));
    }
    let slope = xi0 / radius.sqrt();
    Ok(RadialProfile::from_fn(grid, |r| {
        if r <= radius {
            xi0
        } else if r < outer {
            xi0 - slope * (r - radius)
        } else {
            0.0
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub c_fit: f64,
    pub slope: f64,
}

/// Least-squares slope of `log|u|` against `log r` over `[R_max/10, R_max]`, and
/// `C_fit = max_r |u(r)| r^{(N−e)/e} / |∇u|_e`.
pub fn decay_check(p: &RadialProfile, exponent: f64) -> Result<DecayFit> {
    let n = p.grid.n as f64;
    if !(exponent >= 1.0 && exponent < n) {
        return Err(BisolveError::Domain(format!("decay exponent {exponent} must lie in [1, N)")));
    }
    let r_max = p.grid.r_max();
    let pts: Vec<(f64, f64)> = p
        .grid
        .nodes()
        .iter()
        .zip(&p.values)
        .filter(|(r, u)| **r >= 0.1 * r_max && **u != 0.0)
        .map(|(r, u)| (r.ln(), u.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(BisolveError::InsufficientSupport { radius: 0.1 * r_max });
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let grad = norms(p, &[exponent])?[0].grad;
    let power = (n - exponent) / exponent;
    let peak = p.grid.nodes().iter().zip(&p.values).map(|(r, u)| u.abs() * r.powf(power)).fold(0f64, f64::max);
    Ok(DecayFit { c_fit: peak / grad, slope })
}
