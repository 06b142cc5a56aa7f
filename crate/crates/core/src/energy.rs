//! The discrete functional `I_θ`, its dilation-augmented form `J_θ(σ, u)`, the exact
//! gradients of both, and the Nehari, Pohozaev and energy-identity residuals.

use serde::Serialize;

use crate::nonlinearity::Nonlinearity;
use crate::operators::TruncatedOperator;
use crate::radial_space::RadialProfile;

/// Integrals making up `I_θ(u)` and the residuals that vanish at critical points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    /// `½∫A_θ(|∇u|²)`.
    pub kinetic: f64,
    #[serde(rename = "G1_int")]
    pub g1_int: f64,
    #[serde(rename = "G2_int")]
    pub g2_int: f64,
    pub total: f64,
    /// `∫a_θ(|∇u|²)|∇u|²`.
    pub gradient_work: f64,
    pub nehari_residual: f64,
    pub pohozaev_residual: f64,
    /// `sup_i |el_i| / sup_i |g(u_i)|` over the free nodes.
    pub el_residual_sup: f64,
}

/// Relative residuals of the three identities satisfied by critical points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    pub nehari: f64,
    pub pohozaev: f64,
    pub energy_id: f64,
}

// Divides by the largest term; all-zero terms give 0.
fn relative(value: f64, terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(0f64, |m, t| m.max(t.abs()));
    if scale == 0.0 {
        0.0
    } else {
        value / scale
    }
}

/// Raw integrals at dilation `σ`: `(½∫A_θ(X), ∫a_θ(X)X, ∫G)` with `X = e^{−2σ}|∇u|²`.
fn dilated_integrals(trunc: &TruncatedOperator, nl: &Nonlinearity, sigma: f64, p: &RadialProfile) -> (f64, f64, f64) {
    let scale = (-2.0 * sigma).exp();
    let mut kin = 0.0;
    let mut work = 0.0;
    for (d, v) in p.derivative().iter().zip(p.grid.cell_volumes()) {
        let x = scale * d * d;
        kin += v * trunc.primitive_theta(x);
        work += v * trunc.a_theta(x) * x;
    }
    (0.5 * kin, work, p.integrate_nodal(|u| nl.big_g(u)))
}

/// All integrals and residuals of `I_θ` at `u`.
pub fn energy(trunc: &TruncatedOperator, nl: &Nonlinearity, p: &RadialProfile) -> EnergyBreakdown {
    let (kinetic, work, _) = dilated_integrals(trunc, nl, 0.0, p);
    let g1_int = p.integrate_nodal(|u| nl.big_g1(u));
    let g2_int = p.integrate_nodal(|u| nl.big_g2(u));
    let g1u = p.integrate_nodal(|u| nl.g1(u) * u);
    let g2u = p.integrate_nodal(|u| nl.g2(u) * u);
    let n = p.grid.n as f64;
    let nehari = relative(work + g2u - g1u, &[work, g2u, g1u]);
    let pohozaev = relative(
        n * kinetic - work + n * g2_int - n * g1_int,
        &[n * kinetic, work, n * g2_int, n * g1_int],
    );
    EnergyBreakdown {
        kinetic,
        g1_int,
        g2_int,
        total: kinetic + g2_int - g1_int,
        gradient_work: work,
        nehari_residual: nehari,
        pohozaev_residual: pohozaev,
        el_residual_sup: el_residual_sup(trunc, nl, p),
    }
}

/// `I_θ(u)` alone, the cheapest evaluation used inside line searches.
pub fn functional(trunc: &TruncatedOperator, nl: &Nonlinearity, p: &RadialProfile) -> f64 {
    j_value(trunc, nl, 0.0, p)
}

/// `J_θ(σ, u) = e^{Nσ}(½∫A_θ(e^{−2σ}|∇u|²) − ∫G(u))`.
pub fn j_value(trunc: &TruncatedOperator, nl: &Nonlinearity, sigma: f64, p: &RadialProfile) -> f64 {
    let (kin, _, g) = dilated_integrals(trunc, nl, sigma, p);
    (p.grid.n as f64 * sigma).exp() * (kin - g)
}

/// `(J_θ(σ, u), ∂_σJ_θ(σ, u))` from the closed-form σ-derivative.
pub fn j_and_dsigma(trunc: &TruncatedOperator, nl: &Nonlinearity, sigma: f64, p: &RadialProfile) -> (f64, f64) {
    let n = p.grid.n as f64;
    let (kin, work, g) = dilated_integrals(trunc, nl, sigma, p);
    let e = (n * sigma).exp();
    // e^{(N−2)σ}∫a_θ(e^{−2σ}|∇u|²)|∇u|² = e^{Nσ}∫a_θ(X)X.
    (e * (kin - g), n * e * kin - e * work - n * e * g)
}

/// `∂²_σJ_θ(σ, u)`.
pub fn j_dsigma2(trunc: &TruncatedOperator, nl: &Nonlinearity, sigma: f64, p: &RadialProfile) -> f64 {
    let n = p.grid.n as f64;
    let scale = (-2.0 * sigma).exp();
    let mut kin = 0.0;
    let mut k2 = 0.0;
    for (d, v) in p.derivative().iter().zip(p.grid.cell_volumes()) {
        let x = scale * d * d;
        kin += v * trunc.primitive_theta(x);
        k2 += v * (trunc.a_theta(x) * x + trunc.a_theta_prime(x) * x * x);
    }
    let kin = 0.5 * kin;
    let k1 = -p.derivative().iter().zip(p.grid.cell_volumes()).map(|(d, v)| {
        let x = scale * d * d;
        v * trunc.a_theta(x) * x
    }).sum::<f64>();
    let g = p.integrate_nodal(|u| nl.big_g(u));
    let e = (n * sigma).exp();
    n * n * e * (kin - g) + 2.0 * n * e * k1 + 2.0 * e * k2
}

/// Partial derivatives `∂J_θ(σ, u)/∂u_i`; the Dirichlet node gets 0.
pub fn j_gradient_u(trunc: &TruncatedOperator, nl: &Nonlinearity, sigma: f64, p: &RadialProfile) -> Vec<f64> {
    let n = p.grid.n as f64;
    let scale = (-2.0 * sigma).exp();
    let e = (n * sigma).exp();
    let m = p.grid.cells();
    let vols = p.grid.cell_volumes();
    let widths = p.grid.widths();
    let weights = p.grid.node_weights();
    let mut grad = vec![0.0; m + 1];
    for (c, d) in p.derivative().iter().enumerate() {
        let x = scale * d * d;
        let flux = e * scale * vols[c] * trunc.a_theta(x) * d / widths[c];
        grad[c] -= flux;
        grad[c + 1] += flux;
    }
    for i in 0..m {
        grad[i] -= e * weights[i] * nl.g(p.values[i]);
    }
    grad[m] = 0.0;
    grad
}

/// Variation of the discrete `I_θ` divided by the nodal weight: a consistent approximation
/// of `−(r^{N−1}a_θ(|u′|²)u′)′/r^{N−1} − g(u)`. Zero at the Dirichlet node.
pub fn el_gradient(trunc: &TruncatedOperator, nl: &Nonlinearity, p: &RadialProfile) -> Vec<f64> {
    let mut grad = j_gradient_u(trunc, nl, 0.0, p);
    let weights = p.grid.node_weights();
    let m = p.grid.cells();
    for i in 0..m {
        grad[i] /= weights[i];
    }
    grad
}

fn el_residual_sup(trunc: &TruncatedOperator, nl: &Nonlinearity, p: &RadialProfile) -> f64 {
    let el = el_gradient(trunc, nl, p);
    let m = p.grid.cells();
    let sup_el = el[..m].iter().fold(0f64, |a, v| a.max(v.abs()));
    let sup_g = p.values[..m].iter().fold(0f64, |a, u| a.max(nl.g(*u).abs()));
    if sup_el == 0.0 {
        0.0
    } else if sup_g == 0.0 {
        f64::INFINITY
    } else {
        sup_el / sup_g
    }
}

/// `Φ(u) = ∫a_θ(|∇u|²)|∇u|²`.
pub fn gradient_work(trunc: &TruncatedOperator, p: &RadialProfile) -> f64 {
    p.integrate_cells(|x| trunc.a_theta(x) * x)
}

/// Nehari, Pohozaev and energy-identity residuals, each relative to its largest term.
pub fn identity_residuals(trunc: &TruncatedOperator, nl: &Nonlinearity, p: &RadialProfile, m_level: f64) -> IdentityResiduals {
    let e = energy(trunc, nl, p);
    let n = p.grid.n as f64;
    let work = e.gradient_work;
    IdentityResiduals {
        nehari: e.nehari_residual,
        pohozaev: e.pohozaev_residual,
        energy_id: relative(work - n * m_level, &[work, n * m_level]),
    }
}

/// Tridiagonal second variation of `J_θ(σ, ·)` over the free nodes `0..M−1`.
/// With `mass = None` the exact Hessian is returned (including `−g′(u)` on the diagonal);
/// with `mass = Some(m)` the convex kinetic part plus `m` times the nodal weights, a
/// positive definite preconditioner.
pub fn hessian_tridiagonal(
    trunc: &TruncatedOperator,
    nl: &Nonlinearity,
    sigma: f64,
    p: &RadialProfile,
    mass: Option<f64>,
) -> crate::linalg::Tridiagonal {
    let n = p.grid.n as f64;
    let scale = (-2.0 * sigma).exp();
    let e = (n * sigma).exp();
    let m = p.grid.cells();
    let vols = p.grid.cell_volumes();
    let widths = p.grid.widths();
    let weights = p.grid.node_weights();
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m.saturating_sub(1)];
    for (c, d) in p.derivative().iter().enumerate() {
        let x = scale * d * d;
        let k = e * scale * vols[c] * (trunc.a_theta(x) + 2.0 * trunc.a_theta_prime(x) * x) / (widths[c] * widths[c]);
        diag[c] += k;
        if c + 1 < m {
            diag[c + 1] += k;
            off[c] = -k;
        }
    }
    for i in 0..m {
        diag[i] += match mass {
            None => -e * weights[i] * nl.g_prime(p.values[i]),
            Some(mu) => e * mu * weights[i],
        };
    }
    crate::linalg::Tridiagonal { lower: off.clone(), diag, upper: off }
}
