//! Operator families `a(s)`, their truncation `a_θ` beyond the junction `s = 1 − θ`,
//! the choice of the growth exponent `q`, and the inverse of the flux map `s ↦ a_θ(s²)s`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{BisolveError, Result};
use crate::interp::Pchip;
use crate::nonlinearity::MassRegime;
use crate::rootfind::safeguarded_newton;

/// A user-supplied evaluator of `a` on `[0, 1)`.
#[derive(Clone)]
pub struct TabulatedOperator {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl TabulatedOperator {
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        TabulatedOperator { eval: Arc::new(f) }
    }

    /// Monotone cubic interpolation through `(s_i, a_i)` on `[s_0, s_last]`. Beyond the
    /// last knot the table is continued by the power law `(1 − s)^α` that matches the
    /// last two knots, so the blow-up at `s = 1` is preserved.
    pub fn from_table(s: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if s.len() < 3 || s.len() != a.len() {
            return Err(BisolveError::Domain("operator table needs at least 3 matching (s, a) pairs".into()));
        }
        if s[0] != 0.0 || s.windows(2).any(|w| w[1] <= w[0]) || *s.last().unwrap() >= 1.0 {
            return Err(BisolveError::Domain("operator table abscissae must start at 0, increase, and stay below 1".into()));
        }
        if a.iter().any(|v| *v <= 0.0) {
            return Err(BisolveError::Admissibility("(a0) violated: tabulated a(s) must be positive".into()));
        }
        let n = s.len();
        let (s1, s2) = (s[n - 2], s[n - 1]);
        let alpha = (a[n - 1] / a[n - 2]).ln() / ((1.0 - s2) / (1.0 - s1)).ln();
        let a_last = a[n - 1];
        let table = Pchip::new(s, a);
        Ok(TabulatedOperator::from_fn(move |t| {
            if t <= s2 {
                table.eval(t)
            } else {
                a_last * ((1.0 - t) / (1.0 - s2)).powf(alpha)
            }
        }))
    }

    fn a(&self, s: f64) -> f64 {
        (self.eval)(s)
    }
}

impl fmt::Debug for TabulatedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TabulatedOperator(..)")
    }
}

/// Closed-form or tabulated specification of `a` on `[0, 1)`.
#[derive(Debug, Clone)]
pub enum OperatorFamily {
    /// `a(s) = (1 − s)^α`, `α < 0`; `α = −1/2` is Born–Infeld.
    Power { alpha: f64 },
    /// `a(s) = β(1 − s)^{−1/2} − γ_c(1 + s)^{−1/2}`.
    TwoTerm { beta: f64, gamma_c: f64 },
    Tabulated(TabulatedOperator),
    /// `a ≡ 1`. Bounded, so it fails (a1); only usable in validation mode.
    Laplacian,
}

/// `(a(s), a′(s), A(s))` for one argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyValue {
    pub a: f64,
    pub a_prime: f64,
    pub primitive: f64,
}

impl OperatorFamily {
    pub fn born_infeld() -> Self {
        OperatorFamily::Power { alpha: -0.5 }
    }

    pub fn name(&self) -> String {
        match self {
            OperatorFamily::Power { alpha } => format!("power(alpha={alpha})"),
            OperatorFamily::TwoTerm { beta, gamma_c } => format!("two_term(beta={beta}, gamma_c={gamma_c})"),
            OperatorFamily::Tabulated(_) => "tabulated".into(),
            OperatorFamily::Laplacian => "laplacian".into(),
        }
    }

    /// Unchecked `a(s)`.
    pub fn a(&self, s: f64) -> f64 {
        match self {
            OperatorFamily::Power { alpha } => (1.0 - s).powf(*alpha),
            OperatorFamily::TwoTerm { beta, gamma_c } => beta / (1.0 - s).sqrt() - gamma_c / (1.0 + s).sqrt(),
            OperatorFamily::Tabulated(t) => t.a(s),
            OperatorFamily::Laplacian => 1.0,
        }
    }

    /// Unchecked `a′(s)`.
    pub fn a_prime(&self, s: f64) -> f64 {
        match self {
            OperatorFamily::Power { alpha } => -alpha * (1.0 - s).powf(alpha - 1.0),
            OperatorFamily::TwoTerm { beta, gamma_c } => {
                0.5 * beta * (1.0 - s).powf(-1.5) + 0.5 * gamma_c * (1.0 + s).powf(-1.5)
            }
            OperatorFamily::Tabulated(t) => {
                let h = 1e-6 * (1.0 - s);
                if s >= h {
                    (t.a(s + h) - t.a(s - h)) / (2.0 * h)
                } else {
                    // Second-order one-sided difference at the left end of the domain.
                    (-3.0 * t.a(s) + 4.0 * t.a(s + h) - t.a(s + 2.0 * h)) / (2.0 * h)
                }
            }
            OperatorFamily::Laplacian => 0.0,
        }
    }

    /// Unchecked `A(s) = ∫₀ˢ a`.
    pub fn primitive(&self, s: f64) -> f64 {
        match self {
            OperatorFamily::Power { alpha } => {
                if (alpha + 1.0).abs() < 1e-14 {
                    -(1.0 - s).ln()
                } else {
                    (1.0 - (1.0 - s).powf(alpha + 1.0)) / (alpha + 1.0)
                }
            }
            OperatorFamily::TwoTerm { beta, gamma_c } => {
                2.0 * beta * (1.0 - (1.0 - s).sqrt()) - 2.0 * gamma_c * ((1.0 + s).sqrt() - 1.0)
            }
            OperatorFamily::Tabulated(t) => {
                if s == 0.0 {
                    return 0.0;
                }
                let scale = (t.a(0.0).abs() + t.a(s).abs()) * s;
                quadrature::double_exponential::integrate(|x| t.a(x), 0.0, s, 1e-11 * scale).integral
            }
            OperatorFamily::Laplacian => s,
        }
    }

    fn bounded_domain(&self) -> bool {
        !matches!(self, OperatorFamily::Laplacian)
    }
}

/// Checked evaluation of `(a, a′, A)` at `s ∈ [0, 1)`.
pub fn family_eval(fam: &OperatorFamily, s: f64) -> Result<FamilyValue> {
    if !(s >= 0.0) || (fam.bounded_domain() && s >= 1.0) {
        return Err(BisolveError::Domain(format!("operator argument s = {s} outside [0, 1)")));
    }
    let a = fam.a(s);
    if !(a > 0.0) {
        return Err(BisolveError::Admissibility(format!("(a0) violated: a({s}) = {a} is not positive")));
    }
    Ok(FamilyValue { a, a_prime: fam.a_prime(s), primitive: fam.primitive(s) })
}

/// Outcome of the (a0)/(a1) screens.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorScreen {
    pub positive: bool,
    pub flux_convex_increasing: bool,
    pub divergent: bool,
    pub a_at_zero: f64,
    pub a_near_one: f64,
}

impl OperatorScreen {
    pub fn accepted(&self) -> bool {
        self.positive && self.flux_convex_increasing && self.divergent
    }
}

/// Screens (a0) and (a1) on sampled grids. Divergence is declared when
/// `a(1 − 10⁻⁸) > 10³ a(0)`.
pub fn screen_operator(fam: &OperatorFamily) -> OperatorScreen {
    let n = 2000;
    let s: Vec<f64> = (0..=n).map(|i| 0.999 * i as f64 / n as f64).collect();
    let a: Vec<f64> = s.iter().map(|&x| fam.a(x)).collect();
    let positive = a.iter().all(|v| *v > 0.0 && v.is_finite());
    let phi: Vec<f64> = s.iter().zip(&a).map(|(x, v)| x * v).collect();
    let increasing = phi.windows(2).all(|w| w[1] > w[0]);
    let convex = phi.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-12 * w[2].abs().max(1.0));
    let a0 = fam.a(0.0);
    let a_near_one = fam.a(1.0 - 1e-8);
    OperatorScreen {
        positive,
        flux_convex_increasing: increasing && convex,
        divergent: a_near_one > 1e3 * a0,
        a_at_zero: a0,
        a_near_one,
    }
}

/// Right-hand side of the admissibility condition on `q`:
/// `2(a′(1−θ)(1−θ) + a(1−θ)) / a(1−θ)`.
pub fn q_lower_bound(fam: &OperatorFamily, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(BisolveError::Domain(format!("theta = {theta} outside (0, 1)")));
    }
    let j = 1.0 - theta;
    let a = fam.a(j);
    if !(a > 0.0) {
        return Err(BisolveError::Admissibility(format!("(a0) violated: a({j}) = {a}")));
    }
    Ok(2.0 * (fam.a_prime(j) * j + a) / a)
}

/// Picks `q` for the truncation at level `theta` according to the mass regime.
pub fn select_q(fam: &OperatorFamily, theta: f64, regime: MassRegime, gamma: f64, n: usize) -> Result<f64> {
    let qlb = q_lower_bound(fam, theta)?;
    let nf = n as f64;
    let (lo, hi) = match regime {
        MassRegime::PositiveMass => return Ok(qlb.max(nf + 1.0)),
        MassRegime::ZeroMassLargeGamma => (qlb.max(nf), gamma),
        MassRegime::ZeroMassSmallGamma => (qlb.max(nf * gamma / (nf + gamma)), nf),
    };
    if lo >= hi {
        return Err(BisolveError::Infeasible { theta, lo, hi });
    }
    Ok(0.5 * (lo + hi))
}

/// `a` continued beyond `s = 1 − θ` by `a(1−θ)(s/(1−θ))^{(q−2)/2}`.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    pub base: OperatorFamily,
    pub theta: f64,
    pub theta1: f64,
    pub q: f64,
    pub junction_a: f64,
    pub junction_slope: f64,
    junction: f64,
    junction_primitive: f64,
    exponent: f64,
    bypass: bool,
}

impl TruncatedOperator {
    pub fn new(base: OperatorFamily, theta: f64, theta1: f64, q: f64) -> Result<Self> {
        if !(theta1 > 0.0 && theta1 < 1.0) || !(theta > 0.0 && theta <= theta1) {
            return Err(BisolveError::Domain(format!("need 0 < theta = {theta} <= theta1 = {theta1} < 1")));
        }
        if !(q > 2.0) {
            return Err(BisolveError::Domain(format!("q = {q} must exceed 2")));
        }
        if matches!(base, OperatorFamily::Laplacian) {
            return Err(BisolveError::Admissibility("(a1) violated: a is bounded; use validation mode".into()));
        }
        let qlb = q_lower_bound(&base, theta)?;
        if q < qlb * (1.0 - 1e-12) {
            return Err(BisolveError::Admissibility(format!("q = {q} below the lower bound {qlb} at theta = {theta}")));
        }
        let j = 1.0 - theta;
        let v = family_eval(&base, j)?;
        Ok(TruncatedOperator {
            base,
            theta,
            theta1,
            q,
            junction_a: v.a,
            junction_slope: v.a_prime,
            junction: j,
            junction_primitive: v.primitive,
            exponent: 0.5 * (q - 2.0),
            bypass: false,
        })
    }

    /// Untruncated evaluation of an everywhere-defined family (the validation mode for `a ≡ 1`).
    pub fn validation(base: OperatorFamily) -> Self {
        TruncatedOperator {
            junction_a: base.a(0.0),
            junction_slope: base.a_prime(0.0),
            base,
            theta: 0.0,
            theta1: 0.0,
            q: 2.0,
            junction: f64::INFINITY,
            junction_primitive: 0.0,
            exponent: 0.0,
            bypass: true,
        }
    }

    pub fn is_validation(&self) -> bool {
        self.bypass
    }

    /// `1 − θ`, the largest argument where `a_θ = a`.
    pub fn junction(&self) -> f64 {
        self.junction
    }

    pub fn a_theta(&self, s: f64) -> f64 {
        if s <= self.junction {
            self.base.a(s)
        } else {
            self.junction_a * (s / self.junction).powf(self.exponent)
        }
    }

    pub fn a_theta_prime(&self, s: f64) -> f64 {
        if s <= self.junction {
            self.base.a_prime(s)
        } else {
            self.junction_a * self.exponent / self.junction * (s / self.junction).powf(self.exponent - 1.0)
        }
    }

    pub fn primitive_theta(&self, s: f64) -> f64 {
        if s <= self.junction {
            self.base.primitive(s)
        } else {
            let e1 = self.exponent + 1.0;
            self.junction_primitive + self.junction_a * self.junction / e1 * ((s / self.junction).powf(e1) - 1.0)
        }
    }

    /// The power-branch formula evaluated at any `s`, used to check continuity at the junction.
    pub fn power_branch(&self, s: f64) -> f64 {
        self.junction_a * (s / self.junction).powf(self.exponent)
    }

    /// `(a_θ(s), A_θ(s))`.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        (self.a_theta(s), self.primitive_theta(s))
    }

    /// Flux map `s ↦ a_θ(s²)s`.
    pub fn flux(&self, s: f64) -> f64 {
        self.a_theta(s * s) * s
    }

    /// Derivative of the flux map, `a_θ(s²) + 2a_θ′(s²)s²`.
    pub fn flux_slope(&self, s: f64) -> f64 {
        let x = s * s;
        self.a_theta(x) + 2.0 * self.a_theta_prime(x) * x
    }

    /// Solves `a_θ(s²)s = w` for `s`.
    pub fn flux_invert(&self, w: f64) -> f64 {
        if w == 0.0 || !w.is_finite() {
            return w;
        }
        if self.bypass && matches!(self.base, OperatorFamily::Laplacian) {
            return w;
        }
        let target = w.abs();
        let guess = target / self.base.a(0.0);
        let mut hi = guess.max(1e-300);
        while self.flux(hi) < target {
            hi *= 2.0;
        }
        let lo = 0.0;
        let s = safeguarded_newton(lo, hi, guess.min(hi), 1e-12, |s| (self.flux(s) - target, self.flux_slope(s)));
        w.signum() * s
    }
}

/// Two-sided constants with `c̄(s² + |s|^q) ≤ a_θ(s²)s² ≤ c̄_θ(s² + |s|^q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichConstants {
    pub c_bar: f64,
    pub c_bar_theta: f64,
}

/// Computes both constants and verifies them at 10³ sample points, including the
/// junction radius.
pub fn sandwich_constants(trunc: &TruncatedOperator) -> Result<SandwichConstants> {
    let q = trunc.q;
    let j1 = 1.0 - trunc.theta1;
    let min_a = (0..=1000)
        .map(|i| trunc.base.a(j1 * i as f64 / 1000.0))
        .fold(f64::INFINITY, f64::min);
    let c_bar = (2.0 / q) * j1.powf(0.5 * (q - 2.0)) / (1.0 + j1.powf(q - 2.0)) * min_a;

    // a_θ(s²)s²/(s² + s^q) = a_θ(s²)/(1 + s^{q−2}), sampled on a geometric grid.
    let ratio = |s: f64| trunc.a_theta(s * s) / (1.0 + s.powf(q - 2.0));
    let mut best = trunc.a_theta(0.0);
    for i in 0..=4000 {
        let s = 10f64.powf(-4.0 + 8.0 * i as f64 / 4000.0);
        best = best.max(ratio(s));
    }
    best = best.max(ratio(trunc.junction.sqrt()));
    let c_bar_theta = 1.1 * best;

    let consts = SandwichConstants { c_bar, c_bar_theta };
    let mut samples: Vec<f64> = (0..998).map(|i| 4.0 * i as f64 / 997.0).collect();
    samples.push(trunc.junction);
    samples.push(trunc.junction.sqrt());
    for s in samples {
        check_sandwich(trunc, &consts, s)?;
    }
    Ok(consts)
}

/// Checks both sandwich inequalities at one point.
pub fn check_sandwich(trunc: &TruncatedOperator, c: &SandwichConstants, s: f64) -> Result<()> {
    let s2 = s * s;
    let phi = trunc.a_theta(s2) * s2;
    let norm = s2 + s.abs().powf(trunc.q);
    let slack = 1e-12 * phi.abs().max(f64::MIN_POSITIVE);
    if c.c_bar * norm > phi + slack {
        return Err(BisolveError::Verification { s, detail: format!("lower bound {} > {}", c.c_bar * norm, phi) });
    }
    if phi > c.c_bar_theta * norm + slack {
        return Err(BisolveError::Verification { s, detail: format!("upper bound {} < {}", c.c_bar_theta * norm, phi) });
    }
    Ok(())
}
