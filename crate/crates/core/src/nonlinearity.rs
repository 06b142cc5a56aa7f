//! The source term `g`, its primitive, the splitting `g = g₁ − g₂` with `g₁, g₂ ≥ 0`
//! on `s ≥ 0`, the mass-regime screen, and the search for `ξ₀` with `G(ξ₀) > 0`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{BisolveError, Result};
use crate::rootfind::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MassRegime {
    PositiveMass,
    /// Zero mass with `γ > N`.
    ZeroMassLargeGamma,
    /// Zero mass with `2* < γ ≤ N`; needs the growth condition at infinity.
    ZeroMassSmallGamma,
}

impl MassRegime {
    pub fn label(&self) -> &'static str {
        match self {
            MassRegime::PositiveMass => "positive mass",
            MassRegime::ZeroMassLargeGamma => "zero mass (gamma > N)",
            MassRegime::ZeroMassSmallGamma => "zero mass (2* < gamma <= N)",
        }
    }

    pub fn is_zero_mass(&self) -> bool {
        !matches!(self, MassRegime::PositiveMass)
    }
}

/// User-supplied `g` on `s ≥ 0`; extended oddly.
#[derive(Clone)]
pub struct TabulatedSource {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl TabulatedSource {
    pub fn from_fn<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        TabulatedSource { eval: Arc::new(f) }
    }
}

impl fmt::Debug for TabulatedSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TabulatedSource(..)")
    }
}

#[derive(Debug, Clone)]
pub enum NonlinearityKind {
    /// `g(s) = |s|^{p−2}s`.
    Power { p: f64 },
    /// `g(s) = −m|s|^{γ−2}s + |s|^{p−2}s`.
    PowerMinusMass { m: f64, gamma: f64, p: f64 },
    /// Odd extension of a user evaluator; `m` and `γ` are supplied by the user.
    Tabulated { source: TabulatedSource, m: f64, gamma: f64 },
}

/// `g` together with the exponent `γ`, the mass `m` and the dimension `N`.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub n: usize,
    pub gamma: f64,
    pub m: f64,
}

/// The sextuple `(g, G, g₁, g₂, G₁, G₂)` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GValues {
    pub g: f64,
    pub big_g: f64,
    pub g1: f64,
    pub g2: f64,
    pub big_g1: f64,
    pub big_g2: f64,
}

impl Nonlinearity {
    /// Pure power; `γ` defaults to `p − 1`, so `g(s)/|s|^{γ−1} = |s| → 0`.
    pub fn power(p: f64, n: usize) -> Self {
        Nonlinearity { kind: NonlinearityKind::Power { p }, n, gamma: p - 1.0, m: 0.0 }
    }

    pub fn power_minus_mass(m: f64, gamma: f64, p: f64, n: usize) -> Self {
        Nonlinearity { kind: NonlinearityKind::PowerMinusMass { m, gamma, p }, n, gamma, m }
    }

    pub fn tabulated(source: TabulatedSource, m: f64, gamma: f64, n: usize) -> Self {
        Nonlinearity { kind: NonlinearityKind::Tabulated { source, m, gamma }, n, gamma, m }
    }

    /// Replaces the exponent used by the regime screen.
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        if let NonlinearityKind::Tabulated { gamma: g, .. } = &mut self.kind {
            *g = gamma;
        }
        self
    }

    pub fn name(&self) -> String {
        match &self.kind {
            NonlinearityKind::Power { p } => format!("power(p={p})"),
            NonlinearityKind::PowerMinusMass { m, gamma, p } => format!("power_minus_mass(m={m}, gamma={gamma}, p={p})"),
            NonlinearityKind::Tabulated { m, gamma, .. } => format!("tabulated(m={m}, gamma={gamma})"),
        }
    }

    /// `2* = 2N/(N−2)`.
    pub fn critical_exponent(&self) -> f64 {
        let n = self.n as f64;
        2.0 * n / (n - 2.0)
    }

    // g on s ≥ 0.
    fn g_pos(&self, s: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Power { p } => s.powf(p - 1.0),
            NonlinearityKind::PowerMinusMass { m, gamma, p } => -m * s.powf(gamma - 1.0) + s.powf(p - 1.0),
            NonlinearityKind::Tabulated { source, .. } => (source.eval)(s),
        }
    }

    fn g1_pos(&self, s: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Power { p } | NonlinearityKind::PowerMinusMass { p, .. } => s.powf(p - 1.0),
            NonlinearityKind::Tabulated { source, m, gamma } => {
                ((source.eval)(s) + m * s.powf(gamma - 1.0)).max(0.0)
            }
        }
    }

    fn big_g_pos(&self, s: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Power { p } => s.powf(*p) / p,
            NonlinearityKind::PowerMinusMass { m, gamma, p } => -m * s.powf(*gamma) / gamma + s.powf(*p) / p,
            NonlinearityKind::Tabulated { source, .. } => integrate_from_zero(|t| (source.eval)(t), s),
        }
    }

    fn big_g1_pos(&self, s: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Power { p } | NonlinearityKind::PowerMinusMass { p, .. } => s.powf(*p) / p,
            NonlinearityKind::Tabulated { .. } => integrate_from_zero(|t| self.g1_pos(t), s),
        }
    }

    /// `g(s)`, odd.
    pub fn g(&self, s: f64) -> f64 {
        if s < 0.0 {
            -self.g_pos(-s)
        } else if s == 0.0 {
            0.0
        } else {
            self.g_pos(s)
        }
    }

    /// `G(s)`, even.
    pub fn big_g(&self, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            self.big_g_pos(s.abs())
        }
    }

    /// `g′(s)`, even.
    pub fn g_prime(&self, s: f64) -> f64 {
        let a = s.abs();
        match &self.kind {
            NonlinearityKind::Power { p } => (p - 1.0) * a.powf(p - 2.0),
            NonlinearityKind::PowerMinusMass { m, gamma, p } => {
                -m * (gamma - 1.0) * a.powf(gamma - 2.0) + (p - 1.0) * a.powf(p - 2.0)
            }
            NonlinearityKind::Tabulated { .. } => {
                let h = 1e-6 * a.max(1e-3);
                (self.g(s + h) - self.g(s - h)) / (2.0 * h)
            }
        }
    }

    pub fn g1(&self, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            s.signum() * self.g1_pos(s.abs())
        }
    }

    pub fn g2(&self, s: f64) -> f64 {
        self.g1(s) - self.g(s)
    }

    pub fn big_g1(&self, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            self.big_g1_pos(s.abs())
        }
    }

    pub fn big_g2(&self, s: f64) -> f64 {
        self.big_g1(s) - self.big_g(s)
    }
}

fn integrate_from_zero<F: Fn(f64) -> f64>(f: F, s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let scale = (f(0.5 * s).abs() + f(s).abs()).max(f64::MIN_POSITIVE) * s;
    quadrature::double_exponential::integrate(f, 0.0, s, 1e-11 * scale).integral
}

/// Evaluates `(g, G, g₁, g₂, G₁, G₂)` at `s`.
pub fn g_eval(nl: &Nonlinearity, s: f64) -> GValues {
    let g = nl.g(s);
    let big_g = nl.big_g(s);
    let g1 = nl.g1(s);
    let big_g1 = nl.big_g1(s);
    GValues { g, big_g, g1, g2: g1 - g, big_g1, big_g2: big_g1 - big_g }
}

/// Result of the small-`s` (and, when needed, large-`s`) limit scans.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub regime: MassRegime,
    /// `−lim g(s)/|s|^{γ−1}`; zero in the zero-mass regimes.
    pub m_estimate: f64,
    pub gamma: f64,
    pub critical_exponent: f64,
    /// Ratios `g(2^{−k})/2^{−k(γ−1)}` for `k = 33..40`.
    pub tail_ratios: Vec<f64>,
    pub c1: f64,
    pub c2: f64,
    pub c3: Option<f64>,
    pub q_star: Option<f64>,
}

/// Screens the mass regime from the behaviour of `g(s)/|s|^{γ−1}` along `s = 2^{−k}`,
/// `k = 4..40`. A limit is accepted when the last 8 ratios agree to 1%.
pub fn classify_regime(nl: &Nonlinearity) -> Result<RegimeReport> {
    let gamma = nl.gamma;
    let n = nl.n;
    if n < 3 {
        return Err(BisolveError::Admissibility(format!("dimension N = {n} must be at least 3")));
    }
    if !(gamma > 1.0) {
        return Err(BisolveError::Admissibility(format!("gamma = {gamma} must exceed 1")));
    }
    let crit = nl.critical_exponent();
    let ratios: Vec<f64> = (4..=40)
        .map(|k| {
            let s = 2f64.powi(-k);
            nl.g(s) / s.powf(gamma - 1.0)
        })
        .collect();
    if ratios.iter().any(|r| !r.is_finite()) {
        return Err(BisolveError::Admissibility("(g1') violated: g(s)/|s|^(gamma-1) is not finite near 0".into()));
    }
    let tail: Vec<f64> = ratios[ratios.len() - 8..].to_vec();
    let tmax = tail.iter().fold(0f64, |m, v| m.max(v.abs()));
    let spread = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - tail.iter().cloned().fold(f64::INFINITY, f64::min);
    let agree = spread <= 0.01 * tmax;
    let first = ratios[0].abs().max(1.0);
    let vanishing = tmax <= 1e-6 * first && tail.windows(2).all(|w| w[1].abs() <= w[0].abs() * (1.0 + 1e-12));
    let growing = tail.windows(2).all(|w| w[1].abs() > w[0].abs()) && tail[7].abs() > 1.01 * tail[0].abs();

    let (regime, m_estimate) = if vanishing {
        if !(gamma > crit) {
            return Err(BisolveError::Admissibility(format!("(g1') violated: zero mass needs gamma = {gamma} > 2* = {crit}")));
        }
        if gamma > n as f64 {
            (MassRegime::ZeroMassLargeGamma, 0.0)
        } else {
            (MassRegime::ZeroMassSmallGamma, 0.0)
        }
    } else if growing {
        return Err(BisolveError::Admissibility("(g1') violated: g(s)/|s|^(gamma-1) diverges as s -> 0".into()));
    } else if agree && tail[7] < 0.0 {
        if gamma < 0.5 * crit * (1.0 - 1e-12) {
            return Err(BisolveError::Admissibility(format!("(g1) violated: gamma = {gamma} below 2*/2 = {}", 0.5 * crit)));
        }
        (MassRegime::PositiveMass, -tail[7])
    } else if agree {
        return Err(BisolveError::Admissibility("(g1) violated: g(s)/|s|^(gamma-1) tends to a positive limit".into()));
    } else {
        return Err(BisolveError::Admissibility("(g1)/(g1') undecided: limit scan did not settle".into()));
    };

    if let Some(expected) = closed_form_regime(nl) {
        if expected != regime {
            return Err(BisolveError::Admissibility(format!(
                "limit scan found {} but the closed form is {}",
                regime.label(),
                expected.label()
            )));
        }
    }

    // Growth constants near the origin on the scanned range.
    let c2 = 2f64.powi(-4);
    let mut c1 = 0f64;
    let mut probe = |s: f64| {
        let v = g_eval(nl, s);
        let lo = s.powf(gamma - 1.0);
        let lo_int = s.powf(gamma);
        c1 = c1.max(v.g.abs() / lo).max(v.g1.abs() / lo).max(v.big_g.abs() / lo_int).max(v.big_g1.abs() / lo_int);
    };
    for k in 4..=40 {
        probe(2f64.powi(-k));
    }
    for i in 1..=200 {
        probe(c2 * i as f64 / 200.0);
    }

    c1 *= 1.1;
    let (c3, q_star) = if regime == MassRegime::ZeroMassSmallGamma {
        let (c3, q_star) = growth_at_infinity(nl)?;
        (Some(c3), Some(q_star))
    } else {
        (None, None)
    };
    Ok(RegimeReport { regime, m_estimate, gamma, critical_exponent: crit, tail_ratios: tail, c1, c2, c3, q_star })
}

// Exact regime of the closed-form families.
fn closed_form_regime(nl: &Nonlinearity) -> Option<MassRegime> {
    let zero = |gamma: f64| {
        if gamma > nl.n as f64 {
            MassRegime::ZeroMassLargeGamma
        } else {
            MassRegime::ZeroMassSmallGamma
        }
    };
    match &nl.kind {
        NonlinearityKind::Power { p } if nl.gamma < *p => Some(zero(nl.gamma)),
        NonlinearityKind::PowerMinusMass { m, gamma, p } if *m > 0.0 && gamma < p => Some(MassRegime::PositiveMass),
        NonlinearityKind::PowerMinusMass { m, p, .. } if *m == 0.0 && nl.gamma < *p => Some(zero(nl.gamma)),
        _ => None,
    }
}

// Large-s check for 2* < γ ≤ N: g(s)/|s|^{q*−1} → 0 along s = 2^k with q just below N,
// and the constant c̄₃ of the global growth bounds.
fn growth_at_infinity(nl: &Nonlinearity) -> Result<(f64, f64)> {
    let n = nl.n as f64;
    let gamma = nl.gamma;
    let q_lo = n * gamma / (n + gamma);
    let q = n - 0.01 * (n - q_lo);
    let q_star = q * n / (n - q);
    let ratios: Vec<f64> = (1..=20).map(|k| {
        let s = 2f64.powi(k);
        nl.g(s).abs() / s.powf(q_star - 1.0)
    }).collect();
    let decays = ratios[19] <= 1e-6 * ratios[0].max(1.0) && ratios.windows(2).skip(12).all(|w| w[1] <= w[0]);
    if !decays {
        return Err(BisolveError::Admissibility("(g1'') violated: g grows too fast at infinity".into()));
    }
    let mut c3 = 0f64;
    for i in 0..=600 {
        let s = 10f64.powf(-6.0 + 12.0 * i as f64 / 600.0);
        let v = g_eval(nl, s);
        let dg = s.powf(gamma - 1.0) + s.powf(q_star - 1.0);
        let di = s.powf(gamma) + s.powf(q_star);
        c3 = c3.max(v.g.abs() / dg).max(v.g1.abs() / dg).max(v.big_g.abs() / di).max(v.big_g1.abs() / di);
    }
    // Sampled maxima miss the peak between samples; inflate by 10%.
    Ok((1.1 * c3, q_star))
}

/// First point of a 10⁴-point grid on `(0, s_max]` where `G > 0`; when the sign change
/// happens after the first grid point the threshold is refined by bisection and
/// `1.1 × threshold` is returned.
pub fn find_xi0(nl: &Nonlinearity, s_max: f64) -> Result<f64> {
    if !(s_max > 0.0) {
        return Err(BisolveError::Domain(format!("s_max = {s_max} must be positive")));
    }
    let n = 10_000;
    let h = s_max / n as f64;
    let first = (1..=n).find(|&i| nl.big_g(i as f64 * h) > 0.0);
    match first {
        None => Err(BisolveError::Xi0NotFound { s_max }),
        Some(1) => Ok(h),
        Some(i) => {
            let lo = (i - 1) as f64 * h;
            let hi = i as f64 * h;
            let threshold = bisect(lo, hi, 1e-14 * hi, |s| if nl.big_g(s) > 0.0 { 1.0 } else { -1.0 });
            Ok(1.1 * threshold)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cubic_mass() -> Nonlinearity {
        Nonlinearity::power_minus_mass(1.0, 2.0, 4.0, 4)
    }

    #[test]
    fn sextuple_examples() {
        let v = g_eval(&cubic_mass(), 2.0);
        assert_relative_eq!(v.g, 6.0, epsilon = 1e-14);
        assert_relative_eq!(v.big_g, 2.0, epsilon = 1e-14);
        assert_relative_eq!(v.g1, 8.0, epsilon = 1e-14);
        assert_relative_eq!(v.g2, 2.0, epsilon = 1e-14);
        let v = g_eval(&Nonlinearity::power(8.0, 3), 1.0);
        assert_eq!((v.g1, v.g2, v.big_g), (1.0, 0.0, 0.125));
        assert_relative_eq!(cubic_mass().g(-2.0), -6.0, epsilon = 1e-14);
    }

    #[test]
    fn tabulated_source_matches_closed_form() {
        let tab = Nonlinearity::tabulated(TabulatedSource::from_fn(|s| -s + s * s * s), 1.0, 2.0, 4);
        let c = cubic_mass();
        for &s in &[-1.7, -0.2, 0.0, 0.4, 2.0] {
            let a = g_eval(&tab, s);
            let b = g_eval(&c, s);
            assert_relative_eq!(a.g, b.g, epsilon = 1e-13);
            assert_relative_eq!(a.big_g, b.big_g, epsilon = 1e-10);
            assert_relative_eq!(a.big_g1, b.big_g1, epsilon = 1e-10);
            assert_relative_eq!(a.g2, b.g2, epsilon = 1e-13);
        }
        assert_relative_eq!(tab.g_prime(1.5), c.g_prime(1.5), max_relative = 1e-7);
    }

    #[test]
    fn regime_examples() {
        let r = classify_regime(&cubic_mass()).unwrap();
        assert_eq!(r.regime, MassRegime::PositiveMass);
        assert_relative_eq!(r.m_estimate, 1.0, epsilon = 1e-6);
        let r = classify_regime(&Nonlinearity::power(8.0, 3)).unwrap();
        assert_eq!(r.regime, MassRegime::ZeroMassLargeGamma);
        assert!(r.c3.is_none());
        let err = classify_regime(&Nonlinearity::power(4.0, 3).with_gamma(7.0)).unwrap_err();
        match err {
            BisolveError::Admissibility(msg) => assert!(msg.contains("(g1')")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn small_gamma_zero_mass_records_growth_constant() {
        // N = 5: 2* = 10/3 < γ = 4.5 ≤ N.
        let nl = Nonlinearity::power(5.5, 5);
        let r = classify_regime(&nl).unwrap();
        assert_eq!(r.regime, MassRegime::ZeroMassSmallGamma);
        let c3 = r.c3.unwrap();
        let qs = r.q_star.unwrap();
        for i in 0..200 {
            let s = 10f64.powf(-3.0 + 6.0 * i as f64 / 199.0);
            let v = g_eval(&nl, s);
            assert!(v.g1.abs() <= c3 * (s.powf(r.gamma - 1.0) + s.powf(qs - 1.0)) * (1.0 + 1e-12));
            assert!(v.big_g1.abs() <= c3 * (s.powf(r.gamma) + s.powf(qs)) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rejects_sub_threshold_gamma() {
        // N = 5 gives 2*/2 = 5/3 > γ = 1.5.
        assert!(classify_regime(&Nonlinearity::power_minus_mass(1.0, 1.5, 4.0, 5)).is_err());
        // Zero mass with γ below 2*.
        assert!(classify_regime(&Nonlinearity::power(5.0, 3)).is_err());
    }

    #[test]
    fn xi0_examples() {
        let xi = find_xi0(&cubic_mass(), 10.0).unwrap();
        assert_relative_eq!(xi, 1.1 * 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(find_xi0(&Nonlinearity::power(8.0, 3), 10.0).unwrap(), 1e-3, epsilon = 1e-15);
        let lin = Nonlinearity::power_minus_mass(1.0, 2.0, 40.0, 3);
        // G(s) = −s²/2 + s⁴⁰/40 > 0 only beyond 20^{1/38} ≈ 1.082: found, not an error.
        assert!(find_xi0(&lin, 10.0).is_ok());
        let neg = Nonlinearity::tabulated(TabulatedSource::from_fn(|s| -s), 1.0, 2.0, 3);
        assert!(matches!(find_xi0(&neg, 10.0), Err(BisolveError::Xi0NotFound { .. })));
    }
}
