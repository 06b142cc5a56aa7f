//! Decomposition and primitive identities of the built-in nonlinearities.

use bisolve_core::nonlinearity::{classify_regime, g_eval, TabulatedSource};
use bisolve_core::Nonlinearity;
use proptest::prelude::*;

fn samples() -> Vec<Nonlinearity> {
    vec![
        Nonlinearity::power_minus_mass(1.0, 2.0, 4.0, 4),
        Nonlinearity::power(8.0, 3),
        Nonlinearity::power_minus_mass(0.5, 2.5, 3.5, 3),
        Nonlinearity::tabulated(TabulatedSource::from_fn(|s| -s + s * s * s), 1.0, 2.0, 4),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn decomposition_is_exact(idx in 0usize..4, s in -5.0f64..5.0) {
        let nl = &samples()[idx];
        let v = g_eval(nl, s);
        prop_assert_eq!(v.g, v.g1 - v.g2);
        prop_assert!((v.big_g - (v.big_g1 - v.big_g2)).abs() <= 1e-12 * v.big_g1.abs().max(1.0));
        if s >= 0.0 {
            prop_assert!(v.g1 >= 0.0 && v.g2 >= -1e-15 * v.g1.max(1.0));
        }
    }

    #[test]
    fn g_is_odd(idx in 0usize..4, s in 0.0f64..5.0) {
        let nl = &samples()[idx];
        prop_assert!((nl.g(-s) + nl.g(s)).abs() <= 1e-12 * nl.g(s).abs().max(1.0));
    }

    #[test]
    fn primitive_derivative_is_g(idx in 0usize..4, s in 0.05f64..3.0) {
        let nl = &samples()[idx];
        let h = 1e-5;
        let fd = (nl.big_g(s + h) - nl.big_g(s - h)) / (2.0 * h);
        prop_assert!((fd - nl.g(s)).abs() <= 1e-6 * nl.g(s).abs().max(1.0), "s={s} fd={fd} g={}", nl.g(s));
    }

    #[test]
    fn positive_mass_part_dominates_mass_term(s in 0.0f64..5.0) {
        let nl = &samples()[0];
        let v = g_eval(nl, s);
        prop_assert!(v.g2 >= s - 1e-12);
        prop_assert!(v.big_g2 >= 0.5 * s * s - 1e-12);
    }
}

#[test]
fn positive_mass_ratio_vanishes() {
    let nl = &samples()[0];
    let rep = classify_regime(nl).unwrap();
    let last = (40..=60).map(|k| 2f64.powi(-k)).map(|s| nl.g1(s) / s.powf(nl.gamma - 1.0));
    for r in last {
        assert!(r < 1e-20);
    }
    assert!(rep.m_estimate > 0.99 && rep.m_estimate < 1.01);
}
