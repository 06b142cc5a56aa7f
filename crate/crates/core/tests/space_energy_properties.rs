//! Dilations, scaling laws, the convexity gap of the gradient work and the exactness of
//! the discrete derivatives.

use std::sync::Arc;

use bisolve_core::energy::{energy, functional, gradient_work, j_and_dsigma, j_gradient_u, j_value};
use bisolve_core::radial_space::{build_plateau, dilate, norms};
use bisolve_core::{Nonlinearity, OperatorFamily, RadialGrid, RadialProfile, TruncatedOperator};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(n: usize, m: usize) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::graded(n, 40.0, m, 1.5).unwrap())
}

fn gaussian(g: Arc<RadialGrid>, sigma: f64) -> RadialProfile {
    let s = (-sigma).exp();
    RadialProfile::from_fn(g, |r| (-(r * s) * (r * s) / 4.0).exp())
}

fn bi(theta: f64) -> TruncatedOperator {
    TruncatedOperator::new(OperatorFamily::born_infeld(), theta, 0.5, (1.0 - theta) / theta + 4.0).unwrap()
}

// Smooth random profile vanishing at R_max.
fn random_profile(g: Arc<RadialGrid>, rng: &mut ChaCha8Rng, amp: f64) -> RadialProfile {
    let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.5..4.0)).collect();
    let r_max = g.r_max();
    RadialProfile::from_fn(g, |r| {
        let base: f64 = c.iter().zip(&w).map(|(c, w)| c * (-(r / w).powi(2)).exp()).sum();
        amp * (base + 0.3) * (1.0 - r / r_max)
    })
}

fn max_diff(a: &RadialProfile, b: &RadialProfile) -> f64 {
    a.values.iter().zip(&b.values).fold(0f64, |m, (x, y)| m.max((x - y).abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dilation_is_a_semigroup(s1 in -0.4f64..0.4, s2 in -0.4f64..0.4) {
        let g = grid(3, 2048);
        let u = gaussian(g.clone(), 0.0);
        // Interpolation tolerance of this grid: worst single-dilation error over |σ| ≤ 0.8.
        let once = |s: f64| max_diff(&dilate(&u, s).unwrap(), &gaussian(g.clone(), s));
        let tol = (-16..=16).map(|k| once(0.05 * k as f64)).fold(0f64, f64::max);
        let composed = dilate(&dilate(&u, s1).unwrap(), s2).unwrap();
        let direct = dilate(&u, s1 + s2).unwrap();
        // Re-interpolating interpolated data near the inflection point roughly triples the
        // single-pass error; 4× leaves margin.
        prop_assert!(max_diff(&composed, &direct) <= 4.0 * tol, "{} vs {}", max_diff(&composed, &direct), tol);
    }

    #[test]
    fn plateau_norms_scale_with_dilation(sigma in -0.5f64..0.5, e in 2.0f64..6.0) {
        let g = grid(4, 2048);
        let u = build_plateau(1.5, 5.0, g).unwrap();
        let v = dilate(&u, sigma).unwrap();
        let n = 4.0;
        let a = norms(&u, &[2.0, e]).unwrap();
        let b = norms(&v, &[2.0, e]).unwrap();
        let grad_ratio = b[0].grad.powi(2) / a[0].grad.powi(2);
        prop_assert!((grad_ratio / ((n - 2.0) * sigma).exp() - 1.0).abs() < 5e-3);
        let val_ratio = b[1].value.powf(e) / a[1].value.powf(e);
        prop_assert!((val_ratio / (n * sigma).exp() - 1.0).abs() < 5e-3);
    }

    #[test]
    fn dilated_functional_matches_dilated_profile(sigma in -0.5f64..0.5, xi in 1.6f64..2.5, radius in 3.0f64..8.0) {
        // The plateau kink makes the J/I mismatch first order in the cell width; short, steep
        // ramps need the fine grid to stay under 1%.
        let g = grid(4, 16384);
        let nl = Nonlinearity::power_minus_mass(1.0, 2.0, 4.0, 4);
        let t = bi(0.25);
        let u = build_plateau(xi, radius, g).unwrap();
        let j = j_value(&t, &nl, sigma, &u);
        let dilated = dilate(&u, sigma).unwrap();
        let i = functional(&t, &nl, &dilated);
        // I is a difference of two nearly equal integrals here; compare against the larger
        // constituent, the normalization used for every residual.
        let e = energy(&t, &nl, &dilated);
        let scale = e.kinetic.max(e.g1_int - e.g2_int).max(j.abs());
        prop_assert!((j - i).abs() <= 1e-2 * scale, "J={j} I={i} scale={scale}");
    }

    #[test]
    fn gradient_work_has_a_convexity_gap(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid(3, 256);
        let t = bi(0.25);
        let u = random_profile(g.clone(), &mut rng, 2.0);
        let v = random_profile(g, &mut rng, 2.0);
        let mid = u.with_values(u.values.iter().zip(&v.values).map(|(a, b)| 0.5 * (a + b)).collect());
        let gap = 0.5 * (gradient_work(&t, &u) + gradient_work(&t, &v)) - gradient_work(&t, &mid);
        let spread = u.derivative().iter().zip(v.derivative()).fold(0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(gap >= 0.0);
        if spread > 1e-6 {
            prop_assert!(gap > 0.0);
        }
    }
}

#[test]
fn identical_profiles_have_no_convexity_gap() {
    let t = bi(0.25);
    let u = gaussian(grid(3, 256), 0.0);
    let gap = 0.5 * (gradient_work(&t, &u) + gradient_work(&t, &u)) - gradient_work(&t, &u);
    assert_eq!(gap, 0.0);
}

// Central differences with a step balancing truncation against rounding.
fn directional_fd<F: Fn(f64) -> f64>(f: F, h: f64) -> f64 {
    (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h)
}

#[test]
fn exact_gradients_match_finite_differences_on_random_profiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = grid(4, 512);
    let nl = Nonlinearity::power_minus_mass(1.0, 2.0, 4.0, 4);
    let t = bi(0.25);
    for _ in 0..20 {
        let u = random_profile(g.clone(), &mut rng, 1.5);
        let dir = random_profile(g.clone(), &mut rng, 1.0);
        let grad = j_gradient_u(&t, &nl, 0.0, &u);
        let exact: f64 = grad.iter().zip(&dir.values).map(|(a, b)| a * b).sum();
        let shifted = |h: f64| functional(&t, &nl, &u.with_values(u.values.iter().zip(&dir.values).map(|(a, b)| a + h * b).collect()));
        let fd = directional_fd(shifted, 1e-4);
        assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1e-3), "fd {fd} exact {exact}");

        let sigma = rng.gen_range(-0.3..0.3);
        let (_, ds) = j_and_dsigma(&t, &nl, sigma, &u);
        let fd = directional_fd(|h| j_value(&t, &nl, sigma + h, &u), 1e-4);
        assert!((fd - ds).abs() <= 1e-5 * ds.abs().max(1e-3), "fd {fd} exact {ds}");
    }
}
