//! Property tests for the algebraic invariants.

use std::sync::Arc;

use proptest::prelude::*;

use edlab_core::ensemble::sample_initial;
use edlab_core::fields::velocity_fields;
use edlab_core::maxent::analytic_kernel;
use edlab_core::spectral;
use edlab_core::{init_scenario, Grid, ModelParams, Scenario};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// (C*phi, alpha'/C) and (phi, alpha') give the same kernel.
    #[test]
    fn kernel_rescaling_symmetry(
        grad in prop::collection::vec(-5.0..5.0f64, 1..=2),
        alpha in prop::collection::vec(0.1..50.0f64, 2),
        alpha_prime in 0.0..10.0f64,
        c in prop::sample::select(vec![0.1, 0.5, 3.0, 100.0]),
    ) {
        let alpha = &alpha[..grad.len()];
        let base = analytic_kernel(&grad, alpha, alpha_prime).unwrap();
        let scaled_grad: Vec<f64> = grad.iter().map(|g| g * c).collect();
        let scaled = analytic_kernel(&scaled_grad, alpha, alpha_prime / c).unwrap();
        for (a, b) in scaled.mean_shift.iter().zip(&base.mean_shift) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        prop_assert_eq!(scaled.covariance_diag, base.covariance_diag);
    }

    /// Kernel covariance depends only on alpha_n.
    #[test]
    fn kernel_covariance_ignores_drift(
        grad_a in prop::collection::vec(-5.0..5.0f64, 1..=2),
        alpha in prop::collection::vec(0.1..50.0f64, 2),
        ap_a in 0.0..10.0f64,
        ap_b in 0.0..10.0f64,
    ) {
        let alpha = &alpha[..grad_a.len()];
        let grad_b: Vec<f64> = grad_a.iter().map(|g| g + 1.0).collect();
        let ka = analytic_kernel(&grad_a, alpha, ap_a).unwrap();
        let kb = analytic_kernel(&grad_b, alpha, ap_b).unwrap();
        prop_assert_eq!(&ka.covariance_diag, &kb.covariance_diag);
        for (cov, a) in ka.covariance_diag.iter().zip(alpha) {
            prop_assert!((cov - 1.0 / a).abs() <= f64::EPSILON / a);
        }
    }

    /// drift + osmotic = current pointwise for any state and epsilon.
    #[test]
    fn velocity_decomposition_identity(
        sigma in 0.5..2.0f64,
        x0 in -3.0..3.0f64,
        k0 in -2.0..2.0f64,
        eps in 0.0..8.0f64,
    ) {
        let g = Arc::new(Grid::build(1, 256, 40.0).unwrap());
        let p = ModelParams::quantum(&[1.0], 1.0, eps, 1.0, 1e-3).unwrap();
        let st = init_scenario(
            &Scenario::Gaussian { x0: vec![x0], sigma: vec![sigma], k0: vec![k0] },
            &g,
            &p,
        )
        .unwrap();
        let vf = velocity_fields(&st, &p).unwrap();
        let scale = vf.current[0]
            .iter()
            .fold(1.0_f64, |acc, &v| acc.max(v.abs()));
        for i in 0..g.len() {
            let resid = (vf.drift[0][i] + vf.osmotic[0][i] - vf.current[0][i]).abs();
            prop_assert!(resid <= 1e-12 * scale);
        }
    }

    /// Spectral derivative of a product of up to 4 low-order harmonics is
    /// exact to 1e-10.
    #[test]
    fn spectral_derivative_exact_on_harmonic_products(
        modes in prop::collection::vec(0..5i32, 1..=4),
        phases in prop::collection::vec(0.0..std::f64::consts::TAU, 4),
    ) {
        let n = 256;
        let l = 10.0;
        let g = Grid::build(1, n, l).unwrap();
        let w = std::f64::consts::TAU / l;
        let factor = |m: i32, phase: f64, x: f64| ((m as f64) * w * x + phase).sin();
        let dfactor = |m: i32, phase: f64, x: f64| (m as f64) * w * ((m as f64) * w * x + phase).cos();

        let f: Vec<f64> = (0..n)
            .map(|i| {
                let x = g.coord(0, i);
                modes.iter().zip(&phases).map(|(&m, &ph)| factor(m, ph, x)).product()
            })
            .collect();
        let df = spectral::derivative(&g, &f, 0);
        for i in (0..n).step_by(7) {
            let x = g.coord(0, i);
            let mut expect = 0.0;
            for j in 0..modes.len() {
                let mut term = dfactor(modes[j], phases[j], x);
                for (k, (&m, &ph)) in modes.iter().zip(&phases).enumerate() {
                    if k != j {
                        term *= factor(m, ph, x);
                    }
                }
                expect += term;
            }
            prop_assert!((df[i] - expect).abs() < 1e-10, "at x={}: {} vs {}", x, df[i], expect);
        }
    }

    /// Sampling is deterministic in the seed and lands inside the box.
    #[test]
    fn sampling_deterministic_and_in_box(
        seed in any::<u64>(),
        m in 1usize..500,
    ) {
        let g = Arc::new(Grid::build(1, 128, 12.0).unwrap());
        let rho: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.coord(0, i);
                (-x * x / 2.0).exp()
            })
            .collect();
        let a = sample_initial(&g, &rho, m, seed).unwrap();
        let b = sample_initial(&g, &rho, m, seed).unwrap();
        prop_assert_eq!(a.positions(), b.positions());
        for &x in a.positions() {
            prop_assert!((-6.0..6.0).contains(&x));
        }
    }
}
