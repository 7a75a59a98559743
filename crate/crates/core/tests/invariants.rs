use std::sync::Arc;

use proptest::prelude::*;
use torus_mfg::model::{legendre_transform, Hamiltonian, Kernel, LegendreOptions};
use torus_mfg::spectral_measure::{
    convolve_fejer, dist_tv, dist_w1_1d, evaluate_density, fejer_multiplier, is_in_O_N,
    nyquist_resolution,
};
use torus_mfg::{Complex64, FourierMeasure, Mode, MultiIndexSet};

fn measure_from(order: usize, coords: &[(f64, f64)]) -> FourierMeasure {
    let index = Arc::new(MultiIndexSet::new(1, order).unwrap());
    let coeffs = coords
        .iter()
        .take(index.len_positive())
        .enumerate()
        .map(|(i, &(r, phase))| Complex64::from_polar(r / (i as f64 + 1.0).powi(2), phase))
        .collect();
    FourierMeasure::new(index, coeffs).unwrap()
}

fn coords() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..0.3, 0.0f64..std::f64::consts::TAU), 15)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fejer_multipliers_compose(c in coords(), n in 2usize..12, drop in 0usize..6) {
        let m = measure_from(n, &c);
        let inner = n.saturating_sub(drop).max(1);
        let twice = convolve_fejer(&convolve_fejer(&m, n).unwrap(), inner).unwrap();
        for (k, got) in twice.iter() {
            let expected = m.coeff(k) * fejer_multiplier(k, n) * fejer_multiplier(k, inner);
            prop_assert!((got - expected).norm() <= 1e-15);
        }
    }

    #[test]
    fn wasserstein_is_dominated_by_total_variation(a in coords(), b in coords(), n in 2usize..9) {
        // c0 = sqrt(d)/2 bounds the diameter of the circle.
        let (m1, m2) = (measure_from(n, &a), measure_from(n, &b));
        prop_assume!(is_in_O_N(&m1, 64).unwrap().is_inside() && is_in_O_N(&m2, 64).unwrap().is_inside());
        let w1 = dist_w1_1d(&m1, &m2).unwrap();
        let tv = dist_tv(&m1, &m2).unwrap();
        prop_assert!(w1 <= 0.5 * tv + 1e-12, "W1 {w1} TV {tv}");
    }

    #[test]
    fn members_of_o_n_have_positive_densities(c in coords(), n in 2usize..12, scale in 0.5f64..3.0) {
        let scaled: Vec<(f64, f64)> = c.iter().map(|&(r, p)| (r * scale, p)).collect();
        let m = measure_from(n, &scaled);
        if is_in_O_N(&m, 64).unwrap().is_inside() {
            for res in [nyquist_resolution(n, 16), 256] {
                prop_assert!(evaluate_density(&m, res).unwrap().min() > 0.0);
            }
        }
    }

    #[test]
    fn lagrangians_are_uniformly_convex(x in 0.0f64..1.0, a in -0.95f64..0.95, b in -0.95f64..0.95, tilt in -1.0f64..1.0) {
        // The fitted constant 1/2: both Hessians dominate the identity.
        for h in [Hamiltonian::Quadratic { tilt }, Hamiltonian::Relativistic] {
            let (x, a, b) = ([x, 0.0], [a, 0.0], [b, 0.0]);
            let grad = h.lagrangian_grad(&x, &a);
            let gap = h.lagrangian(&x, &b) - h.lagrangian(&x, &a) - grad[0] * (b[0] - a[0]);
            prop_assert!(gap >= 0.5 * (b[0] - a[0]).powi(2) - 1e-12, "{h:?}: {gap}");
        }
    }

    #[test]
    fn legendre_transform_is_involutive(x in 0.0f64..1.0, p in -2.0f64..2.0, tilt in -0.5f64..0.5) {
        let opts = LegendreOptions { dim: 1, ..LegendreOptions::default() };
        for h in [Hamiltonian::Quadratic { tilt }, Hamiltonian::Relativistic] {
            let x = [x, 0.0];
            let dual = |alpha: f64| -alpha * p - legendre_transform(&h, &x, &[alpha, 0.0], &opts).unwrap();
            let center = h.feedback(&x, &[p, 0.0])[0];
            let (mut lo, mut hi) = (center - 0.5, center + 0.5);
            if matches!(h, Hamiltonian::Relativistic) {
                // |p| <= 2 puts the maximizer at |alpha| <= 0.9.
                lo = lo.max(-0.97);
                hi = hi.min(0.97);
            }
            let golden = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let (u, v) = (hi - golden * (hi - lo), lo + golden * (hi - lo));
                if dual(u) < dual(v) { lo = u } else { hi = v }
            }
            let back = dual(0.5 * (lo + hi));
            prop_assert!((back - h.value(&x, &[p, 0.0])).abs() < 1e-6, "{h:?}: {back}");
        }
    }

    #[test]
    fn convolution_potentials_are_translation_semiconcave(c in coords(), n in 2usize..8, y in -0.5f64..0.5, a in -1.0f64..1.0) {
        // Translations only rotate phases, so C_F = 0 fits.
        let kernel = Kernel::cosine(1, &[(Mode::new1(1), a), (Mode::new1(2), -0.5 * a)]).unwrap();
        let m = measure_from(n, &c);
        let gap = kernel.potential(&m.translate([y, 0.0])) + kernel.potential(&m.translate([-y, 0.0]))
            - 2.0 * kernel.potential(&m);
        prop_assert!(gap <= 1e-14);
    }
}
