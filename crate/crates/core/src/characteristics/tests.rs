use std::f64::consts::PI;

use super::*;
use crate::mfg_solver::{solve_mfg, InitialGuess, PicardOptions, TimeGrid, VectorGrid};
use crate::model::{Hamiltonian, ModelSpec};
use crate::spectral_measure::{evaluate_density, Mode};
use num_complex::Complex64;

fn measure(order: usize) -> FourierMeasure {
    let mut modes = vec![(Mode::new1(1), Complex64::new(0.15, 0.05))];
    if order > 2 {
        modes.push((Mode::new1(2), Complex64::new(-0.04, 0.03)));
    }
    FourierMeasure::from_modes(1, order, &modes).unwrap()
}

fn coupling(strength: f64) -> CouplingPotential {
    CouplingPotential(
        Kernel::cosine(
            1,
            &[(Mode::new1(1), strength), (Mode::new1(2), 0.5 * strength)],
        )
        .unwrap(),
    )
}

fn opts(pairs: usize) -> DriftOptions {
    DriftOptions {
        pairs,
        seed: 5,
        ..DriftOptions::default()
    }
}

#[test]
fn zero_drift_is_pure_heat_flow() {
    let quad = Hamiltonian::default();
    let drift = build_drift(&ZeroPotential, None, quad, 1, 8, &opts(4)).unwrap();
    let m0 = FourierMeasure::from_modes(
        1,
        8,
        &[
            (Mode::new1(1), Complex64::new(0.2, -0.1)),
            (Mode::new1(3), Complex64::new(0.05, 0.02)),
        ],
    )
    .unwrap();
    let grid = TimeGrid::new(0.0, 0.5, 200).unwrap();
    let flow = integrate_flow(&m0, &drift, &grid, true).unwrap();
    for (n, m) in flow.states.iter().enumerate() {
        let t = flow.times[n];
        for (k, c) in m.iter() {
            let exact = m0.coeff(k) * (-2.0 * PI * PI * k.norm_sq() * t).exp();
            assert!(
                (c - exact).norm() <= 1e-10 * exact.norm().max(1e-300),
                "k = {k} t = {t}"
            );
        }
    }
    let heat: f64 = m0
        .index()
        .positive()
        .iter()
        .map(|k| 4.0 * PI * PI * k.norm_sq())
        .sum();
    let logs = flow.jacobian_log.as_ref().unwrap();
    assert!((logs[200] + 0.5 * heat).abs() < 1e-8 * heat);
    assert!(drift.field(0.0, &m0).unwrap().sup_norm() == 0.0);
}

#[test]
fn equal_potentials_collapse_the_lambda_rule() {
    let w = coupling(0.8);
    let rel = Hamiltonian::Relativistic;
    let single = build_drift(&w, None, rel, 1, 3, &opts(8)).unwrap();
    let quad = build_drift(&w, Some(&w), rel, 1, 3, &opts(8)).unwrap();
    let m = measure(3);
    let (a, b) = (
        single.evaluate(0.0, &m, true).unwrap(),
        quad.evaluate(0.0, &m, true).unwrap(),
    );
    let gap = a.field.components[0]
        .iter()
        .zip(&b.field.components[0])
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-13 && a.field.sup_norm() > 1e-3, "{gap}");
    assert!((a.trace_a - b.trace_a).abs() < 1e-12 * a.trace_a.abs().max(1.0));
}

#[test]
fn lambda_rule_interpolates_two_potentials() {
    // For quadratic H the drift is affine in the momentum, so the rule
    // returns the mean of the two single-potential drifts.
    let (w1, w2) = (coupling(0.8), coupling(-0.3));
    let quad = Hamiltonian::default();
    let m = measure(3);
    let mixed = build_drift(&w1, Some(&w2), quad, 1, 3, &opts(8))
        .unwrap()
        .field(0.0, &m)
        .unwrap();
    let a = build_drift(&w1, None, quad, 1, 3, &opts(8))
        .unwrap()
        .field(0.0, &m)
        .unwrap();
    let b = build_drift(&w2, None, quad, 1, 3, &opts(8))
        .unwrap()
        .field(0.0, &m)
        .unwrap();
    for j in 0..a.components[0].len() {
        let mean = 0.5 * (a.components[0][j] + b.components[0][j]);
        assert!((mixed.components[0][j] - mean).abs() < 1e-13);
    }
}

#[test]
fn mollified_coupling_drift_matches_closed_form() {
    // Z^k of the mollified quadratic potential is (1-eps)^2 f_N^k^2 phi^k conj(m^k);
    // both estimators are unbiased, the score form with a much larger variance.
    for (estimator, pairs) in [(Estimator::Pathwise, 400), (Estimator::Score, 40_000)] {
        let gap = closed_form_gap(estimator, pairs);
        assert!(gap < 0.05, "{estimator:?}: relative gap {gap}");
    }
}

fn closed_form_gap(estimator: Estimator, pairs: usize) -> f64 {
    let w = coupling(0.8);
    let m = measure(3);
    let drift = build_drift(
        &w,
        None,
        Hamiltonian::default(),
        1,
        3,
        &DriftOptions {
            estimator,
            ..opts(pairs)
        },
    )
    .unwrap();
    let field = drift.field(0.0, &m).unwrap();
    let moll = drift.mollifier();
    let exact: Vec<(Mode, Complex64)> = moll
        .index()
        .positive()
        .iter()
        .zip(moll.fejer())
        .map(|(&k, f)| {
            let s = (1.0 - moll.eps()) * f;
            (k, s * s * w.0.coeff(k) * m.coeff(k).conj())
        })
        .collect();
    let expected = crate::hjb_checker::inner_field(drift.spectral(), &exact);
    let gap = field.components[0]
        .iter()
        .zip(&expected.components[0])
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    gap / expected.sup_norm()
}

#[test]
fn drift_is_bounded_uniformly_in_order() {
    // With (1 - eps) f_N^k <= 1 the mollified drift is at most
    // sum_{k in F_N^+} 4 pi |k| |phi^k| |m^k|, whatever N.
    let w = coupling(0.8);
    let m = measure(3);
    let bound: f64 = m
        .iter()
        .map(|(k, c)| 4.0 * PI * k.norm() * w.0.coeff(k).abs() * c.norm())
        .sum();
    let sup: Vec<f64> = [4usize, 8, 16]
        .iter()
        .map(|&n| {
            let d = build_drift(&w, None, Hamiltonian::default(), 1, n, &opts(32)).unwrap();
            d.field(0.0, &m.with_order(n).unwrap()).unwrap().sup_norm()
        })
        .collect();
    assert!(
        sup.iter().all(|&s| s > 0.0 && s <= bound),
        "{sup:?} vs {bound}"
    );
}

fn jacobian_gap(hamiltonian: Hamiltonian, w: &dyn PotentialField, order: usize) -> (f64, f64) {
    // The score form is the exact derivative of its own frozen-draw estimator.
    let options = DriftOptions {
        estimator: Estimator::Score,
        ..opts(16)
    };
    let drift = build_drift(w, None, hamiltonian, 1, order, &options).unwrap();
    let grid = TimeGrid::new(0.0, 0.2, 40).unwrap();
    let m0 = measure(order);
    let flow = integrate_flow(&m0, &drift, &grid, true).unwrap();
    let trace = *flow.jacobian_log.as_ref().unwrap().last().unwrap();
    let fd = finite_difference_log_det(&m0, &drift, &grid, 1e-4).unwrap();
    (trace, fd)
}

#[test]
fn trace_matches_finite_difference_jacobian() {
    for (h, strength, order) in [
        (Hamiltonian::default(), 0.8, 2),
        (Hamiltonian::Quadratic { tilt: 0.3 }, 0.8, 2),
        (Hamiltonian::Relativistic, -1.5, 3),
    ] {
        let w = coupling(strength);
        let (trace, fd) = jacobian_gap(h, &w, order);
        let rel = ((trace - fd).exp() - 1.0).abs();
        assert!(rel < 1e-2, "{h:?} N={order}: trace {trace} fd {fd}");
    }
}

#[test]
fn mode_system_is_closed() {
    let w = coupling(0.8);
    let drift = build_drift(
        &w,
        None,
        Hamiltonian::Quadratic { tilt: 0.3 },
        1,
        3,
        &opts(8),
    )
    .unwrap();
    let grid = TimeGrid::new(0.0, 0.1, 10).unwrap();
    let m0 = measure(3);
    let low = integrate_flow(&m0, &drift, &grid, false).unwrap();
    let high = integrate_flow(&m0.with_order(6).unwrap(), &drift, &grid, false).unwrap();
    for (a, b) in low.states.iter().zip(&high.states) {
        assert_eq!(a.coeffs(), b.with_order(3).unwrap().coeffs());
    }
    // The modes beyond F_N are driven: the flow leaves P_N.
    assert!(high.last().coeff(Mode::new1(4)).norm() > 0.0);
    let density = evaluate_density(high.last(), 64).unwrap();
    assert!((density.mass() - 1.0).abs() < 1e-14);
}

#[test]
fn aggregation_exits_the_positive_set() {
    let w = coupling(-60.0);
    let drift = build_drift(&w, None, Hamiltonian::default(), 1, 2, &opts(4)).unwrap();
    let m0 =
        FourierMeasure::from_modes(1, 2, &[(Mode::new1(1), Complex64::new(0.4, 0.0))]).unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
    match integrate_flow(&m0, &drift, &grid, false) {
        Err(CharError::Exit { time, .. }) => assert!(time > 0.0 && time <= 1.0, "{time}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn pushforward_of_heat_flow_is_explicit() {
    let drift = build_drift(&ZeroPotential, None, Hamiltonian::default(), 1, 2, &opts(2)).unwrap();
    let m0 = measure(2);
    let grid = TimeGrid::new(0.0, 0.2, 10).unwrap();
    let bound = pushforward_density_bound(&m0, 4.0, &drift, &grid, 6).unwrap();
    // |C_2(4)| is the disc of radius 1/16.
    let disc = PI / 256.0;
    assert!((bound.initial_density * disc - 1.0).abs() < 1e-12);
    assert_eq!(bound.per_time[0], bound.initial_density);
    for (t, k) in bound.times.iter().zip(&bound.per_time) {
        let ratio = k / bound.initial_density;
        let expected = (4.0 * PI * PI * t).exp();
        assert!((ratio - expected).abs() < 1e-10 * expected);
    }
}

#[test]
fn pushforward_bound_is_stable_under_refinement() {
    let w = coupling(0.8);
    let drift = build_drift(
        &w,
        None,
        Hamiltonian::Quadratic { tilt: 0.3 },
        1,
        2,
        &opts(8),
    )
    .unwrap();
    let m0 = measure(2);
    let grid = TimeGrid::new(0.0, 0.2, 10).unwrap();
    let coarse = pushforward_density_bound(&m0, 4.0, &drift, &grid, 4).unwrap();
    let fine = pushforward_density_bound(&m0, 4.0, &drift, &grid, 8).unwrap();
    assert!(fine.lattice_points > coarse.lattice_points);
    assert!(coarse.bound.is_finite());
    assert!(
        (fine.bound / coarse.bound - 1.0).abs() < 0.1,
        "{} vs {}",
        fine.bound,
        coarse.bound
    );
}

#[test]
fn heat_flow_keeps_truncation_exact() {
    let m0 = measure(3);
    let grid = TimeGrid::new(0.0, 0.2, 20).unwrap();
    let feedback = vec![VectorGrid::zeros(1, 64); 21];
    let series = truncation_error(&m0, &feedback, 4, &grid).unwrap();
    assert!(series.sup < 1e-14, "{}", series.sup);
    assert!(series.positivity_time.is_none());
}

#[test]
fn truncation_ratio_decreases_with_order() {
    let model = ModelSpec::default();
    let m0 = measure(3);
    let grid = TimeGrid::new(0.0, model.horizon, 100).unwrap();
    let picard = PicardOptions {
        resolution: 128,
        ..PicardOptions::default()
    };
    let sol = solve_mfg(
        &evaluate_density(&m0, 128).unwrap(),
        &model,
        &grid,
        &InitialGuess::Zero,
        &picard,
    )
    .unwrap();
    let sups: Vec<f64> = [4usize, 8, 16]
        .iter()
        .map(|&n| truncation_error(&m0, &sol.feedback, n, &grid).unwrap().sup)
        .collect();
    assert!(sups[0] > sups[1] && sups[1] > sups[2], "{sups:?}");
    let s = truncation_error(&m0, &sol.feedback, 4, &grid).unwrap();
    assert!(s.limit_estimate.is_finite() && s.limit_estimate < 2.0 * s.sup);
}

#[test]
fn csv_has_one_row_per_time() {
    let drift = build_drift(&ZeroPotential, None, Hamiltonian::default(), 1, 3, &opts(2)).unwrap();
    let flow = integrate_flow(
        &measure(3),
        &drift,
        &TimeGrid::new(0.0, 0.1, 5).unwrap(),
        true,
    )
    .unwrap();
    let csv = flow.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[0], "t,re1,im1,re2,im2,log_jacobian");
    assert!(lines.iter().all(|l| l.split(',').count() == 6));
}
