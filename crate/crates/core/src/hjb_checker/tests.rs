use super::*;
use crate::mfcp::ValueOptions;
use crate::mfg_solver::PicardOptions;
use crate::model::Hamiltonian;
use crate::sampler::Mollifier;
use std::sync::Arc;

fn options(resolution: usize, steps: usize) -> ValueOptions {
    ValueOptions {
        picard: PicardOptions {
            resolution,
            tol: 1e-12,
            ..Default::default()
        },
        time_steps: steps,
        n_starts: 2,
        ..Default::default()
    }
}

fn measure(order: usize) -> FourierMeasure {
    let mut modes = vec![(Mode::new1(1), Complex64::new(0.2, 0.05))];
    if order > 2 {
        modes.push((Mode::new1(2), Complex64::new(-0.05, 0.04)));
    }
    FourierMeasure::from_modes(1, order, &modes).unwrap()
}

fn uniform(order: usize) -> FourierMeasure {
    FourierMeasure::uniform(Arc::new(crate::MultiIndexSet::new(1, order).unwrap()))
}

fn tilted() -> ModelSpec {
    ModelSpec {
        hamiltonian: Hamiltonian::Quadratic { tilt: 0.3 },
        ..ModelSpec::default()
    }
}

#[test]
fn free_model_has_vanishing_residuals() {
    let model = ModelSpec::free(1, Hamiltonian::default(), 0.5);
    let solver = ValueSolver::new(model.clone(), options(32, 50)).unwrap();
    let probe = solver.value(0.1, &measure(4)).unwrap();
    let report = hjb_residual(&probe, &model, 10.0).unwrap();
    assert_eq!(report.residual, 0.0);
    let bounds = derivative_bounds(&probe);
    assert_eq!((bounds.sup_gradient, bounds.weighted_sum), (0.0, 0.0));
    let opts = MasterOptions {
        h: 1e-2,
        time_step: 0.01,
    };
    for k in 1..=3 {
        let r = master_residual(&solver, &probe, Mode::new1(k), &opts).unwrap();
        assert_eq!(r.residual, Complex64::new(0.0, 0.0));
        assert_eq!(r.hjb_gradient, Complex64::new(0.0, 0.0));
    }
}

#[test]
fn breakdown_reproduces_residual() {
    let model = tilted();
    let solver = ValueSolver::new(model.clone(), options(32, 100)).unwrap();
    let probe = solver.value(0.0, &measure(4)).unwrap();
    let report = hjb_residual(&probe, &model, 10.0).unwrap();
    assert_eq!(report.residual, report.terms.signed_sum().abs());
    assert_eq!(report.derivative_source, DerivativeSource::Superjet);
    assert_eq!(
        report.csv_row().split(',').count(),
        HjbResidualReport::csv_header().split(',').count()
    );
}

#[test]
fn inner_field_is_truncated_value_gradient() {
    let model = ModelSpec::default();
    let solver = ValueSolver::new(model, options(64, 100)).unwrap();
    let probe = solver.value(0.1, &measure(8)).unwrap();
    let sol = probe.minimizer();
    let spectral = Spectral::new(1, sol.resolution).unwrap();
    let direct = spectral.gradient(&spectral.forward(&sol.value[0]));
    let field = inner_field(&spectral, &probe.coeff_derivs);
    let gap = direct[0]
        .iter()
        .zip(&field.components[0])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-3, "{gap}");
    assert!(field.sup_norm() > 1e-3);
}

#[test]
fn preconditions_name_the_violated_bound() {
    let m = FourierMeasure::from_modes(1, 2, &[(Mode::new1(1), Complex64::new(0.4, 0.0))]).unwrap();
    match check_ball(&m, 3.0) {
        Err(CheckError::Precondition { bound, .. }) => {
            assert_eq!(bound, "certified minimum density")
        }
        other => panic!("{other:?}"),
    }
    let steep =
        FourierMeasure::from_modes(1, 4, &[(Mode::new1(3), Complex64::new(0.1, 0.0))]).unwrap();
    match check_ball(&steep, 2.0) {
        Err(CheckError::Precondition { bound, .. }) => assert_eq!(bound, "density gradient bound"),
        other => panic!("{other:?}"),
    }
    assert!(check_ball(&m, 10.0).is_ok());
    let solver = ValueSolver::new(
        ModelSpec::default(),
        ValueOptions {
            time_probe: None,
            ..options(32, 50)
        },
    )
    .unwrap();
    let probe = solver.value(0.0, &uniform(2)).unwrap();
    assert!(matches!(
        hjb_residual(&probe, solver.model(), 10.0),
        Err(CheckError::MissingTimeDerivative)
    ));
}

#[test]
fn uniform_default_residual_is_zero_for_every_order() {
    let model = ModelSpec::default();
    let solver = ValueSolver::new(model.clone(), options(32, 100)).unwrap();
    for n in [2, 4, 8] {
        let probe = solver.value(0.0, &uniform(n)).unwrap();
        assert_eq!(hjb_residual(&probe, &model, 2.0).unwrap().residual, 0.0);
    }
}

#[test]
fn residual_decays_with_truncation_order() {
    let model = tilted();
    let solver = ValueSolver::new(model.clone(), options(32, 800)).unwrap();
    let residuals: Vec<f64> = [2usize, 4, 8]
        .iter()
        .map(|&n| {
            let m = if n == 2 {
                measure(2)
            } else {
                measure(2).with_order(n).unwrap()
            };
            let probe = solver.value(0.0, &m).unwrap();
            hjb_residual(&probe, &model, 10.0).unwrap().residual
        })
        .collect();
    assert!(residuals[2] <= residuals[0], "{residuals:?}");
    assert!(residuals[1] < 0.2 * residuals[0], "{residuals:?}");
}

#[test]
fn finite_difference_residual_agrees_with_superjet() {
    let model = ModelSpec::default();
    let solver = ValueSolver::new(model.clone(), options(32, 200)).unwrap();
    let probe = solver.value(0.1, &measure(4)).unwrap();
    let a = hjb_residual(&probe, &model, 10.0).unwrap();
    let b = hjb_residual_fd(&solver, &probe, 10.0, 1e-3).unwrap();
    assert_eq!(b.derivative_source, DerivativeSource::FiniteDifference);
    let scale = a.terms.laplacian_pairing.abs();
    assert!((a.terms.laplacian_pairing - b.terms.laplacian_pairing).abs() < 1e-3 * scale);
    assert!((a.residual - b.residual).abs() < 1e-3 * scale);
}

#[test]
fn derivative_bounds_are_stable_in_order() {
    let solver = ValueSolver::new(ModelSpec::default(), options(32, 100)).unwrap();
    let at = |n: usize| {
        derivative_bounds(
            &solver
                .value(0.0, &measure(4).with_order(n).unwrap())
                .unwrap(),
        )
    };
    let (b4, b8) = (at(4), at(8));
    assert!(b4.sup_gradient > 0.0 && b4.weighted_sum > 0.0);
    assert!(b8.sup_gradient < 2.0 * b4.sup_gradient);
    assert!(b8.weighted_sum < 2.0 * b4.weighted_sum);
}

#[test]
fn master_residual_matches_hjb_gradient() {
    let solver = ValueSolver::new(ModelSpec::default(), options(32, 400)).unwrap();
    let probe = solver.value(0.1, &measure(4)).unwrap();
    let opts = MasterOptions {
        h: 1e-2,
        time_step: 0.01,
    };
    for k in 1..=3 {
        let r = master_residual(&solver, &probe, Mode::new1(k), &opts).unwrap();
        assert!(
            r.is_consistent(10.0),
            "k={k}: gap {} trunc {}",
            r.consistency_gap,
            r.truncation_error
        );
        assert!((r.terms.residual() - r.residual).norm() == 0.0);
    }
    assert!(master_residual(&solver, &probe, Mode::new1(0), &opts).is_err());
    let edge = solver.value(0.0, &measure(4)).unwrap();
    assert!(master_residual(&solver, &edge, Mode::new1(1), &opts).is_err());
}

#[test]
fn cross_derivatives_are_symmetric() {
    let solver = ValueSolver::new(tilted(), options(32, 200)).unwrap();
    let probe = solver.value(0.1, &measure(4)).unwrap();
    let s = schwarz_symmetry(&solver, &probe, Mode::new1(1), Mode::new1(2), 1e-3).unwrap();
    assert!(s.relative_gap() < 1e-2, "{s:?}");
}

/// `Z^k = -lambda conj(m^k)`, the derivative field of `-lambda sum |m^k|^2`.
struct ConcaveQuadratic(f64);

impl CoefficientField for ConcaveQuadratic {
    fn coefficients(&self, m: &FourierMeasure) -> Result<Vec<Complex64>, CheckError> {
        Ok(m.coeffs().iter().map(|c| -self.0 * c.conj()).collect())
    }
}

#[test]
fn lipschitz_trivial_cases() {
    let moll = Mollifier::at_threshold(1, 2, 0.1).unwrap();
    let m = measure(2);
    let z = [Complex64::new(0.3, -0.2)];
    let s = [[1.0, 0.0], [0.0, 0.0]];
    let r = one_sided_lipschitz_test(&ZeroField, &m, &z, s, &moll, 1.0, 16, 0).unwrap();
    assert_eq!((r.lhs, r.std_error), (0.0, 0.0));
    assert_eq!(r.status, LipschitzStatus::Pass);
    let r = one_sided_lipschitz_test(
        &ConcaveQuadratic(1.0),
        &m,
        &z,
        [[0.0; 2]; 2],
        &moll,
        1.0,
        16,
        0,
    )
    .unwrap();
    assert_eq!((r.lhs, r.rhs_bound), (0.0, 0.0));
    assert!(one_sided_lipschitz_test(
        &ZeroField,
        &m,
        &z,
        [[-1.0, 0.0], [0.0, 0.0]],
        &moll,
        1.0,
        16,
        0
    )
    .is_err());
}

#[test]
fn lipschitz_quadratic_oracle() {
    let (order, eps, lambda, s) = (3usize, 0.1, 0.7, 1.5);
    let moll = Mollifier::at_threshold(1, order, eps).unwrap();
    let m = measure(order);
    let z = [Complex64::new(0.3, -0.2), Complex64::new(-0.1, 0.25)];
    let r = one_sided_lipschitz_test(
        &ConcaveQuadratic(lambda),
        &m,
        &z,
        [[s, 0.0], [0.0, 0.0]],
        &moll,
        1.0,
        4000,
        11,
    )
    .unwrap();
    let expected: f64 = moll
        .index()
        .positive()
        .iter()
        .zip(moll.fejer())
        .zip(&z)
        .map(|((k, f), zk)| {
            -2.0 * lambda * (1.0 - eps).powi(2) * s * f * f * k.norm_sq() * zk.norm_sqr()
        })
        .sum();
    assert!(
        (r.lhs - expected).abs() < 4.0 * r.std_error,
        "{} vs {expected} ({})",
        r.lhs,
        r.std_error
    );
    assert!(r.lhs < 0.0 && r.status == LipschitzStatus::Pass);
    let unit = s * (1.0 * z[0].norm() + 2.0 * z[1].norm()).powi(2);
    assert!((r.rhs_unit - unit).abs() < 1e-14);
}
