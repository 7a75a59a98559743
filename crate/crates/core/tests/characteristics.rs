use rand::Rng;
use torus_mfg::characteristics::{build_drift, integrate_flow, CouplingPotential, DriftOptions};
use torus_mfg::hjb_checker::check_ball;
use torus_mfg::mfg_solver::TimeGrid;
use torus_mfg::model::{Hamiltonian, Kernel};
use torus_mfg::rng;
use torus_mfg::sampler::regularization_threshold;
use torus_mfg::{Complex64, FourierMeasure, Mode};

const BALL: f64 = 4.0;

fn start(order: usize, index: u64) -> FourierMeasure {
    let mut r = rng::stream(71, index);
    let modes: Vec<(Mode, Complex64)> = (1..16)
        .map(|k| {
            let radius = 0.15 / (k as f64).powi(3) * r.random_range(0.0..1.0);
            (
                Mode::new1(k),
                Complex64::from_polar(radius, r.random_range(0.0..std::f64::consts::TAU)),
            )
        })
        .collect();
    FourierMeasure::from_modes(1, 16, &modes)
        .unwrap()
        .with_order(order)
        .unwrap()
}

fn worst_constant(order: usize, eps: f64, radius_factor: f64) -> f64 {
    let potential = CouplingPotential(
        Kernel::cosine(1, &[(Mode::new1(1), 0.8), (Mode::new1(2), 0.4)]).unwrap(),
    );
    let opts = DriftOptions {
        eps,
        delta: Some(radius_factor * regularization_threshold(1, order, eps)),
        pairs: 16,
        seed: 2,
        ..DriftOptions::default()
    };
    let drift = build_drift(
        &potential,
        None,
        Hamiltonian::Quadratic { tilt: 0.3 },
        1,
        order,
        &opts,
    )
    .unwrap();
    let grid = TimeGrid::new(0.0, 0.3, 15).unwrap();
    (0..3)
        .map(|i| {
            let m0 = start(order, i);
            check_ball(&m0, BALL).unwrap();
            integrate_flow(&m0, &drift, &grid, false)
                .unwrap()
                .bounds()
                .unwrap()
                .constant()
        })
        .fold(0.0, f64::max)
}

#[test]
fn one_constant_bounds_flows_across_orders_and_mollifiers() {
    // c' is fitted on the coarsest configuration and then imposed on the rest.
    let fitted = 1.5 * worst_constant(4, 0.1, 1.0);
    for order in [4, 8, 16] {
        for eps in [0.1, 0.05] {
            for radius in [1.0, 0.5] {
                let c = worst_constant(order, eps, radius);
                assert!(
                    c <= fitted,
                    "N={order} eps={eps} radius={radius}: {c} > {fitted}"
                );
            }
        }
    }
}
