//! Shared fixtures for the benchmarks.

use torus_mfg::{Complex64, FourierMeasure, Mode};

/// A smooth one-dimensional measure of order `order` with decaying modes.
pub fn smooth_measure(order: usize) -> FourierMeasure {
    let modes: Vec<(Mode, Complex64)> = (1..order as i32)
        .map(|k| {
            (
                Mode::new1(k),
                Complex64::from_polar(0.2 / (k * k) as f64, 0.7 * k as f64),
            )
        })
        .collect();
    FourierMeasure::from_modes(1, order, &modes).expect("modes inside F_N")
}
