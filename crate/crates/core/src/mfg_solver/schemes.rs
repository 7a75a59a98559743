//! Integrating-factor Heun schemes for the forward Fokker-Planck and backward
//! Hamilton-Jacobi equations, carried in spectral space.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::model::{Hamiltonian, Kernel, Vec2};
use crate::spectral_measure::Spectral;

use super::{SolverError, TimeGrid, VectorGrid};

pub(crate) type Modes = Vec<Complex64>;

/// `e^{-2 pi^2 |k|^2 dt}` per flat index.
pub(crate) fn heat_factors(spectral: &Spectral, dt: f64) -> Vec<f64> {
    (0..spectral.len())
        .map(|j| (-2.0 * PI * PI * spectral.norm_sq(j) * dt).exp())
        .collect()
}

/// Spectral drift term `-div(alpha m)`, dealiased.
fn transport(spectral: &Spectral, a: &[Complex64], alpha: &VectorGrid) -> (Modes, f64) {
    let density = spectral.inverse(a);
    let min = density.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out = vec![Complex64::new(0.0, 0.0); a.len()];
    for (axis, comp) in alpha.components.iter().enumerate() {
        if comp.iter().all(|&v| v == 0.0) {
            continue;
        }
        let flux: Vec<f64> = comp.iter().zip(&density).map(|(v, m)| v * m).collect();
        let q = spectral.forward(&flux);
        for (j, (o, c)) in out.iter_mut().zip(q).enumerate() {
            *o -= c * spectral.derivative_symbol(j, axis);
        }
    }
    spectral.dealias(&mut out);
    out[0] = Complex64::new(0.0, 0.0);
    (out, min)
}

/// Forward flow of DFT arrays under the feedback `alpha[n]` at each time node.
pub(crate) fn fokker_planck(
    spectral: &Spectral,
    m0: &[Complex64],
    alpha: &[VectorGrid],
    grid: &TimeGrid,
    negativity_tol: f64,
) -> Result<Vec<Modes>, SolverError> {
    let dt = grid.dt();
    let e = heat_factors(spectral, dt);
    let mut flow = Vec::with_capacity(grid.steps() + 1);
    flow.push(m0.to_vec());
    for n in 0..grid.steps() {
        let a = &flow[n];
        let (n1, min) = transport(spectral, a, &alpha[n]);
        check_density(min, n, grid, negativity_tol)?;
        let pred: Modes = (0..a.len()).map(|j| e[j] * (a[j] + dt * n1[j])).collect();
        let (n2, min) = transport(spectral, &pred, &alpha[n + 1]);
        check_density(min, n + 1, grid, negativity_tol)?;
        let next: Modes = (0..a.len())
            .map(|j| e[j] * a[j] + 0.5 * dt * (e[j] * n1[j] + n2[j]))
            .collect();
        flow.push(next);
    }
    let min = spectral
        .inverse(flow.last().expect("nonempty"))
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    check_density(min, grid.steps(), grid, negativity_tol)?;
    Ok(flow)
}

fn check_density(min: f64, step: usize, grid: &TimeGrid, tol: f64) -> Result<(), SolverError> {
    if min < -tol || !min.is_finite() {
        Err(SolverError::CflViolation {
            time: grid.time(step),
            min_density: min,
        })
    } else {
        Ok(())
    }
}

/// Pointwise evaluation of `H(x, grad u)` returned spectrally and dealiased.
fn hamiltonian_term(
    spectral: &Spectral,
    points: &[Vec2],
    h: &Hamiltonian,
    b: &[Complex64],
) -> Modes {
    let grad = spectral.gradient(b);
    let values: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(j, x)| {
            let p = [grad[0][j], grad.get(1).map_or(0.0, |g| g[j])];
            h.value(x, &p)
        })
        .collect();
    let mut out = spectral.forward(&values);
    spectral.dealias(&mut out);
    out
}

/// Data of the backward equation `d_t u + 1/2 Lap u - H(x, grad u) + f(x, m_t) = 0`.
pub(crate) struct BackwardData<'a> {
    pub hamiltonian: &'a Hamiltonian,
    pub coupling: &'a Kernel,
    pub blowup_cap: f64,
}

/// Backward value arrays on the time grid from the terminal array `u_K`.
pub(crate) fn backward_hj(
    spectral: &Spectral,
    points: &[Vec2],
    data: &BackwardData<'_>,
    flow: &[Modes],
    terminal: Modes,
    grid: &TimeGrid,
) -> Result<Vec<Modes>, SolverError> {
    let k = grid.steps();
    let dt = grid.dt();
    let e = heat_factors(spectral, dt);
    let rhs = |b: &[Complex64], n: usize| -> Modes {
        let mut out = hamiltonian_term(spectral, points, data.hamiltonian, b);
        out.iter_mut().for_each(|c| *c = -*c);
        data.coupling
            .add_flat_derivative_spectral(&flow[n], spectral, 1.0, &mut out);
        out
    };
    let mut value = vec![Vec::new(); k + 1];
    value[k] = terminal;
    for n in (0..k).rev() {
        let b = &value[n + 1];
        let n1 = rhs(b, n + 1);
        let pred: Modes = (0..b.len()).map(|j| e[j] * (b[j] + dt * n1[j])).collect();
        let n2 = rhs(&pred, n);
        let next: Modes = (0..b.len())
            .map(|j| e[j] * b[j] + 0.5 * dt * (e[j] * n1[j] + n2[j]))
            .collect();
        // The coefficient l1 norm dominates the sup norm.
        let sup = next.iter().map(|c| c.norm()).sum::<f64>();
        if !(sup.is_finite() && sup <= data.blowup_cap) {
            return Err(SolverError::BlowUp {
                time: grid.time(n),
                bound: sup,
            });
        }
        value[n] = next;
    }
    Ok(value)
}

/// Feedback `-d_p H(x, grad u)`, clipped to `|alpha| <= clip`. Returns whether clipping acted.
pub(crate) fn feedback_field(
    spectral: &Spectral,
    points: &[Vec2],
    h: &Hamiltonian,
    b: &[Complex64],
    clip: f64,
) -> (VectorGrid, bool) {
    let grad = spectral.gradient(b);
    let dim = spectral.dim();
    let mut comps = vec![vec![0.0; points.len()]; dim];
    let mut clipped = false;
    for (j, x) in points.iter().enumerate() {
        let p = [grad[0][j], if dim > 1 { grad[1][j] } else { 0.0 }];
        let mut a = h.feedback(x, &p);
        let norm = (a[0] * a[0] + a[1] * a[1]).sqrt();
        if norm > clip {
            clipped = true;
            let s = clip / norm;
            a = [a[0] * s, a[1] * s];
        }
        for (i, c) in comps.iter_mut().enumerate() {
            c[j] = a[i];
        }
    }
    (VectorGrid { components: comps }, clipped)
}
