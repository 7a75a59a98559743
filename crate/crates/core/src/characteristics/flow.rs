use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::{CharError, Drift};
use crate::mfg_solver::TimeGrid;
use crate::sampler::SamplerError;
use crate::spectral_measure::{is_in_O_N, min_density, nyquist_resolution, FourierMeasure, Mode};

/// A computed characteristic: states `m_t` on a time grid and `log J_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct CharFlow {
    pub times: Vec<f64>,
    pub states: Vec<FourierMeasure>,
    pub jacobian_log: Option<Vec<f64>>,
}

/// Extremes of the density bounds along a flow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowBounds {
    /// Smallest certified lower bound of the density.
    pub min_density: f64,
    /// Largest `sup |grad m_t|` bound.
    pub max_gradient: f64,
}

impl FlowBounds {
    /// Smallest `c'` with `m_t >= 1/c'` and `|grad m_t| <= c'` along the flow.
    pub fn constant(&self) -> f64 {
        (1.0 / self.min_density).max(self.max_gradient)
    }
}

impl CharFlow {
    pub fn last(&self) -> &FourierMeasure {
        self.states.last().expect("a flow has at least one state")
    }

    pub fn bounds(&self) -> Result<FlowBounds, CharError> {
        let mut out = FlowBounds {
            min_density: f64::INFINITY,
            max_gradient: 0.0,
        };
        for m in &self.states {
            let dm = min_density(m, nyquist_resolution(m.order(), 64))?;
            out.min_density = out.min_density.min(dm.certified_lower_bound);
            out.max_gradient = out.max_gradient.max(m.gradient_bound());
        }
        Ok(out)
    }

    /// `t, re(k), im(k) ... [, log_jacobian]`, one row per time.
    pub fn to_csv(&self) -> String {
        let first = &self.states[0];
        let dim = first.dim();
        let mut out = String::from("t");
        for k in first.index().positive() {
            let name = k.format(dim);
            let _ = write!(out, ",re{name},im{name}");
        }
        if self.jacobian_log.is_some() {
            out.push_str(",log_jacobian");
        }
        out.push('\n');
        for (n, (t, m)) in self.times.iter().zip(&self.states).enumerate() {
            let _ = write!(out, "{t}");
            for c in m.coeffs() {
                let _ = write!(out, ",{},{}", c.re, c.im);
            }
            if let Some(j) = &self.jacobian_log {
                let _ = write!(out, ",{}", j[n]);
            }
            out.push('\n');
        }
        out
    }
}

fn heat_rates(m: &FourierMeasure) -> Vec<f64> {
    m.index()
        .positive()
        .iter()
        .map(|k| -2.0 * PI * PI * k.norm_sq())
        .collect()
}

/// Mode system integrated by the Lawson (integrating-factor) fourth-order
/// Runge-Kutta scheme, so the heat part `e^{-2 pi^2 |k|^2 dt}` is exact.
///
/// With `with_jacobian` the trace `sum_k (-4 pi^2 |k|^2 + A^{RR}_kk + A^{II}_kk
/// + B^{RR}_kk + B^{II}_kk)` is integrated with the same stages.
pub fn integrate_flow(
    m0: &FourierMeasure,
    drift: &Drift<'_>,
    grid: &TimeGrid,
    with_jacobian: bool,
) -> Result<CharFlow, CharError> {
    let report = is_in_O_N(m0, nyquist_resolution(m0.order(), 16))?;
    if !report.is_inside() {
        return Err(CharError::Exit {
            time: grid.t0(),
            margin: report.margin,
        });
    }
    let index = m0.index().clone();
    let rates = heat_rates(m0);
    let heat_trace: f64 = 2.0 * rates.iter().sum::<f64>();
    let h = grid.dt();
    let half: Vec<f64> = rates.iter().map(|l| (0.5 * l * h).exp()).collect();
    let full: Vec<f64> = half.iter().map(|e| e * e).collect();
    let state = |c: Vec<Complex64>| FourierMeasure::new(index.clone(), c);
    let eval = |t: f64, y: &[Complex64]| -> Result<(Vec<Complex64>, f64), CharError> {
        let e = drift
            .evaluate(t, &state(y.to_vec())?, with_jacobian)
            .map_err(|e| match e {
                CharError::Sampler(SamplerError::InvariantViolation { margin }) => {
                    CharError::Exit { time: t, margin }
                }
                other => other,
            })?;
        Ok((e.rhs, e.trace_a + e.trace_b))
    };
    let combine =
        |a: &[Complex64], wa: &[f64], b: &[Complex64], wb: f64, scale: &[f64]| -> Vec<Complex64> {
            a.iter()
                .zip(b)
                .enumerate()
                .map(|(i, (x, y))| (x * wa[i] + y * wb) * scale[i])
                .collect()
        };
    let ones = vec![1.0; rates.len()];
    let mut y = m0.coeffs().to_vec();
    let mut log_j = 0.0;
    let mut times = vec![grid.t0()];
    let mut states = vec![m0.clone()];
    let mut logs = vec![0.0];
    for n in 0..grid.steps() {
        let t = grid.time(n);
        let (k1, tr1) = eval(t, &y)?;
        let y2 = combine(&y, &ones, &k1, 0.5 * h, &half);
        let (k2, tr2) = eval(t + 0.5 * h, &y2)?;
        let y3 = combine(&y, &half, &k2, 0.5 * h, &ones);
        let (k3, tr3) = eval(t + 0.5 * h, &y3)?;
        let y4: Vec<Complex64> = y
            .iter()
            .zip(&k3)
            .enumerate()
            .map(|(i, (a, b))| a * full[i] + b * (h * half[i]))
            .collect();
        let (k4, tr4) = eval(t + h, &y4)?;
        y = (0..y.len())
            .map(|i| {
                y[i] * full[i]
                    + (k1[i] * full[i] + (k2[i] + k3[i]) * (2.0 * half[i]) + k4[i]) * (h / 6.0)
            })
            .collect();
        log_j += h * heat_trace + h / 6.0 * (tr1 + 2.0 * tr2 + 2.0 * tr3 + tr4);
        let m = state(y.clone())?;
        let t_next = grid.time(n + 1);
        let report = is_in_O_N(&m, nyquist_resolution(m.order(), 16))?;
        if !report.is_inside() {
            return Err(CharError::Exit {
                time: t_next,
                margin: report.margin,
            });
        }
        times.push(t_next);
        states.push(m);
        logs.push(log_j);
    }
    Ok(CharFlow {
        times,
        states,
        jacobian_log: with_jacobian.then_some(logs),
    })
}

/// `log |det D Phi_T|` of the flow map in the real coordinates of `m0`, by central differences.
pub fn finite_difference_log_det(
    m0: &FourierMeasure,
    drift: &Drift<'_>,
    grid: &TimeGrid,
    h: f64,
) -> Result<f64, CharError> {
    let base = m0.to_real();
    let dim = base.len();
    let endpoint = |coords: &[f64]| -> Result<Vec<f64>, CharError> {
        let m = FourierMeasure::from_real(m0.index().clone(), coords)?;
        Ok(integrate_flow(&m, drift, grid, false)?.last().to_real())
    };
    let columns = (0..dim)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>, CharError> {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[i] += h;
            minus[i] -= h;
            let (a, b) = (endpoint(&plus)?, endpoint(&minus)?);
            Ok(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let jac = DMatrix::from_fn(dim, dim, |r, c| columns[c][r]);
    Ok(jac.determinant().abs().ln())
}

/// Pushforward density of the uniform law on `m0 + C_N(c)` along the flow.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityBound {
    /// `1 / |C_N(c)|`, the density at `t = 0`.
    pub initial_density: f64,
    pub times: Vec<f64>,
    /// Largest pushforward density over the lattice, per time.
    pub per_time: Vec<f64>,
    /// `max_t per_time`.
    pub bound: f64,
    pub lattice_points: usize,
}

/// Lebesgue volume of `{r : sum_{F_N \ 0} |k| |r^k| < 1/(2c)}` in `R^{2|F_N^+|}`.
///
/// With `s_k = 2|k| r^k` the set is the ball `sum |s_k| < R` whose volume is
/// `(2 pi)^n R^{2n} / (2n)!`.
fn perturbation_volume(modes: &[Mode], c: f64) -> f64 {
    let n = modes.len();
    let radius = 1.0 / (2.0 * c);
    let factorial: f64 = (1..=2 * n).map(|i| i as f64).product();
    let ball = (2.0 * PI).powi(n as i32) * radius.powi(2 * n as i32) / factorial;
    ball / modes.iter().map(|k| 4.0 * k.norm_sq()).product::<f64>()
}

/// Maps a lattice of `n_grid` cell midpoints per real axis, kept when inside
/// `C_N(c)`, through the flow and weights each point by `exp(-log J_t)`.
pub fn pushforward_density_bound(
    m0: &FourierMeasure,
    c: f64,
    drift: &Drift<'_>,
    grid: &TimeGrid,
    n_grid: usize,
) -> Result<DensityBound, CharError> {
    if c.is_nan() || c <= 0.0 || n_grid == 0 {
        return Err(CharError::Invalid(
            "need c > 0 and a non-empty lattice".into(),
        ));
    }
    let modes = m0.index().positive().to_vec();
    let dim = 2 * modes.len();
    let limit = 1.0 / (2.0 * c);
    let half_widths: Vec<f64> = modes
        .iter()
        .flat_map(|k| [1.0 / (4.0 * c * k.norm()); 2])
        .collect();
    let total = n_grid
        .checked_pow(dim as u32)
        .ok_or_else(|| CharError::Invalid("lattice too large".into()))?;
    let points: Vec<Vec<f64>> = (0..total)
        .filter_map(|mut flat| {
            let r: Vec<f64> = half_widths
                .iter()
                .map(|&a| {
                    let i = flat % n_grid;
                    flat /= n_grid;
                    -a + (i as f64 + 0.5) * 2.0 * a / n_grid as f64
                })
                .collect();
            let size: f64 = modes
                .iter()
                .enumerate()
                .map(|(j, k)| 2.0 * k.norm() * r[2 * j].hypot(r[2 * j + 1]))
                .sum();
            (size < limit).then_some(r)
        })
        .collect();
    if points.is_empty() {
        return Err(CharError::Invalid("no lattice point inside C_N(c)".into()));
    }
    let initial_density = 1.0 / perturbation_volume(&modes, c);
    let base = m0.to_real();
    let logs = points
        .par_iter()
        .map(|r| -> Result<Vec<f64>, CharError> {
            let coords: Vec<f64> = base.iter().zip(r).map(|(a, b)| a + b).collect();
            let start = FourierMeasure::from_real(m0.index().clone(), &coords)?;
            let flow = integrate_flow(&start, drift, grid, true)?;
            Ok(flow.jacobian_log.expect("requested"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let per_time: Vec<f64> = (0..=grid.steps())
        .map(|n| {
            logs.iter()
                .map(|l| initial_density * (-l[n]).exp())
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(DensityBound {
        initial_density,
        times: grid.times(),
        bound: per_time.iter().copied().fold(0.0, f64::max),
        per_time,
        lattice_points: points.len(),
    })
}
