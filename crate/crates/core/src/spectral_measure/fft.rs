//! Periodic FFT on `M` or `M x M` grids with torus-friendly conventions.
//!
//! `forward` returns `a_k = M^{-d} sum_j v_j e^{-i 2 pi k.x_j}`, so that
//! `v(x) = sum_k a_k e^{i 2 pi k.x}`. For a density `m`, `a_k` is the
//! conjugate of `\hat m^k`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Mode, SpectralError};

/// FFT plans and wave-number tables for one grid.
#[derive(Clone)]
pub struct Spectral {
    dim: usize,
    resolution: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    modes: Vec<Mode>,
    nyquist: Vec<[bool; 2]>,
    dealias: Vec<bool>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("dim", &self.dim)
            .field("resolution", &self.resolution)
            .finish()
    }
}

impl Spectral {
    pub fn new(dim: usize, resolution: usize) -> Result<Self, SpectralError> {
        if !(1..=2).contains(&dim) {
            return Err(SpectralError::UnsupportedDimension(dim));
        }
        if resolution < 2 || !resolution.is_power_of_two() {
            return Err(SpectralError::InvalidResolution(resolution));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(resolution);
        let inverse = planner.plan_fft_inverse(resolution);
        let m = resolution as i32;
        let wave = |j: usize| {
            let j = j as i32;
            if j < m / 2 {
                j
            } else {
                j - m
            }
        };
        let len = resolution.pow(dim as u32);
        let cutoff = f64::from(m) / 3.0;
        let mut modes = Vec::with_capacity(len);
        let mut nyquist = Vec::with_capacity(len);
        let mut dealias = Vec::with_capacity(len);
        for flat in 0..len {
            let k = if dim == 1 {
                Mode::new1(wave(flat))
            } else {
                Mode::new2(wave(flat / resolution), wave(flat % resolution))
            };
            let ny = [dim >= 1 && k.0[0] == -m / 2, dim >= 2 && k.0[1] == -m / 2];
            dealias.push(k.0.iter().all(|&c| f64::from(c.abs()) < cutoff));
            modes.push(k);
            nyquist.push(ny);
        }
        Ok(Self {
            dim,
            resolution,
            forward,
            inverse,
            modes,
            nyquist,
            dealias,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Number of grid points `M^d`.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Wave vector attached to a flat spectral index.
    pub fn mode(&self, flat: usize) -> Mode {
        self.modes[flat]
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Flat spectral index of `k` (periodically wrapped).
    pub fn flat_index(&self, k: Mode) -> usize {
        let m = self.resolution as i32;
        let w = |c: i32| c.rem_euclid(m) as usize;
        if self.dim == 1 {
            w(k.0[0])
        } else {
            w(k.0[0]) * self.resolution + w(k.0[1])
        }
    }

    /// Grid point `x_j = j / M` for a flat index.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let h = 1.0 / self.resolution as f64;
        if self.dim == 1 {
            [flat as f64 * h, 0.0]
        } else {
            [
                (flat / self.resolution) as f64 * h,
                (flat % self.resolution) as f64 * h,
            ]
        }
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|j| self.point(j)).collect()
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let m = self.resolution;
        plan.process(data);
        if self.dim == 2 {
            let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
            transpose(data, &mut t, m);
            plan.process(&mut t);
            transpose(&t, data, m);
        }
    }

    /// Normalized forward transform of complex samples, in place.
    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        self.transform(data, &self.forward);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
    }

    /// Coefficients `a_k` of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut data);
        data
    }

    /// Complex synthesis `sum_k a_k e^{i 2 pi k.x_j}`.
    pub fn inverse_complex(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(coeffs.len(), self.len());
        let mut data = coeffs.to_vec();
        self.transform(&mut data, &self.inverse);
        data
    }

    /// Real part of the synthesis; exact for Hermitian coefficient arrays.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        self.inverse_complex(coeffs)
            .into_iter()
            .map(|c| c.re)
            .collect()
    }

    /// Spectral symbol `i 2 pi k_axis`, zero on the Nyquist line.
    pub fn derivative_symbol(&self, flat: usize, axis: usize) -> Complex64 {
        if self.nyquist[flat][axis] {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 2.0 * PI * f64::from(self.modes[flat].0[axis]))
        }
    }

    /// Multiplies coefficients by `i 2 pi k_axis`.
    pub fn differentiate(&self, coeffs: &[Complex64], axis: usize) -> Vec<Complex64> {
        coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| c * self.derivative_symbol(j, axis))
            .collect()
    }

    /// Grid values of each partial derivative.
    pub fn gradient(&self, coeffs: &[Complex64]) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|axis| self.inverse(&self.differentiate(coeffs, axis)))
            .collect()
    }

    /// Two-thirds rule: zeroes every mode with some `|k_i| >= M/3`.
    pub fn dealias(&self, coeffs: &mut [Complex64]) {
        for (c, &keep) in coeffs.iter_mut().zip(&self.dealias) {
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// `|k|^2` for each flat index.
    pub fn norm_sq(&self, flat: usize) -> f64 {
        self.modes[flat].norm_sq()
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in 0..m {
            dst[j * m + i] = src[i * m + j];
        }
    }
}
