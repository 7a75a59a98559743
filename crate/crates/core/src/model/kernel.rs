//! Convolution-quadratic potentials `F(m) = 1/2 iint phi(x - y) dm(x) dm(y)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectral_measure::{FourierMeasure, Mode, Spectral};

use super::ModelError;

/// One cosine term `amp cos(2 pi k.x)` of an even kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosineTerm {
    pub k: Vec<i32>,
    pub amp: f64,
}

/// An even, real trigonometric kernel stored by its coefficients on the
/// half space (plus the zero mode).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Kernel {
    dim: usize,
    /// `(k, phi^k)` with `k` zero or positive; `phi^{-k} = phi^k`.
    modes: Vec<(Mode, f64)>,
}

impl Kernel {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            modes: Vec::new(),
        }
    }

    /// `phi(x) = sum amp cos(2 pi k.x)`.
    pub fn cosine(dim: usize, terms: &[(Mode, f64)]) -> Result<Self, ModelError> {
        let mut kernel = Self::zero(dim);
        for &(k, amp) in terms {
            if !k.in_box(i32::MAX as usize, dim) {
                return Err(ModelError::Config(format!(
                    "mode {k} does not fit dimension {dim}"
                )));
            }
            let (key, coef) = match k.canonical() {
                None => (Mode::ZERO, amp),
                Some((kp, _)) => (kp, 0.5 * amp),
            };
            match kernel.modes.iter_mut().find(|(m, _)| *m == key) {
                Some(slot) => slot.1 += coef,
                None => kernel.modes.push((key, coef)),
            }
        }
        kernel.modes.sort_by_key(|p| p.0);
        Ok(kernel)
    }

    pub fn from_terms(dim: usize, terms: &[CosineTerm]) -> Result<Self, ModelError> {
        let pairs = terms
            .iter()
            .map(|t| {
                Mode::from_slice(&t.k)
                    .filter(|_| t.k.len() == dim)
                    .map(|k| (k, t.amp))
                    .ok_or_else(|| {
                        ModelError::Config(format!(
                            "kernel index {:?} must have {dim} entries",
                            t.k
                        ))
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::cosine(dim, &pairs)
    }

    pub fn to_terms(&self) -> Vec<CosineTerm> {
        self.modes
            .iter()
            .map(|&(k, c)| CosineTerm {
                k: k.0[..self.dim].to_vec(),
                amp: if k.is_zero() { c } else { 2.0 * c },
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|p| p.1 == 0.0)
    }

    /// Nonzero modes on the half space, zero mode first when present.
    pub fn modes(&self) -> &[(Mode, f64)] {
        &self.modes
    }

    /// `phi^k` for any `k`.
    pub fn coeff(&self, k: Mode) -> f64 {
        let key = k.canonical().map_or(Mode::ZERO, |p| p.0);
        self.modes.iter().find(|p| p.0 == key).map_or(0.0, |p| p.1)
    }

    pub fn eval(&self, x: &[f64; 2]) -> f64 {
        self.modes
            .iter()
            .map(|&(k, c)| {
                if k.is_zero() {
                    c
                } else {
                    2.0 * c * (2.0 * PI * k.dot(x)).cos()
                }
            })
            .sum()
    }

    /// Largest `|k|` carried by the kernel.
    pub fn max_norm(&self) -> f64 {
        self.modes.iter().map(|p| p.0.norm()).fold(0.0, f64::max)
    }

    /// `F(m) = 1/2 sum_k phi^k |m^k|^2`.
    pub fn potential(&self, m: &FourierMeasure) -> f64 {
        0.5 * self
            .modes
            .iter()
            .map(|&(k, c)| {
                if k.is_zero() {
                    c
                } else {
                    2.0 * c * m.coeff(k).norm_sqr()
                }
            })
            .sum::<f64>()
    }

    /// `F` of a density given by its DFT coefficient array.
    pub fn potential_spectral(&self, a: &[Complex64], spectral: &Spectral) -> f64 {
        let half = spectral.resolution() as i32 / 2;
        0.5 * self
            .modes
            .iter()
            .filter(|(k, _)| k.sup_norm() < half)
            .map(|&(k, c)| {
                let v = a[spectral.flat_index(k)].norm_sqr();
                if k.is_zero() {
                    c * v
                } else {
                    2.0 * c * v
                }
            })
            .sum::<f64>()
    }

    /// Coefficients `int e_k f(., m)` of the centered flat derivative
    /// `f = phi * m - phi^0`, over the kernel's nonzero half-space modes.
    pub fn flat_derivative(&self, m: &FourierMeasure) -> Vec<(Mode, Complex64)> {
        self.modes
            .iter()
            .filter(|(k, _)| !k.is_zero())
            .map(|&(k, c)| (k, m.coeff(k) * c))
            .collect()
    }

    /// DFT array of the centered flat derivative of a density given spectrally.
    pub fn flat_derivative_spectral(&self, a: &[Complex64], spectral: &Spectral) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); a.len()];
        self.add_flat_derivative_spectral(a, spectral, 1.0, &mut out);
        out
    }

    /// `out += scale * DFT(f(., m))`.
    pub fn add_flat_derivative_spectral(
        &self,
        a: &[Complex64],
        spectral: &Spectral,
        scale: f64,
        out: &mut [Complex64],
    ) {
        let half = spectral.resolution() as i32 / 2;
        for &(k, c) in &self.modes {
            if k.is_zero() || k.sup_norm() >= half {
                continue;
            }
            for kk in [k, -k] {
                let j = spectral.flat_index(kk);
                out[j] += a[j] * (c * scale);
            }
        }
    }

    /// `f(x, m)` pointwise.
    pub fn flat_derivative_at(&self, m: &FourierMeasure, x: &[f64; 2]) -> f64 {
        self.flat_derivative(m)
            .iter()
            .map(|&(k, z)| 2.0 * (z * Complex64::from_polar(1.0, -2.0 * PI * k.dot(x))).re)
            .sum()
    }

    /// Bound on `sup_x |grad_x f(x, m)|` over all probability measures.
    pub fn gradient_bound(&self) -> f64 {
        self.modes
            .iter()
            .filter(|(k, _)| !k.is_zero())
            .map(|&(k, c)| 4.0 * PI * k.norm() * c.abs())
            .sum()
    }
}

/// `F(m)` together with the coefficients of `f(., m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingEval {
    pub potential: f64,
    pub derivative: Vec<(Mode, Complex64)>,
}

pub fn coupling_eval(m: &FourierMeasure, kernel: &Kernel) -> CouplingEval {
    CouplingEval {
        potential: kernel.potential(m),
        derivative: kernel.flat_derivative(m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_measure::evaluate_density;
    use approx::assert_relative_eq;

    fn measure(c1: Complex64, c2: Complex64) -> FourierMeasure {
        FourierMeasure::from_modes(1, 3, &[(Mode::new1(1), c1), (Mode::new1(2), c2)]).unwrap()
    }

    #[test]
    fn uniform_measure() {
        let k = Kernel::cosine(1, &[(Mode::ZERO, 0.7), (Mode::new1(1), 1.0)]).unwrap();
        let u = measure(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let e = coupling_eval(&u, &k);
        assert_relative_eq!(e.potential, 0.35, epsilon = 1e-15);
        assert!(e.derivative.iter().all(|p| p.1.norm() == 0.0));
    }

    #[test]
    fn cosine_example_against_double_integral() {
        let k = Kernel::cosine(1, &[(Mode::new1(1), 1.0)]).unwrap();
        let m = measure(Complex64::new(0.3, 0.0), Complex64::new(0.0, 0.0));
        let e = coupling_eval(&m, &k);
        assert_relative_eq!(e.potential, 0.045, epsilon = 1e-15);
        assert_relative_eq!(e.derivative[0].1.re, 0.15, epsilon = 1e-15);
        // Independent oracle: midpoint double integral.
        let n = 400;
        let g = evaluate_density(&m, 512).unwrap();
        let dens = |x: f64| 1.0 + 0.6 * (2.0 * PI * x).cos();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = ((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                acc += (2.0 * PI * (x - y)).cos() * dens(x) * dens(y);
            }
        }
        assert_relative_eq!(0.5 * acc / (n * n) as f64, 0.045, epsilon = 1e-12);
        assert!(g.min() > 0.0);
    }

    #[test]
    fn flat_derivative_matches_finite_difference() {
        let k = Kernel::cosine(1, &[(Mode::new1(1), 0.8), (Mode::new1(2), -0.3)]).unwrap();
        let m = measure(Complex64::new(0.2, 0.1), Complex64::new(-0.05, 0.07));
        let mu = measure(Complex64::new(-0.1, 0.2), Complex64::new(0.1, 0.0));
        let exact: f64 = {
            // int f d(mu - m) = 2 Re sum_{k>0} conj(f^k)... via grid quadrature.
            let gm = evaluate_density(&mu, 256).unwrap();
            let g0 = evaluate_density(&m, 256).unwrap();
            (0..256)
                .map(|j| {
                    let x = [j as f64 / 256.0, 0.0];
                    k.flat_derivative_at(&m, &x) * (gm.values()[j] - g0.values()[j])
                })
                .sum::<f64>()
                / 256.0
        };
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let mix = m.map(|kk, c| (1.0 - eps) * c + eps * mu.coeff(kk));
            let fd = (k.potential(&mix) - k.potential(&m)) / eps;
            let err = (fd - exact).abs();
            assert!(err < 2.0 * eps, "error {err} at eps {eps}");
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn spectral_and_fourier_paths_agree() {
        let k = Kernel::cosine(2, &[(Mode::new2(1, 0), 0.5), (Mode::new2(1, -1), 0.25)]).unwrap();
        let m = FourierMeasure::from_modes(
            2,
            3,
            &[
                (Mode::new2(1, 0), Complex64::new(0.1, 0.05)),
                (Mode::new2(1, -1), Complex64::new(-0.02, 0.03)),
            ],
        )
        .unwrap();
        let s = Spectral::new(2, 8).unwrap();
        let a = m.to_spectral(&s).unwrap();
        assert_relative_eq!(
            k.potential_spectral(&a, &s),
            k.potential(&m),
            epsilon = 1e-15
        );
        let f = s.inverse(&k.flat_derivative_spectral(&a, &s));
        for (j, v) in f.iter().enumerate() {
            assert_relative_eq!(*v, k.flat_derivative_at(&m, &s.point(j)), epsilon = 1e-14);
        }
        // Direct evaluation of phi * m - phi^0 at one point.
        let x = [0.3, 0.7];
        let n = 64;
        let g = evaluate_density(&m, n).unwrap();
        let conv: f64 = (0..n * n)
            .map(|j| {
                let y = [(j / n) as f64 / n as f64, (j % n) as f64 / n as f64];
                k.eval(&[x[0] - y[0], x[1] - y[1]]) * g.values()[j]
            })
            .sum::<f64>()
            / (n * n) as f64;
        assert_relative_eq!(
            conv - k.coeff(Mode::ZERO),
            k.flat_derivative_at(&m, &x),
            epsilon = 1e-13
        );
    }

    #[test]
    fn terms_roundtrip() {
        let k = Kernel::cosine(1, &[(Mode::new1(-2), 0.4), (Mode::ZERO, 1.0)]).unwrap();
        assert_eq!(k.coeff(Mode::new1(2)), 0.2);
        assert_eq!(k.coeff(Mode::new1(-2)), 0.2);
        let back = Kernel::from_terms(1, &k.to_terms()).unwrap();
        assert_eq!(back, k);
        assert!(Kernel::from_terms(
            1,
            &[CosineTerm {
                k: vec![1, 2],
                amp: 1.0
            }]
        )
        .is_err());
    }
}
