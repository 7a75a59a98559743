use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::SamplerError;
use crate::rng;
use crate::spectral_measure::{
    fejer_multiplier, is_in_O_N, nyquist_resolution, FourierMeasure, Mode, MultiIndexSet,
};

/// `delta_{N,eps} = eps / (d N^2 |F_N|)`.
pub fn regularization_threshold(dim: usize, order: usize, eps: f64) -> f64 {
    let n = order as f64;
    let card = (2.0 * n - 1.0).powi(dim as i32);
    eps / (dim as f64 * n * n * card)
}

/// Radial bump `C exp(-1 / (1 - |z/delta|^2))` on the disc of radius `delta` in `R^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub radius: f64,
}

impl Bump {
    /// Rejection from the uniform disc; the acceptance ratio is the bump over its peak.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        loop {
            let s2: f64 = rng.random();
            let angle = std::f64::consts::TAU * rng.random::<f64>();
            if s2 >= 1.0 {
                continue;
            }
            let accept = (1.0 - 1.0 / (1.0 - s2)).exp();
            if rng.random::<f64>() < accept {
                let r = self.radius * s2.sqrt();
                return [r * angle.cos(), r * angle.sin()];
            }
        }
    }

    /// `grad log rho(z)`; zero outside the support.
    pub fn score(&self, z: [f64; 2]) -> [f64; 2] {
        let d2 = self.radius * self.radius;
        let s = (z[0] * z[0] + z[1] * z[1]) / d2;
        if s >= 1.0 {
            return [0.0; 2];
        }
        let w = -2.0 / (d2 * (1.0 - s).powi(2));
        [w * z[0], w * z[1]]
    }

    /// `(Hess rho / rho)(z)`.
    pub fn hessian_ratio(&self, z: [f64; 2]) -> [[f64; 2]; 2] {
        let d2 = self.radius * self.radius;
        let s = (z[0] * z[0] + z[1] * z[1]) / d2;
        if s >= 1.0 {
            return [[0.0; 2]; 2];
        }
        let g1 = -1.0 / (1.0 - s).powi(2);
        let g2 = -2.0 / (1.0 - s).powi(3);
        let g = self.score(z);
        let mut h = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let delta = if a == b { 1.0 } else { 0.0 };
                h[a][b] = g[a] * g[b] + 2.0 * g1 * delta / d2 + 4.0 * g2 * z[a] * z[b] / (d2 * d2);
            }
        }
        h
    }
}

/// Real functional on measures, possibly failing (for instance a value solve).
pub trait MeasureFunctional: Sync {
    fn eval(&self, m: &FourierMeasure) -> Result<f64, SamplerError>;
}

/// Adapter for infallible closures.
pub struct FnFunctional<F>(pub F);

impl<F> MeasureFunctional for FnFunctional<F>
where
    F: Fn(&FourierMeasure) -> f64 + Sync,
{
    fn eval(&self, m: &FourierMeasure) -> Result<f64, SamplerError> {
        Ok((self.0)(m))
    }
}

/// Parameters of `m -> (eps Leb + (1 - eps)(m + r)) * f_N` with `r ~ prod rho_delta`.
#[derive(Clone, Debug)]
pub struct Mollifier {
    index: Arc<MultiIndexSet>,
    eps: f64,
    bump: Bump,
    fejer: Vec<f64>,
}

impl Mollifier {
    /// Fails unless `0 < eps < 1` and `0 < delta <= delta_{N,eps}`.
    pub fn new(dim: usize, order: usize, eps: f64, delta: f64) -> Result<Self, SamplerError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(SamplerError::Config(format!(
                "eps = {eps} must lie in (0, 1)"
            )));
        }
        let limit = regularization_threshold(dim, order, eps);
        if !(delta > 0.0 && delta <= limit * (1.0 + 1e-12)) {
            return Err(SamplerError::Config(format!(
                "mollifier radius {delta} must lie in (0, {limit}]"
            )));
        }
        let index = Arc::new(MultiIndexSet::new(dim, order)?);
        let fejer = index
            .positive()
            .iter()
            .map(|&k| fejer_multiplier(k, order))
            .collect();
        Ok(Self {
            index,
            eps,
            bump: Bump { radius: delta },
            fejer,
        })
    }

    /// Mollifier at the largest admissible radius.
    pub fn at_threshold(dim: usize, order: usize, eps: f64) -> Result<Self, SamplerError> {
        Self::new(dim, order, eps, regularization_threshold(dim, order, eps))
    }

    pub fn index(&self) -> &Arc<MultiIndexSet> {
        &self.index
    }

    pub fn order(&self) -> usize {
        self.index.order()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn bump(&self) -> Bump {
        self.bump
    }

    /// `f_N^k` over `F_N^+`.
    pub fn fejer(&self) -> &[f64] {
        &self.fejer
    }

    /// One perturbation per mode of `F_N^+`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<[f64; 2]> {
        (0..self.index.len_positive())
            .map(|_| self.bump.sample(rng))
            .collect()
    }

    /// Coefficients `(1 - eps)(m^k + r^k) f_N^k` of the mollified argument.
    pub fn argument(&self, m: &FourierMeasure, r: &[[f64; 2]]) -> FourierMeasure {
        let scale = 1.0 - self.eps;
        let coeffs = self
            .index
            .positive()
            .iter()
            .zip(r)
            .zip(&self.fejer)
            .map(|((&k, z), f)| scale * f * (m.coeff(k) + Complex64::new(z[0], z[1])))
            .collect();
        FourierMeasure::new(self.index.clone(), coeffs).expect("finite mollified coefficients")
    }

    /// Argument with a hard positivity check.
    pub fn checked_argument(
        &self,
        m: &FourierMeasure,
        r: &[[f64; 2]],
    ) -> Result<FourierMeasure, SamplerError> {
        let arg = self.argument(m, r);
        let report = is_in_O_N(&arg, nyquist_resolution(self.order(), 16))?;
        if !report.is_inside() {
            return Err(SamplerError::InvariantViolation {
                margin: report.margin,
            });
        }
        Ok(arg)
    }

    /// Antithetic pairs `(r, -r)` for draws `0..pairs` of the stream family `seed`.
    pub fn pairs(&self, seed: u64, pairs: usize) -> Vec<Vec<[f64; 2]>> {
        (0..pairs as u64)
            .map(|i| self.draw(&mut rng::stream(seed, i)))
            .collect()
    }
}

fn negate(r: &[[f64; 2]]) -> Vec<[f64; 2]> {
    r.iter().map(|z| [-z[0], -z[1]]).collect()
}

/// Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarlo {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl MonteCarlo {
    /// Mean and standard error of i.i.d. values, summed in index order.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n).sqrt(),
            samples: values.len(),
        }
    }
}

fn check_pairs(pairs: usize) -> Result<(), SamplerError> {
    if pairs == 0 {
        return Err(SamplerError::Config(
            "at least one Monte-Carlo pair is required".into(),
        ));
    }
    Ok(())
}

/// `phi^{N,eps,rho}(m)` by antithetic Monte-Carlo over `pairs` draws.
pub fn mollify(
    phi: &dyn MeasureFunctional,
    m: &FourierMeasure,
    moll: &Mollifier,
    pairs: usize,
    seed: u64,
) -> Result<MonteCarlo, SamplerError> {
    check_pairs(pairs)?;
    let draws = moll.pairs(seed, pairs);
    let values = draws
        .par_iter()
        .map(|r| -> Result<f64, SamplerError> {
            let plus = phi.eval(&moll.checked_argument(m, r)?)?;
            let minus = phi.eval(&moll.checked_argument(m, &negate(r))?)?;
            Ok(0.5 * (plus + minus))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MonteCarlo::from_values(&values))
}

/// Derivatives of the mollified functional in the coefficients of `F_N^+`.
#[derive(Clone, Debug, PartialEq)]
pub struct MollifiedGradient {
    pub modes: Vec<Mode>,
    /// `(d/dRe m^k, d/dIm m^k)`.
    pub real: Vec<[f64; 2]>,
    pub std_error: Vec<[f64; 2]>,
}

impl MollifiedGradient {
    /// `d/dm^k = (d/dRe - i d/dIm) / 2`, i.e. the coefficient `int e_{-k} dphi/dm`.
    pub fn wirtinger(&self, k: Mode) -> Complex64 {
        let lookup = |q: Mode| self.modes.iter().position(|&j| j == q);
        if let Some(p) = lookup(k) {
            Complex64::new(0.5 * self.real[p][0], -0.5 * self.real[p][1])
        } else if let Some(p) = lookup(-k) {
            Complex64::new(0.5 * self.real[p][0], 0.5 * self.real[p][1])
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}

/// Integration-by-parts estimate `-E[phi(arg(r)) grad log prod rho(r)]`.
///
/// Antithetic pairs cancel the constant part of `phi` exactly.
pub fn mollified_derivative(
    phi: &dyn MeasureFunctional,
    m: &FourierMeasure,
    moll: &Mollifier,
    pairs: usize,
    seed: u64,
) -> Result<MollifiedGradient, SamplerError> {
    check_pairs(pairs)?;
    let bump = moll.bump();
    let draws = moll.pairs(seed, pairs);
    let per_sample = draws
        .par_iter()
        .map(|r| -> Result<Vec<[f64; 2]>, SamplerError> {
            let plus = phi.eval(&moll.checked_argument(m, r)?)?;
            let minus = phi.eval(&moll.checked_argument(m, &negate(r))?)?;
            let half_diff = 0.5 * (plus - minus);
            Ok(r.iter()
                .map(|&z| {
                    let s = bump.score(z);
                    [-half_diff * s[0], -half_diff * s[1]]
                })
                .collect())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let modes = moll.index().positive().to_vec();
    let mut real = Vec::with_capacity(modes.len());
    let mut std_error = Vec::with_capacity(modes.len());
    for p in 0..modes.len() {
        let mut entry = [0.0; 2];
        let mut err = [0.0; 2];
        for c in 0..2 {
            let column: Vec<f64> = per_sample.iter().map(|v| v[p][c]).collect();
            let mc = MonteCarlo::from_values(&column);
            entry[c] = mc.mean;
            err[c] = mc.std_error;
        }
        real.push(entry);
        std_error.push(err);
    }
    Ok(MollifiedGradient {
        modes,
        real,
        std_error,
    })
}
