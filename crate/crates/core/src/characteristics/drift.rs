use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{CharError, PotentialField};
use crate::hjb_checker::inner_field;
use crate::mfg_solver::VectorGrid;
use crate::model::{Hamiltonian, Vec2};
use crate::sampler::{regularization_threshold, Mollifier};
use crate::spectral_measure::{
    convolve_fejer, evaluate_density, nyquist_resolution, FourierMeasure, Mode, Spectral,
};

/// Five-point Gauss-Legendre rule on `[0, 1]`.
const GAUSS_LEGENDRE: [(f64, f64); 5] = [
    (0.046_910_077_030_668_0, 0.118_463_442_528_094_5),
    (0.230_765_344_947_158_5, 0.239_314_335_249_683_2),
    (0.5, 0.284_444_444_444_444_4),
    (0.769_234_655_052_841_5, 0.239_314_335_249_683_2),
    (0.953_089_922_969_332, 0.118_463_442_528_094_5),
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftOptions {
    pub eps: f64,
    /// Mollifier radius; `None` uses the regularization threshold.
    pub delta: Option<f64>,
    /// Antithetic Monte-Carlo pairs, shared by every evaluation.
    pub pairs: usize,
    pub seed: u64,
    /// Grid resolution; `None` picks a power of two above `4N`.
    pub resolution: Option<usize>,
    pub estimator: Estimator,
}

impl Default for DriftOptions {
    fn default() -> Self {
        Self {
            eps: 0.1,
            delta: None,
            pairs: 16,
            seed: 0,
            resolution: None,
            estimator: Estimator::Pathwise,
        }
    }
}

/// The mollified drift `DH^{N,eps,rho}` with a frozen set of mollifier draws.
///
/// Freezing the draws makes the drift a deterministic smooth function of
/// `(t, m)`, so flows and their Jacobians are reproducible.
pub struct Drift<'a> {
    potentials: [&'a dyn PotentialField; 2],
    distinct: bool,
    hamiltonian: Hamiltonian,
    moll: Mollifier,
    draws: Vec<Vec<[f64; 2]>>,
    spectral: Spectral,
    estimator: Estimator,
}

/// Drift at one state together with the mode right-hand side and trace terms.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftEval {
    pub field: VectorGrid,
    /// `-i 2 pi int k.DH e_k (m * f_N)`, one entry per mode of the state.
    pub rhs: Vec<Complex64>,
    /// `sum_k A^{RR}_kk + A^{II}_kk`, from the dependence of `DH` on `m`.
    pub trace_a: f64,
    /// `sum_k B^{RR}_kk + B^{II}_kk`, from the factor `m * f_N`.
    pub trace_b: f64,
}

/// Monte-Carlo form of `d/dm^l` of a mollified potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Estimator {
    /// `(1 - eps) f_N^l E[dW/dm^l (arg r)]`; its `m`-derivative moves onto the bump score.
    #[default]
    Pathwise,
    /// `-E[W(arg r) d_{r^l} log rho(r)]`, which only needs values of `W`.
    Score,
}

struct PairSample {
    half_value: f64,
    half_diff: Vec<[f64; 2]>,
    half_sum: Vec<[f64; 2]>,
}

/// `Z^l` of a mollified potential and its derivatives along `(Re m^k, Im m^k)`.
struct Mollified {
    z: Vec<Complex64>,
    /// `dz[k][q][l]`, empty unless requested.
    dz: Vec<[Vec<Complex64>; 2]>,
}

/// Builds `DH` from `W1` and `W2` (default `W2 = W1`, where the `lambda` rule collapses).
pub fn build_drift<'a>(
    w1: &'a dyn PotentialField,
    w2: Option<&'a dyn PotentialField>,
    hamiltonian: Hamiltonian,
    dim: usize,
    order: usize,
    opts: &DriftOptions,
) -> Result<Drift<'a>, CharError> {
    if opts.pairs == 0 {
        return Err(CharError::Invalid(
            "at least one Monte-Carlo pair is required".into(),
        ));
    }
    let delta = opts
        .delta
        .unwrap_or_else(|| regularization_threshold(dim, order, opts.eps));
    let moll = Mollifier::new(dim, order, opts.eps, delta)?;
    let resolution = opts
        .resolution
        .unwrap_or_else(|| nyquist_resolution(2 * order, 32));
    if resolution < 2 * order {
        return Err(CharError::Invalid(format!(
            "resolution {resolution} below 2N = {}",
            2 * order
        )));
    }
    let spectral = Spectral::new(dim, resolution)?;
    let draws = moll.pairs(opts.seed, opts.pairs);
    Ok(Drift {
        potentials: [w1, w2.unwrap_or(w1)],
        distinct: w2.is_some(),
        hamiltonian,
        moll,
        draws,
        spectral,
        estimator: opts.estimator,
    })
}

fn negate(r: &[[f64; 2]]) -> Vec<[f64; 2]> {
    r.iter().map(|z| [-z[0], -z[1]]).collect()
}

impl Drift<'_> {
    pub fn order(&self) -> usize {
        self.moll.order()
    }

    pub fn dim(&self) -> usize {
        self.spectral.dim()
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.moll
    }

    pub fn resolution(&self) -> usize {
        self.spectral.resolution()
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// `x -> DH(t, m)(x)` on the drift grid.
    pub fn field(&self, t: f64, m: &FourierMeasure) -> Result<VectorGrid, CharError> {
        Ok(self.evaluate(t, m, false)?.field)
    }

    #[allow(clippy::needless_range_loop)]
    fn mollified(
        &self,
        w: &dyn PotentialField,
        t: f64,
        m: &FourierMeasure,
        jacobian: bool,
    ) -> Result<Mollified, CharError> {
        let n = self.moll.index().len_positive();
        let zero = Complex64::new(0.0, 0.0);
        if w.is_constant() {
            return Ok(Mollified {
                z: vec![zero; n],
                dz: if jacobian {
                    vec![[vec![zero; n], vec![zero; n]]; n]
                } else {
                    Vec::new()
                },
            });
        }
        let bump = self.moll.bump();
        let chain: Vec<f64> = self
            .moll
            .fejer()
            .iter()
            .map(|f| (1.0 - self.moll.eps()) * f)
            .collect();
        let per_pair = self
            .draws
            .par_iter()
            .map(|r| -> Result<PairSample, CharError> {
                let plus = w.evaluate(t, &self.moll.checked_argument(m, r)?)?;
                let minus = w.evaluate(t, &self.moll.checked_argument(m, &negate(r))?)?;
                // Real partials d_Re W = 2 Re Z and d_Im W = -2 Im Z, halved.
                let real = |z: Complex64| [z.re, -z.im];
                Ok(PairSample {
                    half_value: 0.5 * (plus.value - minus.value),
                    half_diff: plus
                        .gradient
                        .iter()
                        .zip(&minus.gradient)
                        .map(|(a, b)| real(a - b))
                        .collect(),
                    half_sum: plus
                        .gradient
                        .iter()
                        .zip(&minus.gradient)
                        .map(|(a, b)| real(a + b))
                        .collect(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut g = vec![[0.0; 2]; n];
        let mut dg = vec![[vec![[0.0; 2]; n], vec![[0.0; 2]; n]]; if jacobian { n } else { 0 }];
        for (r, sample) in self.draws.iter().zip(&per_pair) {
            let scores: Vec<[f64; 2]> = r.iter().map(|&z| bump.score(z)).collect();
            match self.estimator {
                Estimator::Pathwise => {
                    for l in 0..n {
                        for p in 0..2 {
                            g[l][p] += chain[l] * sample.half_sum[l][p];
                        }
                    }
                    for (k, dk) in dg.iter_mut().enumerate() {
                        for q in 0..2 {
                            for l in 0..n {
                                for p in 0..2 {
                                    dk[q][l][p] -= chain[l] * sample.half_diff[l][p] * scores[k][q];
                                }
                            }
                        }
                    }
                }
                Estimator::Score => {
                    for l in 0..n {
                        for p in 0..2 {
                            g[l][p] -= sample.half_value * scores[l][p];
                        }
                    }
                    for (k, dk) in dg.iter_mut().enumerate() {
                        for q in 0..2 {
                            for l in 0..n {
                                for p in 0..2 {
                                    dk[q][l][p] -= chain[k] * sample.half_diff[k][q] * scores[l][p];
                                }
                            }
                        }
                    }
                }
            }
        }
        let scale = 1.0 / self.draws.len() as f64;
        let wirtinger = |v: [f64; 2]| Complex64::new(0.5 * scale * v[0], -0.5 * scale * v[1]);
        Ok(Mollified {
            z: g.iter().map(|&v| wirtinger(v)).collect(),
            dz: dg
                .iter()
                .map(|dk| {
                    [
                        dk[0].iter().map(|&v| wirtinger(v)).collect(),
                        dk[1].iter().map(|&v| wirtinger(v)).collect(),
                    ]
                })
                .collect(),
        })
    }

    fn gradient_field(&self, z: &[Complex64]) -> VectorGrid {
        let pairs: Vec<(Mode, Complex64)> = self
            .moll
            .index()
            .positive()
            .iter()
            .copied()
            .zip(z.iter().copied())
            .collect();
        inner_field(&self.spectral, &pairs)
    }

    /// Drift, mode right-hand side and (optionally) the Jacobian trace terms at `(t, m)`.
    ///
    /// `m` may carry modes beyond `F_N`; the drift only sees its `F_N` part.
    pub fn evaluate(
        &self,
        t: f64,
        m: &FourierMeasure,
        jacobian: bool,
    ) -> Result<DriftEval, CharError> {
        let order = self.order();
        if m.dim() != self.dim() || m.order() < order {
            return Err(CharError::Invalid(format!(
                "state must have dimension {} and order >= {order}",
                self.dim()
            )));
        }
        if 2 * m.order() > self.resolution() {
            return Err(CharError::Invalid(format!(
                "state order {} exceeds the drift grid {}",
                m.order(),
                self.resolution()
            )));
        }
        let truncated = m.with_order(order)?;
        let first = self.mollified(self.potentials[0], t, &truncated, jacobian)?;
        let second = if self.distinct {
            Some(self.mollified(self.potentials[1], t, &truncated, jacobian)?)
        } else {
            None
        };
        let p1 = self.gradient_field(&first.z);
        let p2 = second.as_ref().map(|s| self.gradient_field(&s.z));
        let points = self.spectral.points();
        let len = points.len();
        let dim = self.dim();
        let h = &self.hamiltonian;
        let lambda_point = |j: usize, lambda: f64| -> Vec2 {
            let a = p1.at(j);
            match &p2 {
                Some(p2) => {
                    let b = p2.at(j);
                    [
                        lambda * a[0] + (1.0 - lambda) * b[0],
                        lambda * a[1] + (1.0 - lambda) * b[1],
                    ]
                }
                None => a,
            }
        };
        let mut field = VectorGrid::zeros(dim, len);
        for (j, x) in points.iter().enumerate() {
            let value = if p2.is_some() {
                GAUSS_LEGENDRE.iter().fold([0.0; 2], |acc, &(lambda, w)| {
                    let g = h.grad_p(x, &lambda_point(j, lambda));
                    [acc[0] + w * g[0], acc[1] + w * g[1]]
                })
            } else {
                h.grad_p(x, &lambda_point(j, 1.0))
            };
            for (q, c) in field.components.iter_mut().enumerate() {
                c[j] = value[q];
            }
        }
        let smoothed = evaluate_density(&convolve_fejer(&truncated, order)?, self.resolution())?;
        let rho = smoothed.values();
        let fluxes: Vec<Vec<Complex64>> = field
            .components
            .iter()
            .map(|c| {
                let q: Vec<f64> = c.iter().zip(rho).map(|(a, b)| a * b).collect();
                self.spectral.forward(&q)
            })
            .collect();
        let rhs = m
            .index()
            .positive()
            .iter()
            .map(|&k| {
                let j = self.spectral.flat_index(-k);
                let pairing: Complex64 =
                    (0..dim).map(|q| fluxes[q][j] * k.component(q) as f64).sum();
                Complex64::new(0.0, -2.0 * PI) * pairing
            })
            .collect();
        if !jacobian {
            return Ok(DriftEval {
                field,
                rhs,
                trace_a: 0.0,
                trace_b: 0.0,
            });
        }
        let inv = 1.0 / len as f64;
        let modes = truncated.index().positive();
        let mut trace_a = 0.0;
        let mut trace_b = 0.0;
        for (kpos, (&k, fej)) in modes.iter().zip(self.moll.fejer()).enumerate() {
            let kv = [k.component(0) as f64, k.component(1) as f64];
            let dot = |v: Vec2| kv[0] * v[0] + kv[1] * v[1];
            let directions: Vec<(VectorGrid, Option<VectorGrid>)> = (0..2)
                .map(|q| {
                    let d1 = self.gradient_field(&first.dz[kpos][q]);
                    let d2 = second.as_ref().map(|s| self.gradient_field(&s.dz[kpos][q]));
                    (d1, d2)
                })
                .collect();
            let mut a = [Complex64::new(0.0, 0.0); 2];
            let mut b = [Complex64::new(0.0, 0.0); 2];
            for (j, x) in points.iter().enumerate() {
                let phase = Complex64::from_polar(1.0, 2.0 * PI * k.dot(x));
                let kdh = dot(field.at(j));
                b[0] += kdh * 2.0 * fej * phase.re * phase;
                b[1] += kdh * 2.0 * fej * phase.im * phase;
                for (q, (d1, d2)) in directions.iter().enumerate() {
                    let ddh = match d2 {
                        None => mat_vec(h.hess_p(x, &lambda_point(j, 1.0)), d1.at(j)),
                        Some(d2) => GAUSS_LEGENDRE.iter().fold([0.0; 2], |acc, &(lambda, w)| {
                            let (u, v) = (d1.at(j), d2.at(j));
                            let dir = [
                                lambda * u[0] + (1.0 - lambda) * v[0],
                                lambda * u[1] + (1.0 - lambda) * v[1],
                            ];
                            let y = mat_vec(h.hess_p(x, &lambda_point(j, lambda)), dir);
                            [acc[0] + w * y[0], acc[1] + w * y[1]]
                        }),
                    };
                    a[q] += dot(ddh) * rho[j] * phase;
                }
            }
            let factor = Complex64::new(0.0, -2.0 * PI * inv);
            let (a, b) = (
                [factor * a[0], factor * a[1]],
                [factor * b[0], factor * b[1]],
            );
            trace_a += a[0].re + a[1].im;
            trace_b += b[0].re + b[1].im;
        }
        Ok(DriftEval {
            field,
            rhs,
            trace_a,
            trace_b,
        })
    }
}

fn mat_vec(m: [[f64; 2]; 2], v: Vec2) -> Vec2 {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}
