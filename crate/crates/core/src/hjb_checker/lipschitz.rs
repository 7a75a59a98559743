use num_complex::Complex64;
use rayon::prelude::*;

use super::CheckError;
use crate::mfcp::{superjet_coefficients, ValueProbe, ValueSolver};
use crate::mfg_solver::MfgSolution;
use crate::sampler::{Mollifier, MonteCarlo};
use crate::spectral_measure::{min_density, nyquist_resolution, FourierMeasure};

/// A field of coefficient derivatives `Z^k(m)`, `k` in `F_N^+` (index order of `m`).
pub trait CoefficientField: Sync {
    fn coefficients(&self, m: &FourierMeasure) -> Result<Vec<Complex64>, CheckError>;
}

pub struct ZeroField;

impl CoefficientField for ZeroField {
    fn coefficients(&self, m: &FourierMeasure) -> Result<Vec<Complex64>, CheckError> {
        Ok(vec![Complex64::new(0.0, 0.0); m.coeffs().len()])
    }
}

/// Superjet coefficients of the value function at time `t`, following one branch.
pub struct ValueField<'a> {
    solver: &'a ValueSolver,
    t: f64,
    guess: MfgSolution,
}

impl<'a> ValueField<'a> {
    pub fn new(solver: &'a ValueSolver, t: f64, guess: MfgSolution) -> Self {
        Self { solver, t, guess }
    }

    pub fn from_probe(solver: &'a ValueSolver, probe: &ValueProbe) -> Self {
        Self::new(solver, probe.t, probe.minimizer().clone())
    }
}

impl CoefficientField for ValueField<'_> {
    fn coefficients(&self, m: &FourierMeasure) -> Result<Vec<Complex64>, CheckError> {
        let density = self.solver.density(m)?;
        let sol = self.solver.follow(self.t, &density, &self.guess)?;
        Ok(superjet_coefficients(&sol, m.index())
            .into_iter()
            .map(|p| p.1)
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LipschitzStatus {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzReport {
    pub lhs: f64,
    pub std_error: f64,
    /// `|S| sum_q (sum_k |k_q| |z^k|)^2`.
    pub rhs_unit: f64,
    pub rhs_bound: f64,
    pub status: LipschitzStatus,
    pub pairs: usize,
}

fn spectral_norm(s: &[[f64; 2]; 2], dim: usize) -> f64 {
    if dim == 1 {
        return s[0][0].abs();
    }
    let tr = 0.5 * (s[0][0] + s[1][1]);
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let disc = (tr * tr - det).max(0.0).sqrt();
    (tr + disc).abs().max((tr - disc).abs())
}

fn is_psd(s: &[[f64; 2]; 2], dim: usize) -> bool {
    if dim == 1 {
        return s[0][0] >= 0.0;
    }
    s[0][1] == s[1][0] && s[0][0] >= 0.0 && s[1][1] >= 0.0 && s[0][0] * s[1][1] >= s[0][1] * s[1][0]
}

/// Monte-Carlo estimate of the left side of the weak one-sided Lipschitz
/// inequality, after one integration by parts:
///
/// `-E[ sum_{k,P,l,Q} d_{P r^k}[W(arg r)] (P[z^k] k).(Q[z^l] S l) d_{Q r^l} log prod rho(r) ]`
///
/// where `W` is the potential of `Z` and `d_{P r^k}[W(arg r)] = (1-eps) f_N^k d_{P m^k} W`,
/// with `d_{Re m^k} W = 2 Re Z^k` and `d_{Im m^k} W = -2 Im Z^k`.
#[allow(clippy::too_many_arguments)]
pub fn one_sided_lipschitz_test(
    field: &dyn CoefficientField,
    m: &FourierMeasure,
    z: &[Complex64],
    s: [[f64; 2]; 2],
    moll: &Mollifier,
    constant: f64,
    pairs: usize,
    seed: u64,
) -> Result<LipschitzReport, CheckError> {
    let dim = m.dim();
    let modes = moll.index().positive().to_vec();
    if z.len() != modes.len() {
        return Err(CheckError::Invalid(format!(
            "expected {} directions, got {}",
            modes.len(),
            z.len()
        )));
    }
    if !is_psd(&s, dim) {
        return Err(CheckError::Invalid(
            "S must be symmetric non-negative".into(),
        ));
    }
    if pairs == 0 {
        return Err(CheckError::Invalid(
            "at least one Monte-Carlo pair is required".into(),
        ));
    }
    let dm = min_density(m, nyquist_resolution(m.order(), 64))?;
    if dm.certified_lower_bound <= 0.0 {
        return Err(CheckError::Precondition {
            bound: "certified minimum density",
            value: dm.certified_lower_bound,
            limit: 0.0,
        });
    }
    // w[k][P] = P[z^k] k and Sw[k][P] = S w[k][P], as vectors in R^d.
    let apply_s = |v: [f64; 2]| {
        [
            s[0][0] * v[0] + s[0][1] * v[1],
            s[1][0] * v[0] + s[1][1] * v[1],
        ]
    };
    let w: Vec<[[f64; 2]; 2]> = modes
        .iter()
        .zip(z)
        .map(|(k, zk)| {
            let kv = [k.component(0) as f64, k.component(1) as f64];
            [
                [zk.re * kv[0], zk.re * kv[1]],
                [zk.im * kv[0], zk.im * kv[1]],
            ]
        })
        .collect();
    let sw: Vec<[[f64; 2]; 2]> = w
        .iter()
        .map(|pair| [apply_s(pair[0]), apply_s(pair[1])])
        .collect();
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let chain: Vec<f64> = moll
        .fejer()
        .iter()
        .map(|f| (1.0 - moll.eps()) * f)
        .collect();
    let bump = moll.bump();
    let draws = moll.pairs(seed, pairs);
    let partials = |m: &FourierMeasure| -> Result<Vec<[f64; 2]>, CheckError> {
        let coeffs = field.coefficients(m)?;
        Ok(coeffs.iter().map(|c| [2.0 * c.re, -2.0 * c.im]).collect())
    };
    let values = draws
        .par_iter()
        .map(|r| -> Result<f64, CheckError> {
            let neg: Vec<[f64; 2]> = r.iter().map(|p| [-p[0], -p[1]]).collect();
            let plus = partials(&moll.checked_argument(m, r)?)?;
            let minus = partials(&moll.checked_argument(m, &neg)?)?;
            let mut v = [0.0; 2];
            for (l, rl) in r.iter().enumerate() {
                let score = bump.score(*rl);
                for q in 0..2 {
                    v[0] += score[q] * sw[l][q][0];
                    v[1] += score[q] * sw[l][q][1];
                }
            }
            let mut total = 0.0;
            for k in 0..modes.len() {
                for p in 0..2 {
                    let g = 0.5 * (plus[k][p] - minus[k][p]) * chain[k];
                    total -= g * dot(w[k][p], v);
                }
            }
            Ok(total)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mc = MonteCarlo::from_values(&values);
    let rhs_unit = spectral_norm(&s, dim)
        * (0..dim)
            .map(|q| {
                modes
                    .iter()
                    .zip(z)
                    .map(|(k, zk)| (k.component(q) as f64).abs() * zk.norm())
                    .sum::<f64>()
                    .powi(2)
            })
            .sum::<f64>();
    let rhs_bound = constant * rhs_unit;
    let status = if mc.std_error > 0.1 * rhs_bound {
        LipschitzStatus::Inconclusive
    } else if mc.mean <= rhs_bound {
        LipschitzStatus::Pass
    } else {
        LipschitzStatus::Fail
    };
    Ok(LipschitzReport {
        lhs: mc.mean,
        std_error: mc.std_error,
        rhs_unit,
        rhs_bound,
        status,
        pairs,
    })
}
