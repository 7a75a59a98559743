//! Residuals of the Fourier-truncated HJB and master equations evaluated on
//! the computed value function, and the weak one-sided Lipschitz test.
//!
//! With `Z^k = d V / d m^k` (Wirtinger derivative, equal to `u^{-k}` by the
//! superjet identity) the truncated HJB expression at `(t, m)` is
//!
//! `d_t V - int H(y, i 2 pi sum_{F_N} k Z^k e_k(y)) dm(y) - sum_{F_N} 2 pi^2 |k|^2 Z^k m^k + F(m)`.

mod lipschitz;

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

use crate::mfcp::{superjet_coefficients, ValueError, ValueProbe, ValueSolver};
use crate::mfg_solver::{MfgSolution, VectorGrid};
use crate::model::ModelSpec;
use crate::sampler::SamplerError;
use crate::spectral_measure::{
    evaluate_density, min_density, nyquist_resolution, FourierMeasure, Mode, Spectral,
    SpectralError,
};

pub use lipschitz::{
    one_sided_lipschitz_test, CoefficientField, LipschitzReport, LipschitzStatus, ValueField,
    ZeroField,
};

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("precondition violated: {bound} = {value:.4e}, required {limit:.4e}")]
    Precondition {
        bound: &'static str,
        value: f64,
        limit: f64,
    },
    #[error("the probe carries no time derivative")]
    MissingTimeDerivative,
    #[error("invalid check input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// Where the coefficient derivatives came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeSource {
    Superjet,
    FiniteDifference,
}

impl DerivativeSource {
    pub fn name(self) -> &'static str {
        match self {
            DerivativeSource::Superjet => "superjet",
            DerivativeSource::FiniteDifference => "finite_difference",
        }
    }
}

/// Signed pieces of the truncated HJB expression.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HjbTerms {
    pub time_derivative: f64,
    pub hamiltonian_integral: f64,
    pub laplacian_pairing: f64,
    pub potential: f64,
}

impl HjbTerms {
    pub fn signed_sum(&self) -> f64 {
        self.time_derivative - self.hamiltonian_integral - self.laplacian_pairing + self.potential
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HjbResidualReport {
    pub t: f64,
    pub m: FourierMeasure,
    pub order: usize,
    pub residual: f64,
    pub terms: HjbTerms,
    pub derivative_source: DerivativeSource,
}

impl HjbResidualReport {
    pub fn csv_header() -> &'static str {
        "t,order,source,time_derivative,hamiltonian_integral,laplacian_pairing,potential,residual"
    }

    pub fn csv_row(&self) -> String {
        let tm = &self.terms;
        format!(
            "{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            self.t,
            self.order,
            self.derivative_source.name(),
            tm.time_derivative,
            tm.hamiltonian_integral,
            tm.laplacian_pairing,
            tm.potential,
            self.residual
        )
    }
}

/// `B_N(c)`: certified minimum density at least `1/c` and density gradient bound at most `c`.
pub fn check_ball(m: &FourierMeasure, c: f64) -> Result<(), CheckError> {
    let dm = min_density(m, nyquist_resolution(m.order(), 64))?;
    if dm.certified_lower_bound < 1.0 / c {
        return Err(CheckError::Precondition {
            bound: "certified minimum density",
            value: dm.certified_lower_bound,
            limit: 1.0 / c,
        });
    }
    let grad = m.gradient_bound();
    if grad > c {
        return Err(CheckError::Precondition {
            bound: "density gradient bound",
            value: grad,
            limit: c,
        });
    }
    Ok(())
}

fn full_coefficients(spectral: &Spectral, derivs: &[(Mode, Complex64)]) -> Vec<Complex64> {
    let mut b = vec![Complex64::new(0.0, 0.0); spectral.len()];
    for &(k, c) in derivs {
        b[spectral.flat_index(k)] = c;
        b[spectral.flat_index(-k)] = c.conj();
    }
    b
}

/// `i 2 pi sum_{F_N} k Z^k e_k` on the grid of `spectral`.
pub fn inner_field(spectral: &Spectral, derivs: &[(Mode, Complex64)]) -> VectorGrid {
    VectorGrid {
        components: spectral.gradient(&full_coefficients(spectral, derivs)),
    }
}

fn grid_resolution(m: &FourierMeasure, sol: &MfgSolution) -> usize {
    nyquist_resolution(m.order(), sol.resolution)
}

/// `int H(y, field(y)) dm(y)` by the grid rule.
fn hamiltonian_integral(
    model: &ModelSpec,
    m: &FourierMeasure,
    derivs: &[(Mode, Complex64)],
    resolution: usize,
) -> Result<f64, CheckError> {
    let spectral = Spectral::new(m.dim(), resolution)?;
    let field = inner_field(&spectral, derivs);
    let density = evaluate_density(m, resolution)?;
    let total: f64 = density
        .values()
        .iter()
        .enumerate()
        .map(|(j, rho)| model.hamiltonian.value(&spectral.point(j), &field.at(j)) * rho)
        .sum();
    Ok(total / spectral.len() as f64)
}

/// `sum_{F_N} 2 pi^2 |k|^2 Z^k m^k` (real by conjugate symmetry).
fn laplacian_pairing(m: &FourierMeasure, derivs: &[(Mode, Complex64)]) -> f64 {
    derivs
        .iter()
        .map(|&(k, z)| 4.0 * PI * PI * k.norm_sq() * (z * m.coeff(k)).re)
        .sum()
}

/// Terms of the truncated HJB expression for given derivatives.
pub fn hjb_terms(
    model: &ModelSpec,
    m: &FourierMeasure,
    derivs: &[(Mode, Complex64)],
    time_derivative: f64,
    resolution: usize,
) -> Result<HjbTerms, CheckError> {
    Ok(HjbTerms {
        time_derivative,
        hamiltonian_integral: hamiltonian_integral(model, m, derivs, resolution)?,
        laplacian_pairing: laplacian_pairing(m, derivs),
        potential: model.running_potential(m),
    })
}

fn report(
    probe: &ValueProbe,
    terms: HjbTerms,
    derivative_source: DerivativeSource,
) -> HjbResidualReport {
    HjbResidualReport {
        t: probe.t,
        m: probe.m.clone(),
        order: probe.m.order(),
        residual: terms.signed_sum().abs(),
        terms,
        derivative_source,
    }
}

/// Truncated HJB residual at the probe using the superjet derivatives.
pub fn hjb_residual(
    probe: &ValueProbe,
    model: &ModelSpec,
    c: f64,
) -> Result<HjbResidualReport, CheckError> {
    check_ball(&probe.m, c)?;
    let dt = probe.time_deriv.ok_or(CheckError::MissingTimeDerivative)?;
    let res = grid_resolution(&probe.m, probe.minimizer());
    let terms = hjb_terms(model, &probe.m, &probe.coeff_derivs, dt, res)?;
    Ok(report(probe, terms, DerivativeSource::Superjet))
}

/// Same residual with coefficient derivatives from central differences of `V` with step `h`.
pub fn hjb_residual_fd(
    solver: &ValueSolver,
    probe: &ValueProbe,
    c: f64,
    h: f64,
) -> Result<HjbResidualReport, CheckError> {
    check_ball(&probe.m, c)?;
    let dt = probe.time_deriv.ok_or(CheckError::MissingTimeDerivative)?;
    let derivs = probe
        .m
        .index()
        .positive()
        .iter()
        .map(|&k| Ok((k, solver.finite_difference_derivative(probe, k, h)?.complex)))
        .collect::<Result<Vec<_>, CheckError>>()?;
    let res = grid_resolution(&probe.m, probe.minimizer());
    let terms = hjb_terms(solver.model(), &probe.m, &derivs, dt, res)?;
    Ok(report(probe, terms, DerivativeSource::FiniteDifference))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativeBounds {
    /// `sup_x |d_x sum_{F_N} Z^k e_k(x)|`.
    pub sup_gradient: f64,
    /// `sum_{F_N} |k|^4 |Z^k|^2`.
    pub weighted_sum: f64,
}

pub fn derivative_bounds(probe: &ValueProbe) -> DerivativeBounds {
    let res = grid_resolution(&probe.m, probe.minimizer());
    let spectral = Spectral::new(probe.m.dim(), res).expect("valid grid");
    let field = inner_field(&spectral, &probe.coeff_derivs);
    let weighted_sum = probe
        .coeff_derivs
        .iter()
        .map(|(k, z)| 2.0 * k.norm_sq() * k.norm_sq() * z.norm_sqr())
        .sum();
    DerivativeBounds {
        sup_gradient: field.sup_norm(),
        weighted_sum,
    }
}

/// Step sizes for the master residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MasterOptions {
    /// Coefficient step; the residual is also evaluated at `h/2`.
    pub h: f64,
    /// Time step of the central differences in `t`.
    pub time_step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MasterTerms {
    /// `d_t Z^k`.
    pub time_derivative: Complex64,
    /// `d/dm^k int H dm`.
    pub hamiltonian: Complex64,
    /// `d/dm^k sum_j 2 pi^2 |j|^2 Z^j m^j`.
    pub laplacian: Complex64,
    /// `int e_{-k} f(., m)`.
    pub coupling: Complex64,
}

impl MasterTerms {
    pub fn residual(&self) -> Complex64 {
        self.time_derivative - self.hamiltonian - self.laplacian + self.coupling
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MasterResidual {
    pub mode: Mode,
    pub h: f64,
    /// Terms and residual at step `h/2`.
    pub terms: MasterTerms,
    pub residual: Complex64,
    /// `d/dm^k` of the scalar HJB residual at step `h/2`.
    pub hjb_gradient: Complex64,
    /// `|residual - hjb_gradient|`.
    pub consistency_gap: f64,
    /// Largest change of either computation between steps `h` and `h/2`.
    pub truncation_error: f64,
}

impl MasterResidual {
    pub fn is_consistent(&self, factor: f64) -> bool {
        self.consistency_gap <= factor * self.truncation_error
    }
}

/// Scalars at one measure used by the master residual.
struct Local {
    hamiltonian: f64,
    laplacian: f64,
    hjb: f64,
}

struct Context<'a> {
    solver: &'a ValueSolver,
    probe: &'a ValueProbe,
    k: Mode,
    time_step: f64,
}

impl Context<'_> {
    fn solve(
        &self,
        t: f64,
        m: &FourierMeasure,
        guess: &MfgSolution,
    ) -> Result<MfgSolution, CheckError> {
        let density = self.solver.density(m)?;
        Ok(self.solver.follow(t, &density, guess)?)
    }

    fn z_of(&self, sol: &MfgSolution) -> Vec<(Mode, Complex64)> {
        superjet_coefficients(sol, self.probe.m.index())
    }

    fn local(&self, m: &FourierMeasure) -> Result<Local, CheckError> {
        let t = self.probe.t;
        let ht = self.time_step;
        let center = self.solve(t, m, self.probe.minimizer())?;
        let later = self.solve(t + ht, m, &center)?;
        let earlier = self.solve(t - ht, m, &center)?;
        let derivs = self.z_of(&center);
        let dt = (later.cost - earlier.cost) / (2.0 * ht);
        let res = grid_resolution(m, &center);
        let terms = hjb_terms(self.solver.model(), m, &derivs, dt, res)?;
        Ok(Local {
            hamiltonian: terms.hamiltonian_integral,
            laplacian: terms.laplacian_pairing,
            hjb: terms.signed_sum(),
        })
    }

    fn shifted(&self, dir: Complex64) -> FourierMeasure {
        let k = self.k;
        self.probe.m.map(|j, c| if j == k { c + dir } else { c })
    }

    fn wirtinger(values: &[f64; 4], h: f64) -> Complex64 {
        let d_re = (values[0] - values[1]) / (2.0 * h);
        let d_im = (values[2] - values[3]) / (2.0 * h);
        Complex64::new(0.5 * d_re, -0.5 * d_im)
    }

    /// Master terms and HJB-gradient at step `h`.
    fn evaluate(&self, h: f64, dt_z: Complex64) -> Result<(MasterTerms, Complex64), CheckError> {
        let dirs = [
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
            Complex64::new(0.0, h),
            Complex64::new(0.0, -h),
        ];
        let locals = dirs
            .par_iter()
            .map(|&d| self.local(&self.shifted(d)))
            .collect::<Result<Vec<_>, _>>()?;
        let pick = |f: &dyn Fn(&Local) -> f64| {
            [f(&locals[0]), f(&locals[1]), f(&locals[2]), f(&locals[3])]
        };
        let model = self.solver.model();
        let terms = MasterTerms {
            time_derivative: dt_z,
            hamiltonian: Self::wirtinger(&pick(&|l| l.hamiltonian), h),
            laplacian: Self::wirtinger(&pick(&|l| l.laplacian), h),
            coupling: model.coupling.coeff(self.k) * self.probe.m.coeff(self.k).conj(),
        };
        let gradient = Self::wirtinger(&pick(&|l| l.hjb), h);
        Ok((terms, gradient))
    }
}

/// Residual of the weak master equation for mode `k`, compared with the
/// coefficient derivative of the scalar HJB residual.
pub fn master_residual(
    solver: &ValueSolver,
    probe: &ValueProbe,
    k: Mode,
    opts: &MasterOptions,
) -> Result<MasterResidual, CheckError> {
    let horizon = solver.model().horizon;
    if k.is_zero() || probe.m.index().position(k).is_none() {
        return Err(CheckError::Invalid(format!("mode {k} must lie in F_N^+")));
    }
    if probe.t - opts.time_step < 0.0 || probe.t + opts.time_step > horizon {
        return Err(CheckError::Invalid(format!(
            "probe time {} is not interior for time step {}",
            probe.t, opts.time_step
        )));
    }
    let ctx = Context {
        solver,
        probe,
        k,
        time_step: opts.time_step,
    };
    for step in [opts.h, 0.5 * opts.h] {
        for d in [Complex64::new(step, 0.0), Complex64::new(0.0, step)] {
            for s in [1.0, -1.0] {
                if solver.density(&ctx.shifted(d * s)).is_err() {
                    return Err(ValueError::PerturbationExits { mode: k, h: step }.into());
                }
            }
        }
    }
    let guess = probe.minimizer();
    let later = ctx.solve(probe.t + opts.time_step, &probe.m, guess)?;
    let earlier = ctx.solve(probe.t - opts.time_step, &probe.m, guess)?;
    let z = |sol: &MfgSolution| {
        ctx.z_of(sol)
            .iter()
            .find(|(j, _)| *j == k)
            .map(|p| p.1)
            .unwrap_or_default()
    };
    let dt_z = (z(&later) - z(&earlier)) / (2.0 * opts.time_step);
    let (coarse, coarse_grad) = ctx.evaluate(opts.h, dt_z)?;
    let (fine, fine_grad) = ctx.evaluate(0.5 * opts.h, dt_z)?;
    let residual = fine.residual();
    let truncation_error = (coarse.residual() - residual)
        .norm()
        .max((coarse_grad - fine_grad).norm());
    Ok(MasterResidual {
        mode: k,
        h: opts.h,
        terms: fine,
        residual,
        hjb_gradient: fine_grad,
        consistency_gap: (residual - fine_grad).norm(),
        truncation_error,
    })
}

/// Cross differences `d/dm^j Z^k` and `d/dm^k Z^j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchwarzCheck {
    pub d_j_zk: Complex64,
    pub d_k_zj: Complex64,
}

impl SchwarzCheck {
    /// `|a - b| / (max(|a|, |b|) + 1e-6)`.
    pub fn relative_gap(&self) -> f64 {
        (self.d_j_zk - self.d_k_zj).norm() / (self.d_j_zk.norm().max(self.d_k_zj.norm()) + 1e-6)
    }
}

pub fn schwarz_symmetry(
    solver: &ValueSolver,
    probe: &ValueProbe,
    j: Mode,
    k: Mode,
    h: f64,
) -> Result<SchwarzCheck, CheckError> {
    let index = probe.m.index();
    for q in [j, k] {
        if index.position(q).is_none() {
            return Err(CheckError::Invalid(format!("mode {q} must lie in F_N^+")));
        }
    }
    let derivative_of = |wrt: Mode, of: Mode| -> Result<Complex64, CheckError> {
        let dirs = [
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
            Complex64::new(0.0, h),
            Complex64::new(0.0, -h),
        ];
        let values = dirs
            .par_iter()
            .map(|&d| -> Result<Complex64, CheckError> {
                let m = probe.m.map(|q, c| if q == wrt { c + d } else { c });
                let density = solver.density(&m)?;
                let sol = solver.follow(probe.t, &density, probe.minimizer())?;
                Ok(superjet_coefficients(&sol, index)
                    .iter()
                    .find(|(q, _)| *q == of)
                    .map(|p| p.1)
                    .unwrap_or_default())
            })
            .collect::<Result<Vec<_>, _>>()?;
        let d_re = (values[0] - values[1]) / (2.0 * h);
        let d_im = (values[2] - values[3]) / (2.0 * h);
        Ok(0.5 * (d_re - Complex64::i() * d_im))
    };
    Ok(SchwarzCheck {
        d_j_zk: derivative_of(j, k)?,
        d_k_zj: derivative_of(k, j)?,
    })
}

#[cfg(test)]
mod tests;
