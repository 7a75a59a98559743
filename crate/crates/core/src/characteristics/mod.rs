//! Fourier-coefficient characteristics of the mollified McKean-Vlasov
//! Fokker-Planck equation
//!
//! `d_t m - div(DH(t, m)(x) (m * f_N)(x)) - 1/2 Lap m = 0`,
//!
//! where `DH` averages `d_p H(x, lambda d_mu W1 + (1 - lambda) d_mu W2)` over
//! `lambda` in `[0, 1]` and `W1`, `W2` are mollified potentials. In Fourier
//! variables this is the closed system
//!
//! `d/dt m^k = -2 pi^2 |k|^2 m^k - i 2 pi int k.DH e_k (m * f_N) dx`,
//!
//! integrated here together with the log-determinant of its flow map.

mod drift;
mod flow;
mod truncation;

use num_complex::Complex64;
use thiserror::Error;

use crate::mfcp::{superjet_coefficients, ValueError, ValueSolver};
use crate::mfg_solver::{MfgSolution, SolverError};
use crate::model::Kernel;
use crate::sampler::SamplerError;
use crate::spectral_measure::{FourierMeasure, SpectralError};

pub use drift::{build_drift, Drift, DriftEval, DriftOptions, Estimator};
pub use flow::{
    finite_difference_log_det, integrate_flow, pushforward_density_bound, CharFlow, DensityBound,
    FlowBounds,
};
pub use truncation::{truncation_error, TruncationSeries};

#[derive(Debug, Error)]
pub enum CharError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(
        "flow leaves O_N at t = {time:.4} (certified minimum {margin:.3e}); the order is too small"
    )]
    Exit { time: f64, margin: f64 },
    #[error("truncated trajectory loses positivity at t = {time:.4}")]
    Positivity { time: f64 },
    #[error("invalid request: {0}")]
    Invalid(String),
}

/// A potential at one measure: its value and `Z^k = dW / dm^k` over `F_N^+`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSample {
    pub value: f64,
    pub gradient: Vec<Complex64>,
}

/// A time-dependent functional `W(t, m)` on `O_N` with its coefficient derivatives.
pub trait PotentialField: Sync {
    fn evaluate(&self, t: f64, m: &FourierMeasure) -> Result<PotentialSample, CharError>;

    /// True when `W` does not depend on `m`, which lets the drift skip sampling.
    fn is_constant(&self) -> bool {
        false
    }
}

pub struct ZeroPotential;

impl PotentialField for ZeroPotential {
    fn evaluate(&self, _t: f64, m: &FourierMeasure) -> Result<PotentialSample, CharError> {
        Ok(PotentialSample {
            value: 0.0,
            gradient: vec![Complex64::new(0.0, 0.0); m.coeffs().len()],
        })
    }

    fn is_constant(&self) -> bool {
        true
    }
}

/// `F(m) = 1/2 sum_k phi^k |m^k|^2`, time independent.
pub struct CouplingPotential(pub Kernel);

impl PotentialField for CouplingPotential {
    fn evaluate(&self, _t: f64, m: &FourierMeasure) -> Result<PotentialSample, CharError> {
        let gradient = m
            .index()
            .positive()
            .iter()
            .map(|&k| (m.coeff(k) * self.0.coeff(k)).conj())
            .collect();
        Ok(PotentialSample {
            value: self.0.potential(m),
            gradient,
        })
    }

    fn is_constant(&self) -> bool {
        self.0.is_zero()
    }
}

/// The value function, following the branch of a reference minimizer.
///
/// Derivatives are the superjet coefficients of the followed solution.
pub struct ValuePotential<'a> {
    solver: &'a ValueSolver,
    guess: MfgSolution,
}

impl<'a> ValuePotential<'a> {
    pub fn new(solver: &'a ValueSolver, guess: MfgSolution) -> Self {
        Self { solver, guess }
    }

    /// Reference branch from the multi-start minimizer at `(t, m)`.
    pub fn at(solver: &'a ValueSolver, t: f64, m: &FourierMeasure) -> Result<Self, CharError> {
        let probe = solver.value(t, m)?;
        Ok(Self::new(solver, probe.minimizer().clone()))
    }
}

impl PotentialField for ValuePotential<'_> {
    fn evaluate(&self, t: f64, m: &FourierMeasure) -> Result<PotentialSample, CharError> {
        let sol = self
            .solver
            .follow(t, &self.solver.density(m)?, &self.guess)?;
        Ok(PotentialSample {
            value: sol.cost,
            gradient: superjet_coefficients(&sol, m.index())
                .into_iter()
                .map(|p| p.1)
                .collect(),
        })
    }

    fn is_constant(&self) -> bool {
        self.solver.model().is_free()
    }
}

#[cfg(test)]
mod tests;
