//! Truncated Gaussian measures `Gamma_N` on `O_N`, the concentration events of
//! the base orders `N0`, and mollification of measure functionals.

mod gamma;
mod mollify;

use thiserror::Error;

use crate::spectral_measure::SpectralError;

pub use gamma::{
    coefficient_decay_constant, event_frequencies, sample_gamma_n, EventFrequencies, GammaSample,
    GammaSpec,
};
pub use mollify::{
    mollified_derivative, mollify, regularization_threshold, Bump, FnFunctional, MeasureFunctional,
    MollifiedGradient, Mollifier, MonteCarlo,
};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error("acceptance rate {rate:.2e} after {proposals} proposals")]
    AcceptanceTooLow { rate: f64, proposals: usize },
    #[error("empty sample set")]
    Empty,
    #[error("mollified argument is not a positive density (certified margin {margin:.3e})")]
    InvariantViolation { margin: f64 },
    #[error("functional evaluation failed: {0}")]
    Functional(String),
}
