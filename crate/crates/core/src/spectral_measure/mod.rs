//! Fourier representation of measures on the torus `T^d`, `d` in `{1, 2}`.
//!
//! Coefficients follow `m^k = int e^{i 2 pi k.x} dm(x)`, so a truncated
//! measure has density `1 + 2 Re sum_{k in F_N^+} m^k e^{-i 2 pi k.x}`.

mod distance;
mod fft;
mod index;
mod measure;

use thiserror::Error;

pub use distance::{dist_dminus2_surrogate, dist_tv, dist_w1_1d};
pub use fft::Spectral;
pub use index::{Mode, MultiIndexSet, MAX_DIM};
pub use measure::{
    convolve_fejer, evaluate_density, fejer_coefficients, fejer_multiplier, is_in_O_N, min_density,
    nyquist_resolution, resolution_cap, DensityGrid, DensityMinimum, FourierMeasure, MeasureRef,
    Membership, MembershipReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("dimension {0} is not supported (expected 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("truncation order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("grid resolution must be a power of two >= 2, got {0}")]
    InvalidResolution(usize),
    #[error("resolution {resolution} is below the Nyquist bound 2N for N = {order}")]
    BelowNyquist { resolution: usize, order: usize },
    #[error("expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("resolution mismatch: {0} vs {1}")]
    ResolutionMismatch(usize, usize),
    #[error("mode {0} lies outside the index set")]
    ModeOutOfRange(Mode),
    #[error("the zero mode is fixed to one")]
    ZeroModeAssigned,
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("cannot parse measure: {0:?}")]
    Parse(String),
}
