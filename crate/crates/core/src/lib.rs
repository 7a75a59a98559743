//! Fourier-truncation toolkit for potential mean field games on the torus.

pub mod characteristics;
pub mod hjb_checker;
pub mod mfcp;
pub mod mfg_solver;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod spectral_measure;
pub mod suite;

pub use num_complex::Complex64;
pub use spectral_measure::{DensityGrid, FourierMeasure, Mode, MultiIndexSet};
