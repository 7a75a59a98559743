use std::fmt::Display;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(e: impl Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Numerical(_) => ExitCode::from(3),
            CliError::Io(_) => ExitCode::from(1),
        }
    }
}

macro_rules! numerical_from {
    ($($ty:path),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Numerical(e.to_string())
            }
        })*
    };
}

numerical_from!(
    torus_mfg::spectral_measure::SpectralError,
    torus_mfg::model::ModelError,
    torus_mfg::mfg_solver::SolverError,
    torus_mfg::mfcp::ValueError,
    torus_mfg::hjb_checker::CheckError,
    torus_mfg::sampler::SamplerError,
    torus_mfg::characteristics::CharError,
);
