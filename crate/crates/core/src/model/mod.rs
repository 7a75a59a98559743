//! Problem data `(H, L, F, G, f, g, T)` of a potential mean field game.

mod hamiltonian;
mod kernel;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral_measure::{FourierMeasure, Mode};

pub use hamiltonian::{
    check_duality, legendre_transform, DualityCheck, Hamiltonian, LegendreOptions, Vec2,
};
pub use kernel::{coupling_eval, CosineTerm, CouplingEval, Kernel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("Legendre transform did not converge (best value {best})")]
    LegendreNonConvergence { best: f64 },
    #[error("invalid model: {0}")]
    Config(String),
}

/// Model data. `F`, `f` come from `coupling`; `G`, `g` from `terminal`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub dim: usize,
    pub hamiltonian: Hamiltonian,
    pub coupling: Kernel,
    pub terminal: Kernel,
    pub horizon: f64,
}

impl Default for ModelSpec {
    /// `H = |p|^2/2`, `phi = psi = cos(2 pi x_1)/2`, `T = 1/2`, `d = 1`.
    fn default() -> Self {
        Self::cosine(1, Hamiltonian::default(), 0.5, 0.5, 0.5)
    }
}

impl ModelSpec {
    /// `phi = a cos(2 pi x_1)`, `psi = b cos(2 pi x_1)`.
    pub fn cosine(dim: usize, hamiltonian: Hamiltonian, a: f64, b: f64, horizon: f64) -> Self {
        let e1 = Mode::new1(1);
        Self {
            dim,
            hamiltonian,
            coupling: Kernel::cosine(dim, &[(e1, a)]).expect("first axis exists"),
            terminal: Kernel::cosine(dim, &[(e1, b)]).expect("first axis exists"),
            horizon,
        }
    }

    /// `F = G = 0`.
    pub fn free(dim: usize, hamiltonian: Hamiltonian, horizon: f64) -> Self {
        Self {
            dim,
            hamiltonian,
            coupling: Kernel::zero(dim),
            terminal: Kernel::zero(dim),
            horizon,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(1..=2).contains(&self.dim) {
            return Err(ModelError::Config(format!(
                "dimension {} unsupported",
                self.dim
            )));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(ModelError::Config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.coupling.dim() != self.dim || self.terminal.dim() != self.dim {
            return Err(ModelError::Config(
                "kernel dimension differs from model dimension".into(),
            ));
        }
        Ok(())
    }

    /// True when `f` and `g` vanish identically.
    pub fn is_free(&self) -> bool {
        self.coupling.is_zero() && self.terminal.is_zero()
    }

    /// `F(m)`.
    pub fn running_potential(&self, m: &FourierMeasure) -> f64 {
        self.coupling.potential(m)
    }

    /// `G(m)`.
    pub fn terminal_potential(&self, m: &FourierMeasure) -> f64 {
        self.terminal.potential(m)
    }

    /// A priori bound `M` on optimal feedbacks.
    ///
    /// For bounded-velocity Hamiltonians `|d_p H| <= 1`. Otherwise the value
    /// gradient obeys `|grad u| <= (|grad g| + T |grad f|) e^{T Lip_x}` and the
    /// feedback adds the drift `d_p H(x, 0)`.
    pub fn control_bound(&self) -> f64 {
        let h = &self.hamiltonian;
        if h.has_bounded_velocity() {
            return 1.0;
        }
        let grad_u = (self.terminal.gradient_bound()
            + self.horizon * self.coupling.gradient_bound())
            * (self.horizon * h.x_lipschitz()).exp();
        grad_u + h.drift_bound()
    }

    /// Smallest and largest eigenvalue of `d^2_pp H` over sampled points.
    pub fn convexity_range(&self, samples: &[(Vec2, Vec2)]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (x, p) in samples {
            let m = self.hamiltonian.hess_p(x, p);
            let (a, b, c) = if self.dim == 1 {
                (m[0][0], 0.0, m[0][0])
            } else {
                (m[0][0], m[0][1], m[1][1])
            };
            let tr = 0.5 * (a + c);
            let disc = (0.25 * (a - c).powi(2) + b * b).sqrt();
            lo = lo.min(tr - disc);
            hi = hi.max(tr + disc);
        }
        (lo, hi)
    }

    /// Residual of the flat-derivative identity for `F` along `m -> (1-eps) m + eps mu`.
    pub fn potential_structure_residual(
        &self,
        m: &FourierMeasure,
        mu: &FourierMeasure,
        eps: f64,
    ) -> f64 {
        let mix = m.map(|k, c| (1.0 - eps) * c + eps * mu.coeff(k));
        let fd = (self.coupling.potential(&mix) - self.coupling.potential(m)) / eps;
        let pairing: f64 = self
            .coupling
            .flat_derivative(m)
            .iter()
            .map(|&(k, z)| 2.0 * (z.conj() * (mu.coeff(k) - m.coeff(k))).re)
            .sum();
        (fd - pairing).abs()
    }
}

/// Serializable model description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// `quadratic` or `relativistic`.
    #[serde(default = "default_hamiltonian")]
    pub hamiltonian: String,
    /// Amplitude of the `x`-dependent drift in the quadratic Hamiltonian.
    #[serde(default)]
    pub tilt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Cosine terms of the running kernel.
    #[serde(default = "default_kernel")]
    pub coupling: Vec<CosineTerm>,
    /// Cosine terms of the terminal kernel.
    #[serde(default = "default_kernel")]
    pub terminal: Vec<CosineTerm>,
}

fn default_dim() -> usize {
    1
}
fn default_hamiltonian() -> String {
    "quadratic".into()
}
fn default_horizon() -> f64 {
    0.5
}
fn default_kernel() -> Vec<CosineTerm> {
    vec![CosineTerm {
        k: vec![1],
        amp: 0.5,
    }]
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: default_dim(),
            hamiltonian: default_hamiltonian(),
            tilt: 0.0,
            horizon: default_horizon(),
            coupling: default_kernel(),
            terminal: default_kernel(),
        }
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec, ModelError> {
        let hamiltonian = match self.hamiltonian.as_str() {
            "quadratic" => Hamiltonian::Quadratic { tilt: self.tilt },
            "relativistic" if self.tilt == 0.0 => Hamiltonian::Relativistic,
            "relativistic" => {
                return Err(ModelError::Config(
                    "tilt applies to the quadratic Hamiltonian only".into(),
                ))
            }
            other => return Err(ModelError::Config(format!("unknown Hamiltonian {other:?}"))),
        };
        let pad = |terms: &[CosineTerm]| -> Vec<CosineTerm> {
            terms
                .iter()
                .map(|t| {
                    let mut k = t.k.clone();
                    while k.len() < self.dim {
                        k.push(0);
                    }
                    CosineTerm { k, amp: t.amp }
                })
                .collect()
        };
        let spec = ModelSpec {
            dim: self.dim,
            hamiltonian,
            coupling: Kernel::from_terms(self.dim, &pad(&self.coupling))?,
            terminal: Kernel::from_terms(self.dim, &pad(&self.terminal))?,
            horizon: self.horizon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(spec: &ModelSpec) -> Self {
        let tilt = match spec.hamiltonian {
            Hamiltonian::Quadratic { tilt } => tilt,
            Hamiltonian::Relativistic => 0.0,
        };
        Self {
            dim: spec.dim,
            hamiltonian: spec.hamiltonian.name().into(),
            tilt,
            horizon: spec.horizon,
            coupling: spec.coupling.to_terms(),
            terminal: spec.terminal.to_terms(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Complex64;

    #[test]
    fn default_model_is_valid() {
        let m = ModelSpec::default();
        m.validate().unwrap();
        assert_eq!(m.coupling.coeff(Mode::new1(1)), 0.25);
        assert_eq!(ModelConfig::default().build().unwrap(), m);
        assert_eq!(ModelConfig::from_spec(&m).build().unwrap(), m);
    }

    #[test]
    fn config_errors() {
        let bad = ModelConfig {
            hamiltonian: "cubic".into(),
            ..Default::default()
        };
        assert!(bad.build().is_err());
        let bad = ModelConfig {
            horizon: -1.0,
            ..Default::default()
        };
        assert!(bad.build().is_err());
        let short = ModelConfig {
            dim: 2,
            ..Default::default()
        };
        assert_eq!(
            short.build().unwrap().coupling.coeff(Mode::new2(1, 0)),
            0.25
        );
    }

    #[test]
    fn control_bound_cases() {
        assert_eq!(
            ModelSpec::free(1, Hamiltonian::default(), 1.0).control_bound(),
            0.0
        );
        assert_eq!(
            ModelSpec::free(1, Hamiltonian::Relativistic, 1.0).control_bound(),
            1.0
        );
        let m = ModelSpec::default();
        let expected = 2.0 * std::f64::consts::PI * 0.5 * 1.5;
        assert!((m.control_bound() - expected).abs() < 1e-12);
    }

    #[test]
    fn convexity_on_samples() {
        let m = ModelSpec {
            hamiltonian: Hamiltonian::Relativistic,
            ..ModelSpec::default()
        };
        let samples: Vec<(Vec2, Vec2)> = (0..20)
            .map(|i| ([0.0, 0.0], [i as f64 * 0.2 - 2.0, 0.0]))
            .collect();
        let (lo, hi) = m.convexity_range(&samples);
        assert!(lo > 0.0 && hi <= 1.0);
    }

    #[test]
    fn potential_structure_is_first_order() {
        let model = ModelSpec::default();
        let m =
            FourierMeasure::from_modes(1, 3, &[(Mode::new1(1), Complex64::new(0.2, 0.1))]).unwrap();
        let mu = FourierMeasure::from_modes(1, 3, &[(Mode::new1(1), Complex64::new(-0.1, 0.3))])
            .unwrap();
        let r1 = model.potential_structure_residual(&m, &mu, 1e-2);
        let r2 = model.potential_structure_residual(&m, &mu, 1e-3);
        assert!(r2 < r1 / 5.0);
    }
}
