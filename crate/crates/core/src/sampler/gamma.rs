use std::sync::Arc;

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::SamplerError;
use crate::rng;
use crate::spectral_measure::{
    is_in_O_N, min_density, nyquist_resolution, resolution_cap, FourierMeasure, Mode, MultiIndexSet,
};

const MIN_ACCEPTANCE: f64 = 1e-3;
const ACCEPTANCE_WINDOW: usize = 100_000;

/// Truncated Gaussian law on `O_N` with per-component variance `1 / (2 |k|^{2pd})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaSpec {
    pub dim: usize,
    pub order: usize,
    pub p: f64,
}

impl GammaSpec {
    pub fn new(dim: usize, order: usize, p: f64) -> Result<Self, SamplerError> {
        if p < 5.0 || !p.is_finite() {
            return Err(SamplerError::Config(format!(
                "decay exponent p = {p} must be >= 5"
            )));
        }
        MultiIndexSet::new(dim, order)?;
        Ok(Self { dim, order, p })
    }

    /// Standard deviation of `Re m^k` (and of `Im m^k`).
    pub fn std_dev(&self, k: Mode) -> f64 {
        let exponent = 2.0 * self.p * self.dim as f64;
        (0.5 / k.norm().powf(exponent)).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct GammaSample {
    pub measures: Vec<FourierMeasure>,
    pub proposals: usize,
    pub acceptance_rate: f64,
}

impl GammaSample {
    /// Samples in the text format, blocks separated by blank lines.
    pub fn to_text(&self) -> String {
        self.measures
            .iter()
            .map(|m| m.to_text())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn propose(
    spec: &GammaSpec,
    index: &Arc<MultiIndexSet>,
    seed: u64,
    draw: u64,
) -> Option<FourierMeasure> {
    let mut rng = rng::stream(seed, draw);
    let coeffs: Vec<Complex64> = index
        .positive()
        .iter()
        .map(|&k| {
            let normal = Normal::new(0.0, spec.std_dev(k)).expect("positive standard deviation");
            Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng))
        })
        .collect();
    let m = FourierMeasure::new(index.clone(), coeffs).ok()?;
    let report = is_in_O_N(&m, nyquist_resolution(spec.order, 16)).ok()?;
    report.is_inside().then_some(m)
}

/// Rejection sampler for `Gamma_N`: Gaussian proposals kept when certified inside `O_N`.
///
/// Proposal `i` uses its own stream, so the output is independent of thread count.
pub fn sample_gamma_n(spec: &GammaSpec, n: usize, seed: u64) -> Result<GammaSample, SamplerError> {
    if n == 0 {
        return Err(SamplerError::Config("sample count must be positive".into()));
    }
    let index = Arc::new(MultiIndexSet::new(spec.dim, spec.order)?);
    if index.len_positive() == 0 {
        return Ok(GammaSample {
            measures: vec![FourierMeasure::uniform(index); n],
            proposals: n,
            acceptance_rate: 1.0,
        });
    }
    let seed = rng::derive(seed, 0x006a_33a5);
    let batch = n.clamp(1024, 1 << 16);
    let mut measures = Vec::with_capacity(n);
    let mut proposals = 0usize;
    while measures.len() < n {
        let start = proposals as u64;
        let drawn: Vec<Option<FourierMeasure>> = (start..start + batch as u64)
            .into_par_iter()
            .map(|i| propose(spec, &index, seed, i))
            .collect();
        for m in drawn {
            proposals += 1;
            if let Some(m) = m {
                measures.push(m);
                if measures.len() == n {
                    break;
                }
            }
        }
        let rate = measures.len() as f64 / proposals as f64;
        if proposals >= ACCEPTANCE_WINDOW && rate < MIN_ACCEPTANCE {
            return Err(SamplerError::AcceptanceTooLow { rate, proposals });
        }
    }
    Ok(GammaSample {
        acceptance_rate: n as f64 / proposals as f64,
        measures,
        proposals,
    })
}

/// `a_0 = 2^{-(3d/2 + 1)} / c_d` with `c_d = 2 sum_{j != 0} |j|^{-3d/2}`.
///
/// The lattice sum is truncated at sup-norm `10^3`; the tail is bounded by
/// shell counting and added, so `c_d` is over-estimated and `a_0` is safe.
pub fn coefficient_decay_constant(dim: usize) -> f64 {
    const CUT: i64 = 1000;
    let exponent = 1.5 * dim as f64;
    let (sum, tail) = match dim {
        1 => {
            let s: f64 = (1..=CUT).map(|j| 2.0 * (j as f64).powf(-exponent)).sum();
            (s, 4.0 / (CUT as f64).sqrt())
        }
        _ => {
            let mut s = 0.0;
            for a in -CUT..=CUT {
                for b in -CUT..=CUT {
                    if a != 0 || b != 0 {
                        s += ((a * a + b * b) as f64).powf(-0.5 * exponent);
                    }
                }
            }
            (s, 8.0 / CUT as f64)
        }
    };
    let c_d = 2.0 * (sum + tail);
    2f64.powf(-(exponent + 1.0)) / c_d
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventFrequencies {
    /// Fraction whose `F_{N0}`-truncation has density at least `(2 N0)^{-3d/2}`.
    pub freq_a: f64,
    /// Fraction additionally satisfying the coefficient decay beyond `F_{N0}`.
    pub freq_b: f64,
    pub a0: f64,
}

fn density_at_least(m: &FourierMeasure, threshold: f64) -> Result<bool, SamplerError> {
    if m.coeffs().iter().all(|c| c.norm() == 0.0) {
        return Ok(1.0 >= threshold);
    }
    let cap = resolution_cap(m.dim());
    let mut res = nyquist_resolution(m.order(), 64);
    loop {
        let dm = min_density(m, res)?;
        if dm.grid_min < threshold {
            return Ok(false);
        }
        if dm.certified_lower_bound >= threshold || res * 2 > cap {
            return Ok(true);
        }
        res *= 2;
    }
}

/// Empirical frequencies of the events `A_{N0}` and `A_{N0} ∩ B`.
pub fn event_frequencies(
    samples: &[FourierMeasure],
    n0: usize,
) -> Result<EventFrequencies, SamplerError> {
    let first = samples.first().ok_or(SamplerError::Empty)?;
    let dim = first.dim();
    if samples.iter().any(|m| m.order() < n0 || m.dim() != dim) {
        return Err(SamplerError::Config(format!(
            "samples must share dimension {dim} and have order >= {n0}"
        )));
    }
    let a0 = coefficient_decay_constant(dim);
    let threshold = (2.0 * n0 as f64).powf(-1.5 * dim as f64);
    let decay = 2.5 * dim as f64;
    let flags = samples
        .par_iter()
        .map(|m| -> Result<(bool, bool), SamplerError> {
            let in_a = density_at_least(&m.with_order(n0)?, threshold)?;
            let in_b = in_a
                && m.iter()
                    .filter(|(k, _)| k.sup_norm() >= n0 as i32)
                    .all(|(k, c)| c.norm() < a0 * k.norm().powf(-decay));
            Ok((in_a, in_b))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = samples.len() as f64;
    Ok(EventFrequencies {
        freq_a: flags.iter().filter(|f| f.0).count() as f64 / n,
        freq_b: flags.iter().filter(|f| f.1).count() as f64 / n,
        a0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_one_is_always_uniform() {
        let spec = GammaSpec::new(1, 1, 5.0).unwrap();
        let s = sample_gamma_n(&spec, 5, 1).unwrap();
        assert_eq!(s.acceptance_rate, 1.0);
        assert!(s.measures.iter().all(|m| m.coeffs().is_empty()));
    }

    #[test]
    fn rejects_small_exponent() {
        assert!(GammaSpec::new(1, 2, 4.9).is_err());
    }

    #[test]
    fn first_mode_deviation() {
        let spec = GammaSpec::new(1, 2, 5.0).unwrap();
        assert!((spec.std_dev(Mode::new1(1)) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn acceptance_matches_exponential_tail() {
        // |m^1|^2 is exponential with mean 1 and O_2 is |m^1| < 1/2.
        let spec = GammaSpec::new(1, 2, 5.0).unwrap();
        let s = sample_gamma_n(&spec, 10_000, 3).unwrap();
        let expected = 1.0 - (-0.25f64).exp();
        let sigma = (expected * (1.0 - expected) / s.proposals as f64).sqrt();
        assert!(
            (s.acceptance_rate - expected).abs() < 3.0 * sigma,
            "{}",
            s.acceptance_rate
        );
        for m in &s.measures {
            assert!(is_in_O_N(m, 64).unwrap().is_inside());
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let spec = GammaSpec::new(1, 3, 5.0).unwrap();
        let a = sample_gamma_n(&spec, 50, 9).unwrap();
        let b = sample_gamma_n(&spec, 50, 9).unwrap();
        assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn decay_constant_in_one_dimension() {
        let zeta = 2.612_375_348_685_488;
        let oracle = 2f64.powf(-2.5) / (4.0 * zeta);
        let a0 = coefficient_decay_constant(1);
        assert!(a0 < oracle && a0 > 0.98 * oracle, "{a0} vs {oracle}");
    }

    #[test]
    fn uniform_samples_are_in_every_event() {
        let idx = Arc::new(MultiIndexSet::new(1, 6).unwrap());
        let samples = vec![FourierMeasure::uniform(idx); 4];
        let f = event_frequencies(&samples, 2).unwrap();
        assert_eq!((f.freq_a, f.freq_b), (1.0, 1.0));
    }

    #[test]
    fn equal_orders_make_decay_vacuous() {
        let spec = GammaSpec::new(1, 3, 5.0).unwrap();
        let s = sample_gamma_n(&spec, 500, 2).unwrap();
        let f = event_frequencies(&s.measures, 3).unwrap();
        assert_eq!(f.freq_a, f.freq_b);
        assert!(event_frequencies(&[], 2).is_err());
    }
}
