//! Distances between measures on the torus.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{FourierMeasure, MeasureRef, Spectral, SpectralError};

/// Default quadrature resolution for Fourier-only comparisons.
const FOURIER_QUADRATURE: usize = 256;

fn common_resolution(a: &MeasureRef<'_>, b: &MeasureRef<'_>) -> usize {
    let order = |m: &MeasureRef<'_>| match m {
        MeasureRef::Fourier(f) => Some(f.order()),
        MeasureRef::Grid(_) => None,
    };
    match (a, b) {
        (MeasureRef::Grid(g), _) | (_, MeasureRef::Grid(g)) => g.resolution(),
        _ => {
            let n = order(a).unwrap_or(1).max(order(b).unwrap_or(1));
            (8 * n).max(FOURIER_QUADRATURE).next_power_of_two()
        }
    }
}

fn check_dims(a: &MeasureRef<'_>, b: &MeasureRef<'_>) -> Result<(), SpectralError> {
    if a.dim() != b.dim() {
        Err(SpectralError::DimensionMismatch(a.dim(), b.dim()))
    } else {
        Ok(())
    }
}

/// Total variation `1/2 int |m1 - m2|` by grid quadrature.
pub fn dist_tv<'a, 'b>(
    m1: impl Into<MeasureRef<'a>>,
    m2: impl Into<MeasureRef<'b>>,
) -> Result<f64, SpectralError> {
    let (a, b) = (m1.into(), m2.into());
    check_dims(&a, &b)?;
    let res = common_resolution(&a, &b);
    let (ga, gb) = (a.sample(res)?, b.sample(res)?);
    let n = ga.values().len() as f64;
    Ok(0.5
        * ga.values()
            .iter()
            .zip(gb.values())
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
        / n)
}

/// Wasserstein-1 distance on the circle.
///
/// With `G` the difference of the two cumulative distribution functions, the
/// circle distance is `min_c int |G - c|`, attained at the median of `G`. `G`
/// is obtained spectrally and integrated on a four-times refined grid.
pub fn dist_w1_1d<'a, 'b>(
    m1: impl Into<MeasureRef<'a>>,
    m2: impl Into<MeasureRef<'b>>,
) -> Result<f64, SpectralError> {
    let (a, b) = (m1.into(), m2.into());
    check_dims(&a, &b)?;
    if a.dim() != 1 {
        return Err(SpectralError::UnsupportedDimension(a.dim()));
    }
    let res = common_resolution(&a, &b);
    let spectral = Spectral::new(1, res)?;
    let (ga, gb) = (a.sample(res)?, b.sample(res)?);
    let diff: Vec<f64> = ga
        .values()
        .iter()
        .zip(gb.values())
        .map(|(x, y)| x - y)
        .collect();
    let coeffs = spectral.forward(&diff);
    let fine = Spectral::new(1, (4 * res).max(1024))?;
    let mut anti = vec![Complex64::new(0.0, 0.0); fine.len()];
    for (j, c) in coeffs.iter().enumerate() {
        let k = spectral.mode(j).0[0];
        if k == 0 || k == -(res as i32) / 2 {
            continue;
        }
        anti[fine.flat_index(spectral.mode(j))] = c / Complex64::new(0.0, 2.0 * PI * f64::from(k));
    }
    let mut cdf = fine.inverse(&anti);
    let mut sorted = cdf.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    cdf.iter_mut().for_each(|v| *v = (*v - median).abs());
    Ok(cdf.iter().sum::<f64>() / cdf.len() as f64)
}

/// `sum_{k != 0} |m1^k - m2^k| / (4 pi^2 |k|^2)`, a computable proxy for `d_{-2}`.
pub fn dist_dminus2_surrogate(
    m1: &FourierMeasure,
    m2: &FourierMeasure,
) -> Result<f64, SpectralError> {
    if m1.dim() != m2.dim() {
        return Err(SpectralError::DimensionMismatch(m1.dim(), m2.dim()));
    }
    let big = if m1.order() >= m2.order() { m1 } else { m2 };
    Ok(big
        .index()
        .positive()
        .iter()
        .map(|&k| 2.0 * (m1.coeff(k) - m2.coeff(k)).norm() / (4.0 * PI * PI * k.norm_sq()))
        .sum())
}
