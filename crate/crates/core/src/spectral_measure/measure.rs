//! Truncated Fourier measures and grid densities.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use super::{Mode, MultiIndexSet, Spectral, SpectralError};

/// A candidate probability measure given by its coefficients over `F_N^+`.
///
/// The zero mode is fixed to one and negative modes are conjugates, so only
/// the half spectrum is stored.
#[derive(Clone, Debug)]
pub struct FourierMeasure {
    index: Arc<MultiIndexSet>,
    coeffs: Vec<Complex64>,
}

impl PartialEq for FourierMeasure {
    fn eq(&self, other: &Self) -> bool {
        *self.index == *other.index && self.coeffs == other.coeffs
    }
}

impl FourierMeasure {
    /// Lebesgue measure on the torus.
    pub fn uniform(index: Arc<MultiIndexSet>) -> Self {
        let coeffs = vec![Complex64::new(0.0, 0.0); index.len_positive()];
        Self { index, coeffs }
    }

    pub fn new(index: Arc<MultiIndexSet>, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != index.len_positive() {
            return Err(SpectralError::LengthMismatch {
                expected: index.len_positive(),
                found: coeffs.len(),
            });
        }
        if coeffs
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(SpectralError::NonFinite);
        }
        Ok(Self { index, coeffs })
    }

    /// Builds a measure from `(k, m^k)` pairs; negative modes are conjugated into place.
    pub fn from_modes(
        dim: usize,
        order: usize,
        modes: &[(Mode, Complex64)],
    ) -> Result<Self, SpectralError> {
        let index = Arc::new(MultiIndexSet::new(dim, order)?);
        let mut m = Self::uniform(index);
        for &(k, c) in modes {
            let (kp, flipped) = k.canonical().ok_or(SpectralError::ZeroModeAssigned)?;
            let pos = m
                .index
                .position(kp)
                .ok_or(SpectralError::ModeOutOfRange(k))?;
            m.coeffs[pos] = if flipped { c.conj() } else { c };
        }
        Ok(m)
    }

    pub fn index(&self) -> &Arc<MultiIndexSet> {
        &self.index
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    pub fn order(&self) -> usize {
        self.index.order()
    }

    /// Coefficients aligned with `index().positive()`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// `(k, m^k)` over `F_N^+`.
    pub fn iter(&self) -> impl Iterator<Item = (Mode, Complex64)> + '_ {
        self.index
            .positive()
            .iter()
            .copied()
            .zip(self.coeffs.iter().copied())
    }

    /// `m^k` for any `k`, zero outside `F_N`.
    pub fn coeff(&self, k: Mode) -> Complex64 {
        match k.canonical() {
            None => Complex64::new(1.0, 0.0),
            Some((kp, flipped)) => match self.index.position(kp) {
                Some(p) if flipped => self.coeffs[p].conj(),
                Some(p) => self.coeffs[p],
                None => Complex64::new(0.0, 0.0),
            },
        }
    }

    /// Same coefficients viewed at another truncation order (zero padded or cut).
    pub fn with_order(&self, order: usize) -> Result<Self, SpectralError> {
        let index = Arc::new(MultiIndexSet::new(self.dim(), order)?);
        let coeffs = index.positive().iter().map(|&k| self.coeff(k)).collect();
        Ok(Self { index, coeffs })
    }

    /// Coefficientwise map over `F_N^+`.
    pub fn map(&self, mut f: impl FnMut(Mode, Complex64) -> Complex64) -> Self {
        let coeffs = self.iter().map(|(k, c)| f(k, c)).collect();
        Self {
            index: self.index.clone(),
            coeffs,
        }
    }

    /// Law of `xi + y` when `xi` has law `self`.
    pub fn translate(&self, y: [f64; 2]) -> Self {
        self.map(|k, c| c * Complex64::from_polar(1.0, 2.0 * PI * k.dot(&y)))
    }

    /// `4 pi sum |k| |m^k|`, a bound on the sup norm of the density gradient.
    pub fn gradient_bound(&self) -> f64 {
        4.0 * PI * self.iter().map(|(k, c)| k.norm() * c.norm()).sum::<f64>()
    }

    /// `8 pi^2 sum |k|^2 |m^k|`, a bound on the operator norm of the density Hessian.
    pub fn hessian_bound(&self) -> f64 {
        8.0 * PI
            * PI
            * self
                .iter()
                .map(|(k, c)| k.norm_sq() * c.norm())
                .sum::<f64>()
    }

    /// Interleaved real coordinates `(Re m^k, Im m^k)` over `F_N^+`.
    pub fn to_real(&self) -> Vec<f64> {
        self.coeffs.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn from_real(index: Arc<MultiIndexSet>, coords: &[f64]) -> Result<Self, SpectralError> {
        if coords.len() != index.real_dimension() {
            return Err(SpectralError::LengthMismatch {
                expected: index.real_dimension(),
                found: coords.len(),
            });
        }
        let coeffs = coords
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        Self::new(index, coeffs)
    }

    /// Hermitian array of DFT coefficients `a_k = m^{-k}` on a grid with `M >= 2N`.
    pub fn to_spectral(&self, spectral: &Spectral) -> Result<Vec<Complex64>, SpectralError> {
        check_nyquist(self, spectral.resolution())?;
        if spectral.dim() != self.dim() {
            return Err(SpectralError::DimensionMismatch(self.dim(), spectral.dim()));
        }
        let mut a = vec![Complex64::new(0.0, 0.0); spectral.len()];
        a[0] = Complex64::new(1.0, 0.0);
        for (k, c) in self.iter() {
            a[spectral.flat_index(-k)] = c;
            a[spectral.flat_index(k)] = c.conj();
        }
        Ok(a)
    }

    /// Truncation of a DFT coefficient array to `F_N^+`.
    pub fn from_spectral(
        a: &[Complex64],
        spectral: &Spectral,
        order: usize,
    ) -> Result<Self, SpectralError> {
        let index = Arc::new(MultiIndexSet::new(spectral.dim(), order)?);
        let half = spectral.resolution() as i32 / 2;
        let coeffs = index
            .positive()
            .iter()
            .map(|&k| {
                if k.sup_norm() >= half {
                    Complex64::new(0.0, 0.0)
                } else {
                    a[spectral.flat_index(-k)] / a[0].re
                }
            })
            .collect();
        Self::new(index, coeffs)
    }

    /// Plain-text form: header `dim N`, then `k_1 .. k_d re im` per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.dim(), self.order());
        for (k, c) in self.iter() {
            out.push_str(&format!("{} {} {}\n", k.format(self.dim()), c.re, c.im));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SpectralError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| parse_err("missing header"))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(header)))
            .collect::<Result<_, _>>()?;
        let [dim, order] = h[..] else {
            return Err(parse_err(header));
        };
        let mut modes = Vec::new();
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != dim + 2 {
                return Err(parse_err(line));
            }
            let ks: Vec<i32> = toks[..dim]
                .iter()
                .map(|t| t.parse().map_err(|_| parse_err(line)))
                .collect::<Result<_, _>>()?;
            let re: f64 = toks[dim].parse().map_err(|_| parse_err(line))?;
            let im: f64 = toks[dim + 1].parse().map_err(|_| parse_err(line))?;
            let k = Mode::from_slice(&ks).ok_or_else(|| parse_err(line))?;
            modes.push((k, Complex64::new(re, im)));
        }
        Self::from_modes(dim, order, &modes)
    }
}

fn parse_err(line: &str) -> SpectralError {
    SpectralError::Parse(line.to_string())
}

fn check_nyquist(m: &FourierMeasure, resolution: usize) -> Result<(), SpectralError> {
    if resolution < 2 * m.order() {
        Err(SpectralError::BelowNyquist {
            resolution,
            order: m.order(),
        })
    } else {
        Ok(())
    }
}

/// Samples of a density on the uniform grid `x_j = j / M`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    dim: usize,
    resolution: usize,
    values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(dim: usize, resolution: usize, values: Vec<f64>) -> Result<Self, SpectralError> {
        if !(1..=2).contains(&dim) {
            return Err(SpectralError::UnsupportedDimension(dim));
        }
        if resolution < 2 || !resolution.is_power_of_two() {
            return Err(SpectralError::InvalidResolution(resolution));
        }
        let expected = resolution.pow(dim as u32);
        if values.len() != expected {
            return Err(SpectralError::LengthMismatch {
                expected,
                found: values.len(),
            });
        }
        Ok(Self {
            dim,
            resolution,
            values,
        })
    }

    pub fn uniform(dim: usize, resolution: usize) -> Result<Self, SpectralError> {
        Self::new(dim, resolution, vec![1.0; resolution.pow(dim as u32)])
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(
        dim: usize,
        resolution: usize,
        f: impl Fn(&[f64; 2]) -> f64,
    ) -> Result<Self, SpectralError> {
        let spectral = Spectral::new(dim, resolution)?;
        let values = spectral.points().iter().map(f).collect();
        Self::new(dim, resolution, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Grid quadrature of the density, i.e. the mean of the samples.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Truncated Fourier view of the grid at order `N`.
    pub fn to_fourier(&self, order: usize) -> Result<FourierMeasure, SpectralError> {
        let spectral = Spectral::new(self.dim, self.resolution)?;
        let a = spectral.forward(&self.values);
        FourierMeasure::from_spectral(&a, &spectral, order)
    }

    /// CSV rows `x_1[,x_2],value`.
    pub fn to_csv(&self) -> String {
        let h = 1.0 / self.resolution as f64;
        let mut out = String::from(if self.dim == 1 {
            "x1,value\n"
        } else {
            "x1,x2,value\n"
        });
        for (j, v) in self.values.iter().enumerate() {
            if self.dim == 1 {
                out.push_str(&format!("{},{}\n", j as f64 * h, v));
            } else {
                let (a, b) = (j / self.resolution, j % self.resolution);
                out.push_str(&format!("{},{},{}\n", a as f64 * h, b as f64 * h, v));
            }
        }
        out
    }
}

/// Either representation of a measure.
#[derive(Clone, Copy, Debug)]
pub enum MeasureRef<'a> {
    Fourier(&'a FourierMeasure),
    Grid(&'a DensityGrid),
}

impl<'a> From<&'a FourierMeasure> for MeasureRef<'a> {
    fn from(m: &'a FourierMeasure) -> Self {
        MeasureRef::Fourier(m)
    }
}

impl<'a> From<&'a DensityGrid> for MeasureRef<'a> {
    fn from(m: &'a DensityGrid) -> Self {
        MeasureRef::Grid(m)
    }
}

impl MeasureRef<'_> {
    pub fn dim(&self) -> usize {
        match self {
            MeasureRef::Fourier(m) => m.dim(),
            MeasureRef::Grid(g) => g.dim(),
        }
    }

    /// Grid samples at resolution `M`; grids must already match.
    pub fn sample(&self, resolution: usize) -> Result<DensityGrid, SpectralError> {
        match self {
            MeasureRef::Fourier(m) => evaluate_density(m, resolution),
            MeasureRef::Grid(g) if g.resolution() == resolution => Ok((*g).clone()),
            MeasureRef::Grid(g) => Err(SpectralError::ResolutionMismatch(
                g.resolution(),
                resolution,
            )),
        }
    }
}

/// Fejer multiplier `prod_j (1 - |k_j| / N)`, zero outside `F_N`.
pub fn fejer_multiplier(k: Mode, order: usize) -> f64 {
    let n = order as f64;
    k.0.iter()
        .map(|&c| (1.0 - f64::from(c.abs()) / n).max(0.0))
        .product()
}

/// The Fejer multipliers over `F_N`.
pub fn fejer_coefficients(idx: &MultiIndexSet) -> Vec<(Mode, f64)> {
    idx.full()
        .iter()
        .map(|&k| (k, fejer_multiplier(k, idx.order())))
        .collect()
}

/// `m * f_N`, truncated to order `N`.
pub fn convolve_fejer<'a>(
    m: impl Into<MeasureRef<'a>>,
    order: usize,
) -> Result<FourierMeasure, SpectralError> {
    let base = match m.into() {
        MeasureRef::Fourier(m) => m.with_order(order)?,
        MeasureRef::Grid(g) => g.to_fourier(order)?,
    };
    Ok(base.map(|k, c| c * fejer_multiplier(k, order)))
}

/// Exact samples of the trigonometric polynomial at resolution `M >= 2N`.
pub fn evaluate_density(
    m: &FourierMeasure,
    resolution: usize,
) -> Result<DensityGrid, SpectralError> {
    check_nyquist(m, resolution)?;
    let spectral = Spectral::new(m.dim(), resolution)?;
    let a = m.to_spectral(&spectral)?;
    DensityGrid::new(m.dim(), resolution, spectral.inverse(&a))
}

/// Grid minimum with a certified lower bound on the true infimum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMinimum {
    pub certified_lower_bound: f64,
    pub grid_min: f64,
    pub resolution: usize,
}

/// Minimum of the density over the grid together with a certified lower bound.
///
/// The bound is the better of the Lipschitz estimate `grid_min - L sqrt(d)/(2M)`
/// and the curvature estimate `grid_min - L_2 d / (8 M^2)`; the latter holds
/// because the gradient vanishes at the true minimizer.
pub fn min_density(m: &FourierMeasure, resolution: usize) -> Result<DensityMinimum, SpectralError> {
    let grid = evaluate_density(m, resolution)?;
    let grid_min = grid.min();
    let d = m.dim() as f64;
    let r = d.sqrt() / (2.0 * resolution as f64);
    let lipschitz = grid_min - m.gradient_bound() * r;
    let curvature = grid_min - 0.5 * m.hessian_bound() * r * r;
    Ok(DensityMinimum {
        certified_lower_bound: lipschitz.max(curvature).min(grid_min),
        grid_min,
        resolution,
    })
}

/// Outcome of the positivity test defining `O_N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Outside,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MembershipReport {
    pub status: Membership,
    /// Certified lower bound on the density at the deciding resolution.
    pub margin: f64,
    pub grid_min: f64,
    pub resolution: usize,
}

impl MembershipReport {
    pub fn is_inside(&self) -> bool {
        self.status == Membership::Inside
    }
}

/// Per-axis resolution cap for adaptive refinement.
pub fn resolution_cap(dim: usize) -> usize {
    if dim == 1 {
        1 << 14
    } else {
        1 << 11
    }
}

/// Decides strict positivity, refining the grid while the answer is open.
#[allow(non_snake_case)]
pub fn is_in_O_N(m: &FourierMeasure, resolution: usize) -> Result<MembershipReport, SpectralError> {
    let cap = resolution_cap(m.dim()).max(resolution);
    let mut res = resolution;
    loop {
        let dm = min_density(m, res)?;
        let status = if dm.grid_min <= 0.0 {
            Some(Membership::Outside)
        } else if dm.certified_lower_bound > 0.0 {
            Some(Membership::Inside)
        } else if res * 2 > cap {
            Some(Membership::Inconclusive)
        } else {
            None
        };
        if let Some(status) = status {
            return Ok(MembershipReport {
                status,
                margin: dm.certified_lower_bound,
                grid_min: dm.grid_min,
                resolution: res,
            });
        }
        res *= 2;
    }
}

/// Smallest power-of-two resolution satisfying Nyquist for `order`, at least `floor`.
pub fn nyquist_resolution(order: usize, floor: usize) -> usize {
    (2 * order).max(floor).next_power_of_two()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one_mode(a: Complex64) -> FourierMeasure {
        FourierMeasure::from_modes(1, 2, &[(Mode::new1(1), a)]).unwrap()
    }

    #[test]
    fn fejer_examples() {
        let idx = MultiIndexSet::new(1, 2).unwrap();
        let f = fejer_coefficients(&idx);
        let vals: Vec<f64> = f.iter().map(|p| p.1).collect();
        assert_eq!(vals, vec![0.5, 1.0, 0.5]);
        for n in 1..10 {
            assert_eq!(fejer_multiplier(Mode::ZERO, n), 1.0);
        }
        let direct = (1.0 - 1.0 / 3.0) * (1.0 - 2.0 / 3.0);
        assert_relative_eq!(
            fejer_multiplier(Mode::new2(1, 2), 3),
            direct,
            epsilon = 1e-15
        );
        assert_eq!(fejer_multiplier(Mode::new1(3), 3), 0.0);
    }

    #[test]
    fn convolve_examples() {
        let u = FourierMeasure::uniform(Arc::new(MultiIndexSet::new(1, 4).unwrap()));
        assert!(convolve_fejer(&u, 4)
            .unwrap()
            .coeffs()
            .iter()
            .all(|c| c.norm() == 0.0));
        let m = one_mode(Complex64::new(0.3, 0.0));
        let c = convolve_fejer(&m, 2).unwrap();
        assert_relative_eq!(c.coeff(Mode::new1(1)).re, 0.15, epsilon = 1e-15);
        // Point mass at zero: all coefficients one.
        let dirac = FourierMeasure::from_modes(
            1,
            8,
            &(1..8)
                .map(|k| (Mode::new1(k), Complex64::new(1.0, 0.0)))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let f2 = convolve_fejer(&dirac, 2).unwrap();
        let grid = evaluate_density(&f2, 64).unwrap();
        for (j, v) in grid.values().iter().enumerate() {
            let x = j as f64 / 64.0;
            assert_relative_eq!(*v, 1.0 + (2.0 * PI * x).cos(), epsilon = 1e-13);
        }
        assert!(grid.min().abs() < 1e-13);
        assert!(!is_in_O_N(&f2, 64).unwrap().is_inside());
    }

    #[test]
    fn evaluate_examples() {
        let a = 0.4;
        let m = one_mode(Complex64::new(a, 0.0));
        let g = evaluate_density(&m, 8).unwrap();
        for (j, v) in g.values().iter().enumerate() {
            let x = j as f64 / 8.0;
            assert_relative_eq!(*v, 1.0 + 2.0 * a * (2.0 * PI * x).cos(), epsilon = 1e-14);
        }
        assert_relative_eq!(g.values()[4], 0.2, epsilon = 1e-14);
        assert!(evaluate_density(&m, 2).is_err());
        let u = FourierMeasure::uniform(m.index().clone());
        assert!(evaluate_density(&u, 16)
            .unwrap()
            .values()
            .iter()
            .all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn complex_coefficient_orientation() {
        // m^1 = i b gives density 1 + 2 b sin(2 pi x).
        let b = 0.2;
        let m = one_mode(Complex64::new(0.0, b));
        let g = evaluate_density(&m, 16).unwrap();
        for (j, v) in g.values().iter().enumerate() {
            let x = j as f64 / 16.0;
            assert_relative_eq!(*v, 1.0 + 2.0 * b * (2.0 * PI * x).sin(), epsilon = 1e-14);
        }
        // Round trip through the grid recovers the coefficient.
        let back = g.to_fourier(2).unwrap();
        assert_relative_eq!(back.coeff(Mode::new1(1)).im, b, epsilon = 1e-14);
    }

    #[test]
    fn min_density_examples() {
        let u = FourierMeasure::uniform(Arc::new(MultiIndexSet::new(1, 3).unwrap()));
        let dm = min_density(&u, 8).unwrap();
        assert_eq!((dm.grid_min, dm.certified_lower_bound), (1.0, 1.0));
        let m = one_mode(Complex64::new(0.4, 0.0));
        let mut prev = f64::NEG_INFINITY;
        for res in [4, 16, 64, 256] {
            let dm = min_density(&m, res).unwrap();
            assert!(dm.certified_lower_bound <= 0.2 + 1e-14);
            assert!(dm.grid_min >= 0.2 - 1e-14);
            assert!(dm.certified_lower_bound >= prev);
            prev = dm.certified_lower_bound;
        }
        let bad = one_mode(Complex64::new(0.6, 0.0));
        assert!(min_density(&bad, 8).unwrap().grid_min < 0.0);
    }

    #[test]
    fn membership_examples() {
        let u = FourierMeasure::uniform(Arc::new(MultiIndexSet::new(1, 2).unwrap()));
        assert!(is_in_O_N(&u, 4).unwrap().is_inside());
        assert!(is_in_O_N(&one_mode(Complex64::new(0.4, 0.0)), 4)
            .unwrap()
            .is_inside());
        let out = is_in_O_N(&one_mode(Complex64::new(0.6, 0.0)), 4).unwrap();
        assert_eq!(out.status, Membership::Outside);
        // Minimum exactly zero at a non-grid point: off-grid phase, positive grid values.
        let tight = one_mode(Complex64::from_polar(0.5, 0.1234));
        let r = is_in_O_N(&tight, 4).unwrap();
        assert_ne!(r.status, Membership::Inside);
    }

    #[test]
    fn refinement_decides_near_boundary() {
        let m = one_mode(Complex64::from_polar(0.49, 0.3));
        let r = is_in_O_N(&m, 4).unwrap();
        assert!(r.is_inside());
        assert!(r.resolution > 4);
    }

    #[test]
    fn text_roundtrip() {
        let m = FourierMeasure::from_modes(
            2,
            3,
            &[
                (Mode::new2(0, 1), Complex64::new(0.1, -0.02)),
                (Mode::new2(-1, 2), Complex64::new(0.03, 0.01)),
            ],
        )
        .unwrap();
        let back = FourierMeasure::from_text(&m.to_text()).unwrap();
        assert_eq!(m, back);
        assert!(FourierMeasure::from_text("1 2\n1 0.1\n").is_err());
        assert!(FourierMeasure::from_text("1 2\n5 0.1 0\n").is_err());
    }

    #[test]
    fn translation_moves_density() {
        let m = FourierMeasure::from_modes(
            1,
            3,
            &[
                (Mode::new1(1), Complex64::new(0.2, 0.1)),
                (Mode::new1(2), Complex64::new(0.05, 0.0)),
            ],
        )
        .unwrap();
        let y = 0.25;
        let g = evaluate_density(&m, 16).unwrap();
        let gt = evaluate_density(&m.translate([y, 0.0]), 16).unwrap();
        // density of xi + y at x equals density of xi at x - y; y is 4 grid cells.
        for j in 0..16 {
            assert_relative_eq!(gt.values()[(j + 4) % 16], g.values()[j], epsilon = 1e-14);
        }
    }

    #[test]
    fn fejer_preserves_positivity_2d() {
        let g = DensityGrid::from_fn(2, 16, |x| {
            let d = ((x[0] - 0.5).powi(2) + (x[1] - 0.3).powi(2)) * 40.0;
            (-d).exp() + 1e-3
        })
        .unwrap();
        let mass = g.mass();
        let g = DensityGrid::new(2, 16, g.values().iter().map(|v| v / mass).collect()).unwrap();
        let f = convolve_fejer(&g, 4).unwrap();
        assert!(evaluate_density(&f, 16).unwrap().min() > 0.0);
    }
}
