//! Integer wave vectors and the truncation index sets `F_N`, `F_N^+`.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use super::SpectralError;

/// Smallest and largest supported dimension.
pub const MAX_DIM: usize = 2;

/// An integer wave vector `k` in `Z^d`, stored with unused coordinates set to zero.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Mode(pub [i32; MAX_DIM]);

impl Mode {
    pub const ZERO: Mode = Mode([0, 0]);

    pub fn new1(k: i32) -> Self {
        Mode([k, 0])
    }

    pub fn new2(k1: i32, k2: i32) -> Self {
        Mode([k1, k2])
    }

    /// Builds a mode from a slice of length 1 or 2.
    pub fn from_slice(ks: &[i32]) -> Option<Self> {
        match ks {
            [a] => Some(Mode([*a, 0])),
            [a, b] => Some(Mode([*a, *b])),
            _ => None,
        }
    }

    pub fn component(self, i: usize) -> i32 {
        self.0[i]
    }

    pub fn is_zero(self) -> bool {
        self.0 == [0, 0]
    }

    pub fn norm_sq(self) -> f64 {
        self.0.iter().map(|&c| f64::from(c).powi(2)).sum()
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Largest absolute coordinate.
    pub fn sup_norm(self) -> i32 {
        self.0[0].abs().max(self.0[1].abs())
    }

    /// `k . x` for a point of the torus.
    pub fn dot(self, x: &[f64; MAX_DIM]) -> f64 {
        f64::from(self.0[0]) * x[0] + f64::from(self.0[1]) * x[1]
    }

    /// True when the first nonzero coordinate is positive.
    pub fn is_positive(self) -> bool {
        match self.0.iter().find(|&&c| c != 0) {
            Some(&c) => c > 0,
            None => false,
        }
    }

    /// Index of the first nonzero coordinate.
    pub fn leading_axis(self) -> Option<usize> {
        self.0.iter().position(|&c| c != 0)
    }

    /// Representative of `{k, -k}` lying in the positive half-space, or `None` for zero.
    pub fn canonical(self) -> Option<(Mode, bool)> {
        if self.is_zero() {
            None
        } else if self.is_positive() {
            Some((self, false))
        } else {
            Some((-self, true))
        }
    }

    pub fn in_box(self, order: usize, dim: usize) -> bool {
        let bound = order as i32;
        (0..MAX_DIM).all(|i| {
            if i < dim {
                self.0[i].abs() < bound
            } else {
                self.0[i] == 0
            }
        })
    }

    pub fn format(self, dim: usize) -> String {
        self.0[..dim]
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl Neg for Mode {
    type Output = Mode;
    fn neg(self) -> Mode {
        Mode([-self.0[0], -self.0[1]])
    }
}

impl Add for Mode {
    type Output = Mode;
    fn add(self, o: Mode) -> Mode {
        Mode([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl Sub for Mode {
    type Output = Mode;
    fn sub(self, o: Mode) -> Mode {
        Mode([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0[0], self.0[1])
    }
}

/// The box `F_N = {-N+1..N-1}^d` and its half `F_N^+`.
#[derive(Clone, Debug)]
pub struct MultiIndexSet {
    dim: usize,
    order: usize,
    full: Vec<Mode>,
    positive: Vec<Mode>,
    lookup: HashMap<Mode, usize>,
}

impl PartialEq for MultiIndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.order == other.order
    }
}

impl MultiIndexSet {
    pub fn new(dim: usize, order: usize) -> Result<Self, SpectralError> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(SpectralError::UnsupportedDimension(dim));
        }
        if order == 0 {
            return Err(SpectralError::InvalidOrder(order));
        }
        let n = order as i32 - 1;
        let range = || -n..=n;
        let full: Vec<Mode> = if dim == 1 {
            range().map(Mode::new1).collect()
        } else {
            range()
                .flat_map(|a| range().map(move |b| Mode::new2(a, b)))
                .collect()
        };
        let positive: Vec<Mode> = full.iter().copied().filter(|k| k.is_positive()).collect();
        let lookup = positive.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        Ok(Self {
            dim,
            order,
            full,
            positive,
            lookup,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// All of `F_N`, in lexicographic order.
    pub fn full(&self) -> &[Mode] {
        &self.full
    }

    /// `F_N^+`, in lexicographic order. Coefficient vectors are aligned with this slice.
    pub fn positive(&self) -> &[Mode] {
        &self.positive
    }

    pub fn len_positive(&self) -> usize {
        self.positive.len()
    }

    /// Real dimension `2|F_N^+|` of the coefficient space.
    pub fn real_dimension(&self) -> usize {
        2 * self.positive.len()
    }

    pub fn contains(&self, k: Mode) -> bool {
        k.in_box(self.order, self.dim)
    }

    /// Position of `k` in [`Self::positive`].
    pub fn position(&self, k: Mode) -> Option<usize> {
        self.lookup.get(&k).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinalities() {
        for dim in 1..=2 {
            for order in 1..=6 {
                let idx = MultiIndexSet::new(dim, order).unwrap();
                assert_eq!(idx.full().len(), (2 * order - 1).pow(dim as u32));
                assert_eq!(2 * idx.len_positive() + 1, idx.full().len());
                assert!(idx.real_dimension() <= 2 * (2 * order - 1).pow(dim as u32));
            }
        }
    }

    #[test]
    fn half_space_partition() {
        let idx = MultiIndexSet::new(2, 4).unwrap();
        for &k in idx.full() {
            if k.is_zero() {
                continue;
            }
            let pos = idx.position(k).is_some();
            let neg = idx.position(-k).is_some();
            assert!(pos ^ neg, "{k} must lie in exactly one half");
        }
    }

    #[test]
    fn leading_axis_sign() {
        assert!(Mode::new2(0, 1).is_positive());
        assert!(!Mode::new2(0, -1).is_positive());
        assert!(Mode::new2(1, -3).is_positive());
        assert!(!Mode::new2(-1, 3).is_positive());
        assert_eq!(Mode::new2(0, 2).leading_axis(), Some(1));
        assert_eq!(Mode::ZERO.leading_axis(), None);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(MultiIndexSet::new(3, 2).is_err());
        assert!(MultiIndexSet::new(1, 0).is_err());
    }

    #[test]
    fn order_one_is_trivial() {
        let idx = MultiIndexSet::new(1, 1).unwrap();
        assert!(idx.positive().is_empty());
        assert_eq!(idx.full(), &[Mode::ZERO]);
    }
}
