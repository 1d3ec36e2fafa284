//! The min-plus semiring: `a (+) b = min(a, b)`, `a (x) b = a + b`.
//!
//! The additive identity is `+inf` and the multiplicative identity is `0`.
//! Values are finite or `+inf`; `-inf` and NaN are not elements.

use core::ops::{Add, Mul};

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct MinPlus(pub f64);

impl MinPlus {
    pub const ZERO: Self = Self(f64::INFINITY);
    pub const ONE: Self = Self(0.0);

    pub fn is_zero(self) -> bool {
        self.0 == f64::INFINITY
    }

    pub fn is_element(self) -> bool {
        !self.0.is_nan() && self.0 != f64::NEG_INFINITY
    }
}

impl Add for MinPlus {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0.min(rhs.0))
    }
}

impl Mul for MinPlus {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        // inf + finite is inf already; spelled out so the identity is obvious.
        if self.is_zero() || rhs.is_zero() {
            Self::ZERO
        } else {
            Self(self.0 + rhs.0)
        }
    }
}

impl core::iter::Sum for MinPlus {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

impl core::iter::Product for MinPlus {
    fn product<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ONE, |a, b| a * b)
    }
}

/// Min-plus inner product `(f, g) = min_x f(x) + g(x)` over sampled values.
pub fn inner(f: &[f64], g: &[f64]) -> f64 {
    assert_eq!(f.len(), g.len());
    f.iter().zip(g).map(|(&a, &b)| MinPlus(a) * MinPlus(b)).sum::<MinPlus>().0
}

/// Min-plus matrix-vector product `(K v)_i = min_j K(i, j) + v_j`.
pub fn apply_kernel(n_out: usize, v: &[f64], kernel: impl Fn(usize, usize) -> f64) -> alloc::vec::Vec<f64> {
    (0..n_out)
        .map(|i| v.iter().enumerate().map(|(j, &vj)| MinPlus(kernel(i, j)) * MinPlus(vj)).sum::<MinPlus>().0)
        .collect()
}
