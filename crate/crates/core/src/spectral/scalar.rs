//! Minimal scalar abstraction so the solvers run in real arithmetic for
//! half-integer fluxes and complex arithmetic otherwise.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + std::fmt::Debug
{
    const ZERO: Self;
    const ONE: Self;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn abs_sq(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn from_re(x: f64) -> Self;
    /// Construct from rectangular parts; the real type requires im == 0.
    fn from_parts(re: f64, im: f64) -> Self;
    fn to_complex(self) -> Complex64;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn from_re(x: f64) -> Self {
        x
    }
    fn from_parts(re: f64, im: f64) -> Self {
        debug_assert_eq!(im, 0.0, "imaginary part on a real scalar");
        re
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn abs_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

/// Hermitian inner product `<a, b> = sum conj(a_i) b_i`.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut s = S::ZERO;
    for i in 0..a.len() {
        s = s + a[i].conj() * b[i];
    }
    s
}

pub fn norm<S: Scalar>(a: &[S]) -> f64 {
    a.iter().map(|x| x.abs_sq()).sum::<f64>().sqrt()
}

/// y += alpha * x
pub fn axpy<S: Scalar>(y: &mut [S], alpha: S, x: &[S]) {
    debug_assert_eq!(y.len(), x.len());
    for i in 0..y.len() {
        y[i] = y[i] + alpha * x[i];
    }
}

pub fn scale_in_place<S: Scalar>(a: &mut [S], s: f64) {
    for x in a.iter_mut() {
        *x = x.scale(s);
    }
}
