//! Forward-mode dual numbers with a fixed number of derivative slots.
//!
//! The per-face energy kernels are written once against [`Scalar`] and
//! evaluated either with `f64` (values) or with [`Dual`] (local Jacobians).
//! Each kernel only touches a handful of vertices, so forward mode over
//! 12 or 24 slots is cheap and exact to round-off.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    fn cst(x: f64) -> Self;
    fn re(&self) -> f64;
    fn sqrt(self) -> Self;
    fn powf(self, p: f64) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(x: f64) -> Self {
        x
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const N: usize> {
    pub re: f64,
    pub du: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn constant(re: f64) -> Self {
        Self { re, du: [0.0; N] }
    }

    /// Independent variable occupying derivative slot `slot`.
    pub fn variable(re: f64, slot: usize) -> Self {
        let mut du = [0.0; N];
        du[slot] = 1.0;
        Self { re, du }
    }

    #[inline]
    fn chain(self, value: f64, deriv: f64) -> Self {
        let mut du = self.du;
        for d in du.iter_mut() {
            *d *= deriv;
        }
        Self { re: value, du }
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.re += rhs.re;
        for (a, b) in self.du.iter_mut().zip(rhs.du.iter()) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.re -= rhs.re;
        for (a, b) in self.du.iter_mut().zip(rhs.du.iter()) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut du = [0.0; N];
        for i in 0..N {
            du[i] = self.re * rhs.du[i] + rhs.re * self.du[i];
        }
        Self {
            re: self.re * rhs.re,
            du,
        }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.re;
        let q = self.re * inv;
        let mut du = [0.0; N];
        for i in 0..N {
            du[i] = (self.du[i] - q * rhs.du[i]) * inv;
        }
        Self { re: q, du }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(mut self) -> Self {
        self.re = -self.re;
        for d in self.du.iter_mut() {
            *d = -*d;
        }
        self
    }
}

impl<const N: usize> AddAssign for Dual<N> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const N: usize> SubAssign for Dual<N> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<const N: usize> Scalar for Dual<N> {
    #[inline]
    fn cst(x: f64) -> Self {
        Self::constant(x)
    }
    #[inline]
    fn re(&self) -> f64 {
        self.re
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        let v = self.re.powf(p);
        self.chain(v, p * self.re.powf(p - 1.0))
    }
}
