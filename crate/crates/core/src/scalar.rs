//! Arithmetic shared by the floating and exact-rational code paths.

use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

pub trait Scalar: Clone + PartialOrd + Debug {
    /// Exact types compare with zero tolerance.
    const EXACT: bool;

    fn zero() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn abs(&self) -> Self;
    fn half(&self) -> Self;
    fn is_zero(&self) -> bool;

    fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }

    /// `|v| <= rel·scale`; exact types only accept `v == 0`.
    fn negligible(v: &Self, scale: &Self, rel: f64) -> bool;

    fn max(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn half(&self) -> Self {
        0.5 * self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn negligible(v: &Self, scale: &Self, rel: f64) -> bool {
        f64::abs(*v) <= rel * scale
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite value")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn half(&self) -> Self {
        self / BigRational::from_integer(2.into())
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn negligible(v: &Self, _scale: &Self, _rel: f64) -> bool {
        Zero::is_zero(v)
    }
}
