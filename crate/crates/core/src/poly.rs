//! Dense polynomial helpers over `f64` or exact rationals.
//!
//! Coefficient vectors are indexed by power: `c[k]` multiplies `s^k`. Every
//! probability generating function in this crate is built from these.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive, Zero};

/// Field elements the exact and floating routines are generic over.
pub trait Scalar: Clone + Num + PartialOrd + Debug + Send + Sync {
    fn from_frac(num: i64, den: i64) -> Self;

    fn from_usize(n: usize) -> Self {
        Self::from_frac(n as i64, 1)
    }

    fn as_f64(&self) -> f64;

    fn to_rational(&self) -> Option<BigRational>;

    fn is_exact() -> bool;

    fn from_rational(r: &BigRational) -> Self;

    fn from_f64(x: f64) -> Self;
}

impl Scalar for f64 {
    fn from_frac(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn as_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Option<BigRational> {
        None
    }

    fn is_exact() -> bool {
        false
    }

    fn from_rational(r: &BigRational) -> Self {
        ratio_to_f64(r)
    }

    fn from_f64(x: f64) -> Self {
        x
    }
}

impl Scalar for BigRational {
    fn from_frac(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn as_f64(&self) -> f64 {
        ratio_to_f64(self)
    }

    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }

    fn is_exact() -> bool {
        true
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    /// Exact binary value of `x`; non-finite input maps to zero.
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(BigRational::zero)
    }
}

/// Nearest `f64` to a big rational, including when numerator and
/// denominator individually overflow `f64`.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let n = r.numer().bits() as i64;
    let d = r.denom().bits() as i64;
    let shift = n - d;
    let scaled = if shift > 0 {
        BigRational::new(r.numer().clone(), r.denom() << (shift as usize))
    } else {
        BigRational::new(r.numer() << ((-shift) as usize), r.denom().clone())
    };
    scaled.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
}

/// Exact rational value of a finite `f64` (its binary expansion).
pub fn f64_to_ratio(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// `poly * (q + p s)`.
pub fn mul_linear<T: Scalar>(poly: &[T], q: &T, p: &T) -> Vec<T> {
    let mut out = vec![T::zero(); poly.len() + 1];
    for (k, c) in poly.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        out[k] = out[k].clone() + c.clone() * q.clone();
        out[k + 1] = out[k + 1].clone() + c.clone() * p.clone();
    }
    out
}

/// `poly * s`.
pub fn shift<T: Scalar>(poly: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    out.push(T::zero());
    out.extend(poly.iter().cloned());
    out
}

pub fn scale<T: Scalar>(poly: &[T], c: &T) -> Vec<T> {
    poly.iter().map(|x| x.clone() * c.clone()).collect()
}

pub fn add_assign<T: Scalar>(acc: &mut Vec<T>, other: &[T]) {
    if acc.len() < other.len() {
        acc.resize(other.len(), T::zero());
    }
    for (a, b) in acc.iter_mut().zip(other) {
        *a = a.clone() + b.clone();
    }
}

pub fn convolve<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

/// Horner evaluation.
pub fn eval<T: Scalar>(poly: &[T], s: &T) -> T {
    poly.iter()
        .rev()
        .fold(T::zero(), |acc, c| acc * s.clone() + c.clone())
}

pub fn eval_f64(poly: &[f64], s: f64) -> f64 {
    poly.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

pub fn sum<T: Scalar>(poly: &[T]) -> T {
    poly.iter().cloned().fold(T::zero(), |a, b| a + b)
}

/// Coefficients sum to exactly one.
pub fn is_normalized<T: Scalar>(poly: &[T]) -> bool {
    sum(poly) == T::one()
}

/// Kahan-Babuska compensated summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Running compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
