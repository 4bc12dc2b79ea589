//! Finite probability mass functions on the integers.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::poly::{compensated_sum, ratio_to_f64, Scalar};

/// Tolerance on the total mass of a floating-point pmf.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A pmf stored densely from `min_value()` upward.
///
/// When built from exact arithmetic the rational probabilities are kept
/// alongside the `f64` view, and every exact query is answered from them.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    offset: i64,
    probs: Vec<f64>,
    exact: Option<Vec<BigRational>>,
    dropped_mass: f64,
}

impl Pmf {
    /// Point mass at `value`.
    pub fn point(value: i64) -> Self {
        Self {
            offset: value,
            probs: vec![1.0],
            exact: Some(vec![BigRational::one()]),
            dropped_mass: 0.0,
        }
    }

    /// Exact pmf; the probabilities must be non-negative and sum to one.
    pub fn from_exact(offset: i64, probs: Vec<BigRational>) -> Result<Self> {
        if probs.iter().any(|p| p.is_negative()) {
            return Err(Error::Invariant("negative probability".into()));
        }
        let total = probs.iter().fold(BigRational::zero(), |a, b| a + b);
        if !total.is_one() {
            return Err(Error::Unnormalized(ratio_to_f64(&total)));
        }
        let (offset, probs) = trim(offset, probs, |p: &BigRational| p.is_zero());
        let floats = probs.iter().map(ratio_to_f64).collect();
        Ok(Self {
            offset,
            probs: floats,
            exact: Some(probs),
            dropped_mass: 0.0,
        })
    }

    /// Floating-point pmf; total mass must be within [`MASS_TOLERANCE`] of one.
    pub fn from_probs(offset: i64, probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Invariant("negative or non-finite probability".into()));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Unnormalized(total));
        }
        let (offset, probs) = trim(offset, probs, |p: &f64| *p == 0.0);
        Ok(Self {
            offset,
            probs,
            exact: None,
            dropped_mass: 0.0,
        })
    }

    /// Builds from generating-function coefficients (`coeffs[k]` is the
    /// probability of `offset + k`), keeping exact values when `T` is exact.
    pub fn from_coefficients<T: Scalar>(offset: i64, coeffs: Vec<T>) -> Result<Self> {
        if T::is_exact() {
            let exact = coeffs
                .iter()
                .map(|c| c.to_rational().expect("exact scalar"))
                .collect();
            Self::from_exact(offset, exact)
        } else {
            Self::from_probs(offset, coeffs.iter().map(Scalar::as_f64).collect())
        }
    }

    /// Renormalizes a truncated floating pmf and records the removed mass.
    pub(crate) fn from_truncated(offset: i64, mut probs: Vec<f64>, dropped_mass: f64) -> Result<Self> {
        let total = compensated_sum(probs.iter().copied());
        if !(total > 0.0) {
            return Err(Error::Unnormalized(total));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        let mut pmf = Self::from_probs(offset, probs)?;
        pmf.dropped_mass = dropped_mass;
        Ok(pmf)
    }

    pub fn min_value(&self) -> i64 {
        self.offset
    }

    pub fn max_value(&self) -> i64 {
        self.offset + self.probs.len() as i64 - 1
    }

    /// Number of lattice points between the extreme support points.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Mass removed by truncation before renormalization (0 for exact pmfs).
    pub fn dropped_mass(&self) -> f64 {
        self.dropped_mass
    }

    pub fn prob(&self, value: i64) -> f64 {
        self.index(value).map_or(0.0, |i| self.probs[i])
    }

    pub fn exact_prob(&self, value: i64) -> Option<BigRational> {
        let exact = self.exact.as_ref()?;
        Some(
            self.index(value)
                .map_or_else(BigRational::zero, |i| exact[i].clone()),
        )
    }

    /// Dense probabilities from `min_value()`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn exact_probs(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    /// `(value, probability)` over points of positive mass, ascending.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(move |(i, p)| (self.offset + i as i64, *p))
    }

    pub fn exact_iter(&self) -> Option<impl Iterator<Item = (i64, &BigRational)> + '_> {
        let exact = self.exact.as_ref()?;
        Some(
            exact
                .iter()
                .enumerate()
                .filter(|(_, p)| !p.is_zero())
                .map(move |(i, p)| (self.offset + i as i64, p)),
        )
    }

    pub fn to_map(&self) -> BTreeMap<i64, f64> {
        self.iter().collect()
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.iter().map(|(x, p)| x as f64 * p))
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        compensated_sum(self.iter().map(|(x, p)| (x as f64 - m).powi(2) * p))
    }

    pub fn exact_mean(&self) -> Option<BigRational> {
        self.exact_moment(1)
    }

    pub fn exact_second_moment(&self) -> Option<BigRational> {
        self.exact_moment(2)
    }

    pub fn exact_variance(&self) -> Option<BigRational> {
        let m = self.exact_mean()?;
        Some(self.exact_second_moment()? - m.clone() * m)
    }

    fn exact_moment(&self, order: u32) -> Option<BigRational> {
        Some(self.exact_iter()?.fold(BigRational::zero(), |acc, (x, p)| {
            acc + BigRational::from_integer(x.into()).pow(order as i32) * p
        }))
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: i64) -> f64 {
        if x < self.offset {
            return 0.0;
        }
        let upto = ((x - self.offset) as usize).min(self.probs.len() - 1);
        compensated_sum(self.probs[..=upto].iter().copied()).min(1.0)
    }

    /// Expectation of `f(X)`.
    pub fn expect(&self, f: impl Fn(i64) -> f64) -> f64 {
        compensated_sum(self.iter().map(|(x, p)| f(x) * p))
    }

    /// Law of `X + Y` for independent `X ~ self`, `Y ~ other`.
    pub fn convolve(&self, other: &Pmf) -> Result<Pmf> {
        let offset = self.offset + other.offset;
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Pmf::from_exact(offset, crate::poly::convolve(a, b)),
            _ => Pmf::from_probs(offset, crate::poly::convolve(&self.probs, &other.probs)),
        }
    }

    fn index(&self, value: i64) -> Option<usize> {
        let i = value.checked_sub(self.offset)?;
        (i >= 0 && (i as usize) < self.probs.len()).then_some(i as usize)
    }
}

/// Serializable view used by the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct PmfView {
    pub support: Vec<i64>,
    pub probabilities: Vec<f64>,
    pub exact: Option<Vec<String>>,
    pub dropped_mass: f64,
}

impl From<&Pmf> for PmfView {
    fn from(p: &Pmf) -> Self {
        Self {
            support: p.iter().map(|(x, _)| x).collect(),
            probabilities: p.iter().map(|(_, v)| v).collect(),
            exact: p
                .exact_iter()
                .map(|it| it.map(|(_, r)| r.to_string()).collect()),
            dropped_mass: p.dropped_mass,
        }
    }
}

fn trim<T>(offset: i64, mut probs: Vec<T>, is_zero: impl Fn(&T) -> bool) -> (i64, Vec<T>) {
    while probs.len() > 1 && probs.last().is_some_and(&is_zero) {
        probs.pop();
    }
    let lead = probs
        .iter()
        .take(probs.len().saturating_sub(1))
        .take_while(|p| is_zero(p))
        .count();
    probs.drain(..lead);
    (offset + lead as i64, probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn trims_and_reports_support() {
        let p = Pmf::from_exact(0, vec![q(0, 1), q(1, 2), q(1, 2), q(0, 1)]).unwrap();
        assert_eq!(p.min_value(), 1);
        assert_eq!(p.max_value(), 2);
        assert_eq!(p.exact_mean().unwrap(), q(3, 2));
        assert_eq!(p.exact_variance().unwrap(), q(1, 4));
        assert_eq!(p.cdf(1), 0.5);
        assert_eq!(p.cdf(0), 0.0);
        assert_eq!(p.cdf(9), 1.0);
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(matches!(
            Pmf::from_exact(0, vec![q(1, 2), q(1, 3)]),
            Err(Error::Unnormalized(_))
        ));
        assert!(Pmf::from_probs(0, vec![0.5, 0.5 + 1e-9]).is_err());
        assert!(Pmf::from_probs(0, vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn convolution_of_coins() {
        let coin = Pmf::from_exact(-1, vec![q(1, 2), q(0, 1), q(1, 2)]).unwrap();
        let two = coin.convolve(&coin).unwrap();
        assert_eq!(two.exact_prob(0).unwrap(), q(1, 2));
        assert_eq!(two.exact_prob(-2).unwrap(), q(1, 4));
        assert_eq!(two.exact_prob(1).unwrap(), q(0, 1));
    }
}
