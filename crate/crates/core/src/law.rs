//! Reversion laws and step laws.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand_distr::{Distribution, Exp, Normal, Uniform};

use crate::error::{Error, Result};
use crate::pmf::{Pmf, MASS_TOLERANCE};
use crate::poly::{f64_to_ratio, CompensatedSum, Scalar};
use crate::rng::RandomStream;

/// How the reversion index `U(n)` (or `V(n)`) is drawn from `{1, ..., n}`.
#[derive(Debug, Clone, PartialEq)]
pub enum ReversionLaw {
    /// `P(U(n) = k) = 1/n`.
    Uniform,
    /// Weights `alpha_k = k^beta`.
    PowerLaw { beta: f64 },
    /// Explicit positive weights `alpha_1, alpha_2, ...`.
    Explicit(Vec<f64>),
    /// Revert uniformly with probability `q`, otherwise continue from `n`.
    Occasional { q: f64 },
}

impl ReversionLaw {
    pub fn power(beta: f64) -> Self {
        Self::PowerLaw { beta }
    }

    pub fn explicit(weights: Vec<f64>) -> Result<Self> {
        let law = Self::Explicit(weights);
        law.validate()?;
        Ok(law)
    }

    pub fn occasional(q: f64) -> Result<Self> {
        let law = Self::Occasional { q };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Uniform => Ok(()),
            Self::PowerLaw { beta } if beta.is_finite() => Ok(()),
            Self::PowerLaw { beta } => Err(Error::config(format!("power-law exponent {beta} is not finite"))),
            Self::Explicit(w) => {
                if let Some((k, a)) = w.iter().enumerate().find(|(_, a)| !(a.is_finite() && **a > 0.0)) {
                    return Err(Error::config(format!("weight alpha_{} = {a} must be strictly positive", k + 1)));
                }
                Ok(())
            }
            Self::Occasional { q } if *q > 0.0 && *q <= 1.0 => Ok(()),
            Self::Occasional { q } => Err(Error::config(format!("reversion probability q = {q} must lie in (0, 1]"))),
        }
    }

    /// Short human-readable description (used in CLI metadata).
    pub fn describe(&self) -> String {
        match self {
            Self::Uniform => "uniform".into(),
            Self::PowerLaw { beta } => format!("power:{beta}"),
            Self::Explicit(w) => format!("weights[{}]", w.len()),
            Self::Occasional { q } => format!("occasional:{q}"),
        }
    }

    /// Weight `alpha_k` (1-based) for the weighted families.
    fn weight(&self, k: usize) -> Result<f64> {
        match self {
            Self::Uniform => Ok(1.0),
            Self::PowerLaw { beta } => Ok((beta * (k as f64).ln()).exp()),
            Self::Explicit(w) => w.get(k - 1).copied().ok_or_else(|| missing_weights(k, w.len())),
            Self::Occasional { .. } => Err(Error::config("occasional law has no reversion weights")),
        }
    }

    pub(crate) fn exact_weight(&self, k: usize) -> Result<BigRational> {
        match self {
            Self::Uniform => Ok(BigRational::one()),
            Self::PowerLaw { beta } if beta.fract() == 0.0 && beta.abs() <= 64.0 => {
                Ok(BigRational::from_integer((k as i64).into()).pow(*beta as i32))
            }
            Self::PowerLaw { beta } => Err(Error::config(format!(
                "power-law exponent {beta} has no exact rational weights"
            ))),
            Self::Explicit(w) => {
                let a = w.get(k - 1).ok_or_else(|| missing_weights(k, w.len()))?;
                f64_to_ratio(*a).ok_or_else(|| Error::config("non-finite weight"))
            }
            Self::Occasional { .. } => Err(Error::config("occasional law has no reversion weights")),
        }
    }
}

fn missing_weights(k: usize, have: usize) -> Error {
    Error::config(format!("weight alpha_{k} requested but only {have} weights supplied"))
}

/// Success probabilities `p_k = alpha_k / (alpha_1 + ... + alpha_k)` for
/// `k = 1..=n`. `p_1 = 1` always.
pub fn reversion_probabilities(law: &ReversionLaw, n: usize) -> Result<Vec<f64>> {
    check_weighted(law, n)?;
    if matches!(law, ReversionLaw::Uniform) {
        return Ok((1..=n).map(|k| 1.0 / k as f64).collect());
    }
    let mut cumulative = CompensatedSum::default();
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let a = law.weight(k)?;
        cumulative.add(a);
        out.push(if k == 1 { 1.0 } else { a / cumulative.value() });
    }
    Ok(out)
}

/// Exact rational `p_k`. Power laws need an integral exponent.
pub fn reversion_probabilities_exact(law: &ReversionLaw, n: usize) -> Result<Vec<BigRational>> {
    check_weighted(law, n)?;
    let mut cumulative = BigRational::zero();
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let a = law.exact_weight(k)?;
        cumulative += &a;
        out.push(a / &cumulative);
    }
    Ok(out)
}

/// `p_k` in the requested scalar type.
pub fn reversion_probabilities_in<T: Scalar>(law: &ReversionLaw, n: usize) -> Result<Vec<T>> {
    if T::is_exact() {
        Ok(reversion_probabilities_exact(law, n)?
            .into_iter()
            .map(|r| T::from_rational(&r))
            .collect())
    } else {
        Ok(reversion_probabilities(law, n)?
            .into_iter()
            .map(|x| T::from_f64(x))
            .collect())
    }
}

fn check_weighted(law: &ReversionLaw, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    law.validate()?;
    if let ReversionLaw::Explicit(w) = law {
        if w.len() < n {
            return Err(missing_weights(n, w.len()));
        }
    }
    if matches!(law, ReversionLaw::Occasional { .. }) {
        return Err(Error::config("reversion probabilities are defined for weighted laws only"));
    }
    Ok(())
}

/// The law of the reversion index at step `n`: entry `k - 1` is
/// `P(index = k)`.
pub fn reversion_distribution(law: &ReversionLaw, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    law.validate()?;
    match law {
        ReversionLaw::Occasional { q } => {
            let mut d = vec![q / n as f64; n];
            d[n - 1] += 1.0 - q;
            Ok(d)
        }
        _ => {
            let weights = (1..=n).map(|k| law.weight(k)).collect::<Result<Vec<_>>>()?;
            let total = crate::poly::compensated_sum(weights.iter().copied());
            Ok(weights.into_iter().map(|a| a / total).collect())
        }
    }
}

/// Draws the reversion index for step `n` (1-based).
pub fn sample_reversion(law: &ReversionLaw, n: usize, rng: &mut RandomStream) -> Result<usize> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    law.validate()?;
    let mut sampler = ReversionSampler::new(law.clone())?;
    sampler.sample(n, rng).map(|(k, _)| k)
}

/// Reusable reversion sampler. Keeps running cumulative weights so that a
/// trajectory of length `n` costs `O(n log n)` rather than `O(n^2)`.
#[derive(Debug, Clone)]
pub struct ReversionSampler {
    law: ReversionLaw,
    cumulative: Vec<f64>,
    running: CompensatedSum,
}

impl ReversionSampler {
    pub fn new(law: ReversionLaw) -> Result<Self> {
        law.validate()?;
        Ok(Self {
            law,
            cumulative: Vec::new(),
            running: CompensatedSum::default(),
        })
    }

    pub fn law(&self) -> &ReversionLaw {
        &self.law
    }

    /// Returns the index in `{1..n}` and, for occasional laws, the gate
    /// draw `I_n` (always `true` otherwise).
    pub fn sample(&mut self, n: usize, rng: &mut RandomStream) -> Result<(usize, bool)> {
        match &self.law {
            ReversionLaw::Uniform => Ok((rng.index(n), true)),
            ReversionLaw::Occasional { q } => {
                let gate = rng.bernoulli(*q);
                Ok((if gate { rng.index(n) } else { n }, gate))
            }
            _ => {
                while self.cumulative.len() < n {
                    let k = self.cumulative.len() + 1;
                    self.running.add(self.law.weight(k)?);
                    self.cumulative.push(self.running.value());
                }
                let u = rng.uniform() * self.cumulative[n - 1];
                let k = self.cumulative[..n].partition_point(|&c| c <= u);
                Ok((k.min(n - 1) + 1, true))
            }
        }
    }
}

/// User-supplied real-valued sampler.
pub type CustomSampler = Arc<dyn Fn(&mut RandomStream) -> f64 + Send + Sync>;

/// Samplers for real-valued step laws.
#[derive(Clone)]
pub enum GeneralSampler {
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    Exponential { rate: f64 },
    Custom { id: String, sampler: CustomSampler },
}

impl fmt::Debug for GeneralSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Normal { mean, sd } => write!(f, "Normal({mean}, {sd})"),
            Self::Uniform { low, high } => write!(f, "Uniform({low}, {high})"),
            Self::Exponential { rate } => write!(f, "Exponential({rate})"),
            Self::Custom { id, .. } => write!(f, "Custom({id})"),
        }
    }
}

/// Law of the walk increments `X_n`.
#[derive(Debug, Clone)]
pub enum StepLaw {
    /// `+1` with probability `p`, `-1` otherwise.
    Rademacher { p: f64 },
    /// Integer support with matching probabilities.
    FiniteDiscrete { values: Vec<i64>, probs: Vec<f64> },
    /// Real-valued sampler with optionally declared moments.
    General {
        sampler: GeneralSampler,
        mean: Option<f64>,
        variance: Option<f64>,
    },
}

impl StepLaw {
    pub fn rademacher(p: f64) -> Result<Self> {
        let law = Self::Rademacher { p };
        law.validate()?;
        Ok(law)
    }

    pub fn finite(values: Vec<i64>, probs: Vec<f64>) -> Result<Self> {
        let law = Self::FiniteDiscrete { values, probs };
        law.validate()?;
        Ok(law)
    }

    /// The constant step `c`.
    pub fn constant(c: i64) -> Self {
        Self::FiniteDiscrete {
            values: vec![c],
            probs: vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Rademacher { p } if (0.0..=1.0).contains(p) => Ok(()),
            Self::Rademacher { p } => Err(Error::config(format!("Rademacher p = {p} outside [0, 1]"))),
            Self::FiniteDiscrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::config("support and probabilities must be non-empty and of equal length"));
                }
                if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(Error::config("step probabilities must be non-negative"));
                }
                let total = crate::poly::compensated_sum(probs.iter().copied());
                if (total - 1.0).abs() > MASS_TOLERANCE {
                    return Err(Error::config(format!("step probabilities sum to {total}, not 1")));
                }
                let mut sorted = values.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != values.len() {
                    return Err(Error::config("step support has repeated values"));
                }
                Ok(())
            }
            Self::General { variance: Some(v), .. } if *v < 0.0 => {
                Err(Error::config("declared variance must be non-negative"))
            }
            Self::General { sampler, .. } => match sampler {
                GeneralSampler::Normal { sd, .. } if *sd < 0.0 => Err(Error::config("normal sd must be >= 0")),
                GeneralSampler::Uniform { low, high } if !(low < high) => {
                    Err(Error::config("uniform step needs low < high"))
                }
                GeneralSampler::Exponential { rate } if !(*rate > 0.0) => {
                    Err(Error::config("exponential rate must be positive"))
                }
                _ => Ok(()),
            },
        }
    }

    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        match self {
            Self::Rademacher { p } => {
                if rng.bernoulli(*p) {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::FiniteDiscrete { values, probs } => {
                let u = rng.uniform();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v as f64;
                    }
                }
                // u landed in the rounding gap above the last cumulative sum
                *values
                    .iter()
                    .zip(probs)
                    .rev()
                    .find(|(_, p)| **p > 0.0)
                    .map(|(v, _)| v)
                    .unwrap_or(&values[values.len() - 1]) as f64
            }
            Self::General { sampler, .. } => match sampler {
                GeneralSampler::Normal { mean, sd } => Normal::new(*mean, *sd)
                    .map(|d| d.sample(rng))
                    .unwrap_or(*mean),
                GeneralSampler::Uniform { low, high } => Uniform::new(*low, *high)
                    .map(|d| d.sample(rng))
                    .unwrap_or(*low),
                GeneralSampler::Exponential { rate } => Exp::new(*rate).map(|d| d.sample(rng)).unwrap_or(0.0),
                GeneralSampler::Custom { sampler, .. } => sampler(rng),
            },
        }
    }

    /// `(mean, variance)` of one step.
    pub fn moments(&self) -> Result<(f64, f64)> {
        match self {
            Self::Rademacher { p } => {
                let d = 2.0 * p - 1.0;
                Ok((d, 1.0 - d * d))
            }
            Self::FiniteDiscrete { values, probs } => {
                let mean = crate::poly::compensated_sum(values.iter().zip(probs).map(|(v, p)| *v as f64 * p));
                let var = crate::poly::compensated_sum(
                    values.iter().zip(probs).map(|(v, p)| (*v as f64 - mean).powi(2) * p),
                );
                Ok((mean, var))
            }
            Self::General {
                mean: Some(m),
                variance: Some(v),
                ..
            } => Ok((*m, *v)),
            Self::General { sampler, .. } => Err(Error::config(format!(
                "step law {sampler:?} has no declared moments"
            ))),
        }
    }

    /// Exact lattice law of one step, if the support is integral.
    pub fn lattice(&self) -> Option<Pmf> {
        match self {
            Self::Rademacher { p } => {
                let p = f64_to_ratio(*p)?;
                let q = BigRational::one() - &p;
                Pmf::from_exact(-1, vec![q, BigRational::zero(), p]).ok()
            }
            Self::FiniteDiscrete { values, probs } => {
                let lo = *values.iter().min()?;
                let hi = *values.iter().max()?;
                let mut dense = vec![BigRational::zero(); (hi - lo + 1) as usize];
                for (v, p) in values.iter().zip(probs) {
                    dense[(v - lo) as usize] = f64_to_ratio(*p)?;
                }
                Pmf::from_exact(lo, dense)
                    .or_else(|_| {
                        let mut fl = vec![0.0; dense_len(lo, hi)];
                        for (v, p) in values.iter().zip(probs) {
                            fl[(v - lo) as usize] = *p;
                        }
                        Pmf::from_probs(lo, fl)
                    })
                    .ok()
            }
            Self::General { .. } => None,
        }
    }

    pub fn is_lattice(&self) -> bool {
        !matches!(self, Self::General { .. })
    }

    /// Characteristic function `E exp(i theta X)` where known in closed form.
    pub fn char_function(&self, theta: f64) -> Option<Complex64> {
        let i = Complex64::i();
        match self {
            Self::Rademacher { p } => Some(*p * (i * theta).exp() + (1.0 - p) * (-i * theta).exp()),
            Self::FiniteDiscrete { values, probs } => Some(
                values
                    .iter()
                    .zip(probs)
                    .map(|(v, p)| *p * (i * theta * *v as f64).exp())
                    .sum(),
            ),
            Self::General { sampler, .. } => match sampler {
                GeneralSampler::Normal { mean, sd } => {
                    Some((i * theta * mean - 0.5 * sd * sd * theta * theta).exp())
                }
                GeneralSampler::Uniform { low, high } => {
                    if theta == 0.0 {
                        Some(Complex64::new(1.0, 0.0))
                    } else {
                        Some(((i * theta * high).exp() - (i * theta * low).exp()) / (i * theta * (high - low)))
                    }
                }
                GeneralSampler::Exponential { rate } => Some(*rate / (*rate - i * theta)),
                GeneralSampler::Custom { .. } => None,
            },
        }
    }
}

fn dense_len(lo: i64, hi: i64) -> usize {
    (hi - lo + 1) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn uniform_probabilities() {
        let p = reversion_probabilities_exact(&ReversionLaw::Uniform, 4).unwrap();
        assert_eq!(p, vec![q(1, 1), q(1, 2), q(1, 3), q(1, 4)]);
        let f = reversion_probabilities(&ReversionLaw::Uniform, 4).unwrap();
        assert_eq!(f, vec![1.0, 0.5, 1.0 / 3.0, 0.25]);
    }

    #[test]
    fn power_zero_is_uniform() {
        for n in 1..40 {
            assert_eq!(
                reversion_probabilities(&ReversionLaw::power(0.0), n).unwrap(),
                reversion_probabilities(&ReversionLaw::Uniform, n).unwrap()
            );
        }
        assert_eq!(
            reversion_probabilities_exact(&ReversionLaw::power(0.0), 3).unwrap(),
            vec![q(1, 1), q(1, 2), q(1, 3)]
        );
    }

    #[test]
    fn explicit_weights() {
        let law = ReversionLaw::explicit(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            reversion_probabilities_exact(&law, 3).unwrap(),
            vec![q(1, 1), q(2, 3), q(1, 2)]
        );
        assert!(matches!(
            reversion_probabilities(&law, 4),
            Err(Error::Configuration(_))
        ));
        assert!(ReversionLaw::explicit(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn occasional_validation() {
        assert!(ReversionLaw::occasional(0.0).is_err());
        assert!(ReversionLaw::occasional(1.5).is_err());
        assert!(ReversionLaw::occasional(1.0).is_ok());
    }

    #[test]
    fn reversion_distribution_sums_to_one() {
        let laws = [
            ReversionLaw::Uniform,
            ReversionLaw::power(-2.0),
            ReversionLaw::power(1.5),
            ReversionLaw::Explicit(vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]),
            ReversionLaw::Occasional { q: 0.3 },
        ];
        for law in &laws {
            for n in 1..=8 {
                let d = reversion_distribution(law, n).unwrap();
                assert_eq!(d.len(), n);
                assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-14, "{law:?} n={n}");
            }
        }
        let d = reversion_distribution(&ReversionLaw::Occasional { q: 0.5 }, 2).unwrap();
        assert_eq!(d, vec![0.25, 0.75]);
    }

    #[test]
    fn single_point_reversion() {
        let mut rng = RandomStream::new(3, 0);
        for law in [ReversionLaw::Uniform, ReversionLaw::Occasional { q: 0.4 }] {
            for _ in 0..50 {
                assert_eq!(sample_reversion(&law, 1, &mut rng).unwrap(), 1);
            }
        }
    }

    #[test]
    fn occasional_two_frequencies() {
        let mut rng = RandomStream::new(5, 0);
        let mut sampler = ReversionSampler::new(ReversionLaw::Occasional { q: 0.5 }).unwrap();
        let trials = 100_000;
        let twos = (0..trials)
            .filter(|_| sampler.sample(2, &mut rng).unwrap().0 == 2)
            .count();
        let phat = twos as f64 / trials as f64;
        let se = (0.75f64 * 0.25 / trials as f64).sqrt();
        assert!((phat - 0.75).abs() < 4.0 * se, "phat = {phat}");
    }

    #[test]
    fn weighted_sampler_frequencies() {
        let law = ReversionLaw::Explicit(vec![1.0, 2.0, 3.0]);
        let mut sampler = ReversionSampler::new(law.clone()).unwrap();
        let mut rng = RandomStream::new(9, 0);
        let trials = 120_000;
        let mut counts = [0usize; 3];
        for _ in 0..trials {
            counts[sampler.sample(3, &mut rng).unwrap().0 - 1] += 1;
        }
        let expected = reversion_distribution(&law, 3).unwrap();
        for (c, e) in counts.iter().zip(&expected) {
            let phat = *c as f64 / trials as f64;
            assert!((phat - e).abs() < 4.0 * (e * (1.0 - e) / trials as f64).sqrt());
        }
    }

    #[test]
    fn step_moments_examples() {
        assert_eq!(StepLaw::rademacher(0.5).unwrap().moments().unwrap(), (0.0, 1.0));
        assert_eq!(StepLaw::rademacher(1.0).unwrap().moments().unwrap(), (1.0, 0.0));
        let fd = StepLaw::finite(vec![-1, 0, 1], vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(fd.moments().unwrap(), (0.0, 0.5));
        let undeclared = StepLaw::General {
            sampler: GeneralSampler::Normal { mean: 0.0, sd: 1.0 },
            mean: None,
            variance: None,
        };
        assert!(undeclared.moments().is_err());
    }

    #[test]
    fn step_validation() {
        assert!(StepLaw::rademacher(1.2).is_err());
        assert!(StepLaw::finite(vec![0, 1], vec![0.5, 0.6]).is_err());
        assert!(StepLaw::finite(vec![1, 1], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn char_function_at_zero_is_one() {
        let laws = [
            StepLaw::rademacher(0.3).unwrap(),
            StepLaw::finite(vec![-2, 5], vec![0.1, 0.9]).unwrap(),
            StepLaw::General {
                sampler: GeneralSampler::Uniform { low: -1.0, high: 2.0 },
                mean: None,
                variance: None,
            },
        ];
        for law in &laws {
            let c = law.char_function(0.0).unwrap();
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }
}
