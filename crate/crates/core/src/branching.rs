//! The reverting Galton-Watson process
//! `X_{n+1} = Z_{1,n} + ... + Z_{X_{U(n)},n}`, `X_1 = 1`.
//!
//! Its p.g.f. is the ordinary Galton-Watson p.g.f. run on the clock:
//! `H_n(s) = sum_t P(T_n = t) W^{(t)}(s)`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::clock::{clock_pmf, clock_pmf_exact};
use crate::error::{Error, Result};
use crate::montecarlo::MonteCarlo;
use crate::pmf::MASS_TOLERANCE;
use crate::poly::{self, f64_to_ratio, CompensatedSum};
use crate::rng::RandomStream;
use crate::EXACT_MAX_N;

/// Default ceiling on the simulated population.
pub const DEFAULT_POPULATION_CAP: u64 = 10_000_000;

/// Degree beyond which composed polynomials are truncated.
pub const DEFAULT_DEGREE_CAP: usize = 64;

/// Largest `n` accepted by [`verify_h_recursion`].
pub const RECURSION_MAX_N: usize = 10;

/// Offspring law on `{0, 1, ..., d}`; `probs[j] = P(Z = j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffspringLaw {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl OffspringLaw {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::config("offspring law needs at least one probability"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::config("offspring probabilities must be finite and non-negative"));
        }
        let total = poly::compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::config(format!("offspring probabilities sum to {total}, not 1")));
        }
        let mut probs = probs;
        while probs.len() > 1 && probs.last() == Some(&0.0) {
            probs.pop();
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { probs, cumulative })
    }

    /// Every individual has exactly `k` children.
    pub fn fixed(k: usize) -> Self {
        let mut probs = vec![0.0; k + 1];
        probs[k] = 1.0;
        Self::new(probs).expect("point mass is a valid law")
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(j, p)| j as f64 * p).sum()
    }

    /// `W(s)`.
    pub fn pgf(&self, s: f64) -> f64 {
        poly::eval_f64(&self.probs, s)
    }

    pub fn pgf_exact(&self, s: &BigRational) -> Result<BigRational> {
        let coeffs = self.exact_coefficients()?;
        Ok(poly::eval(&coeffs, s))
    }

    fn exact_coefficients(&self) -> Result<Vec<BigRational>> {
        self.probs
            .iter()
            .map(|&p| f64_to_ratio(p).ok_or_else(|| Error::config("offspring probability is not finite")))
            .collect()
    }

    pub fn sample(&self, rng: &mut RandomStream) -> u64 {
        let u = rng.uniform() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative.partition_point(|&c| c <= u).min(self.probs.len() - 1) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GwTrajectory {
    /// `X_1..X_k`; shorter than requested when the cap was hit.
    pub populations: Vec<u64>,
    /// Set when some generation exceeded the population cap.
    pub capped: bool,
}

impl GwTrajectory {
    pub fn extinct_at(&self, n: usize) -> Option<bool> {
        self.populations.get(n - 1).map(|&x| x == 0)
    }
}

pub fn simulate_reverting_gw(
    n: usize,
    offspring: &OffspringLaw,
    rng: &mut RandomStream,
    population_cap: u64,
) -> Result<GwTrajectory> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    if population_cap == 0 {
        return Err(Error::pre("population cap must be positive"));
    }
    let mut populations = Vec::with_capacity(n);
    populations.push(1u64);
    for k in 1..n {
        let parent = populations[rng.index(k) - 1];
        let mut x = 0u64;
        for _ in 0..parent {
            x += offspring.sample(rng);
            if x > population_cap {
                return Ok(GwTrajectory {
                    populations,
                    capped: true,
                });
            }
        }
        populations.push(x);
    }
    Ok(GwTrajectory {
        populations,
        capped: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GwIterate {
    pub t: usize,
    pub s: f64,
    /// `W^{(t)}(s)`.
    pub value: f64,
    /// Coefficients of `W^{(t)}` up to the degree cap.
    pub polynomial: Option<Vec<f64>>,
    /// Mass beyond the degree cap.
    pub truncated_mass: f64,
}

/// `t`-fold composition of the offspring p.g.f. `W^{(0)}(s) = s`.
pub fn gw_iterate(offspring: &OffspringLaw, t: usize, s: f64, degree_cap: Option<usize>) -> Result<GwIterate> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::pre("s must lie in [0, 1]"));
    }
    let value = (0..t).fold(s, |x, _| offspring.pgf(x));
    let (polynomial, truncated_mass) = match degree_cap {
        None => (None, 0.0),
        Some(cap) => {
            let mut current = vec![0.0, 1.0];
            for _ in 0..t {
                current = compose_truncated(offspring.probs(), &current, cap);
            }
            current.truncate(cap + 1);
            let kept = poly::compensated_sum(current.iter().copied());
            (Some(current), (1.0 - kept).max(0.0))
        }
    };
    Ok(GwIterate {
        t,
        s,
        value,
        polynomial,
        truncated_mass,
    })
}

/// `outer(inner(s))` keeping degrees up to `cap`.
fn compose_truncated(outer: &[f64], inner: &[f64], cap: usize) -> Vec<f64> {
    let mut result = vec![0.0];
    for &c in outer.iter().rev() {
        result = poly::convolve(&result, inner);
        result.truncate(cap + 1);
        result[0] += c;
    }
    while result.len() > 1 && result.last() == Some(&0.0) {
        result.pop();
    }
    result
}

fn clock_law_f64(n: usize) -> Result<Vec<(i64, f64)>> {
    let pmf = if n <= EXACT_MAX_N { clock_pmf_exact(n)? } else { clock_pmf(n, 1e-18)? };
    Ok(pmf.iter().collect())
}

/// `H_n(s)`.
pub fn reverting_gw_pgf(n: usize, offspring: &OffspringLaw, s: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::pre("s must lie in [0, 1]"));
    }
    let law = clock_law_f64(n)?;
    let mut total = CompensatedSum::default();
    let mut w = s;
    let mut t = 0i64;
    for (value, prob) in law {
        while t < value {
            w = offspring.pgf(w);
            t += 1;
        }
        total.add(prob * w);
    }
    Ok(total.value())
}

/// `H_n(s)` in exact arithmetic (`n <= EXACT_MAX_N`).
pub fn reverting_gw_pgf_exact(n: usize, offspring: &OffspringLaw, s: &BigRational) -> Result<BigRational> {
    let law = clock_pmf_exact(n)?;
    let coeffs = offspring.exact_coefficients()?;
    let mut total = BigRational::zero();
    let mut w = s.clone();
    let mut t = 0i64;
    for (value, prob) in law.exact_iter().expect("exact pmf") {
        while t < value {
            w = poly::eval(&coeffs, &w);
            t += 1;
        }
        total += prob * &w;
    }
    Ok(total)
}

/// Largest `|H_{n+1}(s) - (1/n) sum_{k<=n} H_k(W(s))|` over the grid.
pub fn verify_h_recursion(n: usize, offspring: &OffspringLaw, s_grid: &[f64]) -> Result<f64> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    if n > RECURSION_MAX_N {
        return Err(Error::Size {
            what: "n (recursion check)",
            value: n,
            max: RECURSION_MAX_N,
        });
    }
    let mut worst = 0.0f64;
    for &s in s_grid {
        let lhs = reverting_gw_pgf(n + 1, offspring, s)?;
        let ws = offspring.pgf(s);
        let mut rhs = CompensatedSum::default();
        for k in 1..=n {
            rhs.add(reverting_gw_pgf(k, offspring, ws)?);
        }
        worst = worst.max((lhs - rhs.value() / n as f64).abs());
    }
    Ok(worst)
}

/// `P(X_n = 0) = H_n(0)`.
pub fn extinction_probability(n: usize, offspring: &OffspringLaw) -> Result<f64> {
    reverting_gw_pgf(n, offspring, 0.0)
}

pub fn extinction_probability_exact(n: usize, offspring: &OffspringLaw) -> Result<BigRational> {
    reverting_gw_pgf_exact(n, offspring, &BigRational::zero())
}

/// `E X_n = E mu^{T_n} = prod_{k<n} (1 - 1/k + mu/k)`.
pub fn reverting_gw_mean(n: usize, offspring: &OffspringLaw) -> Result<f64> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let mu = offspring.mean();
    Ok((1..n).map(|k| 1.0 + (mu - 1.0) / k as f64).product())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtinctionEstimate {
    pub n: usize,
    pub samples: usize,
    pub frequency: f64,
    pub std_error: f64,
    pub exact: f64,
    /// Paths stopped by the population cap (counted as surviving).
    pub capped: usize,
}

/// Empirical `P(X_n = 0)` next to `H_n(0)`.
pub fn extinction_experiment(
    n: usize,
    offspring: &OffspringLaw,
    samples: usize,
    mc: &MonteCarlo,
    population_cap: u64,
) -> Result<ExtinctionEstimate> {
    let outcomes: Vec<Result<(bool, bool)>> = mc.run(samples, |rng| {
        let tr = simulate_reverting_gw(n, offspring, rng, population_cap)?;
        Ok((tr.extinct_at(n).unwrap_or(false), tr.capped))
    });
    let mut extinct = 0usize;
    let mut capped = 0usize;
    for o in outcomes {
        let (e, c) = o?;
        extinct += e as usize;
        capped += c as usize;
    }
    let f = extinct as f64 / samples as f64;
    Ok(ExtinctionEstimate {
        n,
        samples,
        frequency: f,
        std_error: (f * (1.0 - f) / samples as f64).sqrt(),
        exact: extinction_probability(n, offspring)?,
        capped,
    })
}

/// `H_n(1)`, which is exactly one.
pub fn pgf_total_mass_exact(n: usize, offspring: &OffspringLaw) -> Result<bool> {
    Ok(reverting_gw_pgf_exact(n, offspring, &BigRational::one())?.is_one())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_square() -> OffspringLaw {
        OffspringLaw::new(vec![0.5, 0.0, 0.5]).unwrap()
    }

    #[test]
    fn pgf_examples() {
        let w = half_square();
        assert_eq!(reverting_gw_pgf(1, &w, 0.3).unwrap(), 0.3);
        assert_eq!(reverting_gw_pgf(2, &w, 0.3).unwrap(), w.pgf(0.3));
        let r = extinction_probability_exact(3, &w).unwrap();
        assert_eq!(r, BigRational::new(9.into(), 16.into()));
        let sub = OffspringLaw::new(vec![0.75, 0.25]).unwrap();
        assert!((extinction_probability(4, &sub).unwrap() - 0.8828125).abs() < 1e-15);
        assert_eq!(extinction_probability(5, &OffspringLaw::fixed(0)).unwrap(), 1.0);
        assert_eq!(extinction_probability(5, &OffspringLaw::fixed(2)).unwrap(), 0.0);
        assert!(pgf_total_mass_exact(9, &w).unwrap());
    }

    #[test]
    fn iterate_examples() {
        let w = half_square();
        assert_eq!(gw_iterate(&w, 0, 0.4, None).unwrap().value, 0.4);
        assert_eq!(gw_iterate(&w, 2, 0.0, None).unwrap().value, 0.625);
        assert_eq!(gw_iterate(&w, 1, 1.0, None).unwrap().value, 1.0);
        let it = gw_iterate(&w, 3, 0.0, Some(64)).unwrap();
        let poly = it.polynomial.unwrap();
        assert_eq!(poly.len(), 9);
        assert!((poly[0] - it.value).abs() < 1e-15 && it.truncated_mass < 1e-15);
        let big = gw_iterate(&w, 8, 0.0, Some(64)).unwrap();
        assert!(big.truncated_mass > 0.0);
    }

    #[test]
    fn recursion_holds() {
        let w = half_square();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        assert_eq!(verify_h_recursion(1, &w, &grid).unwrap(), 0.0);
        for n in 1..=8 {
            assert!(verify_h_recursion(n, &w, &grid).unwrap() < 1e-10);
        }
        assert!(matches!(verify_h_recursion(11, &w, &grid), Err(Error::Size { .. })));
    }

    #[test]
    fn simulation_edges() {
        let mut rng = RandomStream::new(2, 0);
        let one = simulate_reverting_gw(20, &OffspringLaw::fixed(1), &mut rng, 100).unwrap();
        assert!(one.populations.iter().all(|&x| x == 1));
        let zero = simulate_reverting_gw(20, &OffspringLaw::fixed(0), &mut rng, 100).unwrap();
        assert!(zero.populations[1..].iter().all(|&x| x == 0));
        let boom = simulate_reverting_gw(200, &OffspringLaw::fixed(3), &mut rng, 1000).unwrap();
        assert!(boom.capped);
    }

    #[test]
    fn mean_formula() {
        let w = half_square();
        assert_eq!(reverting_gw_mean(5, &w).unwrap(), 1.0);
        let two = OffspringLaw::fixed(2);
        // E 2^{T_3} = (2 + 4)/2
        assert!((reverting_gw_mean(3, &two).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn extinction_is_non_decreasing_in_n() {
        for law in [half_square(), OffspringLaw::new(vec![0.75, 0.25]).unwrap()] {
            let e: Vec<f64> = (1..=40).map(|n| extinction_probability(n, &law).unwrap()).collect();
            assert!(e.windows(2).all(|w| w[1] >= w[0] - 1e-15), "{e:?}");
        }
    }
}
