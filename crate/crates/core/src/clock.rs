//! The reverting clock `T_n`.
//!
//! `T_1 = 0` and `T_{n+1} = 1 + T_{U(n)}`. Under uniform reversion,
//! `T_{n+1}` has the law of `Z_1 + ... + Z_n` with independent
//! `Z_k ~ Bernoulli(1/k)`, so its generating function is the rising
//! factorial `s(s+1)...(s+n-1)/n!`. The same product form holds for
//! weighted reversions with `p_k = alpha_k / (alpha_1 + ... + alpha_k)`.

use std::f64::consts::PI;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::law::{ReversionLaw, ReversionSampler};
use crate::pmf::Pmf;
use crate::poly::{self, CompensatedSum, Scalar};
use crate::rng::RandomStream;
use crate::verify::{ks_statistic, KsConvention};
use crate::EXACT_MAX_N;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Standard deviations kept above the mean when truncating floating pmfs.
pub const TRUNCATION_SDS: f64 = 12.0;

/// Largest mass the support cap may discard before renormalization.
pub const MAX_CAP_DROP: f64 = 1e-12;

/// Largest `n` for [`stirling_first`].
pub const STIRLING_MAX_N: usize = 64;

/// A realized clock path.
///
/// `values[k - 1] = T_k`; `reversions[k - 1]` is the index used to build
/// `T_{k+1}`; `gates[k - 1]` is the Bernoulli gate `I_k` for occasional
/// laws (empty otherwise).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClockTrajectory {
    pub values: Vec<u64>,
    pub reversions: Vec<usize>,
    pub gates: Vec<bool>,
}

impl ClockTrajectory {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `T_k`, 1-based.
    pub fn value(&self, k: usize) -> u64 {
        self.values[k - 1]
    }

    pub fn last(&self) -> u64 {
        *self.values.last().expect("trajectory has T_1")
    }

    /// Checks `T_1 = 0`, `reversion(k) in 1..=k` and
    /// `T_{k+1} = 1 + T_{reversion(k)}`.
    pub fn check(&self) -> Result<()> {
        if self.values.first() != Some(&0) {
            return Err(Error::Invariant("T_1 must be 0".into()));
        }
        if self.reversions.len() + 1 != self.values.len() {
            return Err(Error::Invariant("one reversion per step expected".into()));
        }
        for (i, &u) in self.reversions.iter().enumerate() {
            let k = i + 1;
            if !(1..=k).contains(&u) {
                return Err(Error::Invariant(format!("reversion({k}) = {u} outside 1..={k}")));
            }
            if self.values[k] != 1 + self.values[u - 1] {
                return Err(Error::Invariant(format!("T_{} != 1 + T_{u}", k + 1)));
            }
        }
        if !self.gates.is_empty() {
            if self.gates.len() != self.reversions.len() {
                return Err(Error::Invariant("one gate per step expected".into()));
            }
            for (i, (&g, &u)) in self.gates.iter().zip(&self.reversions).enumerate() {
                if !g && u != i + 1 {
                    return Err(Error::Invariant(format!("closed gate at step {} but reverted to {u}", i + 1)));
                }
            }
        }
        Ok(())
    }
}

/// Simulates `T_1..T_n` under any reversion law.
pub fn simulate_clock(n: usize, law: &ReversionLaw, rng: &mut RandomStream) -> Result<ClockTrajectory> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let mut sampler = ReversionSampler::new(law.clone())?;
    let occasional = matches!(law, ReversionLaw::Occasional { .. });
    let mut values = Vec::with_capacity(n);
    let mut reversions = Vec::with_capacity(n - 1);
    let mut gates = Vec::with_capacity(if occasional { n - 1 } else { 0 });
    values.push(0u64);
    for k in 1..n {
        let (u, gate) = sampler.sample(k, rng)?;
        values.push(1 + values[u - 1]);
        reversions.push(u);
        if occasional {
            gates.push(gate);
        }
    }
    Ok(ClockTrajectory {
        values,
        reversions,
        gates,
    })
}

/// Uniform clock by its defining recursion.
pub fn simulate_clock_recursive(n: usize, rng: &mut RandomStream) -> Result<ClockTrajectory> {
    simulate_clock(n, &ReversionLaw::Uniform, rng)
}

/// `T_n` as a sum of independent `Bernoulli(1/k)`, `k = 1..n-1`.
pub fn simulate_clock_bernoulli(n: usize, rng: &mut RandomStream) -> Result<u64> {
    if n < 2 {
        return Err(Error::pre("the Bernoulli route needs n >= 2"));
    }
    Ok((1..n).filter(|&k| rng.bernoulli(1.0 / k as f64)).count() as u64)
}

/// `T_n` from arbitrary success probabilities `p_1..p_{n-1}`.
pub fn simulate_bernoulli_sum(probs: &[f64], rng: &mut RandomStream) -> u64 {
    probs.iter().filter(|&&p| rng.bernoulli(p)).count() as u64
}

/// Backward reversion times for `T_{n+1}`: the success indices of
/// `Z_1..Z_n`, largest first. Ends with 1 because `Z_1 = 1`; the length
/// is `T_{n+1}`.
pub fn backward_reversion_times(n: usize, rng: &mut RandomStream) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let z: Vec<bool> = (1..=n).map(|k| rng.bernoulli(1.0 / k as f64)).collect();
    backward_times_from_draws(&z)
}

/// `W_j = max{m : Z_m + ... + Z_n = j}` for given draws `z[k - 1] = Z_k`.
pub fn backward_times_from_draws(z: &[bool]) -> Result<Vec<usize>> {
    if z.first() != Some(&true) {
        return Err(Error::pre("Z_1 must be a success"));
    }
    Ok((1..=z.len()).rev().filter(|&k| z[k - 1]).collect())
}

/// Exact mean and variance of `T_n` with their asymptotic forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClockMoments {
    pub n: usize,
    /// `sum_{k<n} 1/k`.
    pub mean: f64,
    /// `sum_{k<n} (1/k - 1/k^2)`.
    pub variance: f64,
    /// `ln n + gamma`.
    pub asymptotic_mean: f64,
    /// `ln n + gamma - pi^2/6`.
    pub asymptotic_variance: f64,
}

pub fn clock_moments(n: usize) -> Result<ClockMoments> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let mut mean = CompensatedSum::default();
    let mut var = CompensatedSum::default();
    // summing small terms first keeps the partial sums accurate
    for k in (1..n).rev() {
        let r = 1.0 / k as f64;
        mean.add(r);
        var.add(r - r * r);
    }
    let ln = (n as f64).ln();
    Ok(ClockMoments {
        n,
        mean: mean.value(),
        variance: var.value(),
        asymptotic_mean: ln + EULER_GAMMA,
        asymptotic_variance: ln + EULER_GAMMA - PI * PI / 6.0,
    })
}

/// Exact `(m_n, v_n)` as rationals.
pub fn clock_moments_exact(n: usize) -> Result<(BigRational, BigRational)> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let mut m = BigRational::zero();
    let mut v = BigRational::zero();
    for k in 1..n {
        let r = BigRational::from_frac(1, k as i64);
        v += &r - &r * &r;
        m += r;
    }
    Ok((m, v))
}

/// Law of `T_n`.
///
/// `tail_tolerance = 0` requests exact rationals (`n <= EXACT_MAX_N`).
/// Otherwise the product is formed in floating point with the support
/// capped at `m_n + 12 sd`, then tail atoms below `tail_tolerance` are
/// removed; the removed mass is recorded and the pmf renormalized.
pub fn clock_pmf(n: usize, tail_tolerance: f64) -> Result<Pmf> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    if tail_tolerance == 0.0 {
        return clock_pmf_exact(n);
    }
    if !(tail_tolerance > 0.0) {
        return Err(Error::pre("tail tolerance must be >= 0"));
    }
    let p: Vec<f64> = (1..n).map(|k| 1.0 / k as f64).collect();
    bernoulli_sum_truncated(&p, tail_tolerance)
}

pub fn clock_pmf_exact(n: usize) -> Result<Pmf> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    if n > EXACT_MAX_N {
        return Err(Error::Size {
            what: "n (exact mode)",
            value: n,
            max: EXACT_MAX_N,
        });
    }
    let p: Vec<BigRational> = (1..n).map(|k| BigRational::from_frac(1, k as i64)).collect();
    bernoulli_sum_pmf(&p)
}

/// Exact law of a sum of independent Bernoulli variables: the product of
/// the linear factors `q_k + p_k s`.
pub fn bernoulli_sum_pmf<T: Scalar>(probs: &[T]) -> Result<Pmf> {
    let coeffs = bernoulli_sum_coefficients(probs);
    Pmf::from_coefficients(0, coeffs)
}

pub fn bernoulli_sum_coefficients<T: Scalar>(probs: &[T]) -> Vec<T> {
    probs.iter().fold(vec![T::one()], |acc, p| {
        let q = T::one() - p.clone();
        poly::mul_linear(&acc, &q, p)
    })
}

/// Floating law of a Bernoulli sum with the support cap and tail trimming
/// described in [`clock_pmf`].
pub fn bernoulli_sum_truncated(probs: &[f64], tail_tolerance: f64) -> Result<Pmf> {
    let mean = poly::compensated_sum(probs.iter().copied());
    let var = poly::compensated_sum(probs.iter().map(|p| p * (1.0 - p)));
    let mut cap = ((mean + TRUNCATION_SDS * var.sqrt()).ceil() as usize + 1).min(probs.len());
    loop {
        let (coeffs, dropped) = capped_product(probs, cap);
        if dropped < MAX_CAP_DROP || cap >= probs.len() {
            return trim_tails(coeffs, dropped, tail_tolerance);
        }
        cap = (cap * 2).min(probs.len());
    }
}

fn capped_product(probs: &[f64], cap: usize) -> (Vec<f64>, f64) {
    let mut coeffs = vec![0.0; cap + 1];
    coeffs[0] = 1.0;
    let mut top = 0usize;
    let mut dropped = CompensatedSum::default();
    for &p in probs {
        let q = 1.0 - p;
        if top == cap {
            dropped.add(coeffs[cap] * p);
        } else {
            top += 1;
        }
        for j in (1..=top).rev() {
            coeffs[j] = coeffs[j] * q + coeffs[j - 1] * p;
        }
        coeffs[0] *= q;
    }
    (coeffs, dropped.value())
}

pub(crate) fn trim_tails(mut coeffs: Vec<f64>, cap_dropped: f64, tol: f64) -> Result<Pmf> {
    let mut dropped = CompensatedSum::default();
    dropped.add(cap_dropped);
    let peak = coeffs
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, &c)| if c > best.1 { (i, c) } else { best })
        .0;
    while coeffs.len() > peak + 1 && coeffs.last().is_some_and(|&c| c < tol) {
        dropped.add(coeffs.pop().unwrap_or(0.0));
    }
    let mut lead = 0;
    while lead < peak && coeffs[lead] < tol {
        dropped.add(coeffs[lead]);
        lead += 1;
    }
    coeffs.drain(..lead);
    Pmf::from_truncated(lead as i64, coeffs, dropped.value())
}

/// Unsigned Stirling number of the first kind `[n, k]`: the number of
/// permutations of `n` elements with `k` cycles.
pub fn stirling_first(n: usize, k: usize) -> Result<BigUint> {
    if k > n {
        return Err(Error::Size {
            what: "k",
            value: k,
            max: n,
        });
    }
    Ok(stirling_row(n)?.swap_remove(k))
}

/// `[n, 0], ..., [n, n]` by `[n, k] = [n-1, k-1] + (n-1)[n-1, k]`.
pub fn stirling_row(n: usize) -> Result<Vec<BigUint>> {
    if n > STIRLING_MAX_N {
        return Err(Error::Size {
            what: "n",
            value: n,
            max: STIRLING_MAX_N,
        });
    }
    let mut row = vec![BigUint::one()];
    for m in 1..=n {
        let mut next = vec![BigUint::zero(); m + 1];
        for k in 0..m {
            next[k + 1] += &row[k];
            next[k] += &row[k] * BigUint::from(m - 1);
        }
        row = next;
    }
    Ok(row)
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// `sum_k E|Z_k - p_k|^3 = sum_k p_k q_k (p_k^2 + q_k^2)`.
pub fn lyapunov_rho(probs: &[f64]) -> f64 {
    poly::compensated_sum(probs.iter().map(|&p| {
        let q = 1.0 - p;
        p * q * (p * p + q * q)
    }))
}

/// Normal-approximation diagnostics for the standardized `T_n`.
#[derive(Debug, Clone, Serialize)]
pub struct CltDiagnostic {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// KS distance with each atom counted at half weight (the asserted value).
    pub ks: f64,
    /// KS distance comparing the CDF at the right endpoint of each atom.
    pub ks_right_endpoint: f64,
    /// KS distance for the log-scaled statistic `(T_n - ln n)/sqrt(ln n)`.
    pub ks_log_scaled: f64,
    pub convention: &'static str,
    pub rho: f64,
    pub lyapunov_ratio: f64,
    pub dropped_mass: f64,
}

pub fn clock_clt_diagnostic(n: usize, tail_tolerance: f64) -> Result<CltDiagnostic> {
    if n < 3 {
        return Err(Error::pre("the CLT diagnostic needs n >= 3 (v_n = 0 otherwise)"));
    }
    let pmf = if n <= EXACT_MAX_N && tail_tolerance == 0.0 {
        clock_pmf_exact(n)?
    } else {
        clock_pmf(n, if tail_tolerance > 0.0 { tail_tolerance } else { 1e-300 })?
    };
    let m = clock_moments(n)?;
    let probs: Vec<f64> = (1..n).map(|k| 1.0 / k as f64).collect();
    let rho = lyapunov_rho(&probs);
    let sd = m.variance.sqrt();
    let ln = (n as f64).ln();
    Ok(CltDiagnostic {
        n,
        mean: m.mean,
        variance: m.variance,
        ks: ks_statistic(&pmf, m.mean, sd, KsConvention::Midpoint)?,
        ks_right_endpoint: ks_statistic(&pmf, m.mean, sd, KsConvention::RightEndpoint)?,
        ks_log_scaled: ks_statistic(&pmf, ln, ln.sqrt(), KsConvention::Midpoint)?,
        convention: KsConvention::Midpoint.name(),
        rho,
        lyapunov_ratio: rho / m.variance.powf(1.5),
        dropped_mass: pmf.dropped_mass(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn small_clock_pmfs() {
        assert_eq!(clock_pmf(1, 0.0).unwrap(), Pmf::point(0));
        assert_eq!(clock_pmf(2, 0.0).unwrap(), Pmf::point(1));
        let p3 = clock_pmf(3, 0.0).unwrap();
        assert_eq!(p3.exact_prob(1).unwrap(), q(1, 2));
        assert_eq!(p3.exact_prob(2).unwrap(), q(1, 2));
        let p4 = clock_pmf(4, 0.0).unwrap();
        assert_eq!(
            p4.exact_probs().unwrap(),
            &[q(1, 3), q(1, 2), q(1, 6)],
        );
        assert_eq!(p4.min_value(), 1);
    }

    #[test]
    fn exact_size_limit() {
        assert!(clock_pmf(EXACT_MAX_N, 0.0).is_ok());
        assert!(matches!(clock_pmf(EXACT_MAX_N + 1, 0.0), Err(Error::Size { .. })));
    }

    #[test]
    fn moments_examples() {
        let m2 = clock_moments(2).unwrap();
        assert_eq!((m2.mean, m2.variance), (1.0, 0.0));
        assert_eq!(clock_moments_exact(4).unwrap(), (q(11, 6), q(17, 36)));
        assert_eq!(clock_moments_exact(3).unwrap(), (q(3, 2), q(1, 4)));
        let m4 = clock_moments(4).unwrap();
        assert!((m4.mean - 11.0 / 6.0).abs() < 1e-15);
        assert!((m4.variance - 17.0 / 36.0).abs() < 1e-15);
    }

    #[test]
    fn asymptotic_forms_track_partial_sums() {
        let m = clock_moments(1_000_000).unwrap();
        // both remainders are of order 1/(2n)
        assert!((m.mean - m.asymptotic_mean + 0.5e-6).abs() < 1e-9);
        assert!((m.variance - m.asymptotic_variance - 0.5e-6).abs() < 1e-9);
    }

    #[test]
    fn stirling_examples() {
        assert_eq!(stirling_first(3, 2).unwrap(), BigUint::from(3u32));
        assert_eq!(stirling_first(4, 1).unwrap(), BigUint::from(6u32));
        for n in 0..10 {
            assert_eq!(stirling_first(n, n).unwrap(), BigUint::one());
        }
        assert_eq!(stirling_first(0, 0).unwrap(), BigUint::one());
        assert_eq!(stirling_first(5, 0).unwrap(), BigUint::zero());
        assert!(matches!(stirling_first(65, 3), Err(Error::Size { .. })));
        assert!(matches!(stirling_first(3, 4), Err(Error::Size { .. })));
        assert!(stirling_first(64, 10).is_ok());
    }

    #[test]
    fn stirling_rows_sum_to_factorial() {
        for n in 0..=20 {
            let s: BigUint = stirling_row(n).unwrap().iter().sum();
            assert_eq!(s, factorial(n));
        }
    }

    #[test]
    fn truncated_matches_exact_for_small_n() {
        for n in 2..=EXACT_MAX_N {
            let e = clock_pmf(n, 0.0).unwrap();
            let f = clock_pmf(n, 1e-300).unwrap();
            for (x, p) in e.iter() {
                assert!((f.prob(x) - p).abs() < 1e-15, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn large_n_truncation_is_tight() {
        let p = clock_pmf(100_000, 1e-300).unwrap();
        assert!(p.dropped_mass() < MAX_CAP_DROP);
        let m = clock_moments(100_000).unwrap();
        assert!((p.mean() - m.mean).abs() < 1e-9);
        assert!((p.variance() - m.variance).abs() < 1e-8);
    }

    #[test]
    fn tail_tolerance_reports_dropped_mass() {
        let p = clock_pmf(1000, 1e-6).unwrap();
        assert!(p.dropped_mass() > 0.0);
        assert!(p.dropped_mass() < 1e-4);
        assert!((p.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trajectories_satisfy_recursion() {
        let mut rng = RandomStream::new(1, 0);
        for n in [1, 2, 3, 10, 500] {
            let t = simulate_clock_recursive(n, &mut rng).unwrap();
            assert_eq!(t.len(), n);
            t.check().unwrap();
        }
        let t = simulate_clock_recursive(2, &mut rng).unwrap();
        assert_eq!(t.values, vec![0, 1]);
    }

    #[test]
    fn bernoulli_route_small_cases() {
        let mut rng = RandomStream::new(2, 0);
        assert!(simulate_clock_bernoulli(1, &mut rng).is_err());
        for _ in 0..100 {
            assert_eq!(simulate_clock_bernoulli(2, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn backward_times() {
        assert_eq!(backward_times_from_draws(&[true]).unwrap(), vec![1]);
        assert_eq!(backward_times_from_draws(&[true, true]).unwrap(), vec![2, 1]);
        assert_eq!(backward_times_from_draws(&[true, false, true]).unwrap(), vec![3, 1]);
        let mut rng = RandomStream::new(4, 0);
        for _ in 0..200 {
            let w = backward_reversion_times(20, &mut rng).unwrap();
            assert_eq!(*w.last().unwrap(), 1);
            assert!(w.windows(2).all(|p| p[0] > p[1]));
        }
    }

    #[test]
    fn clt_rejects_degenerate() {
        assert!(clock_clt_diagnostic(2, 0.0).is_err());
        assert!(clock_clt_diagnostic(3, 0.0).is_ok());
    }

    #[test]
    fn lyapunov_of_degenerate_terms() {
        assert_eq!(lyapunov_rho(&[0.0, 1.0]), 0.0);
        assert!((lyapunov_rho(&[0.5]) - 0.125).abs() < 1e-16);
    }
}
