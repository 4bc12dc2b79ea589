//! Reverting random walks `R_{n+1} = R_{U(n)} + X_n`, `R_1 = 0`.
//!
//! Coupled with the clock through the shared reversions, `R_n` is the sum
//! of a subsequence of `X_1..X_{n-1}` of length `T_n`; hence `R_n` has the
//! law of an ordinary random walk stopped at the independent time `T_n`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::clock::{self, ClockTrajectory};
use crate::error::{Error, Result};
use crate::law::{ReversionLaw, ReversionSampler, StepLaw};
use crate::pmf::Pmf;
use crate::poly::{f64_to_ratio, Scalar};
use crate::rng::RandomStream;
use crate::verify::{ks_statistic, KsConvention};
use crate::EXACT_MAX_N;

/// A coupled realization of `(R_k, T_k)`, `k = 1..n`.
#[derive(Debug, Clone, Serialize)]
pub struct WalkTrajectory {
    /// `R_1..R_n`.
    pub values: Vec<f64>,
    /// `X_1..X_{n-1}`.
    pub steps: Vec<f64>,
    pub clock: ClockTrajectory,
}

impl WalkTrajectory {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("trajectory has R_1")
    }

    /// The step indices composing each `R_k`: `i(1)` is empty and
    /// `i(k+1) = i(U(k))` followed by `k`.
    pub fn subsequences(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![Vec::new()];
        for (i, &u) in self.clock.reversions.iter().enumerate() {
            let mut next = out[u - 1].clone();
            next.push(i + 1);
            out.push(next);
        }
        out
    }

    /// Replays the subsequence construction and checks it reproduces both
    /// `R_k` and `T_k`.
    pub fn check_coupling(&self) -> Result<()> {
        self.clock.check()?;
        for (k, idx) in self.subsequences().iter().enumerate() {
            if idx.len() as u64 != self.clock.values[k] {
                return Err(Error::Invariant(format!("T_{} != |i({})|", k + 1, k + 1)));
            }
            let r: f64 = idx.iter().map(|&i| self.steps[i - 1]).sum();
            if (r - self.values[k]).abs() > 1e-9 * (1.0 + r.abs()) {
                return Err(Error::Invariant(format!("R_{} is not the sum of its subsequence", k + 1)));
            }
        }
        Ok(())
    }
}

/// Simulates the walk and its clock with shared reversions.
pub fn simulate_walk_recursive(
    n: usize,
    step: &StepLaw,
    law: &ReversionLaw,
    rng: &mut RandomStream,
) -> Result<WalkTrajectory> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    step.validate()?;
    let mut sampler = ReversionSampler::new(law.clone())?;
    let occasional = matches!(law, ReversionLaw::Occasional { .. });
    let mut values = vec![0.0];
    let mut steps = Vec::with_capacity(n - 1);
    let mut clock = ClockTrajectory {
        values: vec![0],
        reversions: Vec::with_capacity(n - 1),
        gates: Vec::new(),
    };
    for k in 1..n {
        let (u, gate) = sampler.sample(k, rng)?;
        let x = step.sample(rng);
        values.push(values[u - 1] + x);
        steps.push(x);
        clock.values.push(1 + clock.values[u - 1]);
        clock.reversions.push(u);
        if occasional {
            clock.gates.push(gate);
        }
    }
    Ok(WalkTrajectory { values, steps, clock })
}

/// `R_n` as an i.i.d. walk run for the independent time `T_n`.
pub fn simulate_walk_subordinated(n: usize, step: &StepLaw, rng: &mut RandomStream) -> Result<f64> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    step.validate()?;
    if n == 1 {
        return Ok(0.0);
    }
    let t = clock::simulate_clock_bernoulli(n, rng)?;
    Ok((0..t).map(|_| step.sample(rng)).sum())
}

/// Simple walk as `n-1` independent steps `+1, 0, -1` with probabilities
/// `p/k, (k-1)/k, q/k` at step `k`.
pub fn simulate_walk_inhomogeneous(n: usize, p: f64, rng: &mut RandomStream) -> Result<i64> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config(format!("p = {p} outside [0, 1]")));
    }
    let mut r = 0i64;
    for k in 1..n {
        let u = rng.uniform() * k as f64;
        if u < p {
            r += 1;
        } else if u < 1.0 {
            r -= 1;
        }
    }
    Ok(r)
}

/// Exact pmf of the simple walk (`+1` w.p. `p`, `-1` w.p. `1-p`) from the
/// Stirling expansion `sum_k [n-1, k] (p s + q/s)^k / (n-1)!`.
pub fn walk_pmf_simple(n: usize, p: f64) -> Result<Pmf> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    if n > EXACT_MAX_N {
        return Err(Error::Size {
            what: "n (exact walk pmf)",
            value: n,
            max: EXACT_MAX_N,
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::config(format!("p = {p} outside [0, 1]")));
    }
    let p = f64_to_ratio(p).ok_or_else(|| Error::config("p is not finite"))?;
    let q = BigRational::one() - &p;
    let m = n - 1;
    let stirling = clock::stirling_row(m)?;
    let norm = BigRational::from_integer(BigInt::from(clock::factorial(m)));
    // Laurent coefficients on -m..=m
    let mut coeffs = vec![BigRational::zero(); 2 * m + 1];
    for (k, sk) in stirling.iter().enumerate() {
        if sk == &num_bigint::BigUint::zero() {
            continue;
        }
        let weight = BigRational::from_integer(BigInt::from(sk.clone())) / &norm;
        let mut binom = BigInt::one();
        for j in 0..=k {
            // s^{2j - k} with coefficient C(k, j) p^j q^{k-j}
            let term = BigRational::from_integer(binom.clone()) * pow(&p, j) * pow(&q, k - j);
            let idx = (m as i64 + 2 * j as i64 - k as i64) as usize;
            coeffs[idx] += &weight * term;
            binom = binom * BigInt::from(k - j) / BigInt::from(j + 1);
        }
    }
    Pmf::from_exact(-(m as i64), coeffs)
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}

/// Law of `R_n` for an integer step law by mixing the clock pmf with the
/// step law's convolution powers. `tail_tolerance = 0` requests exact
/// arithmetic.
pub fn walk_pmf(n: usize, step: &StepLaw, tail_tolerance: f64) -> Result<Pmf> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let lattice = step
        .lattice()
        .ok_or_else(|| Error::config("exact walk pmfs need an integer-valued step law"))?;
    let clock_pmf = clock::clock_pmf(n, tail_tolerance)?;
    match (clock_pmf.exact_probs(), lattice.exact_probs()) {
        (Some(cp), Some(sp)) => {
            let mixed = mix_powers::<BigRational>(clock_pmf.min_value(), cp, lattice.min_value(), sp);
            Pmf::from_exact(mixed.0, mixed.1)
        }
        _ => {
            let (offset, probs) = mix_powers::<f64>(
                clock_pmf.min_value(),
                clock_pmf.probs(),
                lattice.min_value(),
                lattice.probs(),
            );
            let mut pmf = Pmf::from_truncated(offset, probs, 0.0)?;
            if clock_pmf.dropped_mass() > 0.0 {
                pmf = Pmf::from_truncated(pmf.min_value(), pmf.probs().to_vec(), clock_pmf.dropped_mass())?;
            }
            Ok(pmf)
        }
    }
}

/// `sum_t P(T = t) * step^{*t}` on a dense lattice.
fn mix_powers<T: Scalar>(t_min: i64, t_probs: &[T], s_min: i64, s_probs: &[T]) -> (i64, Vec<T>) {
    let t_max = t_min as usize + t_probs.len() - 1;
    let width = s_probs.len() - 1;
    let lo = s_min.min(0) * t_max as i64;
    let hi = (s_min + width as i64).max(0) * t_max as i64;
    let mut out = vec![T::zero(); (hi - lo + 1) as usize];
    let mut power = vec![T::one()];
    let mut power_min = 0i64;
    for t in 0..=t_max {
        if t >= t_min as usize {
            let w = &t_probs[t - t_min as usize];
            if !w.is_zero() {
                for (i, c) in power.iter().enumerate() {
                    let idx = (power_min + i as i64 - lo) as usize;
                    out[idx] = out[idx].clone() + w.clone() * c.clone();
                }
            }
        }
        power = crate::poly::convolve(&power, s_probs);
        power_min += s_min;
    }
    (lo, out)
}

/// `Psi_n(theta) = prod_{k=1}^{n-1} ((k-1)/k + phi(theta)/k)`.
pub fn walk_char_function(n: usize, theta: f64, step_cf: impl Fn(f64) -> Complex64) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let phi = step_cf(theta);
    Ok((1..n).fold(Complex64::new(1.0, 0.0), |acc, k| {
        let kf = k as f64;
        acc * ((kf - 1.0) / kf + phi / kf)
    }))
}

/// [`walk_char_function`] for a step law with a closed-form cf.
pub fn walk_char_function_for(n: usize, theta: f64, step: &StepLaw) -> Result<Complex64> {
    let cf = |t: f64| step.char_function(t);
    if cf(0.0).is_none() {
        return Err(Error::config("step law has no closed-form characteristic function"));
    }
    walk_char_function(n, theta, |t| cf(t).unwrap_or_default())
}

/// `(E R_n, Var R_n) = (m_n mu, m_n sigma^2 + v_n mu^2)`.
pub fn walk_moments(n: usize, step: &StepLaw) -> Result<(f64, f64)> {
    let (mu, sigma2) = step.moments()?;
    let m = clock::clock_moments(n)?;
    Ok((m.mean * mu, m.mean * sigma2 + m.variance * mu * mu))
}

/// KS distance between standardized `R_n` and the normal law for the simple
/// walk with step `+1` w.p. `p`.
pub fn walk_clt_ks(n: usize, p: f64, convention: KsConvention) -> Result<f64> {
    let step = StepLaw::rademacher(p)?;
    let pmf = walk_pmf(n, &step, 1e-300)?;
    let (mean, var) = walk_moments(n, &step)?;
    if !(var > 0.0) {
        return Err(Error::pre("degenerate walk variance"));
    }
    ks_statistic(&pmf, mean, var.sqrt(), convention)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn simple_pmf_examples() {
        let p2 = walk_pmf_simple(2, 0.5).unwrap();
        assert_eq!(p2.exact_prob(-1).unwrap(), q(1, 2));
        assert_eq!(p2.exact_prob(1).unwrap(), q(1, 2));
        assert_eq!(p2.exact_prob(0).unwrap(), q(0, 1));
        let p4 = walk_pmf_simple(4, 0.5).unwrap();
        assert_eq!(p4.min_value(), -3);
        assert_eq!(
            p4.exact_probs().unwrap(),
            &[q(1, 48), q(1, 8), q(11, 48), q(1, 4), q(11, 48), q(1, 8), q(1, 48)]
        );
        let up = walk_pmf_simple(3, 1.0).unwrap();
        assert_eq!(up.exact_probs().unwrap(), &[q(1, 2), q(1, 2)]);
        assert_eq!(up.min_value(), 1);
        assert!(matches!(walk_pmf_simple(EXACT_MAX_N + 1, 0.5), Err(Error::Size { .. })));
    }

    #[test]
    fn simple_pmf_total_mass_is_exact() {
        for n in 2..=EXACT_MAX_N {
            for p in [0.0, 0.25, 0.5, 0.875, 1.0] {
                let pmf = walk_pmf_simple(n, p).unwrap();
                let total = pmf.exact_probs().unwrap().iter().fold(BigRational::zero(), |a, b| a + b);
                assert!(total.is_one());
            }
        }
    }

    #[test]
    fn mixture_route_equals_stirling_route() {
        for n in 1..=10 {
            for p in [0.5, 0.25] {
                let a = walk_pmf_simple(n, p).unwrap();
                let b = walk_pmf(n, &StepLaw::rademacher(p).unwrap(), 0.0).unwrap();
                assert_eq!(a, b, "n = {n}, p = {p}");
            }
        }
    }

    #[test]
    fn moments_examples() {
        let (m, v) = walk_moments(4, &StepLaw::rademacher(0.5).unwrap()).unwrap();
        assert_eq!(m, 0.0);
        assert!((v - 11.0 / 6.0).abs() < 1e-15);
        let (m, v) = walk_moments(3, &StepLaw::rademacher(1.0).unwrap()).unwrap();
        assert_eq!((m, v), (1.5, 0.25));
        let c = 3i64;
        let (m, v) = walk_moments(7, &StepLaw::constant(c)).unwrap();
        let cm = clock::clock_moments(7).unwrap();
        assert!((m - 3.0 * cm.mean).abs() < 1e-14);
        assert!((v - 9.0 * cm.variance).abs() < 1e-13);
    }

    #[test]
    fn moments_match_exact_pmf() {
        let pmf = walk_pmf_simple(4, 0.5).unwrap();
        assert_eq!(pmf.exact_mean().unwrap(), q(0, 1));
        assert_eq!(pmf.exact_variance().unwrap(), q(11, 6));
    }

    #[test]
    fn char_function_examples() {
        let step = StepLaw::rademacher(0.5).unwrap();
        for n in [1, 2, 5, 40] {
            let c = walk_char_function_for(n, 0.0, &step).unwrap();
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        let theta = 0.7;
        let two = walk_char_function_for(2, theta, &step).unwrap();
        assert!((two - step.char_function(theta).unwrap()).norm() < 1e-15);
        // Fourier sum of the exact n = 3 pmf
        let pmf = walk_pmf_simple(3, 0.5).unwrap();
        let fourier: Complex64 = pmf
            .iter()
            .map(|(x, p)| p * (Complex64::i() * theta * x as f64).exp())
            .sum();
        let psi = walk_char_function_for(3, theta, &step).unwrap();
        assert!((psi - fourier).norm() < 1e-12);
        assert!((psi.re - (0.5 + theta.cos() / 2.0) * theta.cos()).abs() < 1e-15);
    }

    #[test]
    fn recursive_trajectories_are_coupled() {
        let mut rng = RandomStream::new(8, 0);
        let laws = [
            ReversionLaw::Uniform,
            ReversionLaw::power(-1.5),
            ReversionLaw::Occasional { q: 0.3 },
        ];
        for law in &laws {
            for _ in 0..50 {
                let w = simulate_walk_recursive(60, &StepLaw::rademacher(0.4).unwrap(), law, &mut rng).unwrap();
                w.check_coupling().unwrap();
                assert!(w.values.iter().all(|r| r.fract() == 0.0));
            }
        }
    }

    #[test]
    fn degenerate_steps() {
        let mut rng = RandomStream::new(8, 1);
        let zero = StepLaw::constant(0);
        for n in [1, 2, 30] {
            let w = simulate_walk_recursive(n, &zero, &ReversionLaw::Uniform, &mut rng).unwrap();
            assert_eq!(w.last(), 0.0);
            assert_eq!(simulate_walk_subordinated(n, &zero, &mut rng).unwrap(), 0.0);
        }
        let w = simulate_walk_recursive(2, &StepLaw::rademacher(0.5).unwrap(), &ReversionLaw::Uniform, &mut rng).unwrap();
        assert_eq!(w.last().abs(), 1.0);
        assert_eq!(
            simulate_walk_subordinated(1, &StepLaw::rademacher(0.5).unwrap(), &mut rng).unwrap(),
            0.0
        );
    }
}
