//! Weighted reversions: `P(U(n) = k) = alpha_k / (alpha_1 + ... + alpha_n)`.
//!
//! `T_n` is then a sum of independent `Bernoulli(p_k)`, `k < n`, with
//! `p_k = alpha_k / (alpha_1 + ... + alpha_k)`, and
//! `M_n = sum_{k<=n} alpha_k (T_k - m_k) / sum_{k<=n} alpha_k` is a martingale
//! with `Var M_n = p_n^2 v_n + (1 - p_n^2) Var M_{n-1}`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::clock::{self, ClockTrajectory};
use crate::error::{Error, Result};
use crate::law::{reversion_probabilities, reversion_probabilities_exact, ReversionLaw};
use crate::pmf::Pmf;
use crate::poly::CompensatedSum;
use crate::EXACT_MAX_N;

fn weighted_only(law: &ReversionLaw) -> Result<()> {
    if matches!(law, ReversionLaw::Occasional { .. }) {
        return Err(Error::config("occasional reversions are handled by the occasional module"));
    }
    law.validate()
}

/// Law of `T_n` under weighted reversions. `tail_tolerance = 0` asks for
/// exact rationals, which needs `n <= EXACT_MAX_N` and rational weights.
pub fn weighted_clock_pmf(law: &ReversionLaw, n: usize, tail_tolerance: f64) -> Result<Pmf> {
    weighted_only(law)?;
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    if n == 1 {
        return Ok(Pmf::point(0));
    }
    if tail_tolerance == 0.0 {
        if n > EXACT_MAX_N {
            return Err(Error::Size {
                what: "n (exact mode)",
                value: n,
                max: EXACT_MAX_N,
            });
        }
        let p = reversion_probabilities_exact(law, n - 1)?;
        return clock::bernoulli_sum_pmf(&p);
    }
    if !(tail_tolerance > 0.0) {
        return Err(Error::pre("tail tolerance must be >= 0"));
    }
    let p = reversion_probabilities(law, n - 1)?;
    clock::bernoulli_sum_truncated(&p, tail_tolerance)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedMoments {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
}

/// `m_n = sum_{k<n} p_k` and `v_n = sum_{k<n} p_k q_k`.
pub fn weighted_clock_moments(law: &ReversionLaw, n: usize) -> Result<WeightedMoments> {
    Ok(*weighted_profile(law, &[n])?.first().ok_or_else(|| Error::pre("n must be at least 1"))?)
}

pub fn weighted_clock_moments_exact(law: &ReversionLaw, n: usize) -> Result<(BigRational, BigRational)> {
    weighted_only(law)?;
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let mut m = BigRational::zero();
    let mut v = BigRational::zero();
    if n > 1 {
        for p in reversion_probabilities_exact(law, n - 1)? {
            v += &p * (BigRational::one() - &p);
            m += p;
        }
    }
    Ok((m, v))
}

/// Moments at each `n` of an increasing ladder, in a single pass.
pub fn weighted_profile(law: &ReversionLaw, ladder: &[usize]) -> Result<Vec<WeightedMoments>> {
    weighted_only(law)?;
    check_ladder(ladder)?;
    let top = ladder.last().copied().unwrap_or(1);
    let probs = if top > 1 { reversion_probabilities(law, top - 1)? } else { Vec::new() };
    let mut m = CompensatedSum::default();
    let mut v = CompensatedSum::default();
    let mut out = Vec::with_capacity(ladder.len());
    let mut k = 1;
    for &n in ladder {
        while k < n {
            let p = probs[k - 1];
            m.add(p);
            v.add(p * (1.0 - p));
            k += 1;
        }
        out.push(WeightedMoments {
            n,
            mean: m.value(),
            variance: v.value(),
        });
    }
    Ok(out)
}

fn check_ladder(ladder: &[usize]) -> Result<()> {
    if ladder.is_empty() || ladder[0] == 0 || ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::pre("ladder must be a non-empty increasing list of n >= 1"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovDiagnostic {
    pub n: usize,
    pub rho: f64,
    pub variance: f64,
    /// `rho_n / v_n^{3/2}`; a CLT holds for `T_n` when this tends to zero.
    pub ratio: f64,
}

pub fn lyapunov_diagnostic(law: &ReversionLaw, n: usize) -> Result<LyapunovDiagnostic> {
    lyapunov_ladder(law, &[n])?
        .pop()
        .ok_or_else(|| Error::pre("n must be at least 1"))
}

pub fn lyapunov_ladder(law: &ReversionLaw, ladder: &[usize]) -> Result<Vec<LyapunovDiagnostic>> {
    weighted_only(law)?;
    check_ladder(ladder)?;
    let top = *ladder.last().unwrap_or(&1);
    let probs = if top > 1 { reversion_probabilities(law, top - 1)? } else { Vec::new() };
    let mut rho = CompensatedSum::default();
    let mut v = CompensatedSum::default();
    let mut k = 1;
    let mut out = Vec::with_capacity(ladder.len());
    for &n in ladder {
        while k < n {
            let p = probs[k - 1];
            let q = 1.0 - p;
            rho.add(p * q * (p * p + q * q));
            v.add(p * q);
            k += 1;
        }
        let variance = v.value();
        if !(variance > 0.0) {
            return Err(Error::pre(format!("v_{n} = 0: T_{n} is degenerate")));
        }
        out.push(LyapunovDiagnostic {
            n,
            rho: rho.value(),
            variance,
            ratio: rho.value() / variance.powf(1.5),
        });
    }
    Ok(out)
}

/// Running weighted martingale `M_1..M_n` along a path simulated under
/// the same weights.
pub fn weighted_martingale_trace(trajectory: &ClockTrajectory, law: &ReversionLaw) -> Result<Vec<f64>> {
    weighted_only(law)?;
    if !trajectory.gates.is_empty() {
        return Err(Error::pre("trajectory was generated under occasional reversions"));
    }
    trajectory.check()?;
    let n = trajectory.len();
    if let ReversionLaw::Explicit(w) = law {
        if w.len() < n {
            return Err(Error::pre(format!(
                "trajectory has {n} steps but only {} weights were supplied",
                w.len()
            )));
        }
    }
    let probs = if n > 1 { reversion_probabilities(law, n)? } else { vec![1.0] };
    let mut m = 0.0;
    let mut mean = CompensatedSum::default();
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        // M_k = (1 - p_k) M_{k-1} + p_k (T_k - m_k)
        let p = if k == 1 { 1.0 } else { probs[k - 1] };
        m = (1.0 - p) * m + p * (trajectory.value(k) as f64 - mean.value());
        out.push(m);
        if k < n {
            mean.add(probs[k - 1]);
        }
    }
    Ok(out)
}

/// `Var M_n` by the forward recursion from `Var M_1 = 0`.
pub fn weighted_martingale_variance(law: &ReversionLaw, n: usize) -> Result<f64> {
    weighted_only(law)?;
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let probs = reversion_probabilities(law, n)?;
    let mut v = 0.0;
    let mut var_m = 0.0;
    for k in 2..=n {
        let pk = probs[k - 2];
        v += pk * (1.0 - pk);
        let p = probs[k - 1];
        var_m = p * p * v + (1.0 - p * p) * var_m;
    }
    Ok(var_m)
}

pub fn weighted_martingale_variance_exact(law: &ReversionLaw, n: usize) -> Result<BigRational> {
    weighted_only(law)?;
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let probs = reversion_probabilities_exact(law, n)?;
    let mut v = BigRational::zero();
    let mut var_m = BigRational::zero();
    for k in 2..=n {
        let pk = &probs[k - 2];
        v += pk * (BigRational::one() - pk);
        let p2 = &probs[k - 1] * &probs[k - 1];
        var_m = &p2 * &v + (BigRational::one() - &p2) * var_m;
    }
    Ok(var_m)
}

/// `Var M_n = Q_n / J_n` with `J_n = prod_{k=2}^n (1 - p_k^2)^{-1}` and
/// `Q_n = sum_{k=2}^n p_k^2 J_k v_k`. Returns `(Var M_n, Q_n, J_n)`.
pub fn weighted_martingale_variance_j(law: &ReversionLaw, n: usize) -> Result<(f64, f64, f64)> {
    weighted_only(law)?;
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let probs = reversion_probabilities(law, n)?;
    let mut v = 0.0;
    let mut j = 1.0;
    let mut q = CompensatedSum::default();
    for k in 2..=n {
        v += probs[k - 2] * (1.0 - probs[k - 2]);
        let p2 = probs[k - 1] * probs[k - 1];
        j /= 1.0 - p2;
        q.add(p2 * j * v);
    }
    Ok((q.value() / j, q.value(), j))
}

/// Partial sums `sum_{k<=n} p_k^2 v_k` at each ladder point; the
/// martingale converges in mean square when these stay bounded.
pub fn variance_series_partial_sums(law: &ReversionLaw, ladder: &[usize]) -> Result<Vec<(usize, f64)>> {
    weighted_only(law)?;
    check_ladder(ladder)?;
    let top = *ladder.last().unwrap_or(&1);
    let probs = reversion_probabilities(law, top)?;
    let mut v = 0.0;
    let mut s = CompensatedSum::default();
    let mut k = 1;
    let mut out = Vec::with_capacity(ladder.len());
    for &n in ladder {
        while k <= n {
            if k >= 2 {
                v += probs[k - 2] * (1.0 - probs[k - 2]);
            }
            s.add(probs[k - 1] * probs[k - 1] * v);
            k += 1;
        }
        out.push((n, s.value()));
    }
    Ok(out)
}
