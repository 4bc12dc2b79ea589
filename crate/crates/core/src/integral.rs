//! The time integral `S_n = T_1 + ... + T_n` of the uniform clock and the
//! martingale `M_n = (S_n - E S_n)/n`.
//!
//! `E S_n = n (1/2 + ... + 1/n)`. With `v_k = Var T_k`,
//! `Var M_n = ((n+1)/n) Q_n` where `Q_n = sum_{k<=n} v_k/(k(k+1))`, and
//! `Q_n -> 2 - pi^2/6`.

use std::f64::consts::PI;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::clock::{self, ClockTrajectory};
use crate::error::{Error, Result};
use crate::montecarlo::{Moments, MonteCarlo};
use crate::poly::{CompensatedSum, Scalar};
use crate::verify::{binned_conditional_means, BinStat};

/// `lim Var M_n = 2 - pi^2/6`.
pub const LIMIT_VARIANCE: f64 = 2.0 - PI * PI / 6.0;

/// Bound on `|M_{n+1} - M_n|`.
pub const INCREMENT_BOUND: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleTrace {
    pub n: usize,
    pub s: u64,
    pub m: f64,
    pub expected_s: f64,
}

/// Running `S_k`, `E S_k` and `M_k` along a uniform clock path.
pub fn integrated_trace(trajectory: &ClockTrajectory) -> Result<Vec<MartingaleTrace>> {
    if !trajectory.gates.is_empty() {
        return Err(Error::pre("integrated_trace needs a uniform-reversion trajectory"));
    }
    let mut s = 0u64;
    let mut harmonic = CompensatedSum::default();
    let mut out = Vec::with_capacity(trajectory.len());
    for (i, &t) in trajectory.values.iter().enumerate() {
        let n = i + 1;
        s += t;
        if n >= 2 {
            harmonic.add(1.0 / n as f64);
        }
        let expected_s = n as f64 * harmonic.value();
        out.push(MartingaleTrace {
            n,
            s,
            m: (s as f64 - expected_s) / n as f64,
            expected_s,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MartingaleVariance {
    pub n: usize,
    pub variance: f64,
    pub q: f64,
    pub limit: f64,
}

/// Exact `Var M_n` by the forward `Q` recursion.
pub fn martingale_variance(n: usize) -> Result<MartingaleVariance> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let mut v = CompensatedSum::default();
    let mut q = CompensatedSum::default();
    for k in 1..=n {
        // v holds v_k = sum_{j<k} (1/j - 1/j^2)
        let kf = k as f64;
        q.add(v.value() / (kf * (kf + 1.0)));
        v.add(1.0 / kf - 1.0 / (kf * kf));
    }
    let qn = q.value();
    Ok(MartingaleVariance {
        n,
        variance: (n as f64 + 1.0) / n as f64 * qn,
        q: qn,
        limit: LIMIT_VARIANCE,
    })
}

/// `(Var M_n, Q_n)` as rationals.
pub fn martingale_variance_exact(n: usize) -> Result<(BigRational, BigRational)> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let mut v = BigRational::zero();
    let mut q = BigRational::zero();
    for k in 1..=n {
        let kk = k as i64;
        q += &v * BigRational::from_frac(1, kk * (kk + 1));
        v += BigRational::from_frac(kk - 1, kk * kk);
    }
    let var = &q * BigRational::from_frac(n as i64 + 1, n as i64);
    Ok((var, q))
}

/// `Var S_n` from `Var S_n = Var T_n + ((n+1)/(n-1)) Var S_{n-1}`.
pub fn integral_variance_exact(n: usize) -> Result<BigRational> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let mut var_s = BigRational::zero();
    for k in 2..=n {
        let (_, v) = clock::clock_moments_exact(k)?;
        var_s = v + var_s * BigRational::from_frac(k as i64 + 1, k as i64 - 1);
    }
    Ok(var_s)
}

/// `Cov(T_n, T_{n+m}) = ((n-1)/n) Var M_{n-1} + Var(T_n)/n`, free of `m`.
pub fn clock_covariance(n: usize, m: usize) -> Result<f64> {
    check_covariance_args(n, m)?;
    let var_m = martingale_variance(n - 1)?.variance;
    let v = clock::clock_moments(n)?.variance;
    let nf = n as f64;
    Ok((nf - 1.0) / nf * var_m + v / nf)
}

pub fn clock_covariance_exact(n: usize, m: usize) -> Result<BigRational> {
    check_covariance_args(n, m)?;
    let (var_m, _) = martingale_variance_exact(n - 1)?;
    let (_, v) = clock::clock_moments_exact(n)?;
    let nn = n as i64;
    Ok(var_m * BigRational::from_frac(nn - 1, nn) + v * BigRational::from_frac(1, nn))
}

fn check_covariance_args(n: usize, m: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::pre("covariance formula needs n >= 2 (it uses Var M_{n-1})"));
    }
    if m < 1 {
        return Err(Error::pre("lag m must be at least 1"));
    }
    Ok(())
}

/// Largest increment `|M_{k+1} - M_k|` of a trace; more than 3/2 is a bug.
pub fn hoeffding_check(trace: &[MartingaleTrace]) -> Result<f64> {
    let worst = trace
        .windows(2)
        .map(|w| (w[1].m - w[0].m).abs())
        .fold(0.0f64, f64::max);
    if worst > INCREMENT_BOUND + 1e-12 {
        return Err(Error::Invariant(format!(
            "martingale increment {worst} exceeds {INCREMENT_BOUND}"
        )));
    }
    Ok(worst)
}

/// Azuma-Hoeffding: `P(|M_n| >= x) <= 2 exp(-x^2 / (2 (n-1) c^2))`, `c = 3/2`.
pub fn azuma_tail_bound(n: usize, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    if !(x > 0.0) {
        return Err(Error::pre("x must be positive"));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let c2 = INCREMENT_BOUND * INCREMENT_BOUND;
    Ok((2.0 * (-x * x / (2.0 * (n - 1) as f64 * c2)).exp()).clamp(0.0, 1.0))
}

fn simulate_uniform(n: usize, rng: &mut crate::rng::RandomStream) -> Vec<u64> {
    let mut t = Vec::with_capacity(n);
    t.push(0u64);
    for k in 1..n {
        let u = rng.index(k);
        t.push(1 + t[u - 1]);
    }
    t
}

/// Empirical covariance of `(T_n, T_{n+m})`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CovarianceEstimate {
    pub n: usize,
    pub m: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub formula: f64,
}

impl CovarianceEstimate {
    pub fn z(&self) -> f64 {
        (self.estimate - self.formula) / self.std_error
    }
}

/// Monte Carlo `Cov(T_n, T_{n+m})` for each lag, all from the same paths.
pub fn covariance_experiment(n: usize, lags: &[usize], samples: usize, mc: &MonteCarlo) -> Result<Vec<CovarianceEstimate>> {
    let max_lag = *lags.iter().max().ok_or_else(|| Error::pre("no lags"))?;
    let horizon = n + max_lag;
    let pairs: Vec<Vec<(f64, f64)>> = mc.run(samples, |rng| {
        let t = simulate_uniform(horizon, rng);
        lags.iter().map(|&m| (t[n - 1] as f64, t[n + m - 1] as f64)).collect()
    });
    lags.iter()
        .enumerate()
        .map(|(j, &m)| {
            let xs: Vec<(f64, f64)> = pairs.iter().map(|p| p[j]).collect();
            let nf = xs.len() as f64;
            let mx = xs.iter().map(|p| p.0).sum::<f64>() / nf;
            let my = xs.iter().map(|p| p.1).sum::<f64>() / nf;
            let mut prod = Moments::default();
            xs.iter().for_each(|(x, y)| prod.push((x - mx) * (y - my)));
            Ok(CovarianceEstimate {
                n,
                m,
                estimate: prod.mean() * nf / (nf - 1.0),
                std_error: prod.std_error(),
                formula: clock_covariance(n, m)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HoeffdingReport {
    pub trajectories: usize,
    pub n: usize,
    pub max_increment: f64,
    pub violations: usize,
}

/// Largest martingale increment over many paths of length `n`.
pub fn hoeffding_experiment(n: usize, samples: usize, mc: &MonteCarlo) -> Result<HoeffdingReport> {
    let maxima: Vec<f64> = mc.run(samples, |rng| {
        let t = simulate_uniform(n, rng);
        let traj = ClockTrajectory {
            reversions: Vec::new(),
            gates: Vec::new(),
            values: t,
        };
        let trace = integrated_trace(&traj).unwrap_or_default();
        trace
            .windows(2)
            .map(|w| (w[1].m - w[0].m).abs())
            .fold(0.0f64, f64::max)
    });
    Ok(HoeffdingReport {
        trajectories: samples,
        n,
        max_increment: maxima.iter().copied().fold(0.0, f64::max),
        violations: maxima.iter().filter(|&&x| x > INCREMENT_BOUND + 1e-12).count(),
    })
}

/// Conditional-mean check of the martingale property at level `n`:
/// `E[M_{n+1} - M_n | M_n in bin]` for ten equal-count bins.
#[derive(Debug, Clone, Serialize)]
pub struct IncrementTest {
    pub n: usize,
    pub bins: Vec<BinStat>,
    pub max_abs_z: f64,
}

pub fn martingale_increment_test(levels: &[usize], samples: usize, mc: &MonteCarlo) -> Result<Vec<IncrementTest>> {
    let horizon = levels.iter().max().ok_or_else(|| Error::pre("no levels"))? + 1;
    let rows: Vec<Vec<(f64, f64)>> = mc.run(samples, |rng| {
        let t = simulate_uniform(horizon, rng);
        let traj = ClockTrajectory {
            reversions: Vec::new(),
            gates: Vec::new(),
            values: t,
        };
        let trace = integrated_trace(&traj).unwrap_or_default();
        levels
            .iter()
            .map(|&n| (trace[n - 1].m, trace[n].m - trace[n - 1].m))
            .collect()
    });
    Ok(levels
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let mut pairs: Vec<(f64, f64)> = rows.iter().map(|r| r[j]).collect();
            let bins = binned_conditional_means(&mut pairs, 10);
            let max_abs_z = bins.iter().map(|b| b.z.abs()).fold(0.0, f64::max);
            IncrementTest { n, bins, max_abs_z }
        })
        .collect())
}

/// Empirical summary of `M_n` (the limit's shape is reported, not tested).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MartingaleSummary {
    pub n: usize,
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub exact_variance: f64,
}

pub fn martingale_summary(n: usize, samples: usize, mc: &MonteCarlo) -> Result<MartingaleSummary> {
    let ms: Vec<f64> = mc.run(samples, |rng| {
        let t = simulate_uniform(n, rng);
        let s: u64 = t.iter().sum();
        let h: f64 = (2..=n).map(|k| 1.0 / k as f64).sum();
        (s as f64 - n as f64 * h) / n as f64
    });
    let nf = ms.len() as f64;
    let mean = ms.iter().sum::<f64>() / nf;
    let m2 = ms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    let m3 = ms.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / nf;
    Ok(MartingaleSummary {
        n,
        samples,
        mean,
        variance: m2 * nf / (nf - 1.0),
        skewness: m3 / m2.powf(1.5),
        exact_variance: martingale_variance(n)?.variance,
    })
}
