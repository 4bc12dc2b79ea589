//! Named verification checks, grouped into suites, run by `revert verify`.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::branching::{self, OffspringLaw};
use crate::clock;
use crate::error::{Error, Result};
use crate::integral;
use crate::law::{ReversionLaw, StepLaw};
use crate::montecarlo::MonteCarlo;
use crate::nonuniform;
use crate::occasional;
use crate::pmf::Pmf;
use crate::poly::{self, Scalar};
use crate::verify::{chi_square, counts, enumerate_clock, enumerate_integrated, enumerate_walk, KsConvention};
use crate::walk;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Clock,
    Walk,
    Integral,
    Occasional,
    Branching,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Clock => "clock",
            Suite::Walk => "walk",
            Suite::Integral => "integral",
            Suite::Occasional => "occasional",
            Suite::Branching => "branching",
        }
    }

    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "clock" => Suite::Clock,
            "walk" => Suite::Walk,
            "integral" => Suite::Integral,
            "occasional" => Suite::Occasional,
            "branching" => Suite::Branching,
            other => return Err(Error::config(format!("unknown suite '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

type Check = fn(&MonteCarlo) -> Result<String>;

const CHECKS: &[(Suite, &str, Check)] = &[
    (Suite::Clock, "clock.oracle", clock_oracle),
    (Suite::Clock, "clock.weighted_oracle", weighted_oracle),
    (Suite::Clock, "clock.stirling", clock_stirling),
    (Suite::Clock, "clock.moments", clock_moment_checks),
    (Suite::Clock, "clock.clt", clock_clt),
    (Suite::Clock, "clock.routes", clock_routes),
    (Suite::Clock, "clock.weighted_reduction", weighted_reduction),
    (Suite::Clock, "clock.beta_regimes", beta_regimes),
    (Suite::Walk, "walk.oracle", walk_oracle),
    (Suite::Walk, "walk.mixture", walk_mixture),
    (Suite::Walk, "walk.subordination", walk_subordination),
    (Suite::Walk, "walk.moments", walk_moment_checks),
    (Suite::Integral, "integral.oracle", integral_oracle),
    (Suite::Integral, "integral.variance_limit", integral_limit),
    (Suite::Integral, "integral.covariance", integral_covariance),
    (Suite::Integral, "integral.hoeffding", integral_hoeffding),
    (Suite::Occasional, "occasional.oracle", occasional_oracle),
    (Suite::Occasional, "occasional.moments", occasional_moment_checks),
    (Suite::Occasional, "occasional.second_moment_closed_form", occasional_closed_form),
    (Suite::Occasional, "occasional.generating_function", occasional_gf),
    (Suite::Occasional, "occasional.dobrushin", occasional_dobrushin),
    (Suite::Occasional, "occasional.martingale", occasional_martingale),
    (Suite::Branching, "branching.recursion", branching_recursion),
    (Suite::Branching, "branching.exact", branching_exact),
    (Suite::Branching, "branching.simulation", branching_simulation),
];

/// Names of the checks a suite runs.
pub fn check_names(suite: Suite) -> Vec<&'static str> {
    CHECKS.iter().filter(|c| suite.includes(c.0)).map(|c| c.1).collect()
}

pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    let checks: Vec<CheckResult> = CHECKS
        .iter()
        .enumerate()
        .filter(|(_, c)| suite.includes(c.0))
        .map(|(i, &(s, name, check))| {
            let mc = MonteCarlo::new(seed).with_stream_base((i as u64) << 32);
            let (passed, detail) = match check(&mc) {
                Ok(d) => (true, d),
                Err(e) => (false, e.to_string()),
            };
            CheckResult {
                suite: s.name(),
                name,
                passed,
                detail,
            }
        })
        .collect();
    SuiteReport {
        suite: suite.name(),
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Invariant(msg()))
    }
}

fn same(a: &Pmf, b: &Pmf, what: impl fmt::Display) -> Result<()> {
    ensure(a == b, || format!("{what}: distributions differ"))
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::from_frac(n, d)
}

fn clock_oracle(_: &MonteCarlo) -> Result<String> {
    for n in 1..=crate::verify::CLOCK_ENUMERATION_MAX_N {
        same(&clock::clock_pmf(n, 0.0)?, &enumerate_clock(n, &ReversionLaw::Uniform)?, format!("n={n}"))?;
    }
    Ok("clock_pmf equals enumeration for n <= 9".into())
}

fn weighted_laws() -> Vec<ReversionLaw> {
    vec![
        ReversionLaw::Explicit((1..=12).map(|k| k as f64).collect()),
        ReversionLaw::Explicit(vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0]),
        ReversionLaw::power(-2.0),
        ReversionLaw::power(1.0),
    ]
}

fn weighted_oracle(_: &MonteCarlo) -> Result<String> {
    for law in weighted_laws() {
        for n in 1..=crate::verify::CLOCK_ENUMERATION_MAX_N {
            same(
                &nonuniform::weighted_clock_pmf(&law, n, 0.0)?,
                &enumerate_clock(n, &law)?,
                format!("{} n={n}", law.describe()),
            )?;
        }
    }
    Ok("weighted_clock_pmf equals enumeration for four weight families, n <= 9".into())
}

fn clock_stirling(_: &MonteCarlo) -> Result<String> {
    for n in 1..=12 {
        let pmf = clock::clock_pmf(n + 1, 0.0)?;
        let fact = BigRational::from_integer(clock::factorial(n).into());
        for k in 0..=n {
            let want = BigRational::from_integer(clock::stirling_first(n, k)?.into()) / &fact;
            let got = pmf.exact_prob(k as i64).unwrap_or_else(BigRational::zero);
            ensure(got == want, || format!("P(T_{} = {k}) != [{n},{k}]/{n}!", n + 1))?;
        }
    }
    Ok("P(T_{n+1} = k) = [n,k]/n! for n <= 12".into())
}

fn clock_moment_checks(_: &MonteCarlo) -> Result<String> {
    ensure(clock::clock_moments_exact(4)? == (rat(11, 6), rat(17, 36)), || "moments at n=4".into())?;
    for n in 1..=crate::EXACT_MAX_N {
        let pmf = clock::clock_pmf(n, 0.0)?;
        let (m, v) = clock::clock_moments_exact(n)?;
        ensure(pmf.exact_mean() == Some(m) && pmf.exact_variance() == Some(v), || {
            format!("pmf moments differ from partial sums at n={n}")
        })?;
    }
    Ok("(m_4, v_4) = (11/6, 17/36); pmf moments equal partial sums for n <= 13".into())
}

/// KS distances along the ladder `10^2 .. 10^5`.
pub fn clt_ladder() -> Result<Vec<clock::CltDiagnostic>> {
    [100, 1_000, 10_000, 100_000]
        .iter()
        .map(|&n| clock::clock_clt_diagnostic(n, 1e-300))
        .collect()
}

fn clock_clt(_: &MonteCarlo) -> Result<String> {
    let ladder = clt_ladder()?;
    let ks: Vec<f64> = ladder.iter().map(|d| d.ks).collect();
    ensure(ks.windows(2).all(|w| w[1] < w[0]), || format!("KS not decreasing: {ks:?}"))?;
    ensure(ks[3] <= 0.05, || format!("KS at n=1e5 is {}", ks[3]))?;
    Ok(format!("KS ({}) = {ks:?}", KsConvention::Midpoint.name()))
}

fn clock_routes(mc: &MonteCarlo) -> Result<String> {
    let n = 50;
    let samples = 20_000;
    let pmf = clock::clock_pmf(n, 1e-15)?;
    let rec = mc.run(samples, |rng| {
        clock::simulate_clock_recursive(n, rng).map(|t| t.last() as i64).unwrap_or(-1)
    });
    let ber = (*mc).with_stream_base(mc.stream_base + (1 << 20)).run(samples, |rng| {
        clock::simulate_clock_bernoulli(n, rng).map(|t| t as i64).unwrap_or(-1)
    });
    let a = chi_square(&counts(rec), &pmf)?;
    let b = chi_square(&counts(ber), &pmf)?;
    ensure(a.p_value > 1e-4 && b.p_value > 1e-4, || {
        format!("chi-square p-values {} and {}", a.p_value, b.p_value)
    })?;
    Ok(format!("recursive p = {:.4}, Bernoulli p = {:.4}", a.p_value, b.p_value))
}

fn weighted_reduction(_: &MonteCarlo) -> Result<String> {
    for n in [2, 10, 1000] {
        let a = nonuniform::weighted_clock_moments(&ReversionLaw::Uniform, n)?;
        let b = clock::clock_moments(n)?;
        ensure((a.mean - b.mean).abs() < 1e-12 && (a.variance - b.variance).abs() < 1e-12, || {
            format!("moments differ at n={n}")
        })?;
        let va = nonuniform::weighted_martingale_variance(&ReversionLaw::Uniform, n)?;
        let vb = integral::martingale_variance(n)?.variance;
        ensure((va - vb).abs() < 1e-12, || format!("martingale variance differs at n={n}"))?;
    }
    let law = ReversionLaw::Explicit(vec![1.0, 2.0, 3.0]);
    ensure(nonuniform::weighted_martingale_variance_exact(&law, 3)? == rat(1, 18), || "Var M_3".into())?;
    Ok("uniform weights reduce to the uniform clock".into())
}

/// `(v_{10^4}, v_{10^6})` for `beta = -2`.
pub fn beta_minus_two_variances() -> Result<(f64, f64)> {
    let p = nonuniform::weighted_profile(&ReversionLaw::power(-2.0), &[10_000, 1_000_000])?;
    Ok((p[0].variance, p[1].variance))
}

fn beta_regimes(_: &MonteCarlo) -> Result<String> {
    let (a, b) = beta_minus_two_variances()?;
    ensure((b - a).abs() < 1e-3, || format!("beta=-2: v changes by {}", b - a))?;
    let ladder = [100, 1_000, 10_000, 100_000];
    for beta in [0.0, 1.0] {
        let d = nonuniform::lyapunov_ladder(&ReversionLaw::power(beta), &ladder)?;
        ensure(d.windows(2).all(|w| w[1].ratio < w[0].ratio), || {
            format!("beta={beta}: Lyapunov ratio not decreasing")
        })?;
    }
    let m = nonuniform::weighted_profile(&ReversionLaw::power(-1.0), &[1_000, 1_000_000])?;
    ensure(m[1].mean - m[0].mean < 1.0, || "beta=-1: mean grows too fast".into())?;
    Ok(format!("beta=-2: |v_1e6 - v_1e4| = {:.2e}", (b - a).abs()))
}

fn walk_oracle(_: &MonteCarlo) -> Result<String> {
    for p in [0.5, 0.25] {
        let step = StepLaw::rademacher(p)?;
        for n in 1..=crate::verify::WALK_ENUMERATION_MAX_N {
            let e = enumerate_walk(n, &step, &ReversionLaw::Uniform)?;
            same(&walk::walk_pmf_simple(n, p)?, &e.walk_marginal()?, format!("p={p} n={n}"))?;
            same(&clock::clock_pmf(n, 0.0)?, &e.clock_marginal()?, format!("clock marginal n={n}"))?;
        }
    }
    Ok("walk_pmf_simple equals enumeration for n <= 7".into())
}

fn walk_mixture(_: &MonteCarlo) -> Result<String> {
    for n in 1..=crate::EXACT_MAX_N {
        for p in [0.5, 0.75] {
            same(
                &walk::walk_pmf_simple(n, p)?,
                &walk::walk_pmf(n, &StepLaw::rademacher(p)?, 0.0)?,
                format!("p={p} n={n}"),
            )?;
        }
    }
    Ok("Stirling route equals clock mixture for n <= 13".into())
}

fn walk_subordination(_: &MonteCarlo) -> Result<String> {
    let step = StepLaw::finite(vec![-1, 0, 2], vec![0.25, 0.25, 0.5])?;
    let lattice = step.lattice().ok_or_else(|| Error::Invariant("lattice".into()))?;
    for n in 1..=6 {
        let e = enumerate_walk(n, &step, &ReversionLaw::Uniform)?;
        for (t, _) in e.clock_marginal()?.iter() {
            let mut sum = Pmf::point(0);
            for _ in 0..t {
                sum = sum.convolve(&lattice)?;
            }
            same(&e.conditional_walk(t as u64)?, &sum, format!("n={n} t={t}"))?;
        }
    }
    Ok("R_n given T_n = t is the t-step sum, n <= 6".into())
}

fn walk_moment_checks(_: &MonteCarlo) -> Result<String> {
    let step = StepLaw::rademacher(0.75)?;
    for n in [3, 8, 13] {
        let pmf = walk::walk_pmf_simple(n, 0.75)?;
        let (m, v) = walk::walk_moments(n, &step)?;
        ensure((pmf.mean() - m).abs() < 1e-12 && (pmf.variance() - v).abs() < 1e-12, || {
            format!("walk moments differ at n={n}")
        })?;
        for theta in [0.3, 1.1, 2.9] {
            let psi = walk::walk_char_function_for(n, theta, &step)?;
            let f: num_complex::Complex64 = pmf
                .iter()
                .map(|(x, p)| p * (num_complex::Complex64::i() * theta * x as f64).exp())
                .sum();
            ensure((psi - f).norm() < 1e-12, || format!("cf differs at n={n}, theta={theta}"))?;
        }
    }
    Ok("moments and characteristic function agree with exact pmfs".into())
}

fn integral_oracle(_: &MonteCarlo) -> Result<String> {
    for n in 2..=crate::verify::INTEGRATED_ENUMERATION_MAX_N {
        let e = enumerate_integrated(n)?;
        ensure(e.mean_m.is_zero(), || format!("E M_{n} != 0"))?;
        ensure(e.var_m == integral::martingale_variance_exact(n)?.0, || format!("Var M_{n}"))?;
        ensure(e.var_s == integral::integral_variance_exact(n)?, || format!("Var S_{n}"))?;
        ensure(e.cov_next == integral::clock_covariance_exact(n, 1)?, || format!("Cov at n={n}"))?;
    }
    Ok("Var M_n, Var S_n and Cov(T_n, T_{n+1}) equal enumeration for n <= 8".into())
}

fn integral_limit(_: &MonteCarlo) -> Result<String> {
    let v = integral::martingale_variance(100_000)?;
    let gap = (v.variance - v.limit).abs();
    ensure(gap < 5e-4, || format!("|Var M - limit| = {gap}"))?;
    Ok(format!("Var M_1e5 = {:.7}, limit {:.7}", v.variance, v.limit))
}

fn integral_covariance(mc: &MonteCarlo) -> Result<String> {
    for m in [1, 5] {
        ensure(integral::clock_covariance_exact(3, m)? == rat(1, 12), || format!("Cov(T_3, T_{})", 3 + m))?;
    }
    let est = integral::covariance_experiment(50, &[1, 10, 100], 20_000, mc)?;
    let zs: Vec<f64> = est.iter().map(|e| e.z()).collect();
    ensure(zs.iter().all(|z| z.abs() < 4.0), || format!("z-scores {zs:?}"))?;
    Ok(format!("exact 1/12; Monte Carlo z-scores {zs:.2?}"))
}

fn integral_hoeffding(mc: &MonteCarlo) -> Result<String> {
    let r = integral::hoeffding_experiment(200, 2_000, mc)?;
    ensure(r.violations == 0, || format!("{} violations", r.violations))?;
    Ok(format!("max increment {:.4}", r.max_increment))
}

fn occasional_oracle(_: &MonteCarlo) -> Result<String> {
    for (a, b) in [(1, 4), (1, 2), (3, 4)] {
        let q = rat(a, b);
        let law = ReversionLaw::occasional(a as f64 / b as f64)?;
        for n in 1..=crate::verify::OCCASIONAL_ENUMERATION_MAX_N {
            let pmf = occasional::occasional_pmf_exact(n, &q)?;
            same(&pmf, &enumerate_clock(n, &law)?, format!("q={a}/{b} n={n}"))?;
            if n >= 2 {
                same(&pmf, &occasional::backward_chain_pmf_exact(n - 1, &q)?, format!("chain q={a}/{b} n={n}"))?;
            }
        }
    }
    Ok("recursion, backward chain and enumeration agree for n <= 8".into())
}

fn occasional_moment_checks(_: &MonteCarlo) -> Result<String> {
    let half = rat(1, 2);
    ensure(occasional::occasional_moments_exact(3, &half)?.0 == rat(7, 4), || "m_3".into())?;
    for (a, b) in [(1, 4), (1, 2), (1, 1)] {
        let q = rat(a, b);
        for n in 1..=12 {
            let pmf = occasional::occasional_pmf_exact(n, &q)?;
            let (m, w) = occasional::occasional_moments_exact(n, &q)?;
            ensure(pmf.exact_mean() == Some(m.clone()) && pmf.exact_second_moment() == Some(w), || {
                format!("moments differ at q={a}/{b} n={n}")
            })?;
            let f = occasional::occasional_moments(n, a as f64 / b as f64)?;
            ensure((f.mean - poly::ratio_to_f64(&m)).abs() < 1e-12, || format!("closed mean at n={n}"))?;
        }
    }
    Ok("moments equal pmf moments exactly, n <= 12".into())
}

fn occasional_closed_form(_: &MonteCarlo) -> Result<String> {
    for q in [0.25, 0.5, 0.75] {
        let t = occasional::occasional_moment_table(1002, q)?;
        for n in 1..=1000 {
            let d = t[n + 1].second_moment - t[n].second_moment;
            let c = occasional::second_moment_increment(n, q)?;
            ensure((d - c).abs() <= 1e-10 * (1.0 + d.abs()), || format!("q={q} n={n}: {d} vs {c}"))?;
        }
    }
    Ok("closed-form increment equals w_{n+2} - w_{n+1}, n <= 1000".into())
}

/// Largest gap between the closed-form `G(s, z)` and its truncated series
/// on a 5 x 5 grid.
pub fn gf_grid_gap(q: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
        for z in [0.0, 0.2, 0.4, 0.6, 0.8] {
            let closed = occasional::occasional_bivariate_gf(s, z, q)?;
            let series = occasional::occasional_gf_series(s, z, q, 1e-12)?;
            worst = worst.max((closed - series).abs());
        }
    }
    Ok(worst)
}

/// `G_n` at `q = 1` against the rising factorial `s(s+1)...(s+n-2)/(n-1)!`.
pub fn gf_reduction_holds(n: usize) -> Result<bool> {
    let pmf = occasional::occasional_pmf_exact(n, &BigRational::one())?;
    let mut rising = vec![BigRational::one()];
    for j in 0..n.saturating_sub(1) {
        rising = poly::mul_linear(&rising, &BigRational::from_usize(j), &BigRational::one());
    }
    let norm = BigRational::from_integer(clock::factorial(n - 1).into());
    let rising: Vec<BigRational> = rising.into_iter().map(|c| c / &norm).collect();
    Ok(pmf == Pmf::from_exact(0, rising)?)
}

fn occasional_gf(_: &MonteCarlo) -> Result<String> {
    let mut worst = 0.0f64;
    for q in [0.25, 0.5, 0.75] {
        worst = worst.max(gf_grid_gap(q)?);
    }
    ensure(worst < 1e-8, || format!("closed form vs series gap {worst}"))?;
    for n in 1..=6 {
        ensure(gf_reduction_holds(n)?, || format!("p=0 reduction fails at n={n}"))?;
    }
    Ok(format!("grid gap {worst:.2e}; p=0 reduction exact for n <= 6"))
}

fn occasional_dobrushin(_: &MonteCarlo) -> Result<String> {
    for q in [0.25, 0.5, 0.75] {
        let d: Vec<f64> = [100, 1_000, 10_000]
            .iter()
            .map(|&n| occasional::dobrushin_diagnostic(n, q).map(|d| d.condition))
            .collect::<Result<_>>()?;
        ensure(d.windows(2).all(|w| w[1] > w[0]), || format!("q={q}: condition {d:?}"))?;
    }
    Ok("alpha_n >= q and the condition value increases".into())
}

fn occasional_martingale(mc: &MonteCarlo) -> Result<String> {
    let (mean, se) = occasional::interval_martingale_increment(20, 0.5, 20_000, mc, 1e-12)?;
    ensure(mean.abs() < 4.0 * se, || format!("mean increment {mean} (se {se})"))?;
    Ok(format!("mean increment {mean:.4} (se {se:.4})"))
}

fn gw_laws() -> Vec<OffspringLaw> {
    vec![
        OffspringLaw::new(vec![0.5, 0.0, 0.5]).expect("valid"),
        OffspringLaw::new(vec![0.75, 0.25]).expect("valid"),
    ]
}

fn branching_recursion(_: &MonteCarlo) -> Result<String> {
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let mut worst = 0.0f64;
    for w in gw_laws() {
        for n in 1..=8 {
            worst = worst.max(branching::verify_h_recursion(n, &w, &grid)?);
        }
    }
    ensure(worst < 1e-10, || format!("residual {worst}"))?;
    Ok(format!("max residual {worst:.2e}"))
}

fn branching_exact(_: &MonteCarlo) -> Result<String> {
    let laws = gw_laws();
    ensure(branching::extinction_probability_exact(3, &laws[0])? == rat(9, 16), || "P(X_3 = 0)".into())?;
    ensure(branching::extinction_probability_exact(4, &laws[1])? == rat(113, 128), || "P(X_4 = 0)".into())?;
    for n in 1..=9 {
        ensure(branching::pgf_total_mass_exact(n, &laws[0])?, || format!("H_{n}(1) != 1"))?;
    }
    Ok("P(X_3 = 0) = 9/16; H_n(1) = 1".into())
}

fn branching_simulation(mc: &MonteCarlo) -> Result<String> {
    let mut worst = 0.0f64;
    for w in gw_laws() {
        for n in [3, 8] {
            let e = branching::extinction_experiment(n, &w, 50_000, mc, branching::DEFAULT_POPULATION_CAP)?;
            let z = (e.frequency - e.exact) / e.std_error;
            worst = worst.max(z.abs());
        }
    }
    ensure(worst < 4.0, || format!("largest |z| {worst}"))?;
    Ok(format!("largest |z| {worst:.2}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in ["all", "clock", "walk", "integral", "occasional", "branching"] {
            assert_eq!(s.parse::<Suite>().unwrap().name(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
        assert_eq!(check_names(Suite::All).len(), CHECKS.len());
    }

    #[test]
    fn full_suite_passes() {
        let r = run_suite(Suite::All, 1);
        assert!(r.passed, "{:?}", r.failures().collect::<Vec<_>>());
    }
}
