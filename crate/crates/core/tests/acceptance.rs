//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints one `criterion N: PASS|FAIL` line; exits non-zero on any failure.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use reverting::branching::{self, OffspringLaw};
use reverting::integral::{self, LIMIT_VARIANCE};
use reverting::montecarlo::MonteCarlo;
use reverting::verify::{
    enumerate_clock, enumerate_walk, CLOCK_ENUMERATION_MAX_N, OCCASIONAL_ENUMERATION_MAX_N,
    WALK_ENUMERATION_MAX_N,
};
use reverting::{clock, nonuniform, occasional, suite, walk, Pmf, RandomStream, ReversionLaw, StepLaw};

const SEED: u64 = 20_240_601;

type Outcome = Result<String, String>;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: reverting::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn same(a: &Pmf, b: &Pmf, what: &str) -> Result<(), String> {
    check(a.is_exact() && b.is_exact() && a == b, || format!("{what}: distributions differ"))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    for n in 1..=CLOCK_ENUMERATION_MAX_N {
        same(&lib(clock::clock_pmf(n, 0.0))?, &lib(enumerate_clock(n, &ReversionLaw::Uniform))?, &format!("clock n={n}"))?;
    }
    let laws = [
        ReversionLaw::Explicit((1..=12).map(|k| k as f64).collect()),
        ReversionLaw::Explicit(vec![2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0, 2.0]),
        ReversionLaw::power(-2.0),
        ReversionLaw::power(2.0),
    ];
    for law in &laws {
        for n in 1..=CLOCK_ENUMERATION_MAX_N {
            same(
                &lib(nonuniform::weighted_clock_pmf(law, n, 0.0))?,
                &lib(enumerate_clock(n, law))?,
                &format!("weighted {} n={n}", law.describe()),
            )?;
        }
    }
    for (a, b) in [(1, 4), (1, 2), (3, 4), (1, 1)] {
        let q = rat(a, b);
        let law = lib(ReversionLaw::occasional(a as f64 / b as f64))?;
        for n in 1..=OCCASIONAL_ENUMERATION_MAX_N {
            let oracle = lib(enumerate_clock(n, &law))?;
            same(&lib(occasional::occasional_pmf(n, a as f64 / b as f64, 0.0))?, &oracle, &format!("occasional q={a}/{b} n={n}"))?;
            if n >= 2 {
                same(
                    &lib(occasional::backward_chain_pmf_exact(n - 1, &q))?,
                    &oracle,
                    &format!("backward chain q={a}/{b} n={n}"),
                )?;
            }
        }
    }
    for p in [0.5, 0.75, 0.125] {
        let step = lib(StepLaw::rademacher(p))?;
        for n in 1..=WALK_ENUMERATION_MAX_N {
            let e = lib(enumerate_walk(n, &step, &ReversionLaw::Uniform))?;
            same(&lib(walk::walk_pmf_simple(n, p))?, &lib(e.walk_marginal())?, &format!("walk p={p} n={n}"))?;
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("all exact routes equal enumeration in {:.2?}", elapsed))
}

/// `sum_{k=1}^{n} 1/k^power` as an exact rational.
fn harmonic(n: usize, power: u32) -> BigRational {
    (1..=n).fold(BigRational::zero(), |acc, k| {
        acc + BigRational::new(BigInt::one(), BigInt::from(k).pow(power))
    })
}

fn criterion_2() -> Outcome {
    check(lib(clock::clock_moments_exact(4))? == (rat(11, 6), rat(17, 36)), || "clock moments at n=4".into())?;
    let pmf4 = lib(clock::clock_pmf(4, 0.0))?;
    check(pmf4.exact_mean() == Some(rat(11, 6)) && pmf4.exact_variance() == Some(rat(17, 36)), || {
        "pmf at n=4 disagrees".into()
    })?;

    let half = rat(1, 2);
    check(lib(occasional::occasional_moments_exact(3, &half))?.0 == rat(7, 4), || "occasional m_3".into())?;
    let oracle = lib(enumerate_clock(3, &lib(ReversionLaw::occasional(0.5))?))?;
    check(oracle.exact_mean() == Some(rat(7, 4)), || "occasional oracle mean".into())?;
    check((lib(occasional::occasional_moments(3, 0.5))?.mean - 1.75).abs() < 1e-15, || "float m_3".into())?;

    for n in 1..=40 {
        let (m, v) = lib(clock::clock_moments_exact(n))?;
        let h1 = harmonic(n - 1, 1);
        let h2 = harmonic(n - 1, 2);
        check(m == h1.clone() && v == h1 - h2, || format!("partial sums at n={n}"))?;
    }
    for n in 1..=reverting::EXACT_MAX_N {
        let pmf = lib(clock::clock_pmf(n, 0.0))?;
        let (m, v) = lib(clock::clock_moments_exact(n))?;
        check(pmf.exact_mean() == Some(m) && pmf.exact_variance() == Some(v), || format!("pmf moments at n={n}"))?;
    }
    let big = lib(clock::clock_moments(1_000_000))?;
    check((big.mean - big.asymptotic_mean).abs() < 1e-5, || "mean vs log n + gamma".into())?;
    check((big.variance - big.asymptotic_variance).abs() < 1e-5, || "variance vs log n + gamma - pi^2/6".into())?;
    Ok("(11/6, 17/36), 7/4 and harmonic partial sums reproduced exactly".into())
}

fn criterion_3() -> Outcome {
    for n in 1..=12 {
        let pmf = lib(clock::clock_pmf(n + 1, 0.0))?;
        let fact = BigRational::from_integer(clock::factorial(n).into());
        for k in 0..=n {
            let want = BigRational::from_integer(lib(clock::stirling_first(n, k))?.into()) / &fact;
            let got = pmf.exact_prob(k as i64).ok_or("not exact")?;
            check(got == want, || format!("P(T_{} = {k})", n + 1))?;
        }
    }
    Ok("P(T_{n+1} = k) = [n,k]/n! for n <= 12".into())
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let v = lib(integral::martingale_variance(100_000))?;
    let elapsed = start.elapsed();
    let gap = (v.variance - LIMIT_VARIANCE).abs();
    check(gap < 5e-4, || format!("Var M = {}, gap {gap:.2e}", v.variance))?;
    check(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("Var M_1e5 = {:.7} (limit {LIMIT_VARIANCE:.7}, gap {gap:.2e}) in {elapsed:.2?}", v.variance))
}

fn criterion_5() -> Outcome {
    for m in [1, 5] {
        check(lib(integral::clock_covariance_exact(3, m))? == rat(1, 12), || format!("Cov(T_3, T_{})", 3 + m))?;
        check((lib(integral::clock_covariance(3, m))? - 1.0 / 12.0).abs() < 1e-15, || "float covariance".into())?;
    }
    let mc = MonteCarlo::new(SEED).with_stream_base(5 << 40);
    let est = lib(integral::covariance_experiment(50, &[1, 10, 100], 100_000, &mc))?;
    let formula = lib(integral::clock_covariance(50, 1))?;
    let mut parts = Vec::new();
    for e in &est {
        check((e.formula - formula).abs() < 1e-12, || format!("formula depends on m={}", e.m))?;
        check(e.z().abs() < 4.0, || format!("m={}: estimate {} vs {} (z={:.2})", e.m, e.estimate, e.formula, e.z()))?;
        parts.push(format!("m={} z={:+.2}", e.m, e.z()));
    }
    Ok(format!("exact 1/12; formula {formula:.6}; {}", parts.join(", ")))
}

fn criterion_6() -> Outcome {
    let mc = MonteCarlo::new(SEED).with_stream_base(6 << 40);
    let r = lib(integral::hoeffding_experiment(200, 10_000, &mc))?;
    check(r.trajectories == 10_000 && r.n == 200, || "wrong experiment size".into())?;
    check(r.violations == 0 && r.max_increment <= 1.5, || format!("{} violations", r.violations))?;
    Ok(format!("max |M_(k+1) - M_k| = {:.4} over 10^4 paths", r.max_increment))
}

fn criterion_7() -> Outcome {
    let ladder = lib(suite::clt_ladder())?;
    let ks: Vec<f64> = ladder.iter().map(|d| d.ks).collect();
    check(ks.windows(2).all(|w| w[1] < w[0]), || format!("KS not decreasing: {ks:?}"))?;
    check(ks[3] <= 0.05, || format!("KS(1e5) = {}", ks[3]))?;
    let right: Vec<String> = ladder.iter().map(|d| format!("{:.4}", d.ks_right_endpoint)).collect();
    let mid: Vec<String> = ks.iter().map(|k| format!("{k:.4}")).collect();
    Ok(format!("midpoint KS [{}]; right-endpoint [{}]", mid.join(", "), right.join(", ")))
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    for q in [0.25, 0.5, 0.75] {
        worst = worst.max(lib(suite::gf_grid_gap(q))?);
    }
    check(worst < 1e-8, || format!("closed form vs series gap {worst:.2e}"))?;
    for n in 1..=6 {
        check(lib(suite::gf_reduction_holds(n))?, || format!("reduction at n={n}"))?;
    }
    Ok(format!("grid gap {worst:.2e}; reduction exact for n <= 6"))
}

fn criterion_9() -> Outcome {
    for q in [0.25, 0.5, 0.75] {
        for n in 2..=10_000 {
            let d = lib(occasional::dobrushin_diagnostic(n, q))?;
            check(d.alpha >= q, || format!("alpha_{n} = {} < q = {q}", d.alpha))?;
        }
        let cond: Vec<f64> = [100, 1_000, 10_000]
            .iter()
            .map(|&n| occasional::dobrushin_diagnostic(n, q).map(|d| d.condition))
            .collect::<reverting::Result<_>>()
            .map_err(|e| e.to_string())?;
        check(cond.windows(2).all(|w| w[1] > w[0]), || format!("q={q}: condition {cond:?}"))?;
    }
    Ok("alpha_n >= q for n <= 10^4; condition increasing".into())
}

fn criterion_10() -> Outcome {
    let q = 0.5;
    let mut rng = RandomStream::new(SEED, 10 << 40);
    for _ in 0..2_000 {
        lib(occasional::occasional_martingale_trace(20, q, &mut rng, 1e-14))?;
    }
    let mc = MonteCarlo::new(SEED).with_stream_base(11 << 40);
    let (mean, se) = lib(occasional::interval_martingale_increment(19, q, 100_000, &mc, 1e-14))?;
    check((mean / se).abs() < 4.0, || format!("mean increment {mean:.3e} (se {se:.3e})"))?;
    Ok(format!("identity held on every trace; mean increment {mean:+.3e} +/- {se:.2e}"))
}

fn criterion_11() -> Outcome {
    let laws = [
        ("(1+s^2)/2", lib(OffspringLaw::new(vec![0.5, 0.0, 0.5]))?),
        ("3/4+s/4", lib(OffspringLaw::new(vec![0.75, 0.25]))?),
    ];
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let mut residual = 0.0f64;
    for (_, law) in &laws {
        for n in 1..=8 {
            residual = residual.max(lib(branching::verify_h_recursion(n, law, &grid))?);
        }
    }
    check(residual < 1e-10, || format!("recursion residual {residual:.2e}"))?;
    check(lib(branching::extinction_probability_exact(3, &laws[0].1))? == rat(9, 16), || "P(X_3 = 0)".into())?;

    let mut worst = 0.0f64;
    for (i, (name, law)) in laws.iter().enumerate() {
        for n in 1..=8 {
            let mc = MonteCarlo::new(SEED).with_stream_base(((12 + i as u64) << 40) + ((n as u64) << 32));
            let e = lib(branching::extinction_experiment(n, law, 1_000_000, &mc, branching::DEFAULT_POPULATION_CAP))?;
            let z = if e.std_error > 0.0 {
                (e.frequency - e.exact) / e.std_error
            } else if e.frequency == e.exact {
                0.0
            } else {
                f64::INFINITY
            };
            check(z.abs() < 4.0 && e.capped == 0, || {
                format!("{name} n={n}: {} vs {} (z={z:.2})", e.frequency, e.exact)
            })?;
            worst = worst.max(z.abs());
        }
    }
    Ok(format!("residual {residual:.2e}; P(X_3 = 0) = 9/16; max |z| {worst:.2}"))
}

fn criterion_12() -> Outcome {
    let (a, b) = lib(suite::beta_minus_two_variances())?;
    check((b - a).abs() < 1e-3, || format!("beta=-2: v changes by {:.2e}", b - a))?;
    let ladder = [100, 1_000, 10_000, 100_000];
    let mut parts = Vec::new();
    for beta in [0.0, 1.0] {
        let d = lib(nonuniform::lyapunov_ladder(&ReversionLaw::power(beta), &ladder))?;
        let r: Vec<f64> = d.iter().map(|x| x.ratio).collect();
        check(r.windows(2).all(|w| w[1] < w[0]), || format!("beta={beta}: ratios {r:?}"))?;
        parts.push(format!("beta={beta}: {:.4} -> {:.4}", r[0], r[3]));
    }
    Ok(format!("beta=-2: |v_1e6 - v_1e4| = {:.2e}; {}", (b - a).abs(), parts.join("; ")))
}

fn main() {
    let criteria: [(usize, fn() -> Outcome); 12] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
    ];
    let mut failed = 0;
    for (n, f) in criteria {
        let start = Instant::now();
        match f() {
            Ok(detail) => println!("criterion {n}: PASS ({:.1?}) {detail}", start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL ({:.1?}) {detail}", start.elapsed());
            }
        }
    }

    let mc = MonteCarlo::new(SEED).with_stream_base(20 << 40);
    if let Ok(s) = integral::martingale_summary(200, 20_000, &mc) {
        println!(
            "observed: M_200 over 2*10^4 paths has mean {:+.4}, variance {:.4}, skewness {:+.3}",
            s.mean, s.variance, s.skewness
        );
    }
    println!("acceptance: {} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
