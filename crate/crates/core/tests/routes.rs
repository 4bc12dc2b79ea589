use num_rational::BigRational;

use reverting::montecarlo::MonteCarlo;
use reverting::verify::{chi_square, counts, tv_distance};
use reverting::{clock, nonuniform, occasional, walk, ReversionLaw, StepLaw};

const SEED: u64 = 77;

#[test]
fn float_and_exact_clock_agree() {
    for n in 1..=13 {
        let exact = clock::clock_pmf(n, 0.0).unwrap();
        let float = clock::clock_pmf(n, 1e-300).unwrap();
        assert!(tv_distance(&exact, &float).unwrap() < 1e-14, "n={n}");
    }
}

#[test]
fn truncated_large_n_keeps_moments() {
    let n = 5_000;
    let pmf = clock::clock_pmf(n, 1e-15).unwrap();
    let m = clock::clock_moments(n).unwrap();
    assert!(pmf.dropped_mass() < 1e-12);
    assert!((pmf.mean() - m.mean).abs() < 1e-9);
    assert!((pmf.variance() - m.variance).abs() < 1e-8);
}

#[test]
fn simulation_routes_match_exact_law() {
    let n = 12;
    let pmf = clock::clock_pmf(n, 0.0).unwrap();
    let mc = MonteCarlo::new(SEED);
    let backward = mc.run(20_000, |rng| {
        clock::backward_reversion_times(n - 1, rng).map(|t| t.len() as i64).unwrap()
    });
    let p = chi_square(&counts(backward), &pmf).unwrap().p_value;
    assert!(p > 1e-4, "backward route p = {p}");
}

#[test]
fn weighted_simulation_matches_exact_law() {
    let law = ReversionLaw::power(1.0);
    let n = 10;
    let pmf = nonuniform::weighted_clock_pmf(&law, n, 0.0).unwrap();
    let sims = MonteCarlo::new(SEED).with_stream_base(1 << 32).run(20_000, |rng| {
        clock::simulate_clock(n, &law, rng).unwrap().last() as i64
    });
    let p = chi_square(&counts(sims), &pmf).unwrap().p_value;
    assert!(p > 1e-4, "p = {p}");
}

#[test]
fn occasional_routes_match() {
    let q = 0.25;
    let n = 11;
    let pmf = occasional::occasional_pmf(n, q, 0.0).unwrap();
    let mc = MonteCarlo::new(SEED).with_stream_base(2 << 32);
    let forward = mc.run(20_000, |rng| *occasional::simulate_occasional(n, q, rng).unwrap().values.last().unwrap() as i64);
    let chain = mc.with_stream_base(3 << 32).run(20_000, |rng| {
        occasional::backward_chain_sample(n - 1, q, rng).unwrap() as i64
    });
    for (name, s) in [("forward", forward), ("backward chain", chain)] {
        let p = chi_square(&counts(s), &pmf).unwrap().p_value;
        assert!(p > 1e-4, "{name}: p = {p}");
    }
    let exact = occasional::occasional_pmf_exact(n, &BigRational::new(1.into(), 4.into())).unwrap();
    assert_eq!(pmf, exact);
}

#[test]
fn walk_routes_match() {
    let n = 10;
    let p = 0.75;
    let step = StepLaw::rademacher(p).unwrap();
    let pmf = walk::walk_pmf_simple(n, p).unwrap();
    let mc = MonteCarlo::new(SEED).with_stream_base(4 << 32);
    let sub = mc.run(20_000, |rng| walk::simulate_walk_subordinated(n, &step, rng).unwrap() as i64);
    let inh = mc.with_stream_base(5 << 32).run(20_000, |rng| walk::simulate_walk_inhomogeneous(n, p, rng).unwrap());
    for (name, s) in [("subordinated", sub), ("inhomogeneous", inh)] {
        let pv = chi_square(&counts(s), &pmf).unwrap().p_value;
        assert!(pv > 1e-4, "{name}: p = {pv}");
    }
}

#[test]
fn same_seed_same_samples_any_thread_count() {
    let mc = MonteCarlo::new(3);
    let f = |rng: &mut reverting::RandomStream| clock::simulate_clock_bernoulli(200, rng).unwrap();
    let a = reverting::montecarlo::with_threads(1, || mc.run(10_000, f));
    let b = reverting::montecarlo::with_threads(4, || mc.run(10_000, f));
    assert_eq!(a, b);
}
