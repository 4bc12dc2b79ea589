use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::law::{ReversionLaw, StepLaw};
use crate::pmf::Pmf;
use crate::poly::{f64_to_ratio, Scalar};

pub const CLOCK_ENUMERATION_MAX_N: usize = 9;
pub const OCCASIONAL_ENUMERATION_MAX_N: usize = 8;
pub const WALK_ENUMERATION_MAX_N: usize = 7;
pub const INTEGRATED_ENUMERATION_MAX_N: usize = 8;

/// Every way the reversion at step `k` can happen, with its exact
/// probability. Occasional laws list the gate outcomes separately, so the
/// index `k` appears once for `I_k = 0` and once for `I_k = 1, U(k) = k`.
pub fn reversion_branches(law: &ReversionLaw, k: usize) -> Result<Vec<(usize, BigRational)>> {
    law.validate()?;
    let kk = BigRational::from_frac(1, k as i64);
    match law {
        ReversionLaw::Uniform => Ok((1..=k).map(|j| (j, kk.clone())).collect()),
        ReversionLaw::Occasional { q } => {
            let q = f64_to_ratio(*q).ok_or_else(|| Error::config("q is not finite"))?;
            let p = BigRational::one() - &q;
            let mut out = vec![(k, p)];
            out.extend((1..=k).map(|j| (j, &q * &kk)));
            Ok(out)
        }
        _ => {
            let weights = (1..=k).map(|j| law.exact_weight(j)).collect::<Result<Vec<_>>>()?;
            let total = weights.iter().fold(BigRational::zero(), |a, b| a + b);
            Ok(weights.into_iter().enumerate().map(|(i, a)| (i + 1, a / &total)).collect())
        }
    }
}

/// Visits every reversion history of length `n` with `(T_1..T_n,
/// reversions, probability)`.
pub fn for_each_history(
    n: usize,
    law: &ReversionLaw,
    mut visit: impl FnMut(&[u64], &[usize], &BigRational),
) -> Result<()> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let branches = (1..n).map(|k| reversion_branches(law, k)).collect::<Result<Vec<_>>>()?;
    let mut values = vec![0u64];
    let mut reversions = Vec::new();
    descend(&branches, &mut values, &mut reversions, &BigRational::one(), &mut visit);
    Ok(())
}

fn descend(
    branches: &[Vec<(usize, BigRational)>],
    values: &mut Vec<u64>,
    reversions: &mut Vec<usize>,
    prob: &BigRational,
    visit: &mut dyn FnMut(&[u64], &[usize], &BigRational),
) {
    let k = values.len();
    if k > branches.len() {
        visit(values, reversions, prob);
        return;
    }
    for (j, pj) in &branches[k - 1] {
        values.push(1 + values[j - 1]);
        reversions.push(*j);
        descend(branches, values, reversions, &(prob * pj), visit);
        values.pop();
        reversions.pop();
    }
}

fn enumeration_limit(law: &ReversionLaw) -> usize {
    if matches!(law, ReversionLaw::Occasional { .. }) {
        OCCASIONAL_ENUMERATION_MAX_N
    } else {
        CLOCK_ENUMERATION_MAX_N
    }
}

/// Exact law of `T_n` by total enumeration.
pub fn enumerate_clock(n: usize, law: &ReversionLaw) -> Result<Pmf> {
    let max = enumeration_limit(law);
    if n > max {
        return Err(Error::Size {
            what: "n (clock enumeration)",
            value: n,
            max,
        });
    }
    let mut dist: BTreeMap<u64, BigRational> = BTreeMap::new();
    for_each_history(n, law, |values, _, p| {
        *dist.entry(values[n - 1]).or_insert_with(BigRational::zero) += p;
    })?;
    map_to_pmf(dist.into_iter().map(|(k, v)| (k as i64, v)).collect())
}

fn map_to_pmf(dist: BTreeMap<i64, BigRational>) -> Result<Pmf> {
    let lo = *dist.keys().next().ok_or_else(|| Error::Invariant("empty enumeration".into()))?;
    let hi = *dist.keys().last().unwrap_or(&lo);
    let mut dense = vec![BigRational::zero(); (hi - lo + 1) as usize];
    for (k, v) in dist {
        dense[(k - lo) as usize] = v;
    }
    Pmf::from_exact(lo, dense)
}

/// Exact joint law of `(T_n, R_n)` for the coupled walk.
#[derive(Debug, Clone)]
pub struct WalkEnumeration {
    pub n: usize,
    pub joint: BTreeMap<(u64, i64), BigRational>,
}

impl WalkEnumeration {
    pub fn clock_marginal(&self) -> Result<Pmf> {
        let mut m = BTreeMap::new();
        for ((t, _), p) in &self.joint {
            *m.entry(*t as i64).or_insert_with(BigRational::zero) += p;
        }
        map_to_pmf(m)
    }

    pub fn walk_marginal(&self) -> Result<Pmf> {
        let mut m = BTreeMap::new();
        for ((_, r), p) in &self.joint {
            *m.entry(*r).or_insert_with(BigRational::zero) += p;
        }
        map_to_pmf(m)
    }

    /// Law of `R_n` given `T_n = t`.
    pub fn conditional_walk(&self, t: u64) -> Result<Pmf> {
        let mut m = BTreeMap::new();
        let mut total = BigRational::zero();
        for ((tt, r), p) in &self.joint {
            if *tt == t {
                *m.entry(*r).or_insert_with(BigRational::zero) += p;
                total += p;
            }
        }
        if total.is_zero() {
            return Err(Error::pre(format!("T_n = {t} has probability zero")));
        }
        map_to_pmf(m.into_iter().map(|(k, v)| (k, v / &total)).collect())
    }
}

/// Enumerates reversion histories and step values jointly.
pub fn enumerate_walk(n: usize, step: &StepLaw, law: &ReversionLaw) -> Result<WalkEnumeration> {
    if n == 0 || n > WALK_ENUMERATION_MAX_N {
        return Err(Error::Size {
            what: "n (walk enumeration)",
            value: n,
            max: WALK_ENUMERATION_MAX_N,
        });
    }
    let lattice = step
        .lattice()
        .filter(Pmf::is_exact)
        .ok_or_else(|| Error::config("walk enumeration needs an integer step law with exact probabilities"))?;
    let steps: Vec<(i64, BigRational)> = lattice
        .exact_iter()
        .map(|it| it.map(|(x, p)| (x, p.clone())).collect())
        .unwrap_or_default();
    if steps.len() > 3 {
        return Err(Error::Size {
            what: "step support",
            value: steps.len(),
            max: 3,
        });
    }
    let branches = (1..n).map(|k| reversion_branches(law, k)).collect::<Result<Vec<_>>>()?;
    let mut joint = BTreeMap::new();
    let mut t = vec![0u64];
    let mut r = vec![0i64];
    walk_descend(&branches, &steps, &mut t, &mut r, &BigRational::one(), &mut joint);
    Ok(WalkEnumeration { n, joint })
}

fn walk_descend(
    branches: &[Vec<(usize, BigRational)>],
    steps: &[(i64, BigRational)],
    t: &mut Vec<u64>,
    r: &mut Vec<i64>,
    prob: &BigRational,
    joint: &mut BTreeMap<(u64, i64), BigRational>,
) {
    let k = t.len();
    if k > branches.len() {
        *joint
            .entry((t[k - 1], r[k - 1]))
            .or_insert_with(BigRational::zero) += prob;
        return;
    }
    for (j, pj) in &branches[k - 1] {
        let pj = prob * pj;
        for (x, px) in steps {
            t.push(1 + t[j - 1]);
            r.push(r[j - 1] + x);
            walk_descend(branches, steps, t, r, &(&pj * px), joint);
            t.pop();
            r.pop();
        }
    }
}

/// Exact quantities of the uniform clock's time integral at `n`.
#[derive(Debug, Clone)]
pub struct IntegratedEnumeration {
    pub n: usize,
    /// Law of `(S_n, T_n)`.
    pub joint: BTreeMap<(u64, u64), BigRational>,
    pub mean_s: BigRational,
    pub var_s: BigRational,
    /// `E M_n`, which must be zero.
    pub mean_m: BigRational,
    pub var_m: BigRational,
    /// `Cov(T_n, T_{n+1})`.
    pub cov_next: BigRational,
}

pub fn enumerate_integrated(n: usize) -> Result<IntegratedEnumeration> {
    if n == 0 || n > INTEGRATED_ENUMERATION_MAX_N {
        return Err(Error::Size {
            what: "n (integral enumeration)",
            value: n,
            max: INTEGRATED_ENUMERATION_MAX_N,
        });
    }
    let mut joint: BTreeMap<(u64, u64), BigRational> = BTreeMap::new();
    let mut e_t = BigRational::zero();
    let mut e_next = BigRational::zero();
    let mut e_t_next = BigRational::zero();
    for_each_history(n + 1, &ReversionLaw::Uniform, |values, _, p| {
        let s: u64 = values[..n].iter().sum();
        let t = values[n - 1];
        let next = values[n];
        *joint.entry((s, t)).or_insert_with(BigRational::zero) += p;
        e_t += p * BigRational::from_integer(t.into());
        e_next += p * BigRational::from_integer(next.into());
        e_t_next += p * BigRational::from_integer((t * next).into());
    })?;
    let mut mean_s = BigRational::zero();
    let mut second_s = BigRational::zero();
    for ((s, _), p) in &joint {
        let s = BigRational::from_integer((*s).into());
        second_s += &s * &s * p;
        mean_s += s * p;
    }
    let var_s = &second_s - &mean_s * &mean_s;
    let nn = BigRational::from_integer((n as i64).into());
    let mut mean_m = BigRational::zero();
    for ((s, _), p) in &joint {
        mean_m += (BigRational::from_integer((*s).into()) - &mean_s) / &nn * p;
    }
    let var_m = &var_s / (&nn * &nn);
    let cov_next = e_t_next - e_t * e_next;
    Ok(IntegratedEnumeration {
        n,
        joint,
        mean_s,
        var_s,
        mean_m,
        var_m,
        cov_next,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn uniform_clock_small() {
        let p3 = enumerate_clock(3, &ReversionLaw::Uniform).unwrap();
        assert_eq!(p3.exact_probs().unwrap(), &[q(1, 2), q(1, 2)]);
        let p4 = enumerate_clock(4, &ReversionLaw::Uniform).unwrap();
        assert_eq!(p4.exact_probs().unwrap(), &[q(1, 3), q(1, 2), q(1, 6)]);
    }

    #[test]
    fn occasional_clock_small() {
        let p = enumerate_clock(3, &ReversionLaw::Occasional { q: 0.5 }).unwrap();
        assert_eq!(p.exact_prob(1).unwrap(), q(1, 4));
        assert_eq!(p.exact_prob(2).unwrap(), q(3, 4));
    }

    #[test]
    fn enumeration_limits() {
        assert!(enumerate_clock(10, &ReversionLaw::Uniform).is_err());
        assert!(enumerate_clock(9, &ReversionLaw::Occasional { q: 0.5 }).is_err());
        let step = StepLaw::rademacher(0.5).unwrap();
        assert!(enumerate_walk(8, &step, &ReversionLaw::Uniform).is_err());
        assert!(enumerate_integrated(9).is_err());
    }

    #[test]
    fn every_oracle_sums_to_one() {
        for n in 1..=6 {
            let mut total = BigRational::zero();
            for_each_history(n, &ReversionLaw::Occasional { q: 0.25 }, |_, _, p| total += p).unwrap();
            assert!(total.is_one());
        }
    }

    #[test]
    fn walk_three_rademacher() {
        let step = StepLaw::rademacher(0.5).unwrap();
        let e = enumerate_walk(3, &step, &ReversionLaw::Uniform).unwrap();
        let r = e.walk_marginal().unwrap();
        assert_eq!(r.min_value(), -2);
        assert_eq!(
            r.exact_probs().unwrap(),
            &[q(1, 8), q(1, 4), q(1, 4), q(1, 4), q(1, 8)]
        );
    }

    #[test]
    fn zero_step_walk_is_zero() {
        let e = enumerate_walk(5, &StepLaw::constant(0), &ReversionLaw::Uniform).unwrap();
        assert_eq!(e.walk_marginal().unwrap(), Pmf::point(0));
        assert_eq!(
            e.clock_marginal().unwrap(),
            enumerate_clock(5, &ReversionLaw::Uniform).unwrap()
        );
    }

    #[test]
    fn integrated_small() {
        let e2 = enumerate_integrated(2).unwrap();
        assert!(e2.var_m.is_zero());
        let e3 = enumerate_integrated(3).unwrap();
        assert_eq!(e3.var_m, q(1, 36));
        assert_eq!(e3.cov_next, q(1, 12));
        assert_eq!(e3.mean_s, q(5, 2));
        assert!(e3.mean_m.is_zero());
    }
}
