use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::montecarlo::Moments;
use crate::pmf::Pmf;

/// How a lattice CDF is compared with a continuous one at each atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KsConvention {
    /// `F(x)` including the atom at `x`.
    RightEndpoint,
    /// `F(x) - P(x)/2`, the lattice continuity correction.
    Midpoint,
}

impl KsConvention {
    pub fn name(self) -> &'static str {
        match self {
            Self::RightEndpoint => "right-endpoint",
            Self::Midpoint => "midpoint",
        }
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Max over atoms `x` of `|F(x) - Phi((x - mean)/sd)|` under the chosen
/// convention.
pub fn ks_statistic(pmf: &Pmf, mean: f64, sd: f64, convention: KsConvention) -> Result<f64> {
    check_normalized(pmf)?;
    if !(sd > 0.0) {
        return Err(Error::pre("standardization needs sd > 0"));
    }
    let mut cumulative = 0.0;
    let mut worst = 0.0f64;
    for (x, p) in pmf.iter() {
        cumulative += p;
        let z = (x as f64 - mean) / sd;
        let f = match convention {
            KsConvention::RightEndpoint => cumulative.min(1.0),
            KsConvention::Midpoint => cumulative - p / 2.0,
        };
        worst = worst.max((f - normal_cdf(z)).abs());
    }
    Ok(worst.min(1.0))
}

/// Total-variation distance `1/2 sum |P(x) - Q(x)|`.
pub fn tv_distance(a: &Pmf, b: &Pmf) -> Result<f64> {
    check_normalized(a)?;
    check_normalized(b)?;
    let lo = a.min_value().min(b.min_value());
    let hi = a.max_value().max(b.max_value());
    Ok(0.5 * crate::poly::compensated_sum((lo..=hi).map(|x| (a.prob(x) - b.prob(x)).abs())))
}

fn check_normalized(p: &Pmf) -> Result<()> {
    let m = p.total_mass();
    if (m - 1.0).abs() > 1e-9 {
        return Err(Error::Unnormalized(m));
    }
    Ok(())
}

/// Tally of integer observations.
pub fn counts(samples: impl IntoIterator<Item = i64>) -> BTreeMap<i64, u64> {
    let mut out = BTreeMap::new();
    for s in samples {
        *out.entry(s).or_insert(0) += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square of observed counts against a pmf. Adjacent cells are
/// pooled left to right until each has expected count at least 5;
/// observations outside the pmf's support fall into the end cells.
pub fn chi_square(observed: &BTreeMap<i64, u64>, expected: &Pmf) -> Result<ChiSquare> {
    check_normalized(expected)?;
    let total: u64 = observed.values().sum();
    if total == 0 {
        return Err(Error::pre("no observations"));
    }
    let lo = expected.min_value();
    let hi = expected.max_value();
    let obs_at = |x: i64| -> u64 {
        if x == lo {
            observed.range(..=lo).map(|(_, c)| c).sum()
        } else if x == hi {
            observed.range(hi..).map(|(_, c)| c).sum()
        } else {
            observed.get(&x).copied().unwrap_or(0)
        }
    };
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0.0);
    for x in lo..=hi {
        e_acc += expected.prob(x) * n;
        o_acc += obs_at(x) as f64;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => cells.push((o_acc, e_acc)),
        }
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).map_err(|e| Error::Invariant(e.to_string()))?;
        1.0 - dist.cdf(statistic)
    };
    Ok(ChiSquare {
        statistic,
        dof,
        p_value,
    })
}

/// One equal-count bin of a conditional-mean test.
#[derive(Debug, Clone, Serialize)]
pub struct BinStat {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub mean: f64,
    pub std_error: f64,
    /// `mean / std_error` (0 when the bin has no spread).
    pub z: f64,
}

/// Sorts `(x, y)` by `x`, splits into `bins` equal-count groups and
/// reports the mean of `y` in each.
pub fn binned_conditional_means(pairs: &mut [(f64, f64)], bins: usize) -> Vec<BinStat> {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = pairs.len();
    (0..bins)
        .filter_map(|b| {
            let start = b * n / bins;
            let end = (b + 1) * n / bins;
            if end <= start {
                return None;
            }
            let mut m = Moments::default();
            pairs[start..end].iter().for_each(|(_, y)| m.push(*y));
            let se = m.std_error();
            Some(BinStat {
                lo: pairs[start].0,
                hi: pairs[end - 1].0,
                count: m.count,
                mean: m.mean(),
                std_error: se,
                z: if se > 0.0 { m.mean() / se } else { 0.0 },
            })
        })
        .collect()
}
