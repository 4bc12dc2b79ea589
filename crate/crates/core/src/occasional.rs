//! The occasionally reverting clock: at step `n` it reverts uniformly to
//! `{1..n}` with probability `q` and otherwise continues from `n`, so
//! `V(n) = n (1 - I_n) + U(n) I_n` and `T_{n+1} = 1 + T_{V(n)}`.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand_distr::{Distribution, Geometric};
use serde::Serialize;

use crate::clock;
use crate::error::{Error, Result};
use crate::montecarlo::{Moments, MonteCarlo};
use crate::pmf::Pmf;
use crate::poly::{self, f64_to_ratio, CompensatedSum, Scalar};
use crate::rng::RandomStream;
use crate::EXACT_MAX_N;

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("reversion probability q = {q} must lie in (0, 1]")))
    }
}

/// One simulated path with all of its bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccasionalTrace {
    /// `T_1..T_n`.
    pub values: Vec<u64>,
    /// `I_1..I_{n-1}`.
    pub gates: Vec<bool>,
    /// `V(1)..V(n-1)`.
    pub targets: Vec<usize>,
}

impl OccasionalTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Reversion epochs `N(1) < N(2) < ...`: the steps `k` with `I_k = 1`.
    pub fn reversion_times(&self) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, &g)| g)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Number of reversions among the first `k` steps.
    pub fn reversion_count(&self, k: usize) -> usize {
        self.gates[..k.min(self.gates.len())].iter().filter(|&&g| g).count()
    }

    /// Inter-reversion intervals `Y_1 = N(1)`, `Y_j = N(j) - N(j-1)`.
    pub fn intervals(&self) -> Vec<usize> {
        let times = self.reversion_times();
        let mut prev = 0;
        times
            .into_iter()
            .map(|t| {
                let y = t - prev;
                prev = t;
                y
            })
            .collect()
    }

    /// Checks the target rule, the clock increments and `Y_1 + ... + Y_j = N(j)`.
    pub fn check(&self) -> Result<()> {
        let n = self.values.len();
        if n == 0 || self.values[0] != 0 || self.gates.len() + 1 != n || self.targets.len() + 1 != n {
            return Err(Error::Invariant("malformed occasional trace".into()));
        }
        for k in 1..n {
            let v = self.targets[k - 1];
            if !self.gates[k - 1] && v != k || v == 0 || v > k {
                return Err(Error::Invariant(format!("V({k}) = {v} is not allowed")));
            }
            if self.values[k] != 1 + self.values[v - 1] {
                return Err(Error::Invariant(format!("T_{} != 1 + T_V({k})", k + 1)));
            }
        }
        let mut total = 0;
        for (y, t) in self.intervals().into_iter().zip(self.reversion_times()) {
            total += y;
            if total != t {
                return Err(Error::Invariant("interval sums disagree with reversion times".into()));
            }
        }
        Ok(())
    }
}

pub fn simulate_occasional(n: usize, q: f64, rng: &mut RandomStream) -> Result<OccasionalTrace> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    check_q(q)?;
    let mut values = Vec::with_capacity(n);
    let mut gates = Vec::with_capacity(n - 1);
    let mut targets = Vec::with_capacity(n - 1);
    values.push(0u64);
    for k in 1..n {
        let gate = rng.bernoulli(q);
        let v = if gate { rng.index(k) } else { k };
        values.push(1 + values[v - 1]);
        gates.push(gate);
        targets.push(v);
    }
    Ok(OccasionalTrace { values, gates, targets })
}

/// Coefficients of `G_n(s)` from `G_{k+1} = s p G_k + (s q / k) sum_{j<=k} G_j`.
pub fn occasional_coefficients<T: Scalar>(n: usize, q: &T) -> Vec<T> {
    let p = T::one() - q.clone();
    let mut g = vec![T::one()];
    let mut running = vec![T::one()];
    for k in 1..n {
        let mut next = vec![T::zero(); k + 1];
        let w = q.clone() / T::from_usize(k);
        for (j, c) in g.iter().enumerate() {
            next[j + 1] = next[j + 1].clone() + p.clone() * c.clone();
        }
        for (j, c) in running.iter().enumerate() {
            next[j + 1] = next[j + 1].clone() + w.clone() * c.clone();
        }
        poly::add_assign(&mut running, &next);
        g = next;
    }
    g
}

/// Law of `T_n`. `tail_tolerance = 0` asks for exact rationals
/// (`n <= EXACT_MAX_N`), computed with `q` read as an exact binary fraction.
pub fn occasional_pmf(n: usize, q: f64, tail_tolerance: f64) -> Result<Pmf> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    check_q(q)?;
    if tail_tolerance == 0.0 {
        if n > EXACT_MAX_N {
            return Err(Error::Size {
                what: "n (exact mode)",
                value: n,
                max: EXACT_MAX_N,
            });
        }
        let qr = f64_to_ratio(q).ok_or_else(|| Error::config("q is not finite"))?;
        return occasional_pmf_exact(n, &qr);
    }
    if !(tail_tolerance > 0.0) {
        return Err(Error::pre("tail tolerance must be >= 0"));
    }
    clock::trim_tails(occasional_coefficients(n, &q), 0.0, tail_tolerance)
}

pub fn occasional_pmf_exact(n: usize, q: &BigRational) -> Result<Pmf> {
    if n > EXACT_MAX_N {
        return Err(Error::Size {
            what: "n (exact mode)",
            value: n,
            max: EXACT_MAX_N,
        });
    }
    if !(q > &BigRational::zero() && q <= &BigRational::one()) {
        return Err(Error::config("q must lie in (0, 1]"));
    }
    Pmf::from_coefficients(0, occasional_coefficients(n.max(1), q))
}

fn gf_exponents(s: Complex64, q: f64) -> Result<(Complex64, Complex64, Complex64)> {
    let p = 1.0 - q;
    let denom = 1.0 - s * p;
    if denom.norm() < 1e-14 {
        return Err(Error::pre("s p = 1 is a singular point of the generating function"));
    }
    Ok((s * p, (s - 1.0) / denom, -q * s / denom))
}

/// `G(s, z) = sum_k z^{k-1} G_k(s) = (1 - s p z)^{(s-1)/(1-sp)} (1 - z)^{-q s/(1-sp)}`.
pub fn occasional_bivariate_gf(s: f64, z: f64, q: f64) -> Result<f64> {
    check_q(q)?;
    if !(0.0..=1.0).contains(&s) || !(0.0..1.0).contains(&z) {
        return Err(Error::pre("need s in [0, 1] and z in [0, 1)"));
    }
    let (sp, a, b) = gf_exponents(Complex64::new(s, 0.0), q)?;
    let (sp, a, b) = (sp.re, a.re, b.re);
    Ok((1.0 - sp * z).powf(a) * (1.0 - z).powf(b))
}

/// `sum_k z^{k-1} E exp(i theta T_k) = G(e^{i theta}, z)`.
pub fn occasional_char_function(theta: f64, z: f64, q: f64) -> Result<Complex64> {
    check_q(q)?;
    if !(0.0..1.0).contains(&z) {
        return Err(Error::pre("need z in [0, 1)"));
    }
    let s = Complex64::from_polar(1.0, theta);
    let (sp, a, b) = gf_exponents(s, q)?;
    Ok(((1.0 - sp * z).ln() * a + (1.0 - z).ln() * b).exp())
}

/// Truncated series `sum_{k<=K} z^{k-1} G_k(s)`, with `K` the first index
/// at which the tail bound `z^K / (1 - z)` drops below `tolerance`.
pub fn occasional_gf_series(s: f64, z: f64, q: f64, tolerance: f64) -> Result<f64> {
    check_q(q)?;
    if !(0.0..=1.0).contains(&s) || !(0.0..1.0).contains(&z) || !(tolerance > 0.0) {
        return Err(Error::pre("need s in [0, 1], z in [0, 1) and a positive tolerance"));
    }
    let p = 1.0 - q;
    let mut g = 1.0;
    let mut running = 1.0;
    let mut zk = 1.0;
    let mut total = CompensatedSum::default();
    total.add(g);
    let mut k = 1usize;
    while zk * z / (1.0 - z) >= tolerance {
        g = s * p * g + s * q / k as f64 * running;
        running += g;
        zk *= z;
        total.add(zk * g);
        k += 1;
    }
    Ok(total.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccasionalMoments {
    pub n: usize,
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    /// `w_n / m_n^2`, which tends to one.
    pub ratio: f64,
}

/// `m_n` from the closed sum and `w_n = E T_n^2` from its forward recursion.
pub fn occasional_moments(n: usize, q: f64) -> Result<OccasionalMoments> {
    Ok(*occasional_moment_table(n, q)?.last().ok_or_else(|| Error::pre("n must be at least 1"))?)
}

/// `occasional_moments(k, q)` for every `k = 1..=n`.
pub fn occasional_moment_table(n: usize, q: f64) -> Result<Vec<OccasionalMoments>> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    check_q(q)?;
    let p = 1.0 - q;
    let mut out = Vec::with_capacity(n);
    let mut closed = CompensatedSum::default();
    let mut pk = 1.0;
    let (mut m, mut w) = (0.0f64, 0.0f64);
    let mut sum_m = CompensatedSum::default();
    let mut sum_w = CompensatedSum::default();
    for k in 1..=n {
        let variance = (w - m * m).max(0.0);
        out.push(OccasionalMoments {
            n: k,
            mean: m,
            second_moment: w,
            variance,
            ratio: if m > 0.0 { w / (m * m) } else { f64::NAN },
        });
        // advance to k + 1
        sum_m.add(m);
        sum_w.add(w);
        let kf = k as f64;
        w = 1.0 + 2.0 * p * m + p * w + 2.0 * q / kf * sum_m.value() + q / kf * sum_w.value();
        pk *= p;
        closed.add((1.0 - pk) / kf);
        m = closed.value() / q;
    }
    Ok(out)
}

/// Exact `(m_n, w_n)` by the forward recursions.
pub fn occasional_moments_exact(n: usize, q: &BigRational) -> Result<(BigRational, BigRational)> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let p = BigRational::one() - q;
    let two = BigRational::from_integer(2.into());
    let (mut m, mut w) = (BigRational::zero(), BigRational::zero());
    let (mut sm, mut sw) = (BigRational::zero(), BigRational::zero());
    for k in 1..n {
        sm += &m;
        sw += &w;
        let kk = BigRational::from_integer((k as i64).into());
        let next_m = BigRational::one() + &p * &m + q * &sm / &kk;
        w = BigRational::one() + &two * &p * &m + &p * &w + &two * q * &sm / &kk + q * &sw / &kk;
        m = next_m;
    }
    Ok((m, w))
}

/// Closed form of the second-moment increment `w_{n+2} - w_{n+1}`:
/// `(p^n/(n+1)) sum_{k=1}^{n+1} [2(1-p^k)/(q p^{k-1}) + (2 m_k - 1)/p^{k-1}]`.
pub fn second_moment_increment(n: usize, q: f64) -> Result<f64> {
    check_q(q)?;
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    let table = occasional_moment_table(n + 1, q)?;
    let p = 1.0 - q;
    let mut total = CompensatedSum::default();
    for k in 1..=n + 1 {
        // p^n / p^{k-1} = p^{n-k+1}
        let scale = p.powi((n + 1 - k) as i32);
        let pk = p.powi(k as i32);
        total.add(scale * (2.0 * (1.0 - pk) / q + 2.0 * table[k - 1].mean - 1.0));
    }
    Ok(total.value() / (n + 1) as f64)
}

/// Transition probabilities `(pi_11, pi_01)` at the `k`-th backward step
/// of the chain behind `T_{n+1} = Z_1 + ... + Z_n`.
pub fn backward_transition(n: usize, k: usize, q: f64) -> (f64, f64) {
    let d = (n - k) as f64;
    (1.0 - q + q / d, 1.0 / d)
}

/// Samples `T_{n+1}` by running the reversed chain `Z_n, Z_{n-1}, ..., Z_1`.
pub fn backward_chain_sample(n: usize, q: f64, rng: &mut RandomStream) -> Result<u64> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    check_q(q)?;
    let mut z = rng.bernoulli(1.0 - q + q / n as f64);
    let mut total = z as u64;
    for k in 1..n {
        let (p11, p01) = backward_transition(n, k, q);
        z = rng.bernoulli(if z { p11 } else { p01 });
        total += z as u64;
    }
    Ok(total)
}

/// Exact law of `T_{n+1}` from the backward chain, by dynamic programming
/// over (current state, running count).
pub fn backward_chain_coefficients<T: Scalar>(n: usize, q: &T) -> Vec<T> {
    let p = T::one() - q.clone();
    let start = p.clone() + q.clone() / T::from_usize(n);
    // dist[state][count]
    let mut ones = vec![T::zero(), start.clone()];
    let mut zeros = vec![T::one() - start];
    for k in 1..n {
        let d = T::from_usize(n - k);
        let p11 = p.clone() + q.clone() / d.clone();
        let p01 = T::one() / d;
        let len = ones.len().max(zeros.len()) + 1;
        let mut new_ones = vec![T::zero(); len];
        let mut new_zeros = vec![T::zero(); len];
        for (c, v) in ones.iter().enumerate() {
            new_ones[c + 1] = new_ones[c + 1].clone() + v.clone() * p11.clone();
            new_zeros[c] = new_zeros[c].clone() + v.clone() * (T::one() - p11.clone());
        }
        for (c, v) in zeros.iter().enumerate() {
            new_ones[c + 1] = new_ones[c + 1].clone() + v.clone() * p01.clone();
            new_zeros[c] = new_zeros[c].clone() + v.clone() * (T::one() - p01.clone());
        }
        ones = new_ones;
        zeros = new_zeros;
    }
    let mut out = ones;
    poly::add_assign(&mut out, &zeros);
    out
}

/// Exact pmf of `T_{n+1}` from the backward chain.
pub fn backward_chain_pmf_exact(n: usize, q: &BigRational) -> Result<Pmf> {
    if n == 0 {
        return Err(Error::pre("n must be at least 1"));
    }
    if n + 1 > EXACT_MAX_N {
        return Err(Error::Size {
            what: "n (exact mode)",
            value: n + 1,
            max: EXACT_MAX_N,
        });
    }
    Pmf::from_coefficients(0, backward_chain_coefficients(n, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DobrushinDiagnostic {
    pub n: usize,
    pub q: f64,
    /// Ergodicity coefficient `alpha_n`, at least `q`.
    pub alpha: f64,
    /// `sum_k Var Z_k` from the chain marginals.
    pub variance_sum: f64,
    /// `sum_{k<n} q (k-1)/k^2 <= sum_k Var Z_k`.
    pub variance_lower_bound: f64,
    /// `alpha_n^3 sum_k Var Z_k`.
    pub condition: f64,
    /// `alpha_n^3` times the lower bound.
    pub condition_lower_bound: f64,
}

pub fn dobrushin_diagnostic(n: usize, q: f64) -> Result<DobrushinDiagnostic> {
    if n < 2 {
        return Err(Error::pre("the Dobrushin diagnostic needs n >= 2"));
    }
    check_q(q)?;
    let mut alpha = 1.0f64;
    for k in 1..n {
        let (p11, p01) = backward_transition(n, k, q);
        alpha = alpha.min(1.0 - (p11 - p01).abs());
    }
    if alpha < q - 1e-15 {
        return Err(Error::Invariant(format!("alpha_{n} = {alpha} is below q = {q}")));
    }
    let mut prob = 1.0 - q + q / n as f64;
    let mut var = CompensatedSum::default();
    var.add(prob * (1.0 - prob));
    for k in 1..n {
        let (p11, p01) = backward_transition(n, k, q);
        prob = prob * p11 + (1.0 - prob) * p01;
        var.add(prob * (1.0 - prob));
    }
    let lower = poly::compensated_sum((1..n).map(|k| q * (k as f64 - 1.0) / (k as f64 * k as f64)));
    let a3 = alpha.powi(3);
    Ok(DobrushinDiagnostic {
        n,
        q,
        alpha,
        variance_sum: var.value(),
        variance_lower_bound: lower,
        condition: a3 * var.value(),
        condition_lower_bound: a3 * lower,
    })
}

/// One reversion epoch of the interval martingale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Epoch {
    /// Epoch index `n`.
    pub n: usize,
    /// `N(n)`, the step of the `n`-th reversion.
    pub reversion_time: usize,
    /// `Y_n`.
    pub interval: usize,
    /// `S_{N(n)} = T_1 + ... + T_{N(n)}`.
    pub s: u64,
    /// `c(N(n)) = sum_r q p^{r-1} r(r+1) / (2(N(n)+r))`, truncated.
    pub correction: f64,
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccasionalMartingaleTrace {
    pub q: f64,
    pub epochs: Vec<Epoch>,
    /// Sum of the truncation error bounds of the corrections used.
    pub truncation_bound: f64,
}

/// `c(N)` truncated once the majorant
/// `sum_{r>R} q p^{r-1} r(r+1) / (2(N+1))` falls below `tolerance`.
/// Returns the value and the bound on the omitted tail.
pub fn interval_correction(big_n: usize, q: f64, tolerance: f64) -> Result<(f64, f64)> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::config(format!("q = {q} must lie in (0, 1) for the interval martingale")));
    }
    if !(tolerance > 0.0) {
        return Err(Error::pre("series tolerance must be positive"));
    }
    let p = 1.0 - q;
    let nf = big_n as f64;
    let mut total = CompensatedSum::default();
    let mut pr = 1.0; // p^{r-1}
    let mut r = 1usize;
    loop {
        let rf = r as f64;
        total.add(q * pr * rf * (rf + 1.0) / (2.0 * (nf + rf)));
        pr *= p;
        // E[Y(Y+1); Y > r] = p^r [r(r+1) + (2r+1)/q + (1+p)/q^2]
        let tail = pr * (rf * (rf + 1.0) + (2.0 * rf + 1.0) / q + (1.0 + p) / (q * q)) / (2.0 * (nf + 1.0));
        if tail < tolerance {
            return Ok((total.value(), tail));
        }
        r += 1;
    }
}

/// Simulates `epochs` reversion intervals and the martingale
/// `M_n = S_{N(n)}/N(n) - sum_{k<n} c(N(k))`, checking
/// `S_{N(n+1)} - S_{N(n)} = Y_{n+1} T_{N(n)+1} + Y_{n+1}(Y_{n+1}-1)/2` on the way.
pub fn occasional_martingale_trace(
    epochs: usize,
    q: f64,
    rng: &mut RandomStream,
    series_tolerance: f64,
) -> Result<OccasionalMartingaleTrace> {
    if epochs == 0 {
        return Err(Error::pre("at least one reversion epoch is needed"));
    }
    interval_correction(1, q, series_tolerance)?;
    let geometric = Geometric::new(q).map_err(|e| Error::config(e.to_string()))?;
    let mut t: Vec<u64> = Vec::new();
    let mut s = 0u64;
    let mut compensator = CompensatedSum::default();
    let mut bound = 0.0;
    let mut out = Vec::with_capacity(epochs);
    for n in 1..=epochs {
        let y = 1 + geometric.sample(rng) as usize;
        let big_n = t.len();
        let first = if n == 1 { 0 } else { 1 + t[rng.index(big_n) - 1] };
        let before = s;
        for k in 0..y as u64 {
            t.push(first + k);
            s += first + k;
        }
        let yy = y as u64;
        if n > 1 && s - before != yy * first + yy * (yy - 1) / 2 {
            return Err(Error::Invariant("interval sum identity failed".into()));
        }
        let reversion_time = t.len();
        let (correction, tail) = interval_correction(reversion_time, q, series_tolerance)?;
        let m = s as f64 / reversion_time as f64 - compensator.value();
        compensator.add(correction);
        bound += tail;
        out.push(Epoch {
            n,
            reversion_time,
            interval: y,
            s,
            correction,
            m,
        });
    }
    Ok(OccasionalMartingaleTrace {
        q,
        epochs: out,
        truncation_bound: bound,
    })
}

/// Mean and standard error of `M_{n+1} - M_n` over independent paths.
pub fn interval_martingale_increment(
    n: usize,
    q: f64,
    samples: usize,
    mc: &MonteCarlo,
    series_tolerance: f64,
) -> Result<(f64, f64)> {
    interval_correction(1, q, series_tolerance)?;
    let diffs: Vec<Result<f64>> = mc.run(samples, |rng| {
        let tr = occasional_martingale_trace(n + 1, q, rng, series_tolerance)?;
        Ok(tr.epochs[n].m - tr.epochs[n - 1].m)
    });
    let mut mom = Moments::default();
    for d in diffs {
        mom.push(d?);
    }
    Ok((mom.mean(), mom.std_error()))
}
