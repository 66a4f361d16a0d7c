//! Random half/half split of the pairs between Alice and Bob, the niceness
//! predicate, shell statistics, and the exact binomial machinery behind the
//! distribution of `j` once a player's shell is fixed.

use num_bigint::{BigInt, BigUint};
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::hard::HardInstance;
use crate::info::{statistical_distance, Distribution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("pair count {0} is odd")]
    OddPairCount(usize),
    #[error("node at depth {0} is a leaf or off the active path")]
    NotInternal(usize),
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("every j has probability zero")]
    EmptySupport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedInstance<'p> {
    pub instance: HardInstance<'p>,
    /// Per pair id: whether Alice holds the pair.
    pub alice: Vec<bool>,
    pub nice: bool,
}

pub fn niceness_threshold(shell_pairs: usize) -> usize {
    shell_pairs.div_ceil(3)
}

pub fn random_pair_partition<'p, R: Rng + ?Sized>(
    instance: HardInstance<'p>,
    rng: &mut R,
) -> Result<PartitionedInstance<'p>, PartitionError> {
    let n = instance.pairing.pair_count();
    if n % 2 == 1 {
        return Err(PartitionError::OddPairCount(n));
    }
    let mut alice = vec![false; n];
    for p in sample(rng, n, n / 2) {
        alice[p] = true;
    }
    let mut out = PartitionedInstance { instance, alice, nice: false };
    out.nice = check_nice(&out);
    Ok(out)
}

/// Alice's share of the shell pairs of every internal node, in node-index order.
fn shell_shares(p: &PartitionedInstance<'_>) -> Vec<(usize, usize)> {
    p.instance
        .pairing
        .nodes()
        .into_iter()
        .filter(|node| !node.is_leaf())
        .map(|node| {
            let s = node.own_pair_count();
            let a = (node.first_pair()..node.first_pair() + s).filter(|&id| p.alice[id]).count();
            (a, s)
        })
        .collect()
}

/// Each player holds at least a third (rounded up) of every node's shell pairs.
pub fn check_nice(p: &PartitionedInstance<'_>) -> bool {
    shell_shares(p).into_iter().all(|(a, s)| {
        let t = niceness_threshold(s);
        a >= t && s - a >= t
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellStats {
    /// Alice's shell pairs (one element each).
    pub xs_size: usize,
    pub ys_size: usize,
    /// Alice's shell elements below the node's midpoint.
    pub a: usize,
    pub delta: f64,
    /// `|delta| <= sqrt(n) log2 n0`.
    pub retained: bool,
}

/// Statistics at the active-path node at `depth`; `n0` is the top-level size.
pub fn shell_stats(p: &PartitionedInstance<'_>, depth: usize, n0: usize) -> Result<ShellStats, PartitionError> {
    let path = p.instance.active_path();
    let node = path.get(depth).filter(|n| !n.is_leaf()).ok_or(PartitionError::NotInternal(depth))?;
    let s = node.own_pair_count();
    let ids = node.first_pair()..node.first_pair() + s;
    let xs_size = ids.clone().filter(|&id| p.alice[id]).count();
    let a = ids.filter(|&id| p.alice[id] && p.instance.low[id]).count();
    let delta = a as f64 - xs_size as f64 / 2.0;
    let retained = delta.abs() <= (node.n() as f64).sqrt() * (n0 as f64).log2();
    Ok(ShellStats { xs_size, ys_size: s - xs_size, a, delta, retained })
}

fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::INFINITY)
}

/// Exact law of `j` given Bob's shell size and Alice's low count.
#[derive(Debug, Clone, PartialEq)]
pub struct JDistribution {
    /// `C(ys, n/2 - a - (gamma/k)(j - 1/2))`, zero when out of range.
    pub weights: Vec<BigUint>,
    pub probs: Vec<BigRational>,
}

impl JDistribution {
    pub fn to_distribution(&self) -> Distribution {
        Distribution::from_weights(&self.probs.iter().map(rational_to_f64).collect::<Vec<_>>())
            .expect("probabilities are a distribution")
    }

    /// Largest over smallest probability, `None` if some `j` has probability zero.
    pub fn max_min_ratio(&self) -> Option<BigRational> {
        let max = self.weights.iter().max()?;
        let min = self.weights.iter().min()?;
        (!min.is_zero()).then(|| ratio(max.clone(), min.clone()))
    }
}

pub fn j_distribution(ys_size: u64, a: u64, gamma: u64, k: u64, n: u64) -> Result<JDistribution, PartitionError> {
    j_distribution_by(ys_size, a, gamma, k, n, |m| binomial(BigUint::from(ys_size), BigUint::from(m)))
}

/// All of `C(m, 0..=m)`.
pub fn binomial_row(m: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(m as usize + 1);
    let mut c = BigUint::one();
    for i in 0..=m {
        row.push(c.clone());
        c = c * (m - i) / (i + 1);
    }
    row
}

/// [`j_distribution`] reading binomials from `row = binomial_row(ys_size)`;
/// sweeps reuse one row across many grid points.
pub fn j_distribution_from_row(row: &[BigUint], a: u64, gamma: u64, k: u64, n: u64) -> Result<JDistribution, PartitionError> {
    let ys_size = row.len() as u64 - 1;
    j_distribution_by(ys_size, a, gamma, k, n, |m| row[m as usize].clone())
}

fn j_distribution_by(
    ys_size: u64,
    a: u64,
    gamma: u64,
    k: u64,
    n: u64,
    choose: impl Fn(u64) -> BigUint,
) -> Result<JDistribution, PartitionError> {
    if k < 1 {
        return Err(PartitionError::InvalidArgs("k must be at least 1".into()));
    }
    if n % 2 == 1 || gamma % (2 * k) != 0 {
        return Err(PartitionError::InvalidArgs(format!(
            "n = {n} must be even and 2k = {} must divide gamma = {gamma}",
            2 * k
        )));
    }
    let step = gamma / k;
    let weights: Vec<BigUint> = (1..=k)
        .map(|j| {
            let arg = (n / 2 + step / 2) as i128 - a as i128 - (step * j) as i128;
            if arg < 0 || arg > ys_size as i128 {
                BigUint::zero()
            } else {
                choose(arg as u64)
            }
        })
        .collect();
    let total: BigUint = weights.iter().sum();
    if total.is_zero() {
        return Err(PartitionError::EmptySupport);
    }
    let probs = weights.iter().map(|w| ratio(w.clone(), total.clone())).collect();
    Ok(JDistribution { weights, probs })
}

/// Statistical distance to the uniform law on `[k]`.
pub fn uniformity_distance(dist: &JDistribution) -> f64 {
    let d = dist.to_distribution();
    statistical_distance(&d, &Distribution::uniform(d.len())).expect("same length")
}

pub fn uniformity_distance_exact(dist: &JDistribution) -> BigRational {
    let k = dist.probs.len();
    let u = BigRational::new(BigInt::one(), BigInt::from(k));
    let sum: BigRational = dist.probs.iter().map(|p| if p > &u { p - &u } else { &u - p }).sum();
    sum / BigRational::from_integer(BigInt::from(2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioBound {
    pub ratio: BigRational,
    pub bound: BigRational,
    pub holds: bool,
}

/// `C(n/4, n/8 - delta) / C(n/4, n/8 - delta - gamma)` against
/// `(1 + 10(2 delta + gamma)/n)^gamma`, both exact.
pub fn binomial_ratio_bound(n: u64, delta: u64, gamma: u64) -> Result<RatioBound, PartitionError> {
    if n % 8 != 0 || n == 0 {
        return Err(PartitionError::InvalidArgs(format!("n = {n} must be a positive multiple of 8")));
    }
    if delta + gamma > n / 8 {
        return Err(PartitionError::InvalidArgs(format!(
            "n/8 - delta - gamma = {} - {delta} - {gamma} is negative",
            n / 8
        )));
    }
    let big = n / 4;
    let top = n / 8 - delta;
    // Consecutive binomial ratios: C(N, K-t)/C(N, K-t-1) = (N-K+t+1)/(K-t).
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for t in 0..gamma {
        num *= big - top + t + 1;
        den *= top - t;
    }
    let ratio = ratio(num, den);
    let base = ratio_base(n, delta, gamma);
    let bound = Pow::pow(base, gamma as u32);
    let holds = ratio <= bound;
    Ok(RatioBound { ratio, bound, holds })
}

fn ratio_base(n: u64, delta: u64, gamma: u64) -> BigRational {
    BigRational::new(BigInt::from(n + 10 * (2 * delta + gamma)), BigInt::from(n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: u64,
    pub delta: u64,
    pub gamma: u64,
    pub ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Exact sweep over `0 <= delta <= sqrt(n)`, `0 <= gamma <= n/16`; grid points
/// violating `n/8 - delta - gamma >= 0` are skipped.
pub fn ratio_sweep(ns: &[u64]) -> Result<Vec<RatioRow>, PartitionError> {
    let mut rows = Vec::new();
    for &n in ns {
        let root = (n as f64).sqrt().floor() as u64;
        for delta in 0..=root {
            for gamma in 0..=n / 16 {
                if delta + gamma > n / 8 {
                    continue;
                }
                let r = binomial_ratio_bound(n, delta, gamma)?;
                rows.push(RatioRow {
                    n,
                    delta,
                    gamma,
                    ratio: rational_to_f64(&r.ratio),
                    bound: rational_to_f64(&r.bound),
                    holds: r.holds,
                });
            }
        }
    }
    Ok(rows)
}

/// Exact probability that a node with `shell` shell pairs, out of `n` pairs
/// split evenly, leaves some player below the niceness threshold.
pub fn niceness_failure_exact(n: u64, shell: u64) -> Result<BigRational, PartitionError> {
    if n % 2 == 1 || shell > n {
        return Err(PartitionError::InvalidArgs(format!("n = {n}, shell = {shell}")));
    }
    let half = n / 2;
    let t = niceness_threshold(shell as usize) as u64;
    let total = binomial(BigUint::from(n), BigUint::from(shell));
    let mut bad = BigUint::zero();
    for x in 0..=shell.min(half) {
        if shell - x > half {
            continue;
        }
        if x < t || shell - x < t {
            bad += binomial(BigUint::from(half), BigUint::from(x))
                * binomial(BigUint::from(n - half), BigUint::from(shell - x));
        }
    }
    Ok(ratio(bad, total))
}

/// Law of `a` when Alice holds `xs` of `shell` shell pairs, `low` of which
/// chose their low element: hypergeometric over `0..=xs`.
pub fn low_count_law(shell: u64, low: u64, xs: u64) -> Result<Vec<BigRational>, PartitionError> {
    if low > shell || xs > shell {
        return Err(PartitionError::InvalidArgs(format!("shell = {shell}, low = {low}, xs = {xs}")));
    }
    let total = binomial(BigUint::from(shell), BigUint::from(xs));
    Ok((0..=xs)
        .map(|a| {
            if a > low || xs - a > shell - low {
                return BigRational::zero();
            }
            let w = binomial(BigUint::from(low), BigUint::from(a))
                * binomial(BigUint::from(shell - low), BigUint::from(xs - a));
            ratio(w, total.clone())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hard::{build_pairing, sample_instance, ModeParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn j_distribution_examples() {
        let d = j_distribution(4, 1, 4, 1, 8).unwrap();
        assert_eq!(d.probs, vec![q(1, 1)]);
        // C(4, 3) : C(4, 1).
        let d = j_distribution(4, 0, 4, 2, 8).unwrap();
        assert_eq!(d.weights, vec![BigUint::from(4u32), BigUint::from(4u32)]);
        assert_eq!(uniformity_distance(&d), 0.0);
        // C(4, 2) : C(4, 0).
        let d = j_distribution(4, 1, 4, 2, 8).unwrap();
        assert_eq!(d.weights, vec![BigUint::from(6u32), BigUint::from(1u32)]);
        assert_eq!(uniformity_distance_exact(&d), q(5, 14));
        assert!(j_distribution(4, 1, 4, 0, 8).is_err());
    }

    #[test]
    fn row_variant_matches_direct() {
        let row = binomial_row(12);
        assert_eq!(row[6], BigUint::from(924u32));
        for (a, gamma, k) in [(0, 4, 2), (1, 8, 4), (3, 6, 3)] {
            assert_eq!(j_distribution_from_row(&row, a, gamma, k, 16).unwrap(), j_distribution(12, a, gamma, k, 16).unwrap());
        }
    }

    #[test]
    fn point_mass_distance() {
        let d = JDistribution { weights: vec![BigUint::one(), BigUint::zero()], probs: vec![q(1, 1), q(0, 1)] };
        assert_eq!(uniformity_distance(&d), 0.5);
        assert_eq!(d.max_min_ratio(), None);
    }

    #[test]
    fn ratio_bound_examples() {
        let r = binomial_ratio_bound(64, 3, 0).unwrap();
        assert_eq!((r.ratio.clone(), r.bound.clone(), r.holds), (q(1, 1), q(1, 1), true));
        let r = binomial_ratio_bound(8, 0, 1).unwrap();
        assert_eq!(r.ratio, q(2, 1));
        assert_eq!(r.bound, q(9, 4));
        assert!(r.holds);
        assert!(binomial_ratio_bound(8, 1, 1).is_err());
        assert!(binomial_ratio_bound(12, 0, 0).is_err());
    }

    #[test]
    fn ratio_matches_direct_binomials() {
        for (n, delta, gamma) in [(64, 2, 4), (256, 10, 16), (1024, 0, 64)] {
            let r = binomial_ratio_bound(n, delta, gamma).unwrap();
            let num = binomial(BigUint::from(n / 4), BigUint::from(n / 8 - delta));
            let den = binomial(BigUint::from(n / 4), BigUint::from(n / 8 - delta - gamma));
            assert_eq!(r.ratio, ratio(num, den));
        }
    }

    #[test]
    fn niceness_of_toy_root() {
        let t = build_pairing(&ModeParams::Toy { schedule: vec![(4, 2)] }, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inst = sample_instance(&t, &mut rng);
        let mut p = random_pair_partition(inst, &mut rng).unwrap();
        assert_eq!(p.alice.iter().filter(|&&b| b).count(), 4);
        assert_eq!(niceness_threshold(4), 2);
        p.alice = vec![true, true, true, true, false, false, false, false];
        assert!(!check_nice(&p));
        p.alice = vec![true, true, false, false, true, true, false, false];
        assert!(check_nice(&p));
    }

    #[test]
    fn shell_stats_extremes() {
        let t = build_pairing(&ModeParams::Toy { schedule: vec![(4, 2)] }, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let inst = sample_instance(&t, &mut rng);
        let mut p = random_pair_partition(inst, &mut rng).unwrap();
        p.alice = vec![false, false, false, false, true, true, true, true];
        let s = shell_stats(&p, 0, 8).unwrap();
        assert_eq!((s.xs_size, s.ys_size, s.a, s.delta), (0, 4, 0, 0.0));
        assert!(shell_stats(&p, 1, 8).is_err());
    }

    #[test]
    fn niceness_exact_small() {
        // Three of four pairs are shell pairs, so each player holds at least one.
        assert_eq!(niceness_failure_exact(4, 3).unwrap(), q(0, 1));
        // n = 4, shell = 2: fails iff both shell pairs go to one player: 2/6.
        assert_eq!(niceness_failure_exact(4, 2).unwrap(), q(1, 3));
    }

    #[test]
    fn low_count_law_sums_to_one() {
        let law = low_count_law(10, 4, 5).unwrap();
        assert_eq!(law.iter().sum::<BigRational>(), q(1, 1));
    }
}
