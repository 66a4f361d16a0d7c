//! Correlated sampling from a shared stream of `(outcome, threshold)` pairs.
//!
//! Each side scans the same stream and keeps the first pair whose threshold
//! falls under its own density. Both marginals are exact; the two samples
//! differ with probability `2d / (1 + d)` where `d` is the statistical
//! distance.

use rand::Rng;

use super::dist::{statistical_distance, Distribution};
use super::InfoError;

/// Upper bound on the stream length scanned by [`correlated_sample`].
pub const MAX_STREAM: usize = 1 << 26;

pub trait SharedRandomness {
    /// Next pair: an outcome uniform over `0..outcomes` and a threshold in `[0, 1)`.
    fn next_pair(&mut self, outcomes: usize) -> (usize, f64);
}

/// Shared stream drawn from an RNG that both parties hold a copy of.
pub struct RngStream<R>(pub R);

impl<R: Rng> SharedRandomness for RngStream<R> {
    fn next_pair(&mut self, outcomes: usize) -> (usize, f64) {
        (self.0.gen_range(0..outcomes), self.0.gen())
    }
}

/// Replays a fixed list of pairs.
pub struct FixedStream<'a> {
    pairs: &'a [(usize, f64)],
    pos: usize,
}

impl<'a> FixedStream<'a> {
    pub fn new(pairs: &'a [(usize, f64)]) -> Self {
        FixedStream { pairs, pos: 0 }
    }
}

impl SharedRandomness for FixedStream<'_> {
    fn next_pair(&mut self, _outcomes: usize) -> (usize, f64) {
        let p = self.pairs.get(self.pos).copied().unwrap_or((0, 1.0));
        self.pos += 1;
        p
    }
}

pub fn correlated_sample(
    p: &Distribution,
    q: &Distribution,
    shared: &mut impl SharedRandomness,
) -> Result<(usize, usize), InfoError> {
    if p.len() != q.len() {
        return Err(InfoError::LengthMismatch(p.len(), q.len()));
    }
    let (mut sp, mut sq) = (None, None);
    for _ in 0..MAX_STREAM {
        let (u, tau) = shared.next_pair(p.len());
        if sp.is_none() && tau < p.get(u) {
            sp = Some(u);
        }
        if sq.is_none() && tau < q.get(u) {
            sq = Some(u);
        }
        if let (Some(a), Some(b)) = (sp, sq) {
            return Ok((a, b));
        }
    }
    Err(InfoError::CapExceeded(format!("no acceptance within {MAX_STREAM} shared pairs")))
}

/// Exact joint law `[u][v]` of the two samples.
pub fn correlated_joint(p: &Distribution, q: &Distribution) -> Result<Vec<Vec<f64>>, InfoError> {
    let d = statistical_distance(p, q)?;
    let norm = 1.0 + d;
    let n = p.len();
    let c: Vec<f64> = (0..n).map(|u| p.get(u).min(q.get(u))).collect();
    Ok((0..n)
        .map(|u| {
            (0..n)
                .map(|v| {
                    let diag = if u == v { c[u] } else { 0.0 };
                    (diag + (p.get(u) - c[u]) * q.get(v) + p.get(u) * (q.get(v) - c[v])) / norm
                })
                .collect()
        })
        .collect())
}

/// `2d / (1 + d)`.
pub fn disagreement_bound(p: &Distribution, q: &Distribution) -> Result<f64, InfoError> {
    let d = statistical_distance(p, q)?;
    Ok(2.0 * d / (1.0 + d))
}

/// Exact probability that the two samples differ.
pub fn disagreement_probability(p: &Distribution, q: &Distribution) -> Result<f64, InfoError> {
    let j = correlated_joint(p, q)?;
    Ok(1.0 - super::kahan_sum((0..j.len()).map(|u| j[u][u])))
}
