//! Deterministic two-party protocols given as message functions, and the
//! indexed product problem `f^[k]`.
//!
//! Inputs are integer codes. For `f^[k]`, Alice's code encodes `x` in base
//! `|X|` (coordinate 0 least significant) and Bob's code is
//! `j * |Y|^k + code(y)` with a 0-based coordinate `j`.

use std::fmt;
use std::sync::Arc;

use super::InfoError;
use crate::Party;

/// Maps (own input code, transcript so far) to the next message.
pub type MessageFn = Arc<dyn Fn(usize, &[u64]) -> u64 + Send + Sync>;

#[derive(Clone)]
pub struct ToyProtocol {
    first: Party,
    bits: Vec<u32>,
    messages: Vec<MessageFn>,
}

impl fmt::Debug for ToyProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToyProtocol").field("first", &self.first).field("bits", &self.bits).finish()
    }
}

impl ToyProtocol {
    pub fn new(first: Party, bits: Vec<u32>, messages: Vec<MessageFn>) -> Result<Self, InfoError> {
        if bits.is_empty() || bits.len() != messages.len() {
            return Err(InfoError::InvalidParams(format!(
                "{} message widths for {} message functions",
                bits.len(),
                messages.len()
            )));
        }
        if bits.iter().any(|&b| b > 63) {
            return Err(InfoError::InvalidParams("messages are limited to 63 bits".into()));
        }
        Ok(ToyProtocol { first, bits, messages })
    }

    pub fn first(&self) -> Party {
        self.first
    }

    pub fn bits(&self) -> &[u32] {
        &self.bits
    }

    pub fn rounds(&self) -> usize {
        self.bits.len()
    }

    pub fn speaker(&self, round: usize) -> Party {
        if round % 2 == 0 {
            self.first
        } else {
            self.first.other()
        }
    }

    pub fn message(&self, round: usize) -> &MessageFn {
        &self.messages[round]
    }

    /// Message `round` for a speaker holding `input` and seeing `transcript`.
    pub fn send(&self, round: usize, input: usize, transcript: &[u64]) -> Result<u64, InfoError> {
        let value = (self.messages[round])(input, transcript);
        if value >> self.bits[round] != 0 {
            return Err(InfoError::MessageTooLong { index: round, value, bits: self.bits[round] });
        }
        Ok(value)
    }

    pub fn run(&self, alice: usize, bob: usize) -> Result<Vec<u64>, InfoError> {
        let mut t = Vec::with_capacity(self.rounds());
        for r in 0..self.rounds() {
            let input = if self.speaker(r) == Party::Alice { alice } else { bob };
            let m = self.send(r, input, &t)?;
            t.push(m);
        }
        Ok(t)
    }

    /// Low bit of the last message.
    pub fn output(&self, alice: usize, bob: usize) -> Result<u8, InfoError> {
        Ok((*self.run(alice, bob)?.last().expect("at least one message") & 1) as u8)
    }
}

/// A two-argument function `f[x][y]` with values in {0, 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct FTable {
    pub f: Vec<Vec<u8>>,
}

impl FTable {
    pub fn new(f: Vec<Vec<u8>>) -> Result<Self, InfoError> {
        let ny = f.first().map_or(0, Vec::len);
        if ny == 0 || f.iter().any(|r| r.len() != ny) || f.iter().flatten().any(|&b| b > 1) {
            return Err(InfoError::InvalidParams("function table must be rectangular and 0/1".into()));
        }
        Ok(FTable { f })
    }

    pub fn xor() -> Self {
        FTable { f: vec![vec![0, 1], vec![1, 0]] }
    }

    pub fn and() -> Self {
        FTable { f: vec![vec![0, 0], vec![0, 1]] }
    }

    pub fn nx(&self) -> usize {
        self.f.len()
    }

    pub fn ny(&self) -> usize {
        self.f[0].len()
    }
}

/// Distribution `D[x][y]` on input pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistribution {
    pub d: Vec<Vec<f64>>,
}

impl PairDistribution {
    pub fn new(d: Vec<Vec<f64>>) -> Result<Self, InfoError> {
        let flat: Vec<f64> = d.iter().flatten().copied().collect();
        super::Distribution::new(flat)?;
        let ny = d.first().map_or(0, Vec::len);
        if d.iter().any(|r| r.len() != ny) {
            return Err(InfoError::InvalidParams("distribution table must be rectangular".into()));
        }
        Ok(PairDistribution { d })
    }

    pub fn uniform(nx: usize, ny: usize) -> Self {
        PairDistribution { d: vec![vec![1.0 / (nx * ny) as f64; ny]; nx] }
    }

    pub fn x_marginal(&self) -> Vec<f64> {
        self.d.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn y_marginal(&self) -> Vec<f64> {
        (0..self.d[0].len()).map(|y| self.d.iter().map(|r| r[y]).sum()).collect()
    }
}

/// Enumeration cap on table sizes.
pub const STATE_CAP: usize = 10_000_000;

/// The indexed problem `f^[k]` over `D^[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FPowerK {
    pub f: FTable,
    pub d: PairDistribution,
    pub k: usize,
}

pub fn build_f_power_k(f: FTable, d: PairDistribution, k: usize) -> Result<FPowerK, InfoError> {
    if k == 0 {
        return Err(InfoError::InvalidParams("k must be at least 1".into()));
    }
    if d.d.len() != f.nx() || d.d[0].len() != f.ny() {
        return Err(InfoError::InvalidParams("function and distribution shapes differ".into()));
    }
    let size = (f.nx() as f64).powi(k as i32) * (f.ny() as f64).powi(k as i32) * k as f64;
    if size > STATE_CAP as f64 {
        return Err(InfoError::CapExceeded(format!("{size} input triples")));
    }
    Ok(FPowerK { f, d, k })
}

impl FPowerK {
    pub fn nx(&self) -> usize {
        self.f.nx()
    }

    pub fn ny(&self) -> usize {
        self.f.ny()
    }

    pub fn alice_inputs(&self) -> usize {
        self.nx().pow(self.k as u32)
    }

    pub fn y_codes(&self) -> usize {
        self.ny().pow(self.k as u32)
    }

    pub fn bob_inputs(&self) -> usize {
        self.y_codes() * self.k
    }

    pub fn decode_x(&self, code: usize) -> Vec<usize> {
        decode(code, self.nx(), self.k)
    }

    pub fn decode_y(&self, code: usize) -> Vec<usize> {
        decode(code, self.ny(), self.k)
    }

    pub fn encode_x(&self, x: &[usize]) -> usize {
        encode(x, self.nx())
    }

    pub fn encode_y(&self, y: &[usize]) -> usize {
        encode(y, self.ny())
    }

    pub fn bob_code(&self, y_code: usize, j: usize) -> usize {
        j * self.y_codes() + y_code
    }

    pub fn split_bob(&self, bob: usize) -> (usize, usize) {
        (bob % self.y_codes(), bob / self.y_codes())
    }

    /// `D^[k]` probability of (Alice code, Bob code).
    pub fn prob(&self, alice: usize, bob: usize) -> f64 {
        let (y, _) = self.split_bob(bob);
        let x = self.decode_x(alice);
        let y = self.decode_y(y);
        x.iter().zip(&y).map(|(&a, &b)| self.d.d[a][b]).product::<f64>() / self.k as f64
    }

    /// `f(x_j, y_j)`.
    pub fn value(&self, alice: usize, bob: usize) -> u8 {
        let (y, j) = self.split_bob(bob);
        self.f.f[self.decode_x(alice)[j]][self.decode_y(y)[j]]
    }

    /// Exact error of `protocol` on `f^[k]` under `D^[k]`.
    pub fn error_of(&self, protocol: &ToyProtocol) -> Result<f64, InfoError> {
        let mut terms = Vec::new();
        for a in 0..self.alice_inputs() {
            for b in 0..self.bob_inputs() {
                let p = self.prob(a, b);
                if p > 0.0 && protocol.output(a, b)? != self.value(a, b) {
                    terms.push(p);
                }
            }
        }
        Ok(super::kahan_sum(terms))
    }
}

pub fn decode(mut code: usize, base: usize, len: usize) -> Vec<usize> {
    (0..len)
        .map(|_| {
            let d = code % base;
            code /= base;
            d
        })
        .collect()
}

pub fn encode(digits: &[usize], base: usize) -> usize {
    digits.iter().rev().fold(0, |acc, &d| acc * base + d)
}

/// Exact error of a protocol for `f` itself under `D`.
pub fn base_error(protocol: &ToyProtocol, f: &FTable, d: &PairDistribution) -> Result<f64, InfoError> {
    let mut terms = Vec::new();
    for x in 0..f.nx() {
        for y in 0..f.ny() {
            if d.d[x][y] > 0.0 && protocol.output(x, y)? != f.f[x][y] {
                terms.push(d.d[x][y]);
            }
        }
    }
    Ok(super::kahan_sum(terms))
}

/// Three-message protocol for `f^[k]`: Alice sends a summary of `x` in `m1`
/// bits (sum mod 2 in the low bit, then `x_1, x_2, ...` mod 2), Bob sends
/// `(j, y_j)`, Alice answers `f(x_j, y_j)`. The first message is ignored by
/// the later rounds.
pub fn indexed_protocol(problem: &FPowerK, m1: u32) -> Result<ToyProtocol, InfoError> {
    if m1 == 0 || m1 as usize > problem.k + 1 {
        return Err(InfoError::InvalidParams(format!("m1 = {m1} must lie in 1..=k+1")));
    }
    let (nx, ny, k) = (problem.nx(), problem.ny(), problem.k);
    let yk = problem.y_codes();
    let f = problem.f.clone();
    let summary: super::protocol::MessageFn = Arc::new(move |x, _| {
        let xs = decode(x, nx, k);
        let mut m = (xs.iter().sum::<usize>() % 2) as u64;
        for (b, &xi) in xs.iter().take(m1 as usize - 1).enumerate() {
            m |= ((xi % 2) as u64) << (b + 1);
        }
        m
    });
    let pointer: MessageFn = Arc::new(move |bob, _| {
        let (y, j) = (bob % yk, bob / yk);
        (j * ny + decode(y, ny, k)[j]) as u64
    });
    let answer: MessageFn = Arc::new(move |x, t| {
        let j = t[1] as usize / ny;
        let yj = t[1] as usize % ny;
        f.f[decode(x, nx, k)[j]][yj] as u64
    });
    let pointer_bits = usize::BITS - (k * ny - 1).leading_zeros();
    ToyProtocol::new(Party::Alice, vec![m1, pointer_bits.max(1), 1], vec![summary, pointer, answer])
}
