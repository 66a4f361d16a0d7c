//! Selection over a read-only stream with a fixed number of registers.
//!
//! A register holds one input value or one counter. Both selectors track
//! their register use through [`RegisterBudget`] and return an error rather
//! than exceed it. Passes are counted by [`StreamReader`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

use crate::experiment::ExperimentRecord;

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("register budget too small: need {need}, have {have}")]
    BudgetTooSmall { need: usize, have: usize },
    #[error("rank {rank} outside 1..={n}")]
    RankOutOfRange { rank: u64, n: u64 },
    #[error("input contains duplicate values")]
    DuplicateValues,
    #[error("empty input")]
    Empty,
    #[error("input file length {0} is not a multiple of 8")]
    BadFile(u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
enum Source {
    Memory(Arc<Vec<u64>>),
    /// Little-endian `u64` values.
    File(PathBuf),
}

/// Sequential read-only access to the input, counting full scans.
#[derive(Debug, Clone)]
pub struct StreamReader {
    source: Source,
    len: u64,
    passes: usize,
}

impl StreamReader {
    pub fn from_vec(values: Vec<u64>) -> Self {
        Self::from_shared(Arc::new(values))
    }

    pub fn from_shared(values: Arc<Vec<u64>>) -> Self {
        let len = values.len() as u64;
        StreamReader { source: Source::Memory(values), len, passes: 0 }
    }

    pub fn from_file(path: &Path) -> Result<Self, SelectError> {
        let bytes = std::fs::metadata(path)?.len();
        if bytes % 8 != 0 {
            return Err(SelectError::BadFile(bytes));
        }
        Ok(StreamReader { source: Source::File(path.to_path_buf()), len: bytes / 8, passes: 0 })
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn pass_count(&self) -> usize {
        self.passes
    }

    /// One full scan.
    #[inline]
    pub fn pass(&mut self, mut visit: impl FnMut(u64)) -> Result<(), SelectError> {
        self.passes += 1;
        match &self.source {
            Source::Memory(v) => v.iter().for_each(|&x| visit(x)),
            Source::File(p) => {
                let mut r = BufReader::with_capacity(1 << 16, File::open(p)?);
                let mut buf = [0u8; 8];
                for _ in 0..self.len {
                    r.read_exact(&mut buf)?;
                    visit(u64::from_le_bytes(buf));
                }
            }
        }
        Ok(())
    }
}

pub fn write_values(path: &Path, values: &[u64]) -> std::io::Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(path, bytes)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterBudget {
    s: usize,
    in_use: usize,
    peak: usize,
}

impl RegisterBudget {
    pub fn new(s: usize) -> Self {
        RegisterBudget { s, in_use: 0, peak: 0 }
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn in_use(&self) -> usize {
        self.in_use
    }

    pub fn peak(&self) -> usize {
        self.peak
    }

    pub fn available(&self) -> usize {
        self.s - self.in_use
    }

    pub fn acquire(&mut self, n: usize) -> Result<(), SelectError> {
        if self.in_use + n > self.s {
            return Err(SelectError::BudgetTooSmall { need: self.in_use + n, have: self.s });
        }
        self.in_use += n;
        self.peak = self.peak.max(self.in_use);
        Ok(())
    }

    pub fn release(&mut self, n: usize) {
        assert!(n <= self.in_use, "releasing more registers than held");
        self.in_use -= n;
    }
}

/// Synthetic distinct input: `2 pi(i) - b_i` for a random permutation `pi`
/// of `1..=n` and random bits `b_i`.
pub fn synthetic_input(n: u64, seed: u64) -> Vec<u64> {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<u64> = (1..=n).collect();
    v.shuffle(&mut rng);
    for chunk in v.chunks_mut(64) {
        let bits: u64 = rng.gen();
        for (i, x) in chunk.iter_mut().enumerate() {
            *x = 2 * *x - (bits >> i & 1);
        }
    }
    v
}

pub fn oracle_select(values: &[u64], rank: u64) -> u64 {
    let mut v = values.to_vec();
    let (_, x, _) = v.select_nth_unstable((rank - 1) as usize);
    *x
}

fn check_args(reader: &StreamReader, s: usize, rank: u64) -> Result<(), SelectError> {
    if reader.is_empty() {
        return Err(SelectError::Empty);
    }
    if rank == 0 || rank > reader.len() {
        return Err(SelectError::RankOutOfRange { rank, n: reader.len() });
    }
    if s < 4 {
        return Err(SelectError::BudgetTooSmall { need: 4, have: s });
    }
    Ok(())
}

/// Closed value interval holding the target, with the exact number of input
/// values below it and inside it.
#[derive(Debug, Clone, Copy)]
struct Bracket {
    lo: u64,
    hi: u64,
    below: u64,
    inside: u64,
}

impl Bracket {
    #[inline]
    fn contains(&self, x: u64) -> bool {
        // One comparison: the two-sided test mispredicts on shuffled input.
        x.wrapping_sub(self.lo) <= self.hi - self.lo
    }
}

/// Collects every value of the bracket in one pass and picks the answer.
fn collect_pass(
    reader: &mut StreamReader,
    budget: &mut RegisterBudget,
    b: Bracket,
    rank: u64,
) -> Result<u64, SelectError> {
    let cap = b.inside as usize;
    budget.acquire(cap)?;
    let mut held = Vec::with_capacity(cap);
    let mut overflow = false;
    reader.pass(|x| {
        if b.contains(x) {
            if held.len() < cap {
                held.push(x);
            } else {
                overflow = true;
            }
        }
    })?;
    budget.release(cap);
    held.sort_unstable();
    if overflow || held.len() != cap || held.windows(2).any(|w| w[0] == w[1]) {
        return Err(SelectError::DuplicateValues);
    }
    Ok(held[(rank - b.below - 1) as usize])
}

/// Deterministic filter narrowing: after a min/max pass, each pass splits the
/// candidate value interval into `s - 2` equal-width buckets, keeps the one
/// holding the target rank, and stops with a collecting pass once the
/// candidates fit in the registers.
pub fn multipass_select(reader: &mut StreamReader, budget: &mut RegisterBudget, rank: u64) -> Result<u64, SelectError> {
    check_args(reader, budget.s(), rank)?;
    let n = reader.len();
    if n as usize <= budget.available() {
        return collect_pass(reader, budget, Bracket { lo: 0, hi: u64::MAX, below: 0, inside: n }, rank);
    }
    // lo, hi, below.
    budget.acquire(3)?;
    let (mut lo, mut hi) = (u64::MAX, 0);
    reader.pass(|x| {
        lo = lo.min(x);
        hi = hi.max(x);
    })?;
    let mut b = Bracket { lo, hi, below: 0, inside: n };
    loop {
        if b.inside as usize <= budget.available() {
            let out = collect_pass(reader, budget, b, rank);
            budget.release(3);
            return out;
        }
        if b.lo == b.hi {
            budget.release(3);
            return Err(SelectError::DuplicateValues);
        }
        // The last bucket's count follows from `inside`.
        let counters = budget.available();
        let buckets = (counters + 1) as u128;
        budget.acquire(counters)?;
        let width = (b.hi - b.lo) as u128 + 1;
        let buckets = buckets.min(width);
        let mut counts = vec![0u64; buckets as usize];
        if width * buckets <= u64::MAX as u128 {
            // Same floor, without 128-bit division.
            let (w, k) = (width as u64, buckets as u64);
            reader.pass(|x| {
                if b.contains(x) {
                    counts[((x - b.lo) * k / w) as usize] += 1;
                }
            })?;
        } else {
            reader.pass(|x| {
                if b.contains(x) {
                    counts[((x - b.lo) as u128 * buckets / width) as usize] += 1;
                }
            })?;
        }
        budget.release(counters);
        let target = rank - b.below;
        let mut acc = 0;
        for (j, &c) in counts.iter().enumerate() {
            if acc + c >= target {
                // width may be 2^64, so the ends are computed in u128.
                let at = |j: u128| b.lo as u128 + (j * width).div_ceil(buckets);
                let (start, end) = (at(j as u128) as u64, (at(j as u128 + 1) - 1) as u64);
                b = Bracket { lo: start, hi: end, below: b.below + acc, inside: c };
                break;
            }
            acc += c;
        }
    }
}

/// Knobs for [`sampling_select`].
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingParams {
    /// Half-width of the pivot window in standard deviations of the sample rank.
    pub z: f64,
    /// At most this fraction of the free registers goes to pivots and their counters.
    pub pivot_share: f64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams { z: 3.0, pivot_share: 0.15 }
    }
}

/// Uniform sample of fixed capacity over a stream of unknown length (Algorithm L).
struct Reservoir<'r> {
    cap: usize,
    items: Vec<u64>,
    seen: u64,
    next: u64,
    w: f64,
    rng: &'r mut ChaCha8Rng,
}

impl<'r> Reservoir<'r> {
    fn new(cap: usize, rng: &'r mut ChaCha8Rng) -> Self {
        let mut r = Reservoir { cap, items: Vec::with_capacity(cap), seen: 0, next: cap as u64, w: 0.0, rng };
        if cap > 0 {
            r.w = r.shrink();
            r.next += r.gap();
        }
        r
    }

    fn unit(&mut self) -> f64 {
        self.rng.gen::<f64>().max(f64::MIN_POSITIVE)
    }

    fn shrink(&mut self) -> f64 {
        (self.unit().ln() / self.cap as f64).exp()
    }

    fn gap(&mut self) -> u64 {
        let g = (self.unit().ln() / (-self.w).ln_1p()).floor();
        if g.is_finite() && g < 1e18 {
            g as u64
        } else {
            u64::MAX / 2
        }
    }

    #[inline]
    fn offer(&mut self, x: u64) {
        if self.items.len() < self.cap {
            self.items.push(x);
        } else if self.seen == self.next {
            let slot = self.rng.gen_range(0..self.cap);
            self.items[slot] = x;
            self.w *= self.shrink();
            self.next += 1 + self.gap();
        }
        self.seen += 1;
    }
}

/// Below this budget [`sampling_select`] falls back to [`multipass_select`]:
/// 4 fixed registers plus two pivots with counters plus a one-slot reservoir
/// and its count. With fewer, no pivots fit and the bracket cannot shrink.
pub const SAMPLING_MIN_REGISTERS: usize = 10;

/// Randomized bracketing. Every pass counts the cells cut by pivots drawn
/// from the previous pass's sample around the target's estimated position,
/// and samples the window those pivots span. When the pass ends, the cell
/// holding the target becomes the new bracket and the sampled values inside
/// it seed the next pivots. A bracket that fits in the free registers is
/// collected outright. A target outside the window costs one pass with no
/// pivots.
pub fn sampling_select(
    reader: &mut StreamReader,
    budget: &mut RegisterBudget,
    rank: u64,
    rng: &mut ChaCha8Rng,
) -> Result<u64, SelectError> {
    sampling_select_with(reader, budget, rank, rng, &SamplingParams::default())
}

pub fn sampling_select_with(
    reader: &mut StreamReader,
    budget: &mut RegisterBudget,
    rank: u64,
    rng: &mut ChaCha8Rng,
    params: &SamplingParams,
) -> Result<u64, SelectError> {
    check_args(reader, budget.s(), rank)?;
    let n = reader.len();
    if n as usize <= budget.available() {
        return collect_pass(reader, budget, Bracket { lo: 0, hi: u64::MAX, below: 0, inside: n }, rank);
    }
    if budget.s() < SAMPLING_MIN_REGISTERS {
        return multipass_select(reader, budget, rank);
    }
    // lo, hi, below, inside.
    budget.acquire(4)?;
    let mut b = Bracket { lo: 0, hi: u64::MAX, below: 0, inside: n };
    // Sorted uniform sample of the bracket; held between passes.
    let mut sample: Vec<u64> = Vec::new();
    loop {
        budget.release(sample.len());
        if b.inside as usize <= budget.available() {
            let out = collect_pass(reader, budget, b, rank);
            budget.release(4);
            return out;
        }
        let pivots = choose_pivots(&sample, b, rank, budget.available(), params);
        sample.clear();
        // Pivot values plus one counter per cell below the last pivot.
        let pivot_regs = 2 * pivots.len();
        budget.acquire(pivot_regs)?;
        // Reservoir values plus its running count.
        let cap = budget.available().saturating_sub(1);
        budget.acquire(cap + 1)?;
        let window = Bracket {
            lo: pivots.first().copied().unwrap_or(b.lo),
            hi: pivots.last().copied().unwrap_or(b.hi),
            below: 0,
            inside: 0,
        };
        // cells[0]: bracket values below the first pivot; cells[j]: values in
        // [pivots[j-1], pivots[j]); the remainder lies at or above the last pivot.
        let mut cells = vec![0u64; pivots.len() + 1];
        let mut res = Reservoir::new(cap, rng);
        // Half-open [first pivot, last pivot), or the whole bracket without pivots.
        let all = pivots.is_empty();
        let width = window.hi - window.lo;
        let last = pivots.len();
        reader.pass(|x| {
            if !b.contains(x) {
                return;
            }
            if all || x.wrapping_sub(window.lo) < width {
                cells[pivots.partition_point(|&p| p <= x)] += 1;
                res.offer(x);
            } else {
                cells[(x >= window.hi) as usize * last] += 1;
            }
        })?;
        let complete = res.seen <= cap as u64;
        let mut taken = res.items;
        budget.release(pivot_regs + cap + 1);

        let target = rank - b.below;
        let mut acc = 0;
        let mut found = None;
        for (j, &c) in cells.iter().enumerate() {
            if acc + c >= target {
                found = Some((j, acc, c));
                break;
            }
            acc += c;
        }
        let (cell, below, inside) = found.expect("cell counts sum to the bracket size");
        let lo = if cell == 0 { b.lo } else { pivots[cell - 1] };
        let hi = if cell < pivots.len() {
            pivots[cell].checked_sub(1).ok_or(SelectError::DuplicateValues)?
        } else {
            b.hi
        };
        let in_window = pivots.is_empty() || (1..pivots.len()).contains(&cell);
        if inside == 0 || lo > hi {
            budget.release(4);
            return Err(SelectError::DuplicateValues);
        }
        if in_window && complete {
            // The reservoir holds the whole window.
            budget.release(4);
            taken.sort_unstable();
            if taken.windows(2).any(|w| w[0] == w[1]) {
                return Err(SelectError::DuplicateValues);
            }
            let skip = if pivots.is_empty() { 0 } else { cells[0] };
            return Ok(taken[(target - skip - 1) as usize]);
        }
        b = Bracket { lo, hi, below: b.below + below, inside };
        if in_window {
            sample = taken.into_iter().filter(|&x| b.contains(x)).collect();
            sample.sort_unstable();
            budget.acquire(sample.len())?;
        }
    }
}

fn choose_pivots(sample: &[u64], b: Bracket, rank: u64, free: usize, params: &SamplingParams) -> Vec<u64> {
    let m = sample.len();
    if m == 0 {
        return Vec::new();
    }
    let p = (rank - b.below) as f64 / (b.inside + 1) as f64;
    let centre = p * (m + 1) as f64;
    let sd = ((m as f64) * p * (1.0 - p)).sqrt().max(0.5);
    let first = (centre - params.z * sd).floor().max(1.0) as usize;
    let last = ((centre + params.z * sd).ceil() as usize).min(m);
    if first > last {
        return Vec::new();
    }
    // Window pivots are 1-based sample ranks first..=last. If the window is
    // expected to fit in the reservoir, its two ends are enough.
    let expected = (last - first + 1) as f64 / (m + 1) as f64 * b.inside as f64;
    if expected + params.z * expected.sqrt() + 5.0 <= free as f64 {
        let mut ends = vec![sample[first - 1], sample[last - 1]];
        ends.dedup();
        return ends;
    }
    let mut chosen: Vec<u64> = sample[first - 1..last].to_vec();
    // Small budgets still get a few pivots; the reservoir keeps at least one slot.
    let max = ((free as f64 * params.pivot_share / 2.0) as usize).max((free / 3).min(8)).max(2).min(free.saturating_sub(2) / 2);
    if max < 2 {
        return Vec::new();
    }
    if chosen.len() > max {
        let len = chosen.len();
        chosen = (0..max).map(|t| chosen[t * (len - 1) / (max - 1)]).collect();
    }
    chosen.dedup();
    chosen
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Algo {
    Multipass,
    Sampling,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Multipass => "multipass",
            Algo::Sampling => "sampling",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub ns: Vec<u64>,
    pub ss: Vec<usize>,
    pub algos: Vec<Algo>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectRun {
    pub value: u64,
    pub passes: usize,
    pub peak_registers: usize,
}

pub fn run_select(algo: Algo, reader: &mut StreamReader, s: usize, rank: u64, seed: u64) -> Result<SelectRun, SelectError> {
    let mut budget = RegisterBudget::new(s);
    let value = match algo {
        Algo::Multipass => multipass_select(reader, &mut budget, rank)?,
        Algo::Sampling => sampling_select(reader, &mut budget, rank, &mut ChaCha8Rng::seed_from_u64(seed))?,
    };
    assert_eq!(budget.in_use(), 0, "registers leaked");
    Ok(SelectRun { value, passes: reader.pass_count(), peak_registers: budget.peak() })
}

/// Median selection over the grid; input for seed `t` is `synthetic_input(n, t)`.
pub fn pass_bench(config: &BenchConfig) -> Result<Vec<ExperimentRecord>, SelectError> {
    let mut out = Vec::new();
    for &n in &config.ns {
        for &seed in &config.seeds {
            let input = Arc::new(synthetic_input(n, seed));
            let rank = n.div_ceil(2);
            let truth = oracle_select(&input, rank);
            for &s in &config.ss {
                for &algo in &config.algos {
                    let mut reader = StreamReader::from_shared(input.clone());
                    let run = run_select(algo, &mut reader, s, rank, seed)?;
                    let mut params = BTreeMap::new();
                    params.insert("algo".into(), algo.name().into());
                    params.insert("n".into(), n.to_string());
                    params.insert("s".into(), s.to_string());
                    let mut measured = BTreeMap::new();
                    measured.insert("passes".into(), run.passes as f64);
                    measured.insert("peak_registers".into(), run.peak_registers as f64);
                    out.push(ExperimentRecord {
                        suite: "select".into(),
                        params,
                        seed,
                        measured,
                        pass: run.value == truth && run.peak_registers <= s,
                        wall_ms: None,
                    });
                }
            }
        }
    }
    Ok(out)
}

pub const BENCH_HEADER: [&str; 7] = ["algo", "n", "s", "seed", "passes", "peak_registers", "correct"];

pub fn bench_csv(records: &[ExperimentRecord]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BENCH_HEADER)?;
    for r in records {
        w.write_record([
            r.params["algo"].clone(),
            r.params["n"].clone(),
            r.params["s"].clone(),
            r.seed.to_string(),
            (r.measured["passes"] as u64).to_string(),
            (r.measured["peak_registers"] as u64).to_string(),
            r.pass.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}

/// `2 ceil(log_s n) + 2`.
pub fn multipass_bound(n: u64, s: usize) -> usize {
    2 * ceil_log(n as f64, s as f64) + 2
}

/// `ceil(log2 log_s n) + 3`, with the inner term floored at 1.
pub fn sampling_bound(n: u64, s: usize) -> usize {
    let inner = ((n as f64).ln() / (s as f64).ln()).max(1.0);
    inner.log2().ceil() as usize + 3
}

fn ceil_log(x: f64, base: f64) -> usize {
    let v = x.ln() / base.ln();
    // Guard exact powers against rounding up.
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r.max(0.0) as usize
    } else {
        v.ceil().max(0.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn both(values: Vec<u64>, s: usize, rank: u64) -> (SelectRun, SelectRun) {
        let shared = Arc::new(values);
        let a = run_select(Algo::Multipass, &mut StreamReader::from_shared(shared.clone()), s, rank, 1).unwrap();
        let b = run_select(Algo::Sampling, &mut StreamReader::from_shared(shared), s, rank, 1).unwrap();
        (a, b)
    }

    #[test]
    fn everything_fits_in_one_pass() {
        let v = synthetic_input(50, 3);
        let (a, b) = both(v.clone(), 64, 25);
        assert_eq!(a.passes, 1);
        assert_eq!(b.passes, 1);
        assert_eq!(a.value, oracle_select(&v, 25));
        assert_eq!(b.value, oracle_select(&v, 25));
    }

    #[test]
    fn every_rank_small_budget() {
        let v = synthetic_input(300, 5);
        for rank in 1..=300 {
            let (a, b) = both(v.clone(), 4, rank);
            let t = oracle_select(&v, rank);
            assert_eq!((a.value, b.value), (t, t), "rank {rank}");
            assert!(a.peak_registers <= 4 && b.peak_registers <= 4);
        }
    }

    #[test]
    fn sparse_values_near_the_sampling_floor() {
        // Values spread over the whole u64 range; budgets around the fallback.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut v: Vec<u64> = (0..353).map(|_| rng.gen()).collect();
        v.sort_unstable();
        v.dedup();
        rand::seq::SliceRandom::shuffle(&mut v[..], &mut rng);
        for s in 8..=12 {
            for rank in [1, 100, v.len() as u64] {
                let (a, b) = both(v.clone(), s, rank);
                let t = oracle_select(&v, rank);
                assert_eq!((a.value, b.value), (t, t), "s {s} rank {rank}");
            }
        }
    }

    #[test]
    fn extreme_values() {
        let mut v: Vec<u64> = vec![0, 1, 2, u64::MAX, u64::MAX - 1, u64::MAX / 2];
        v.extend((0..200u64).map(|i| i.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        v.sort_unstable();
        v.dedup();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        rand::seq::SliceRandom::shuffle(&mut v[..], &mut rng);
        for s in [10, 16, 40] {
            for rank in [1, 2, 3, v.len() as u64 / 2, v.len() as u64 - 1, v.len() as u64] {
                let (a, b) = both(v.clone(), s, rank);
                let t = oracle_select(&v, rank);
                assert_eq!((a.value, b.value), (t, t), "s {s} rank {rank}");
            }
        }
    }

    #[test]
    fn million_with_thousand_registers() {
        let v = synthetic_input(1_000_000, 9);
        let (a, b) = both(v.clone(), 1000, 500_000);
        let t = oracle_select(&v, 500_000);
        assert_eq!(a.value, t);
        assert_eq!(b.value, t);
        assert!(a.passes <= multipass_bound(1_000_000, 1000), "{}", a.passes);
        assert_eq!(multipass_bound(1_000_000, 1000), 6);
    }

    #[test]
    fn duplicates_are_rejected() {
        let v = vec![5, 1, 5, 3, 5, 5, 2, 9, 5, 5];
        for algo in [Algo::Multipass, Algo::Sampling] {
            let r = run_select(algo, &mut StreamReader::from_vec(v.clone()), 4, 5, 0);
            assert!(matches!(r, Err(SelectError::DuplicateValues)), "{algo:?}: {r:?}");
        }
    }

    #[test]
    fn bad_arguments() {
        let mut r = StreamReader::from_vec(vec![1, 2, 3]);
        assert!(matches!(run_select(Algo::Multipass, &mut r, 3, 1, 0), Err(SelectError::BudgetTooSmall { .. })));
        assert!(matches!(run_select(Algo::Sampling, &mut r, 8, 4, 0), Err(SelectError::RankOutOfRange { .. })));
        let mut e = StreamReader::from_vec(vec![]);
        assert!(matches!(run_select(Algo::Sampling, &mut e, 8, 1, 0), Err(SelectError::Empty)));
    }

    #[test]
    fn file_source_counts_passes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.bin");
        let v = synthetic_input(5000, 2);
        write_values(&path, &v).unwrap();
        let mut r = StreamReader::from_file(&path).unwrap();
        assert_eq!(r.len(), 5000);
        let run = run_select(Algo::Sampling, &mut r, 64, 2500, 4).unwrap();
        assert_eq!(run.value, oracle_select(&v, 2500));
        assert_eq!(run.passes, r.pass_count());
    }

    #[test]
    fn reservoir_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut hits = [0u32; 20];
        for _ in 0..20_000 {
            let mut res = Reservoir::new(5, &mut rng);
            (0..20).for_each(|x| res.offer(x));
            assert_eq!(res.items.len(), 5);
            res.items.iter().for_each(|&x| hits[x as usize] += 1);
        }
        // Each item kept with probability 1/4: 5000 expected, sd about 61.
        assert!(hits.iter().all(|&h| (h as i64 - 5000).abs() < 300), "{hits:?}");
    }

    #[test]
    fn bounds() {
        assert_eq!(sampling_bound(10_000_000, 16), 6);
        assert_eq!(sampling_bound(10_000_000, 256), 5);
        assert_eq!(sampling_bound(10_000_000, 4096), 4);
        assert_eq!(sampling_bound(100, 4096), 3);
        assert_eq!(multipass_bound(10_000_000, 16), 14);
    }

    #[test]
    fn bench_rows() {
        let cfg = BenchConfig { ns: vec![10_000], ss: vec![16], algos: vec![Algo::Multipass, Algo::Sampling], seeds: vec![0] };
        let rows = pass_bench(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.pass));
        let csv = bench_csv(&rows).unwrap();
        assert_eq!(csv, bench_csv(&pass_bench(&cfg).unwrap()).unwrap());
        let empty = BenchConfig { ns: vec![], ss: vec![], algos: vec![], seeds: vec![] };
        assert_eq!(bench_csv(&pass_bench(&empty).unwrap()).unwrap(), "algo,n,s,seed,passes,peak_registers,correct\n");
    }
}
