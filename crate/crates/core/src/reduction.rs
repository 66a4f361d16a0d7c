//! From an oblivious program to a two-party protocol.
//!
//! The query sequence is cut into `4k^2` equal segments; Alice takes `2k` of
//! them and Bob the rest. Each player owns the indices that occur only in
//! their own segments, and a small median instance is embedded on those
//! indices. The protocol then runs the program segment by segment, sending
//! the current node's name whenever ownership changes.

use std::collections::HashMap;

use num_integer::binomial;
use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bp::{BpError, BranchingProgram, Label, Node, NodeId, Obliviousness, ProgramBuilder};
use crate::median::median_rank;
use crate::Party;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("no assignment met the bound within {0} attempts")]
    AttemptCapExceeded(u64),
    #[error("only {found} exclusive indices for {party:?}, need {needed}")]
    NotEnoughIndices { party: Party, found: usize, needed: usize },
    #[error("program is not oblivious: {0}")]
    NotOblivious(String),
    #[error("program query sequence does not match the segments")]
    SequenceMismatch,
    #[error("{0:?} queried index {1} it does not hold")]
    Ownership(Party, usize),
    #[error(transparent)]
    Program(#[from] BpError),
}

/// Cuts a length-`kn` sequence into `4k^2` consecutive segments of length `n/(4k)`.
pub fn segment_split(sequence: &[usize], n: usize, k: usize) -> Result<Vec<Vec<usize>>, ReductionError> {
    if k == 0 || n == 0 || n % (4 * k) != 0 {
        return Err(ReductionError::InvalidArgs(format!("4k = {} must divide n = {n}", 4 * k)));
    }
    if sequence.len() != k * n {
        return Err(ReductionError::InvalidArgs(format!(
            "sequence length {} differs from kn = {}",
            sequence.len(),
            k * n
        )));
    }
    if let Some(&i) = sequence.iter().find(|&&i| i >= n) {
        return Err(ReductionError::InvalidArgs(format!("index {} exceeds n = {n}", i + 1)));
    }
    Ok(sequence.chunks(n / (4 * k)).map(<[usize]>::to_vec).collect())
}

/// Every index of `0..n` exactly `k` times, in uniformly random order.
pub fn random_query_sequence<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut seq: Vec<usize> = (0..k).flat_map(|_| 0..n).collect();
    seq.shuffle(rng);
    seq
}

/// Largest `k` for which segment sets fit the bitmask representation.
pub const MAX_K: usize = 5;
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;
pub const ATTEMPT_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentAssignment {
    pub k: usize,
    pub n: usize,
    pub segments: Vec<Vec<usize>>,
    /// Alice's segment ids, ascending.
    pub alice_segments: Vec<usize>,
    pub n_a: usize,
    pub n_b: usize,
    /// `C(4k^2, 2k)`.
    pub choose: u128,
    pub attempts: u64,
    pub exhaustive: bool,
}

fn occurrence_masks(segments: &[Vec<usize>], n: usize) -> Vec<u128> {
    let mut masks = vec![0u128; n];
    for (s, seg) in segments.iter().enumerate() {
        for &i in seg {
            masks[i] |= 1 << s;
        }
    }
    masks
}

fn counts(masks: &[u128], l_a: u128) -> (usize, usize) {
    let n_a = masks.iter().filter(|&&m| m & !l_a == 0).count();
    let n_b = masks.iter().filter(|&&m| m & l_a == 0).count();
    (n_a, n_b)
}

fn mask_of(ids: &[usize]) -> u128 {
    ids.iter().fold(0, |m, &s| m | 1 << s)
}

fn ids_of(mask: u128) -> Vec<usize> {
    (0..128).filter(|s| mask >> s & 1 == 1).collect()
}

/// Next combination of `size` elements out of `0..r` in lexicographic order.
fn next_combination(c: &mut [usize], r: usize) -> bool {
    let size = c.len();
    for i in (0..size).rev() {
        if c[i] < r - size + i {
            c[i] += 1;
            for j in i + 1..size {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Chooses Alice's `2k` segments so that both players own many indices.
///
/// Exhaustive (maximizing `n_A`) when `C(4k^2, 2k) <= 10^6`; otherwise a
/// greedy choice followed by uniformly random choices until the bound holds.
pub fn find_assignment<R: Rng + ?Sized>(
    segments: &[Vec<usize>],
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<SegmentAssignment, ReductionError> {
    let r = 4 * k * k;
    if k == 0 || k > MAX_K || segments.len() != r {
        return Err(ReductionError::InvalidArgs(format!(
            "need 4k^2 = {r} segments with 1 <= k <= {MAX_K}, got {}",
            segments.len()
        )));
    }
    let choose: u128 = binomial(r as u128, 2 * k as u128);
    let masks = occurrence_masks(segments, n);
    let meets = |n_a: usize| 2 * choose * n_a as u128 >= n as u128;
    let done = |l_a: u128, attempts: u64, exhaustive: bool| {
        let (n_a, n_b) = counts(&masks, l_a);
        SegmentAssignment {
            k,
            n,
            segments: segments.to_vec(),
            alice_segments: ids_of(l_a),
            n_a,
            n_b,
            choose,
            attempts,
            exhaustive,
        }
    };

    if choose <= EXHAUSTIVE_LIMIT {
        let mut c: Vec<usize> = (0..2 * k).collect();
        let mut best = (mask_of(&c), counts(&masks, mask_of(&c)).0);
        let mut attempts = 1;
        while next_combination(&mut c, r) {
            attempts += 1;
            let m = mask_of(&c);
            let n_a = counts(&masks, m).0;
            if n_a > best.1 {
                best = (m, n_a);
            }
        }
        return Ok(done(best.0, attempts, true));
    }

    // Greedy: start from the segments of the least-spread queried index.
    let mut l_a = masks
        .iter()
        .filter(|m| **m != 0 && m.count_ones() as usize <= 2 * k)
        .min_by_key(|m| m.count_ones())
        .copied()
        .unwrap_or(0);
    while (l_a.count_ones() as usize) < 2 * k {
        let add = (0..r)
            .filter(|s| l_a >> s & 1 == 0)
            .max_by_key(|&s| (counts(&masks, l_a | 1 << s).0, std::cmp::Reverse(s)))
            .expect("a free segment remains");
        l_a |= 1 << add;
    }
    if meets(counts(&masks, l_a).0) {
        return Ok(done(l_a, 1, false));
    }
    for attempt in 2..=ATTEMPT_CAP {
        let pick: Vec<usize> = sample(rng, r, 2 * k).into_vec();
        let m = mask_of(&pick);
        if meets(counts(&masks, m).0) {
            return Ok(done(m, attempt, false));
        }
    }
    Err(ReductionError::AttemptCapExceeded(ATTEMPT_CAP))
}

impl SegmentAssignment {
    pub fn alice_mask(&self) -> u128 {
        mask_of(&self.alice_segments)
    }

    /// `n_A >= n / (2 C(4k^2, 2k))`.
    pub fn alice_bound_met(&self) -> bool {
        2 * self.choose * self.n_a as u128 >= self.n as u128
    }

    pub fn bob_bound_met(&self) -> bool {
        2 * self.n_b >= self.n
    }

    pub fn owner(&self, segment: usize) -> Party {
        if self.alice_mask() >> segment & 1 == 1 {
            Party::Alice
        } else {
            Party::Bob
        }
    }

    /// `ceil(n / C(4k^2, 2k))`.
    pub fn default_embedded_size(&self) -> usize {
        (self.n as u128).div_ceil(self.choose) as usize
    }

    /// Lexicographically smallest `I_A`, `I_B` of size `N/2`; the rest is `Q`.
    pub fn embedding(&self, n_small: usize) -> Result<Embedding, ReductionError> {
        if n_small == 0 || n_small % 2 == 1 || n_small > self.n {
            return Err(ReductionError::InvalidArgs(format!(
                "embedded size N = {n_small} must be even and in 2..={}",
                self.n
            )));
        }
        if (self.n - n_small) % 2 == 1 {
            return Err(ReductionError::InvalidArgs(format!("n - N = {} must be even", self.n - n_small)));
        }
        let masks = occurrence_masks(&self.segments, self.n);
        let l_a = self.alice_mask();
        let half = n_small / 2;
        let i_a: Vec<usize> = (0..self.n).filter(|&i| masks[i] & !l_a == 0).take(half).collect();
        if i_a.len() < half {
            return Err(ReductionError::NotEnoughIndices { party: Party::Alice, found: i_a.len(), needed: half });
        }
        let i_b: Vec<usize> =
            (0..self.n).filter(|&i| masks[i] & l_a == 0 && !i_a.contains(&i)).take(half).collect();
        if i_b.len() < half {
            return Err(ReductionError::NotEnoughIndices { party: Party::Bob, found: i_b.len(), needed: half });
        }
        let q = (0..self.n).filter(|i| !i_a.contains(i) && !i_b.contains(i)).collect();
        Ok(Embedding { n: self.n, n_small, i_a, i_b, q })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Embedding {
    pub n: usize,
    pub n_small: usize,
    pub i_a: Vec<usize>,
    pub i_b: Vec<usize>,
    pub q: Vec<usize>,
}

impl Embedding {
    pub fn correction(&self) -> u8 {
        ((self.n - self.n_small) & 1) as u8
    }

    fn shift(&self) -> u32 {
        (self.n - self.n_small) as u32
    }

    /// Fixed values on `Q`: the smallest `(n-N)/2` values below the embedded
    /// band and the smallest `(n-N)/2` above it.
    fn fixed_values(&self) -> Vec<u32> {
        let half = ((self.n - self.n_small) / 2) as u32;
        let above = (self.n + self.n_small) as u32;
        (1..=half).chain(above + 1..=above + half).collect()
    }

    /// What `party` knows of the full input.
    pub fn view(&self, party: Party, own_half: &[u32]) -> Result<Vec<Option<u32>>, ReductionError> {
        let own = match party {
            Party::Alice => &self.i_a,
            Party::Bob => &self.i_b,
        };
        if own_half.len() != own.len() {
            return Err(ReductionError::InvalidArgs(format!(
                "{party:?} half has {} values, expected {}",
                own_half.len(),
                own.len()
            )));
        }
        let mut v = vec![None; self.n];
        for (&i, &x) in own.iter().zip(own_half) {
            v[i] = Some(x + self.shift());
        }
        for (&i, x) in self.q.iter().zip(self.fixed_values()) {
            v[i] = Some(x);
        }
        Ok(v)
    }
}

/// Full input for a small instance; returns it with the output-correction bit.
pub fn embed_instance(small: &[u32], emb: &Embedding) -> Result<(Vec<u32>, u8), ReductionError> {
    if small.len() != emb.n_small {
        return Err(ReductionError::InvalidArgs(format!(
            "small input has {} values, expected N = {}",
            small.len(),
            emb.n_small
        )));
    }
    let max = 2 * emb.n_small as u32;
    if let Some(v) = small.iter().find(|&&v| v == 0 || v > max) {
        return Err(ReductionError::InvalidArgs(format!("value {v} outside 1..={max}")));
    }
    let half = emb.n_small / 2;
    let a = emb.view(Party::Alice, &small[..half])?;
    let b = emb.view(Party::Bob, &small[half..])?;
    let full = a.iter().zip(&b).map(|(x, y)| x.or(*y).expect("every index is covered")).collect();
    Ok((full, emb.correction()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Message {
    pub speaker: Party,
    pub value: u64,
    pub bits: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolRun {
    pub transcript: Vec<Message>,
    pub output: u8,
    /// Bits per node name: `ceil(log2(max level width))`.
    pub name_bits: u32,
    pub final_label: Label,
}

impl ProtocolRun {
    pub fn message_count(&self) -> usize {
        self.transcript.len()
    }

    pub fn max_message_bits(&self) -> u32 {
        let body = &self.transcript[..self.transcript.len().saturating_sub(1)];
        body.iter().map(|m| m.bits).max().unwrap_or(0)
    }

    /// One `speaker,bits_hex,bit_count` line per message.
    pub fn transcript_lines(&self) -> String {
        self.transcript.iter().map(|m| format!("{},{:x},{}\n", m.speaker.tag(), m.value, m.bits)).collect()
    }
}

fn bits_for(width: usize) -> u32 {
    if width <= 1 {
        0
    } else {
        usize::BITS - (width - 1).leading_zeros()
    }
}

/// Runs the program as a protocol. Ownership changes between consecutive
/// segments cost one node-name message from the player handing over; a
/// zero-bit name is silent. The final message is the output bit.
pub fn protocol_from_bp(
    bp: &BranchingProgram,
    assignment: &SegmentAssignment,
    embedding: &Embedding,
    alice_half: &[u32],
    bob_half: &[u32],
) -> Result<ProtocolRun, ReductionError> {
    if !bp.is_deterministic() {
        return Err(BpError::NotDeterministic.into());
    }
    let sequence = match bp.check_oblivious() {
        Obliviousness::Oblivious(s) => s,
        Obliviousness::NotOblivious(why) => return Err(ReductionError::NotOblivious(why)),
    };
    let flat: Vec<usize> = assignment.segments.concat();
    if sequence != flat || bp.num_inputs() != assignment.n {
        return Err(ReductionError::SequenceMismatch);
    }

    // Dense per-level names; deterministic oblivious programs are leveled.
    let mut depth = vec![usize::MAX; bp.len()];
    depth[bp.source()] = 0;
    let mut levels: Vec<Vec<NodeId>> = vec![Vec::new(); flat.len() + 1];
    for &v in bp.topological_order() {
        if depth[v] == usize::MAX {
            continue;
        }
        levels[depth[v]].push(v);
        for &t in bp.successor_ids(v) {
            depth[t] = depth[v] + 1;
        }
    }
    for level in &mut levels {
        level.sort_unstable();
    }
    let name_bits = bits_for(levels.iter().map(Vec::len).max().unwrap_or(1));
    let name_of = |v: NodeId| levels[depth[v]].binary_search(&v).expect("node on its level") as u64;

    let views = [embedding.view(Party::Alice, alice_half)?, embedding.view(Party::Bob, bob_half)?];
    let view = |p: Party| &views[usize::from(p == Party::Bob)];

    let mut transcript = Vec::new();
    let mut node = bp.source();
    let mut holder = assignment.owner(0);
    let mut step = 0;
    for (s, seg) in assignment.segments.iter().enumerate() {
        let owner = assignment.owner(s);
        if owner != holder {
            let name = name_of(node);
            if name_bits > 0 {
                transcript.push(Message { speaker: holder, value: name, bits: name_bits });
            }
            // The receiver recovers the node from its level and name.
            node = levels[step][name as usize];
            holder = owner;
        }
        for _ in seg {
            let Node::Query { index, .. } = bp.node(node) else {
                return Err(ReductionError::SequenceMismatch);
            };
            let x = view(holder)[*index].ok_or(ReductionError::Ownership(holder, index + 1))?;
            node = bp.successors(node, x).next().expect("deterministic program");
            step += 1;
        }
    }
    let Node::Sink { label } = bp.node(node) else {
        return Err(ReductionError::SequenceMismatch);
    };
    let output = (*label & 1) as u8 ^ embedding.correction();
    transcript.push(Message { speaker: holder, value: output as u64, bits: 1 });
    Ok(ProtocolRun { transcript, output, name_bits, final_label: *label })
}

/// Deterministic oblivious program computing the median of `n` distinct
/// values from `[2n]`, reading indices in `order`. The state is the set of
/// values seen; once every index has been read it collapses to the median.
/// Inputs with repeated values end in a sink labelled 0.
pub fn oblivious_median_program(order: &[usize], n: usize) -> Result<BranchingProgram, ReductionError> {
    if n == 0 || 2 * n > 64 {
        return Err(ReductionError::InvalidArgs(format!("n = {n} must lie in 1..=32")));
    }
    let mut covered = vec![false; n];
    for &i in order {
        if i >= n {
            return Err(ReductionError::InvalidArgs(format!("index {} exceeds n = {n}", i + 1)));
        }
        covered[i] = true;
    }
    if !covered.iter().all(|&c| c) {
        return Err(ReductionError::InvalidArgs("order must read every index".into()));
    }

    #[derive(Clone, Copy, PartialEq, Eq, Hash)]
    enum State {
        Seen(u64),
        Done(u32),
        Garbage,
    }
    let two_n = 2 * n as u32;
    let rank = median_rank(n);
    let median_of = |mask: u64| {
        let mut m = mask;
        for _ in 1..rank {
            m &= m - 1;
        }
        m.trailing_zeros() + 1
    };

    let mut b = ProgramBuilder::new(two_n, n);
    let mut read = vec![false; n];
    let source = b.query(order[0]);
    let mut current: Vec<(State, NodeId)> = vec![(State::Seen(0), source)];
    for (t, &index) in order.iter().enumerate() {
        let first_read = !std::mem::replace(&mut read[index], true);
        let last = t + 1 == order.len();
        let mut next: HashMap<State, NodeId> = HashMap::new();
        let mut next_order: Vec<(State, NodeId)> = Vec::new();
        for &(state, id) in &current {
            for v in 1..=two_n {
                let to = match state {
                    State::Seen(mask) if first_read => {
                        if mask >> (v - 1) & 1 == 1 {
                            State::Garbage
                        } else {
                            let m2 = mask | 1 << (v - 1);
                            if m2.count_ones() as usize == n {
                                State::Done(median_of(m2))
                            } else {
                                State::Seen(m2)
                            }
                        }
                    }
                    other => other,
                };
                let target = *next.entry(to).or_insert_with(|| {
                    let id = if last {
                        b.sink(match to {
                            State::Done(m) => m as u64,
                            _ => 0,
                        })
                    } else {
                        b.query(order[t + 1])
                    };
                    next_order.push((to, id));
                    id
                });
                b.edge(id, v, target);
            }
        }
        current = next_order;
    }
    Ok(b.build(source)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::median::median_oracle;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn split_examples() {
        let seq: Vec<usize> = (0..8).collect();
        let s = segment_split(&seq, 8, 1).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|x| x.len() == 2));
        let seq: Vec<usize> = (0..32).map(|i| i % 16).collect();
        let s = segment_split(&seq, 16, 2).unwrap();
        assert_eq!((s.len(), s[0].len()), (16, 2));
        assert!(segment_split(&seq[..31], 16, 2).is_err());
        assert!(segment_split(&seq[..6], 6, 1).is_err());
    }

    #[test]
    fn read_once_assignment() {
        let seq: Vec<usize> = (0..12).collect();
        let segs = segment_split(&seq, 12, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = find_assignment(&segs, 12, 1, &mut rng).unwrap();
        assert_eq!(a.choose, 6);
        assert_eq!((a.n_a, a.n_b), (6, 6));
        assert!(a.alice_bound_met() && a.bob_bound_met());
    }

    #[test]
    fn embedding_examples() {
        let seq: Vec<usize> = (0..8).collect();
        let segs = segment_split(&seq, 8, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = find_assignment(&segs, 8, 1, &mut rng).unwrap();
        let emb = a.embedding(4).unwrap();
        let small = [3, 8, 1, 6];
        let (full, c) = embed_instance(&small, &emb).unwrap();
        assert_eq!(c, 0);
        assert_eq!(median_oracle(&full).unwrap(), median_oracle(&small).unwrap() + 4);
        let id = a.embedding(8).unwrap();
        let (full, c) = embed_instance(&[1, 2, 3, 4, 5, 6, 7, 8], &id).unwrap();
        assert_eq!(c, 0);
        assert_eq!(full.len(), 8);
        assert!(a.embedding(10).is_err());
    }

    #[test]
    fn protocol_on_in_order_program() {
        let order: Vec<usize> = (0..4).collect();
        let bp = oblivious_median_program(&order, 4).unwrap();
        let segs = segment_split(&order, 4, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = find_assignment(&segs, 4, 1, &mut rng).unwrap();
        let emb = a.embedding(2).unwrap();
        for small in [[1, 2], [2, 1], [3, 4], [4, 1], [2, 3]] {
            let (full, c) = embed_instance(&small, &emb).unwrap();
            let run = protocol_from_bp(&bp, &a, &emb, &small[..1], &small[1..]).unwrap();
            assert_eq!(run.output, (bp.evaluate_deterministic(&full).unwrap() & 1) as u8 ^ c);
            assert!(run.message_count() <= 5);
            assert_eq!(run.transcript.last().unwrap().bits, 1);
        }
    }

    #[test]
    fn constant_program_sends_only_output() {
        // Width-one levels make every handoff silent.
        let seq: Vec<usize> = vec![0, 1, 2, 3];
        let mut b = ProgramBuilder::new(8, 4);
        let ids: Vec<NodeId> = seq.iter().map(|&i| b.query(i)).collect();
        let z = b.sink(0);
        for (t, &id) in ids.iter().enumerate() {
            let next = ids.get(t + 1).copied().unwrap_or(z);
            for v in 1..=8 {
                b.edge(id, v, next);
            }
        }
        let bp = b.build(ids[0]).unwrap();
        let segs = segment_split(&seq, 4, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = find_assignment(&segs, 4, 1, &mut rng).unwrap();
        let emb = a.embedding(2).unwrap();
        let run = protocol_from_bp(&bp, &a, &emb, &[1], &[2]).unwrap();
        assert_eq!(run.message_count(), 1);
        assert_eq!(run.transcript_lines(), format!("{},0,1\n", run.transcript[0].speaker.tag()));
    }

    #[test]
    fn median_program_matches_oracle() {
        let bp = oblivious_median_program(&[1, 0, 2, 1, 3, 0, 2, 3], 4).unwrap();
        assert!(matches!(bp.check_oblivious(), Obliviousness::Oblivious(_)));
        for x in [[1, 2, 3, 4], [8, 6, 4, 2], [5, 1, 7, 3]] {
            assert_eq!(bp.evaluate_deterministic(&x).unwrap(), median_oracle(&x).unwrap() as u64);
        }
        assert_eq!(bp.evaluate_deterministic(&[1, 1, 2, 3]).unwrap(), 0);
    }
}
