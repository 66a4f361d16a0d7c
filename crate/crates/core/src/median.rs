//! Median oracles, the nondeterministic read-once median program, and the
//! conversion of read-once programs into ordered (oblivious) ones.
//!
//! Inputs are `n` distinct values from `[2n]`; the median is the element of
//! rank `ceil(n/2)`.

use thiserror::Error;

use crate::bp::{BpError, BranchingProgram, Node, NodeId, ProgramBuilder};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MedianError {
    #[error("input is empty")]
    Empty,
    #[error("value {value} is outside 1..={max}")]
    OutOfRange { value: u32, max: u32 },
    #[error("value {0} occurs more than once")]
    Duplicate(u32),
    #[error("n must be even and at least 2, got {0}")]
    BadSize(usize),
    #[error("program is not read-once")]
    NotReadOnce,
    #[error("node {node} is preceded by {seen} distinct indices, more than n - 1")]
    IndexSetTooLarge { node: NodeId, seen: usize },
    #[error(transparent)]
    Program(#[from] BpError),
}

pub fn median_rank(n: usize) -> usize {
    n.div_ceil(2)
}

fn validate(input: &[u32]) -> Result<(), MedianError> {
    if input.is_empty() {
        return Err(MedianError::Empty);
    }
    let max = 2 * input.len() as u32;
    let mut seen = vec![false; max as usize + 1];
    for &v in input {
        if v == 0 || v > max {
            return Err(MedianError::OutOfRange { value: v, max });
        }
        if std::mem::replace(&mut seen[v as usize], true) {
            return Err(MedianError::Duplicate(v));
        }
    }
    Ok(())
}

/// Median by sorting.
pub fn median_oracle(input: &[u32]) -> Result<u32, MedianError> {
    validate(input)?;
    let mut v = input.to_vec();
    v.sort_unstable();
    Ok(v[median_rank(v.len()) - 1])
}

/// Median by a linear-time selection, used as an independent cross-check.
pub fn median_select(input: &[u32]) -> Result<u32, MedianError> {
    validate(input)?;
    let mut v = input.to_vec();
    let r = median_rank(v.len()) - 1;
    Ok(*v.select_nth_unstable(r).1)
}

pub fn median_bit(input: &[u32]) -> Result<u8, MedianError> {
    Ok((median_oracle(input)? & 1) as u8)
}

/// Bound on the tuple coordinates `l + e` kept by the construction.
fn tuple_cap(n: usize) -> usize {
    (n + 1) / 2 + 1
}

fn pair_count(b: usize) -> u64 {
    ((b + 1) * (b + 2) / 2) as u64
}

/// Node count of [`build_median_nbp`] without materialising the program.
pub fn median_nbp_node_count(n: usize) -> Result<u64, MedianError> {
    if n < 2 || n % 2 == 1 {
        return Err(MedianError::BadSize(n));
    }
    let cap = tuple_cap(n);
    let tuples: u64 = (1..n).map(|i| 2 * n as u64 * pair_count(i.min(cap))).sum();
    Ok(1 + 2 * n as u64 + tuples)
}

/// Read-once nondeterministic program computing the median.
///
/// Level `i` holds the tuples `(i, m, l, e)`: after reading `x_1..x_i` the
/// guessed median is `m`, `l` values below it and `e` copies of it were
/// seen. All tuples with `l + e <= min(i, ceil(n/2)+1)` are materialised,
/// so some are unreachable; edges are kept only while the guess can still be
/// confirmed. The sink of guess `m` is reached exactly when the final
/// counts are `h - 1` and `1`, with `h = ceil(n/2)`.
pub fn build_median_nbp(n: usize) -> Result<BranchingProgram, MedianError> {
    if n < 2 || n % 2 == 1 {
        return Err(MedianError::BadSize(n));
    }
    let two_n = 2 * n as u32;
    let h = median_rank(n);
    let cap = tuple_cap(n);
    let mut b = ProgramBuilder::new(two_n, n);
    let source = b.query(0);

    let stride_e = cap + 1;
    let stride_l = stride_e * (cap + 1);
    let stride_m = stride_l * (two_n as usize + 1);
    let mut ids: Vec<Option<NodeId>> = vec![None; stride_m * n];
    let key = |i: usize, m: u32, l: usize, e: usize| i * stride_m + m as usize * stride_l + l * stride_e + e;
    for i in 1..n {
        let bound = i.min(cap);
        for m in 1..=two_n {
            for l in 0..=bound {
                for e in 0..=bound - l {
                    ids[key(i, m, l, e)] = Some(b.query(i));
                }
            }
        }
    }
    let sinks: Vec<NodeId> = (1..=two_n).map(|m| b.sink(m as u64)).collect();

    for v in 1..=two_n {
        for m in 1..=two_n {
            let t = ids[key(1, m, usize::from(v < m), usize::from(v == m))].expect("level 1 tuple");
            b.edge(source, v, t);
        }
    }
    for i in 1..n {
        let bound = i.min(cap);
        let remaining = n - i - 1;
        for m in 1..=two_n {
            for l in 0..=bound {
                for e in 0..=bound - l {
                    let from = ids[key(i, m, l, e)].expect("tuple");
                    for v in 1..=two_n {
                        let l2 = l + usize::from(v < m);
                        let e2 = e + usize::from(v == m);
                        if remaining == 0 {
                            if l2 == h - 1 && e2 == 1 {
                                b.edge(from, v, sinks[m as usize - 1]);
                            }
                        } else if l2 < h && e2 <= 1 && l2 + remaining >= h - 1 {
                            let to = ids[key(i + 1, m, l2, e2)].expect("successor tuple");
                            b.edge(from, v, to);
                        }
                    }
                }
            }
        }
    }
    Ok(b.build(source)?)
}

/// Reindexes a read-once program so that a node preceded by the index set
/// `I_v` queries index `|I_v|`. For programs computing a symmetric function
/// the result computes the same function and is ordered, hence oblivious
/// after leveling.
pub fn obliviate_readonce(bp: &BranchingProgram) -> Result<BranchingProgram, MedianError> {
    if !bp.check_read_k(1) {
        return Err(MedianError::NotReadOnce);
    }
    let n = bp.num_inputs();
    let words = n.div_ceil(64).max(1);
    let reach = bp.reachable();
    let mut seen: Vec<Vec<u64>> = vec![vec![0; words]; bp.len()];
    for &v in bp.topological_order() {
        if !reach[v] {
            continue;
        }
        if let Node::Query { index, .. } = bp.node(v) {
            let mut after = seen[v].clone();
            after[index / 64] |= 1 << (index % 64);
            for &t in bp.successor_ids(v) {
                for (w, a) in seen[t].iter_mut().zip(&after) {
                    *w |= a;
                }
            }
        }
    }
    let mut failure = None;
    let out = bp.map_indices(|id, old| {
        if !reach[id] {
            return old;
        }
        let count: usize = seen[id].iter().map(|w| w.count_ones() as usize).sum();
        if count >= n {
            failure.get_or_insert(MedianError::IndexSetTooLarge { node: id, seen: count });
            old
        } else {
            count
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::Obliviousness;

    fn distinct_inputs(n: usize) -> Vec<Vec<u32>> {
        let two_n = 2 * n as u32;
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(n: usize, two_n: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if cur.len() == n {
                out.push(cur.clone());
                return;
            }
            for v in 1..=two_n {
                if !cur.contains(&v) {
                    cur.push(v);
                    rec(n, two_n, cur, out);
                    cur.pop();
                }
            }
        }
        rec(n, two_n, &mut cur, &mut out);
        out
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(median_oracle(&[3, 1, 4, 2]), Ok(2));
        assert_eq!(median_oracle(&[2, 1]), Ok(1));
        assert_eq!(median_oracle(&[1, 3, 4, 8]), Ok(3));
        assert_eq!(median_bit(&[1, 3, 4, 8]), Ok(1));
        assert_eq!(median_bit(&[2, 4]), Ok(0));
        assert_eq!(median_bit(&[1, 2]), Ok(1));
        assert_eq!(median_oracle(&[5]), Err(MedianError::OutOfRange { value: 5, max: 2 }));
        assert_eq!(median_oracle(&[1, 1]), Err(MedianError::Duplicate(1)));
        assert_eq!(median_oracle(&[5, 1, 2]), Ok(2));
        assert_eq!(median_oracle(&[9, 1]), Err(MedianError::OutOfRange { value: 9, max: 4 }));
        assert_eq!(median_oracle(&[]), Err(MedianError::Empty));
    }

    #[test]
    fn nbp_size_two_has_seventeen_nodes() {
        let bp = build_median_nbp(2).unwrap();
        assert_eq!(bp.len(), 17);
        assert_eq!(median_nbp_node_count(2), Ok(17));
        assert_eq!(bp.evaluate_nondeterministic(&[3, 1]), Ok(1));
    }

    #[test]
    fn nbp_rejects_odd_sizes() {
        assert_eq!(build_median_nbp(3).err(), Some(MedianError::BadSize(3)));
        assert_eq!(median_nbp_node_count(0), Err(MedianError::BadSize(0)));
    }

    #[test]
    fn nbp_exhaustive_small() {
        for n in [2, 4] {
            let bp = build_median_nbp(n).unwrap();
            assert!(bp.check_read_k(1));
            assert_eq!(bp.len() as u64, median_nbp_node_count(n).unwrap());
            for x in distinct_inputs(n) {
                assert_eq!(
                    bp.evaluate_nondeterministic(&x).unwrap(),
                    median_oracle(&x).unwrap() as u64,
                    "input {x:?}"
                );
            }
        }
    }

    #[test]
    fn obliviation_of_readonce_median() {
        let bp = build_median_nbp(4).unwrap();
        let ob = obliviate_readonce(&bp).unwrap();
        assert!(ob.is_ordered());
        assert!(matches!(ob.level().check_oblivious(), Obliviousness::Oblivious(_)));
        for x in distinct_inputs(4) {
            assert_eq!(ob.evaluate_nondeterministic(&x), bp.evaluate_nondeterministic(&x));
        }
    }

    #[test]
    fn obliviation_rejects_read_twice() {
        let mut b = ProgramBuilder::new(2, 1);
        let s = b.query(0);
        let t = b.query(0);
        let z = b.sink(0);
        b.edge(s, 1, t);
        b.edge(s, 2, t);
        b.edge(t, 1, z);
        b.edge(t, 2, z);
        let bp = b.build(s).unwrap();
        assert_eq!(obliviate_readonce(&bp).err(), Some(MedianError::NotReadOnce));
    }

    /// Read-once decision tree for `f`; unless `ordered`, the next index read
    /// is the smallest unread one when the running sum is even, else the largest.
    fn readonce_tree(n: usize, domain: u32, ordered: bool, f: &dyn Fn(&[u32]) -> u64) -> BranchingProgram {
        fn grow(
            b: &mut ProgramBuilder,
            n: usize,
            domain: u32,
            ordered: bool,
            read: &mut Vec<(usize, u32)>,
            f: &dyn Fn(&[u32]) -> u64,
        ) -> NodeId {
            if read.len() == n {
                let vals: Vec<u32> = read.iter().map(|&(_, v)| v).collect();
                return b.sink(f(&vals));
            }
            let unread: Vec<usize> = (0..n).filter(|i| read.iter().all(|&(j, _)| j != *i)).collect();
            let sum: u32 = read.iter().map(|&(_, v)| v).sum();
            let next = if ordered || sum % 2 == 0 { unread[0] } else { *unread.last().unwrap() };
            let id = b.query(next);
            for v in 1..=domain {
                read.push((next, v));
                let t = grow(b, n, domain, ordered, read, f);
                read.pop();
                b.edge(id, v, t);
            }
            id
        }
        let mut b = ProgramBuilder::new(domain, n);
        let s = grow(&mut b, n, domain, ordered, &mut Vec::new(), f);
        b.build(s).unwrap()
    }

    fn all_inputs(n: usize, domain: u32) -> Vec<Vec<u32>> {
        (0..(domain as usize).pow(n as u32))
            .map(|mut c| {
                (0..n)
                    .map(|_| {
                        let v = (c % domain as usize) as u32 + 1;
                        c /= domain as usize;
                        v
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn obliviation_preserves_symmetric_functions() {
        let or = |x: &[u32]| u64::from(x.iter().any(|&v| v == 2));
        let majority = |x: &[u32]| u64::from(2 * x.iter().filter(|&&v| v >= 2).count() > x.len());
        let parity = |x: &[u32]| x.iter().map(|&v| v as u64).sum::<u64>() % 2;
        let fs: [&dyn Fn(&[u32]) -> u64; 3] = [&or, &majority, &parity];
        for n in 1..=4 {
            for domain in 2..=3 {
                for f in fs {
                    let bp = readonce_tree(n, domain, false, f);
                    let ob = obliviate_readonce(&bp).unwrap();
                    assert_eq!(ob.len(), bp.len());
                    assert!(ob.is_ordered());
                    assert!(matches!(ob.level().check_oblivious(), Obliviousness::Oblivious(_)));
                    for x in all_inputs(n, domain) {
                        assert_eq!(ob.evaluate_deterministic(&x).unwrap(), f(&x));
                    }
                }
            }
        }
    }

    #[test]
    fn obliviation_of_ordered_program_is_identity() {
        let parity = |x: &[u32]| x.iter().map(|&v| v as u64).sum::<u64>() % 2;
        let bp = readonce_tree(3, 3, true, &parity);
        assert!(bp.is_ordered());
        assert_eq!(obliviate_readonce(&bp).unwrap(), bp);
    }

    #[test]
    fn obliviation_may_break_non_symmetric_functions() {
        // f = x1, computed by reading x2 first.
        let mut b = ProgramBuilder::new(2, 2);
        let s = b.query(1);
        let a = b.query(0);
        let c = b.query(0);
        let z = b.sink(0);
        let o = b.sink(1);
        for (node, _) in [(a, 1), (c, 2)] {
            b.edge(node, 1, z);
            b.edge(node, 2, o);
        }
        b.edge(s, 1, a);
        b.edge(s, 2, c);
        let bp = b.build(s).unwrap();
        let ob = obliviate_readonce(&bp).unwrap();
        assert_eq!(bp.evaluate_deterministic(&[2, 1]), Ok(1));
        assert_eq!(ob.evaluate_deterministic(&[2, 1]), Ok(0));
    }
}
