//! Recursive core/shell pairings and the hard median distribution over them.
//!
//! A node of size `n` spans `2n` consecutive values. Its shell pairs `i` with
//! `2n+1-i` for `i <= n - gamma`; the middle `2 gamma` values form `k`
//! consecutive blocks, each the value range of a child of size `gamma / k`.
//! Leaves pair consecutive values `(2i-1, 2i)`.

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::median::median_oracle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HardError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("node is not a leaf")]
    NotALeaf,
    #[error("node is a leaf")]
    IsALeaf,
    #[error("trial count must be positive")]
    NoTrials,
}

/// Parameters of the recursion.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ModeParams {
    /// `k = floor(m log^2 n0)` and `gamma = floor(sqrt(n) / log^2 n0)`,
    /// rounded down to a multiple of `2k`; logs are base 2.
    Scaled { m: f64, n0: u64 },
    /// Explicit `(gamma, k)` for each level, root first.
    Toy { schedule: Vec<(usize, usize)> },
}

/// `(gamma, k)` for a scaled-mode node of size `2^log2_n`, or `None` at the base.
fn scaled_split(log2_n: f64, m: f64, log2_n0: f64) -> Result<Option<(f64, f64)>, HardError> {
    let l2 = log2_n0 * log2_n0;
    let k = (m * l2).floor();
    if k < 1.0 {
        return Err(HardError::InvalidParams(format!("k = floor(m log^2 n0) = {k} < 1")));
    }
    let sqrt_n = (log2_n / 2.0).exp2();
    if sqrt_n < k * l2 * log2_n0 {
        return Ok(None);
    }
    let gamma = ((sqrt_n / l2).floor() / (2.0 * k)).floor() * 2.0 * k;
    if gamma < k {
        return Err(HardError::InvalidParams(format!("gamma = {gamma} < k = {k}")));
    }
    Ok(Some((gamma, k)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairingTree {
    n: usize,
    /// Value `v` of this node is `offset + v` globally.
    offset: u32,
    first_pair: usize,
    node_index: usize,
    depth: usize,
    split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub gamma: usize,
    pub k: usize,
    pub children: Vec<PairingTree>,
}

fn check_toy_level(n: usize, gamma: usize, k: usize) -> Result<(), HardError> {
    let bad = |msg: String| Err(HardError::InvalidParams(msg));
    if k == 0 {
        return bad("k must be at least 1".into());
    }
    if gamma % (2 * k) != 0 {
        return bad(format!("2k = {} does not divide gamma = {gamma}", 2 * k));
    }
    if gamma == 0 || gamma >= n {
        return bad(format!("gamma = {gamma} must lie in 1..n-1 for n = {n}"));
    }
    // Low-shell count n/2 - (gamma/k)(j - 1/2) must fit in the n - gamma shell pairs.
    if gamma * (2 * k - 1) > n * k {
        return bad(format!("gamma = {gamma} too large for n = {n}, k = {k}"));
    }
    Ok(())
}

/// Toy schedule with `levels` levels: the root uses `(gamma, k)` and each
/// deeper level keeps the ratio `gamma / n`, rounded down to a multiple of `2k`.
pub fn toy_schedule(n: usize, gamma: usize, k: usize, levels: usize) -> Result<Vec<(usize, usize)>, HardError> {
    if levels == 0 {
        return Ok(vec![]);
    }
    if n == 0 || n % 2 == 1 {
        return Err(HardError::InvalidParams(format!("n = {n} must be even and positive")));
    }
    let mut schedule = Vec::with_capacity(levels);
    let mut size = n;
    let mut g = gamma;
    for _ in 0..levels {
        check_toy_level(size, g, k)?;
        schedule.push((g, k));
        let child = g / k;
        g = (child * gamma / n) / (2 * k) * (2 * k);
        size = child;
    }
    Ok(schedule)
}

struct Counters {
    pairs: usize,
    nodes: usize,
}

pub fn build_pairing(params: &ModeParams, n: usize) -> Result<PairingTree, HardError> {
    if n == 0 || n % 2 == 1 {
        return Err(HardError::InvalidParams(format!("n = {n} must be even and positive")));
    }
    if 2 * n as u64 > u32::MAX as u64 {
        return Err(HardError::InvalidParams(format!("n = {n} exceeds the value range")));
    }
    if let ModeParams::Scaled { n0, m } = params {
        if n as u64 > *n0 {
            return Err(HardError::InvalidParams(format!("n = {n} exceeds n0 = {n0}")));
        }
        if !(*m > 0.0) {
            return Err(HardError::InvalidParams(format!("m = {m} must be positive")));
        }
    }
    let mut c = Counters { pairs: 0, nodes: 0 };
    grow(params, n, 0, 0, &mut c)
}

fn grow(
    params: &ModeParams,
    n: usize,
    offset: u32,
    depth: usize,
    c: &mut Counters,
) -> Result<PairingTree, HardError> {
    let split = match params {
        ModeParams::Toy { schedule } => schedule.get(depth).copied(),
        ModeParams::Scaled { m, n0 } => scaled_split((n as f64).log2(), *m, (*n0 as f64).log2())?
            .map(|(g, k)| (g as usize, k as usize)),
    };
    let node_index = c.nodes;
    let first_pair = c.pairs;
    c.nodes += 1;
    let Some((gamma, k)) = split else {
        c.pairs += n;
        return Ok(PairingTree { n, offset, first_pair, node_index, depth, split: None });
    };
    check_toy_level(n, gamma, k)?;
    c.pairs += n - gamma;
    let child_n = gamma / k;
    let mut children = Vec::with_capacity(k);
    for j in 0..k {
        let child_offset = offset + (n - gamma + 2 * j * child_n) as u32;
        children.push(grow(params, child_n, child_offset, depth + 1, c)?);
    }
    Ok(PairingTree { n, offset, first_pair, node_index, depth, split: Some(Split { gamma, k, children }) })
}

impl PairingTree {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_index(&self) -> usize {
        self.node_index
    }

    pub fn first_pair(&self) -> usize {
        self.first_pair
    }

    /// Inclusive global value range.
    pub fn value_range(&self) -> (u32, u32) {
        (self.offset + 1, self.offset + 2 * self.n as u32)
    }

    pub fn split(&self) -> Option<&Split> {
        self.split.as_ref()
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    pub fn gamma(&self) -> usize {
        self.split.as_ref().map_or(0, |s| s.gamma)
    }

    /// Number of pairs owned directly by this node (shell or leaf pairs).
    pub fn own_pair_count(&self) -> usize {
        self.n - self.gamma()
    }

    /// Own pairs as (low, high) global values; pair id is `first_pair + position`.
    pub fn own_pairs(&self) -> Vec<(u32, u32)> {
        let o = self.offset;
        match &self.split {
            Some(s) => {
                let top = 2 * self.n as u32 + 1;
                (1..=(self.n - s.gamma) as u32).map(|i| (o + i, o + top - i)).collect()
            }
            None => (1..=self.n as u32).map(|i| (o + 2 * i - 1, o + 2 * i)).collect(),
        }
    }

    /// All nodes in preorder (node-index order).
    pub fn nodes(&self) -> Vec<&PairingTree> {
        let mut out = vec![self];
        if let Some(s) = &self.split {
            for c in &s.children {
                out.extend(c.nodes());
            }
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.nodes().len()
    }

    pub fn pair_count(&self) -> usize {
        self.n
    }

    /// Every pair, indexed by pair id.
    pub fn all_pairs(&self) -> Vec<(u32, u32)> {
        let mut out = vec![(0, 0); self.n];
        for node in self.nodes() {
            for (t, p) in node.own_pairs().into_iter().enumerate() {
                out[node.first_pair + t] = p;
            }
        }
        out
    }

    /// Low-shell count `n/2 - (gamma/k)(j - 1/2)` for a 1-based `j`.
    pub fn low_shell_count(&self, j: usize) -> Option<usize> {
        let s = self.split.as_ref()?;
        let step = s.gamma / s.k;
        Some(self.n / 2 + step / 2 - step * j)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardInstance<'p> {
    pub pairing: &'p PairingTree,
    /// Chosen 1-based `j` per node index (0 at leaves).
    pub j: Vec<usize>,
    /// Per pair id: whether the low element was chosen.
    pub low: Vec<bool>,
}

pub fn sample_instance<'p, R: Rng + ?Sized>(pairing: &'p PairingTree, rng: &mut R) -> HardInstance<'p> {
    let mut j = vec![0; pairing.node_count()];
    let mut low = vec![false; pairing.pair_count()];
    for node in pairing.nodes() {
        match &node.split {
            Some(s) => {
                let jj = rng.gen_range(1..=s.k);
                j[node.node_index] = jj;
                let count = node.low_shell_count(jj).expect("internal node");
                let shell = node.own_pair_count();
                assert!(count <= shell, "low-shell count {count} exceeds {shell} shell pairs");
                for t in sample(rng, shell, count) {
                    low[node.first_pair + t] = true;
                }
            }
            None => {
                for t in 0..node.n {
                    low[node.first_pair + t] = rng.gen();
                }
            }
        }
    }
    HardInstance { pairing, j, low }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalityReport {
    pub median: u32,
    /// Per active-path node: the node's local median (rank `n/2`) shifted to global values.
    pub local_medians: Vec<u32>,
    pub leaf_range: (u32, u32),
    pub holds: bool,
}

impl<'p> HardInstance<'p> {
    /// The chosen elements, ascending.
    pub fn elements(&self) -> Vec<u32> {
        let mut a: Vec<u32> = self
            .pairing
            .all_pairs()
            .into_iter()
            .zip(&self.low)
            .map(|((lo, hi), &l)| if l { lo } else { hi })
            .collect();
        a.sort_unstable();
        a
    }

    /// Nodes from the root to the active leaf.
    pub fn active_path(&self) -> Vec<&'p PairingTree> {
        let mut path = vec![self.pairing];
        let mut cur = self.pairing;
        while let Some(s) = &cur.split {
            cur = &s.children[self.j[cur.node_index] - 1];
            path.push(cur);
        }
        path
    }

    pub fn j_path(&self) -> Vec<usize> {
        self.active_path()
            .iter()
            .filter(|n| !n.is_leaf())
            .map(|n| self.j[n.node_index])
            .collect()
    }

    /// Elements inside a node's value range, ascending.
    pub fn elements_in(&self, node: &PairingTree) -> Vec<u32> {
        let (lo, hi) = node.value_range();
        self.elements().into_iter().filter(|v| (lo..=hi).contains(v)).collect()
    }

    /// Flips the choice of one pair; used to build negative controls.
    pub fn flip_pair(&mut self, pair: usize) {
        self.low[pair] = !self.low[pair];
    }

    pub fn to_json(&self, params: &ModeParams) -> serde_json::Value {
        serde_json::json!({
            "n": self.pairing.n,
            "params": params,
            "j_path": self.j_path(),
            "A": self.elements(),
        })
    }
}

/// Compares the global median with the local median of every node on the
/// active path; all must coincide.
pub fn median_locality_check(instance: &HardInstance<'_>) -> LocalityReport {
    let all = instance.elements();
    let median = median_oracle(&all).expect("instance elements are distinct and in range");
    let path = instance.active_path();
    let mut local_medians = Vec::with_capacity(path.len());
    for node in &path {
        let local = instance.elements_in(node);
        // Local rank n/2 among the node's elements; a node with fewer
        // elements than pairs cannot come from a valid instance.
        let value = local.get(node.n.div_ceil(2) - 1).copied().unwrap_or(0);
        local_medians.push(value);
    }
    let leaf = path.last().expect("non-empty path");
    let holds = local_medians.iter().all(|&v| v == median)
        && path.iter().all(|node| instance.elements_in(node).len() == node.n);
    LocalityReport { median, local_medians, leaf_range: leaf.value_range(), holds }
}

/// Empirical frequency of median bit 1 over independent samples of a leaf.
pub fn basecase_bit_distribution<R: Rng + ?Sized>(
    leaf: &PairingTree,
    rng: &mut R,
    trials: usize,
) -> Result<f64, HardError> {
    if !leaf.is_leaf() {
        return Err(HardError::NotALeaf);
    }
    if trials == 0 {
        return Err(HardError::NoTrials);
    }
    let mut ones = 0usize;
    for _ in 0..trials {
        let inst = sample_instance(leaf, rng);
        let local = inst.elements_in(leaf);
        ones += (local[leaf.n.div_ceil(2) - 1] & 1) as usize;
    }
    Ok(ones as f64 / trials as f64)
}

/// Exact probability of median bit 1 at a leaf, by enumerating all `2^n` choices.
pub fn basecase_bit_exact(leaf: &PairingTree) -> Result<(u64, u64), HardError> {
    if !leaf.is_leaf() {
        return Err(HardError::NotALeaf);
    }
    if leaf.n > 24 {
        return Err(HardError::InvalidParams(format!("leaf of {} pairs is too large to enumerate", leaf.n)));
    }
    let pairs = leaf.own_pairs();
    let mut ones = 0u64;
    for mask in 0u64..1 << leaf.n {
        let mut a: Vec<u32> =
            pairs.iter().enumerate().map(|(t, &(lo, hi))| if mask >> t & 1 == 1 { lo } else { hi }).collect();
        a.sort_unstable();
        ones += (a[leaf.n.div_ceil(2) - 1] & 1) as u64;
    }
    Ok((ones, 1 << leaf.n))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelInfo {
    pub log2_n: f64,
    pub gamma: f64,
    pub k: f64,
    /// Whether `gamma >= k log n0` also holds at this level.
    pub alt_threshold: bool,
    /// The closed-form lower bound `n0^{1/2^t} / (m log^4 n0)^{2 - 1/2^{t-1}}`, log2.
    pub log2_size_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthReport {
    /// Non-leaf levels produced by the construction.
    pub construction_depth: usize,
    /// Largest `t` with `n0 >= m^{2^{t+1}-2} log^{9 2^t - 2} n0`, or 0.
    pub guaranteed_depth: usize,
    pub levels: Vec<LevelInfo>,
    pub base_pairs_log2: f64,
    pub base_elements_log2: f64,
    /// Whether the base holds at least `log n0` pairs.
    pub base_has_log_pairs: bool,
    pub base_has_log_elements: bool,
}

/// `log2` of the right-hand side of the depth inequality for a given `t`.
pub fn depth_inequality_rhs_log2(t: usize, m: f64, log2_n0: f64) -> f64 {
    let p = (t as f64).exp2();
    (2.0 * p - 2.0) * m.log2() + (9.0 * p - 2.0) * log2_n0.log2()
}

/// Depth of the scaled-mode recursion, computed in log space so that `n0`
/// may be far beyond machine integers.
pub fn recursion_depth(m: f64, log2_n0: f64) -> Result<DepthReport, HardError> {
    if !(m > 0.0) || !(log2_n0 >= 1.0) {
        return Err(HardError::InvalidParams(format!("m = {m}, log2 n0 = {log2_n0}")));
    }
    let mut log2_n = log2_n0;
    let mut levels = Vec::new();
    while let Some((gamma, k)) = scaled_split(log2_n, m, log2_n0)? {
        let t = levels.len() as f64 + 1.0;
        levels.push(LevelInfo {
            log2_n,
            gamma,
            k,
            alt_threshold: gamma >= k * log2_n0,
            log2_size_bound: log2_n0 / t.exp2()
                - (2.0 - (1.0 - t).exp2()) * (m * log2_n0.powi(4)).log2(),
        });
        log2_n = (gamma / k).log2();
    }
    let mut guaranteed = 0;
    while log2_n0 >= depth_inequality_rhs_log2(guaranteed + 1, m, log2_n0) {
        guaranteed += 1;
    }
    let lg = log2_n0.log2();
    Ok(DepthReport {
        construction_depth: levels.len(),
        guaranteed_depth: guaranteed,
        levels,
        base_pairs_log2: log2_n,
        base_elements_log2: log2_n + 1.0,
        base_has_log_pairs: log2_n >= lg,
        base_has_log_elements: log2_n + 1.0 >= lg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy(schedule: &[(usize, usize)]) -> ModeParams {
        ModeParams::Toy { schedule: schedule.to_vec() }
    }

    #[test]
    fn toy_pairing_example() {
        let t = build_pairing(&toy(&[(4, 2)]), 8).unwrap();
        assert_eq!(t.own_pairs(), vec![(1, 16), (2, 15), (3, 14), (4, 13)]);
        let s = t.split().unwrap();
        assert_eq!(s.children[0].value_range(), (5, 8));
        assert_eq!(s.children[1].value_range(), (9, 12));
        assert_eq!(s.children[0].own_pairs(), vec![(5, 6), (7, 8)]);
        assert_eq!(s.children[1].own_pairs(), vec![(9, 10), (11, 12)]);
        assert_eq!(t.low_shell_count(1), Some(3));
        assert_eq!(t.low_shell_count(2), Some(1));
    }

    #[test]
    fn schedules_shrink_with_the_node() {
        assert_eq!(toy_schedule(128, 32, 2, 2).unwrap(), vec![(32, 2), (4, 2)]);
        assert_eq!(toy_schedule(8, 4, 2, 0).unwrap(), vec![]);
        // Second level would need gamma = 0.
        assert!(toy_schedule(128, 32, 2, 3).is_err());
        assert!(toy_schedule(9, 4, 2, 1).is_err());
    }

    #[test]
    fn toy_divisibility_errors() {
        assert!(build_pairing(&toy(&[(6, 2)]), 8).is_err());
        assert!(build_pairing(&toy(&[(4, 0)]), 8).is_err());
        assert!(build_pairing(&toy(&[(4, 2)]), 9).is_err());
        assert!(build_pairing(&toy(&[(8, 2)]), 8).is_err());
    }

    #[test]
    fn scaled_mode_root_is_leaf_at_two_to_twenty() {
        let t = build_pairing(&ModeParams::Scaled { m: 20.0, n0: 1 << 20 }, 1 << 10).unwrap();
        assert!(t.is_leaf());
        let d = recursion_depth(20.0, 20.0).unwrap();
        assert_eq!(d.construction_depth, 0);
        assert_eq!(d.guaranteed_depth, 0);
    }

    #[test]
    fn depth_with_m_equal_to_log() {
        let first = |f: &dyn Fn(f64) -> usize| (2..400).map(|l| l as f64).find(|&l| f(l) >= 1).unwrap();
        let guaranteed = first(&|l| recursion_depth(l, l).unwrap().guaranteed_depth);
        let built = first(&|l| recursion_depth(l, l).unwrap().construction_depth);
        // n0 >= log^18 n0 first holds near log n0 = 126.
        assert!((120.0..=135.0).contains(&guaranteed), "{guaranteed}");
        assert!(built <= guaranteed);
        for l in [130.0, 200.0, 300.0] {
            let d = recursion_depth(l, l).unwrap();
            let t = d.guaranteed_depth;
            assert!(t >= 1 && l >= depth_inequality_rhs_log2(t, l, l));
            assert!(l < depth_inequality_rhs_log2(t + 1, l, l));
        }
    }

    #[test]
    fn sampling_respects_shell_counts() {
        let t = build_pairing(&toy(&[(4, 2)]), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let inst = sample_instance(&t, &mut rng);
            let j = inst.j_path()[0];
            let lows = inst.low[..4].iter().filter(|&&b| b).count();
            assert_eq!(lows, if j == 1 { 3 } else { 1 });
            assert_eq!(inst.elements().len(), 8);
            let report = median_locality_check(&inst);
            assert!(report.holds);
            // The median is the smallest core element of child j.
            let child = &t.split().unwrap().children[j - 1];
            assert_eq!(report.median, inst.elements_in(child)[0]);
        }
    }

    #[test]
    fn flipped_shell_breaks_locality() {
        let t = build_pairing(&toy(&[(4, 2)]), 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut inst = sample_instance(&t, &mut rng);
        inst.flip_pair(0);
        assert!(!median_locality_check(&inst).holds);
    }

    #[test]
    fn basecase_bits() {
        let single = build_pairing(&toy(&[]), 2).unwrap();
        assert_eq!(basecase_bit_exact(&single), Ok((2, 4)));
        let leaf = build_pairing(&toy(&[]), 4).unwrap();
        assert_eq!(basecase_bit_exact(&leaf), Ok((8, 16)));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(basecase_bit_distribution(&leaf, &mut rng, 0), Err(HardError::NoTrials));
        let root = build_pairing(&toy(&[(4, 2)]), 8).unwrap();
        assert_eq!(basecase_bit_distribution(&root, &mut rng, 10), Err(HardError::NotALeaf));
    }
}
