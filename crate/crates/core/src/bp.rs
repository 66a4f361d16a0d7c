//! Multiway branching programs over the alphabet `1..=domain`.
//!
//! A program is a DAG whose query nodes carry an input index and labelled
//! out-edges, and whose sinks carry an output label. Programs are immutable
//! once built; [`ProgramBuilder`] validates shape, edge labels and acyclicity.
//! Input indices are 0-based in the API and 1-based in the JSON encoding.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;
pub type Label = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BpError {
    #[error("program is not deterministic")]
    NotDeterministic,
    #[error("expected {expected} inputs, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("input value {value} at position {position} is outside 1..={domain}")]
    ValueOutOfRange { position: usize, value: u32, domain: u32 },
    #[error("node {node} has no edge for value {value}")]
    MissingEdge { node: NodeId, value: u32 },
    #[error("no consistent path reaches a sink")]
    NoAcceptingPath,
    #[error("consistent paths reach sinks labelled {first} and {second}")]
    InconsistentSinks { first: Label, second: Label },
    #[error("malformed program: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    /// Query node; `edges` is sorted by (value, target) without duplicates.
    Query { index: usize, edges: Vec<(u32, NodeId)> },
    Sink { label: Label },
}

impl Node {
    pub fn is_sink(&self) -> bool {
        matches!(self, Node::Sink { .. })
    }

    /// Distinct successor ids.
    pub fn targets(&self) -> BTreeSet<NodeId> {
        match self {
            Node::Query { edges, .. } => edges.iter().map(|&(_, t)| t).collect(),
            Node::Sink { .. } => BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchingProgram {
    domain: u32,
    num_inputs: usize,
    source: NodeId,
    nodes: Vec<Node>,
    /// Kahn order with the smallest id first among ready nodes.
    topo: Vec<NodeId>,
    /// Distinct successors per node, ascending.
    succ: Vec<Vec<NodeId>>,
    deterministic: bool,
}

/// Incremental constructor; all validation happens in [`ProgramBuilder::build`].
#[derive(Debug, Clone)]
pub struct ProgramBuilder {
    domain: u32,
    num_inputs: usize,
    nodes: Vec<Node>,
    edges: Vec<(NodeId, u32, NodeId)>,
}

impl ProgramBuilder {
    pub fn new(domain: u32, num_inputs: usize) -> Self {
        ProgramBuilder { domain, num_inputs, nodes: Vec::new(), edges: Vec::new() }
    }

    pub fn query(&mut self, index: usize) -> NodeId {
        self.nodes.push(Node::Query { index, edges: Vec::new() });
        self.nodes.len() - 1
    }

    pub fn sink(&mut self, label: Label) -> NodeId {
        self.nodes.push(Node::Sink { label });
        self.nodes.len() - 1
    }

    pub fn edge(&mut self, from: NodeId, value: u32, to: NodeId) {
        self.edges.push((from, value, to));
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn build(mut self, source: NodeId) -> Result<BranchingProgram, BpError> {
        let n_nodes = self.nodes.len();
        for &(from, value, to) in &self.edges {
            if from >= n_nodes || to >= n_nodes {
                return Err(BpError::Malformed(format!("edge {from}->{to} references a missing node")));
            }
            if value == 0 || value > self.domain {
                return Err(BpError::Malformed(format!(
                    "edge {from}->{to} has label {value} outside 1..={}",
                    self.domain
                )));
            }
            match &mut self.nodes[from] {
                Node::Query { edges, .. } => edges.push((value, to)),
                Node::Sink { .. } => {
                    return Err(BpError::Malformed(format!("sink {from} has an out-edge")))
                }
            }
        }
        for node in &mut self.nodes {
            if let Node::Query { edges, .. } = node {
                edges.sort_unstable();
                edges.dedup();
            }
        }
        BranchingProgram::from_nodes(self.domain, self.num_inputs, source, self.nodes)
    }
}

/// Summary metrics; `space` is log2 of the node count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgramMetrics {
    pub nodes: usize,
    pub edges: usize,
    pub unreachable: usize,
    pub time: usize,
    pub space: f64,
    pub read_k: usize,
    pub oblivious: bool,
    pub leveled: bool,
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Obliviousness {
    /// Query sequence (0-based indices) shared by every source-to-sink path.
    Oblivious(Vec<usize>),
    NotOblivious(String),
}

impl BranchingProgram {
    fn from_nodes(
        domain: u32,
        num_inputs: usize,
        source: NodeId,
        nodes: Vec<Node>,
    ) -> Result<Self, BpError> {
        if domain == 0 {
            return Err(BpError::Malformed("domain must be positive".into()));
        }
        if source >= nodes.len() {
            return Err(BpError::Malformed(format!("source {source} is not a node")));
        }
        let mut indeg = vec![0usize; nodes.len()];
        let mut deterministic = true;
        for (id, node) in nodes.iter().enumerate() {
            if let Node::Query { index, edges } = node {
                if *index >= num_inputs {
                    return Err(BpError::Malformed(format!(
                        "node {id} queries index {} but n = {num_inputs}",
                        index + 1
                    )));
                }
                let full = edges.len() == domain as usize
                    && edges.iter().enumerate().all(|(i, &(v, _))| v as usize == i + 1);
                deterministic &= full;
            }
        }
        let succ: Vec<Vec<NodeId>> = nodes.iter().map(|n| n.targets().into_iter().collect()).collect();
        for ts in &succ {
            for &t in ts {
                indeg[t] += 1;
            }
        }
        let mut ready: BinaryHeap<Reverse<NodeId>> =
            (0..nodes.len()).filter(|&i| indeg[i] == 0).map(Reverse).collect();
        let mut topo = Vec::with_capacity(nodes.len());
        while let Some(Reverse(v)) = ready.pop() {
            topo.push(v);
            for &t in &succ[v] {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    ready.push(Reverse(t));
                }
            }
        }
        if topo.len() != nodes.len() {
            return Err(BpError::Malformed("program contains a cycle".into()));
        }
        Ok(BranchingProgram { domain, num_inputs, source, nodes, topo, succ, deterministic })
    }

    pub fn domain(&self) -> u32 {
        self.domain
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn topological_order(&self) -> &[NodeId] {
        &self.topo
    }

    pub fn successor_ids(&self, node: NodeId) -> &[NodeId] {
        &self.succ[node]
    }

    pub fn is_deterministic(&self) -> bool {
        self.deterministic
    }

    pub fn edge_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                Node::Query { edges, .. } => edges.len(),
                Node::Sink { .. } => 0,
            })
            .sum()
    }

    /// Targets of `node` on input value `value`.
    pub fn successors(&self, node: NodeId, value: u32) -> impl Iterator<Item = NodeId> + '_ {
        let edges: &[(u32, NodeId)] = match &self.nodes[node] {
            Node::Query { edges, .. } => edges,
            Node::Sink { .. } => &[],
        };
        let start = edges.partition_point(|&(v, _)| v < value);
        edges[start..].iter().take_while(move |&&(v, _)| v == value).map(|&(_, t)| t)
    }

    fn check_input(&self, input: &[u32]) -> Result<(), BpError> {
        if input.len() != self.num_inputs {
            return Err(BpError::InputLength { expected: self.num_inputs, got: input.len() });
        }
        for (position, &value) in input.iter().enumerate() {
            if value == 0 || value > self.domain {
                return Err(BpError::ValueOutOfRange { position, value, domain: self.domain });
            }
        }
        Ok(())
    }

    pub fn evaluate_deterministic(&self, input: &[u32]) -> Result<Label, BpError> {
        if !self.deterministic {
            return Err(BpError::NotDeterministic);
        }
        self.check_input(input)?;
        let mut v = self.source;
        loop {
            match &self.nodes[v] {
                Node::Sink { label } => return Ok(*label),
                Node::Query { index, edges } => {
                    let value = input[*index];
                    // Full edge sets are stored in value order.
                    v = edges
                        .get(value as usize - 1)
                        .map(|&(_, t)| t)
                        .ok_or(BpError::MissingEdge { node: v, value })?;
                }
            }
        }
    }

    /// Labels of every sink reachable along an input-consistent path.
    pub fn reachable_sinks(&self, input: &[u32]) -> Result<BTreeSet<Label>, BpError> {
        self.check_input(input)?;
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.source];
        seen[self.source] = true;
        let mut labels = BTreeSet::new();
        while let Some(v) = stack.pop() {
            match &self.nodes[v] {
                Node::Sink { label } => {
                    labels.insert(*label);
                }
                Node::Query { index, .. } => {
                    for t in self.successors(v, input[*index]) {
                        if !seen[t] {
                            seen[t] = true;
                            stack.push(t);
                        }
                    }
                }
            }
        }
        Ok(labels)
    }

    /// Output of a nondeterministic program: all consistent sinks must agree.
    pub fn evaluate_nondeterministic(&self, input: &[u32]) -> Result<Label, BpError> {
        let labels = self.reachable_sinks(input)?;
        let mut it = labels.iter();
        match (it.next(), it.next()) {
            (None, _) => Err(BpError::NoAcceptingPath),
            (Some(&l), None) => Ok(l),
            (Some(&first), Some(&second)) => Err(BpError::InconsistentSinks { first, second }),
        }
    }

    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        seen[self.source] = true;
        for &v in &self.topo {
            if seen[v] {
                for &t in &self.succ[v] {
                    seen[t] = true;
                }
            }
        }
        seen
    }

    /// Nodes that are reachable from the source and reach some sink.
    pub fn useful(&self) -> Vec<bool> {
        let reach = self.reachable();
        let mut coreach = vec![false; self.nodes.len()];
        for &v in self.topo.iter().rev() {
            coreach[v] = match &self.nodes[v] {
                Node::Sink { .. } => true,
                Node::Query { .. } => self.succ[v].iter().any(|&t| coreach[t]),
            };
        }
        reach.iter().zip(&coreach).map(|(a, b)| *a && *b).collect()
    }

    /// Minimum and maximum path length from the source, restricted to `mask`.
    fn depth_bounds(&self, mask: &[bool]) -> Vec<Option<(usize, usize)>> {
        let mut depth: Vec<Option<(usize, usize)>> = vec![None; self.nodes.len()];
        if mask[self.source] {
            depth[self.source] = Some((0, 0));
        }
        for &v in &self.topo {
            let Some((lo, hi)) = depth[v] else { continue };
            for &t in &self.succ[v] {
                if !mask[t] {
                    continue;
                }
                depth[t] = Some(match depth[t] {
                    None => (lo + 1, hi + 1),
                    Some((a, b)) => (a.min(lo + 1), b.max(hi + 1)),
                });
            }
        }
        depth
    }

    /// Longest source-to-sink path, counted in queries.
    pub fn time(&self) -> usize {
        let reach = self.reachable();
        self.depth_bounds(&reach)
            .iter()
            .enumerate()
            .filter(|(v, _)| self.nodes[*v].is_sink())
            .filter_map(|(_, d)| d.map(|(_, hi)| hi))
            .max()
            .unwrap_or(0)
    }

    pub fn space(&self) -> f64 {
        (self.nodes.len() as f64).log2()
    }

    /// Maximum number of times any index is queried on a source-to-sink path.
    pub fn read_multiplicity(&self) -> usize {
        let useful = self.useful();
        let mut best = 0;
        for i in 0..self.num_inputs {
            let mut count: Vec<Option<usize>> = vec![None; self.nodes.len()];
            if useful[self.source] {
                count[self.source] = Some(0);
            }
            for &v in &self.topo {
                let Some(c) = count[v] else { continue };
                match &self.nodes[v] {
                    Node::Sink { .. } => best = best.max(c),
                    Node::Query { index, .. } => {
                        let c2 = c + usize::from(*index == i);
                        for &t in &self.succ[v] {
                            if useful[t] {
                                count[t] = Some(count[t].map_or(c2, |x| x.max(c2)));
                            }
                        }
                    }
                }
            }
        }
        best
    }

    pub fn check_read_k(&self, k: usize) -> bool {
        self.read_multiplicity() <= k
    }

    /// Every reachable node sits at a single distance from the source.
    pub fn is_leveled(&self) -> bool {
        let reach = self.reachable();
        self.depth_bounds(&reach).iter().flatten().all(|&(lo, hi)| lo == hi)
    }

    /// Obliviousness over source-to-sink paths; dead ends are ignored.
    pub fn check_oblivious(&self) -> Obliviousness {
        let useful = self.useful();
        let depth = self.depth_bounds(&useful);
        let mut level_index: BTreeMap<usize, usize> = BTreeMap::new();
        let mut sink_depth = None;
        for v in 0..self.nodes.len() {
            let Some((lo, hi)) = depth[v] else { continue };
            if lo != hi {
                return Obliviousness::NotOblivious(format!(
                    "node {v} lies at depths {lo} and {hi}"
                ));
            }
            match &self.nodes[v] {
                Node::Sink { .. } => match sink_depth {
                    None => sink_depth = Some(lo),
                    Some(d) if d != lo => {
                        return Obliviousness::NotOblivious(format!(
                            "sinks at depths {d} and {lo}"
                        ))
                    }
                    _ => {}
                },
                Node::Query { index, .. } => match level_index.get(&lo) {
                    None => {
                        level_index.insert(lo, *index);
                    }
                    Some(&j) if j != *index => {
                        return Obliviousness::NotOblivious(format!(
                            "level {lo} queries indices {} and {}",
                            j + 1,
                            index + 1
                        ))
                    }
                    _ => {}
                },
            }
        }
        Obliviousness::Oblivious(level_index.into_values().collect())
    }

    /// Indices strictly increase along every edge between reachable query nodes.
    pub fn is_ordered(&self) -> bool {
        let reach = self.reachable();
        self.nodes.iter().zip(&reach).filter(|(_, r)| **r).all(|(node, _)| match node {
            Node::Query { index, edges } => edges.iter().all(|&(_, t)| match &self.nodes[t] {
                Node::Query { index: j, .. } => j > index,
                Node::Sink { .. } => true,
            }),
            Node::Sink { .. } => true,
        })
    }

    /// Layered copy in which node `(v, d)` stands for `v` reached after `d`
    /// queries. Programs that are already leveled are returned unchanged.
    pub fn level(&self) -> BranchingProgram {
        if self.is_leveled() {
            return self.clone();
        }
        let mut depths: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.nodes.len()];
        depths[self.source].insert(0);
        for &v in &self.topo {
            if depths[v].is_empty() {
                continue;
            }
            let next: Vec<usize> = depths[v].iter().map(|d| d + 1).collect();
            for &t in &self.succ[v] {
                depths[t].extend(next.iter().copied());
            }
        }
        let mut copy_id: BTreeMap<(NodeId, usize), NodeId> = BTreeMap::new();
        for (v, ds) in depths.iter().enumerate() {
            for &d in ds {
                let id = copy_id.len();
                copy_id.insert((v, d), id);
            }
        }
        let mut b = ProgramBuilder::new(self.domain, self.num_inputs);
        for &(v, _) in copy_id.keys() {
            match &self.nodes[v] {
                Node::Query { index, .. } => b.query(*index),
                Node::Sink { label } => b.sink(*label),
            };
        }
        for (&(v, d), &id) in &copy_id {
            if let Node::Query { edges, .. } = &self.nodes[v] {
                for &(value, t) in edges {
                    b.edge(id, value, copy_id[&(t, d + 1)]);
                }
            }
        }
        b.build(copy_id[&(self.source, 0)]).expect("leveling preserves validity")
    }

    pub fn metrics(&self) -> ProgramMetrics {
        ProgramMetrics {
            nodes: self.nodes.len(),
            edges: self.edge_count(),
            unreachable: self.reachable().iter().filter(|r| !**r).count(),
            time: self.time(),
            space: self.space(),
            read_k: self.read_multiplicity(),
            oblivious: matches!(self.check_oblivious(), Obliviousness::Oblivious(_)),
            leveled: self.is_leveled(),
            deterministic: self.deterministic,
        }
    }

    /// Copy with query indices replaced by `reindex(node, old_index)`.
    pub fn map_indices(
        &self,
        mut reindex: impl FnMut(NodeId, usize) -> usize,
    ) -> Result<BranchingProgram, BpError> {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, node)| match node {
                Node::Query { index, edges } => {
                    Node::Query { index: reindex(id, *index), edges: edges.clone() }
                }
                Node::Sink { label } => Node::Sink { label: *label },
            })
            .collect();
        BranchingProgram::from_nodes(self.domain, self.num_inputs, self.source, nodes)
    }

    pub fn to_json(&self) -> String {
        let mut nodes = Vec::new();
        let mut sinks = BTreeMap::new();
        for &id in &self.topo {
            match &self.nodes[id] {
                Node::Query { index, edges } => {
                    let mut by_value: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
                    for &(v, t) in edges {
                        by_value.entry(v).or_default().push(t);
                    }
                    nodes.push(NodeJson { id, index: index + 1, edges: by_value });
                }
                Node::Sink { label } => {
                    sinks.insert(id, label.to_string());
                }
            }
        }
        let doc = ProgramJson {
            domain: self.domain,
            n: self.num_inputs,
            source: self.source,
            nodes,
            sinks,
        };
        serde_json::to_string(&doc).expect("program serializes")
    }

    pub fn from_json(text: &str) -> Result<BranchingProgram, BpError> {
        let doc: ProgramJson =
            serde_json::from_str(text).map_err(|e| BpError::Malformed(e.to_string()))?;
        let total = doc.nodes.len() + doc.sinks.len();
        let mut slots: Vec<Option<Node>> = vec![None; total];
        let mut place = |id: NodeId, node: Node| -> Result<(), BpError> {
            match slots.get_mut(id) {
                Some(slot @ None) => {
                    *slot = Some(node);
                    Ok(())
                }
                Some(Some(_)) => Err(BpError::Malformed(format!("duplicate node id {id}"))),
                None => Err(BpError::Malformed(format!("node id {id} is not dense"))),
            }
        };
        for nj in &doc.nodes {
            if nj.index == 0 {
                return Err(BpError::Malformed(format!("node {} has index 0", nj.id)));
            }
            let mut edges = Vec::new();
            for (&v, ts) in &nj.edges {
                if v == 0 || v > doc.domain {
                    return Err(BpError::Malformed(format!(
                        "node {} has edge label {v} outside 1..={}",
                        nj.id, doc.domain
                    )));
                }
                for &t in ts {
                    if t >= total {
                        return Err(BpError::Malformed(format!("edge to missing node {t}")));
                    }
                    edges.push((v, t));
                }
            }
            edges.sort_unstable();
            edges.dedup();
            place(nj.id, Node::Query { index: nj.index - 1, edges })?;
        }
        for (&id, label) in &doc.sinks {
            let label: Label = label
                .parse()
                .map_err(|_| BpError::Malformed(format!("sink {id} has label {label:?}")))?;
            place(id, Node::Sink { label })?;
        }
        let nodes = slots.into_iter().map(|s| s.expect("all slots filled")).collect();
        BranchingProgram::from_nodes(doc.domain, doc.n, doc.source, nodes)
    }
}

#[derive(Serialize, Deserialize)]
struct ProgramJson {
    domain: u32,
    n: usize,
    source: NodeId,
    nodes: Vec<NodeJson>,
    sinks: BTreeMap<NodeId, String>,
}

#[derive(Serialize, Deserialize)]
struct NodeJson {
    id: NodeId,
    index: usize,
    edges: BTreeMap<u32, Vec<NodeId>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    /// x1 then x2 over {1,2}; outputs x1 xor x2 encoded as 0/1.
    fn xor2() -> BranchingProgram {
        let mut b = ProgramBuilder::new(2, 2);
        let s = b.query(0);
        let a = b.query(1);
        let c = b.query(1);
        let zero = b.sink(0);
        let one = b.sink(1);
        b.edge(s, 1, a);
        b.edge(s, 2, c);
        b.edge(a, 1, zero);
        b.edge(a, 2, one);
        b.edge(c, 1, one);
        b.edge(c, 2, zero);
        b.build(s).unwrap()
    }

    #[test]
    fn deterministic_evaluation() {
        let bp = xor2();
        assert!(bp.is_deterministic());
        assert_eq!(bp.evaluate_deterministic(&[1, 1]), Ok(0));
        assert_eq!(bp.evaluate_deterministic(&[1, 2]), Ok(1));
        assert_eq!(bp.evaluate_deterministic(&[2, 1]), Ok(1));
        assert_eq!(bp.evaluate_nondeterministic(&[2, 2]), Ok(0));
    }

    #[test]
    fn input_errors() {
        let bp = xor2();
        assert_eq!(
            bp.evaluate_deterministic(&[1]),
            Err(BpError::InputLength { expected: 2, got: 1 })
        );
        assert!(matches!(
            bp.evaluate_deterministic(&[1, 3]),
            Err(BpError::ValueOutOfRange { position: 1, value: 3, .. })
        ));
    }

    #[test]
    fn structure_checks() {
        let bp = xor2();
        assert_eq!(bp.time(), 2);
        assert_eq!(bp.read_multiplicity(), 1);
        assert!(bp.is_leveled());
        assert!(bp.is_ordered());
        assert_eq!(bp.check_oblivious(), Obliviousness::Oblivious(vec![0, 1]));
        assert_eq!(bp.metrics().space, 5f64.log2());
    }

    #[test]
    fn nondeterministic_disagreement_and_dead_ends() {
        let mut b = ProgramBuilder::new(2, 1);
        let s = b.query(0);
        let t0 = b.sink(0);
        let t1 = b.sink(1);
        b.edge(s, 1, t0);
        b.edge(s, 1, t1);
        let bp = b.build(s).unwrap();
        assert!(!bp.is_deterministic());
        assert_eq!(
            bp.evaluate_nondeterministic(&[1]),
            Err(BpError::InconsistentSinks { first: 0, second: 1 })
        );
        assert_eq!(bp.evaluate_nondeterministic(&[2]), Err(BpError::NoAcceptingPath));
        assert_eq!(bp.evaluate_deterministic(&[1]), Err(BpError::NotDeterministic));
    }

    #[test]
    fn builder_rejects_bad_shapes() {
        let mut b = ProgramBuilder::new(2, 1);
        let s = b.query(0);
        b.edge(s, 3, s);
        assert!(matches!(b.build(s), Err(BpError::Malformed(_))));

        let mut b = ProgramBuilder::new(2, 1);
        let s = b.query(0);
        let t = b.query(0);
        b.edge(s, 1, t);
        b.edge(t, 1, s);
        assert!(matches!(b.build(s), Err(BpError::Malformed(_))));

        let mut b = ProgramBuilder::new(2, 1);
        let s = b.query(3);
        assert!(matches!(b.build(s), Err(BpError::Malformed(_))));
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let bp = xor2();
        let text = bp.to_json();
        let back = BranchingProgram::from_json(&text).unwrap();
        assert_eq!(back, bp);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn json_rejects_sparse_ids() {
        let text = r#"{"domain":2,"n":1,"source":0,"nodes":[{"id":0,"index":1,"edges":{"1":[5]}}],"sinks":{"5":"0"}}"#;
        assert!(matches!(BranchingProgram::from_json(text), Err(BpError::Malformed(_))));
    }

    #[test]
    fn leveling_unleveled_program() {
        // x1 = 1 goes straight to a sink, otherwise x2 is read first.
        let mut b = ProgramBuilder::new(2, 2);
        let s = b.query(0);
        let a = b.query(1);
        let t0 = b.sink(0);
        let t1 = b.sink(1);
        b.edge(s, 1, t1);
        b.edge(s, 2, a);
        b.edge(a, 1, t0);
        b.edge(a, 2, t1);
        let bp = b.build(s).unwrap();
        assert!(!bp.is_leveled());
        let lv = bp.level();
        assert!(lv.is_leveled());
        for x in [[1, 1], [1, 2], [2, 1], [2, 2]] {
            assert_eq!(lv.evaluate_deterministic(&x), bp.evaluate_deterministic(&x));
        }
        assert!(lv.space() <= bp.space() + (bp.time() as f64).log2() + 1.0);
        assert_eq!(lv.level(), lv);
    }
}
