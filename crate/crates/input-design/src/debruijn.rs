//! De Bruijn graph of input memory states and its cycle structure.
//!
//! Nodes are the length-`memory` windows over a finite input alphabet,
//! indexed lexicographically with the leftmost (oldest) entry most
//! significant. An edge `x -> y` exists when `y` can follow `x` under a
//! one-step shift, i.e. the first `memory - 1` entries of `y` equal the
//! last `memory - 1` entries of `x`. Stationary processes with that memory
//! correspond to points of a polytope over the nodes, and the extreme
//! points of the polytope are exactly the uniform distributions carried by
//! the prime cycles of the graph. Prime cycles of the memory-`k` graph are
//! obtained by lifting the elementary cycles of the memory-`(k-1)` graph.

use crate::error::GraphError;
use crate::signal::Signal;
use serde::{Deserialize, Serialize};

/// Node index into a [`MemoryGraph`].
pub type NodeId = usize;

/// Default cap on the node count of a graph submitted for cycle
/// enumeration. The number of elementary cycles grows super-exponentially
/// with the node count, so unbounded enumeration is refused.
pub const DEFAULT_NODE_CAP: usize = 4096;

/// The finite set of admissible input levels, in a fixed user-chosen order.
///
/// The order determines node indexing everywhere, so two runs with the
/// same alphabet produce identical indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    values: Vec<f64>,
}

impl Alphabet {
    pub fn new(values: Vec<f64>) -> Result<Self, GraphError> {
        if values.is_empty() {
            return Err(GraphError::EmptyAlphabet);
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(GraphError::InvalidAlphabetValue(v));
            }
            if values[..i].contains(&v) {
                return Err(GraphError::InvalidAlphabetValue(v));
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, digit: usize) -> f64 {
        self.values[digit]
    }

    /// Digit index of an exact alphabet value, if present.
    pub fn digit_of(&self, value: f64) -> Option<usize> {
        self.values.iter().position(|&v| v == value)
    }
}

/// De Bruijn graph over `alphabet^memory`.
///
/// The graph is purely arithmetic: nodes and edges are never materialized.
/// A node index encodes its window digits in base `alphabet.len()` with
/// the oldest entry most significant, so the successor set of `x` is
/// `{ (x mod c^(m-1)) * c + d : d in 0..c }`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryGraph {
    alphabet: Alphabet,
    memory: usize,
    node_count: usize,
}

impl MemoryGraph {
    pub fn new(alphabet: Alphabet, memory: usize) -> Result<Self, GraphError> {
        if memory == 0 {
            return Err(GraphError::ZeroMemory);
        }
        let c = alphabet.len() as u128;
        // edge_count = c^(memory+1) must also stay within usize range
        let edges = c
            .checked_pow(memory as u32 + 1)
            .filter(|&n| n <= 1 << 40)
            .ok_or(GraphError::TooManyNodes {
                requested: u128::MAX,
                max: 1 << 40,
            })?;
        let nodes = (edges / c) as usize;
        Ok(Self {
            alphabet,
            memory,
            node_count: nodes,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.node_count * self.alphabet.len()
    }

    /// Successors of `node` in ascending index order.
    pub fn successors(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let c = self.alphabet.len();
        let shifted = (node % (self.node_count / c)) * c;
        (0..c).map(move |d| shifted + d)
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        let c = self.alphabet.len();
        to / c == from % (self.node_count / c)
    }

    /// Window digits of `node`, oldest first.
    pub fn node_digits(&self, node: NodeId) -> Vec<usize> {
        let c = self.alphabet.len();
        let mut digits = vec![0; self.memory];
        let mut rest = node;
        for slot in digits.iter_mut().rev() {
            *slot = rest % c;
            rest /= c;
        }
        digits
    }

    /// Window values of `node`, oldest first.
    pub fn node_values(&self, node: NodeId) -> Vec<f64> {
        self.node_digits(node)
            .into_iter()
            .map(|d| self.alphabet.value(d))
            .collect()
    }

    pub fn node_from_digits(&self, digits: &[usize]) -> NodeId {
        debug_assert_eq!(digits.len(), self.memory);
        let c = self.alphabet.len();
        digits.iter().fold(0, |acc, &d| acc * c + d)
    }

    /// Most recent input value encoded by `node`.
    pub fn newest_value(&self, node: NodeId) -> f64 {
        self.alphabet.value(node % self.alphabet.len())
    }

    fn signature(&self) -> String {
        format!("{:?}^{}", self.alphabet.values(), self.memory)
    }

    pub(crate) fn check_same(&self, other: &MemoryGraph) -> Result<(), GraphError> {
        if self == other {
            Ok(())
        } else {
            Err(GraphError::GraphMismatch {
                expected: self.signature(),
                found: other.signature(),
            })
        }
    }
}

/// An elementary cycle: a closed walk visiting each of its nodes once.
///
/// Stored in canonical rotation (smallest node index first) without the
/// closing repetition, so cycles that are cyclic permutations of each
/// other compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementaryCycle {
    nodes: Vec<NodeId>,
}

impl ElementaryCycle {
    /// Canonicalize a node sequence (without closing repetition).
    pub fn new(nodes: Vec<NodeId>) -> Self {
        Self {
            nodes: canonical_rotation(nodes),
        }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The closed walk, first node repeated last.
    pub fn closed_nodes(&self) -> Vec<NodeId> {
        let mut out = self.nodes.clone();
        out.push(self.nodes[0]);
        out
    }

    /// Every consecutive pair (including the wrap-around) must be an edge.
    pub fn validate_on(&self, graph: &MemoryGraph) -> Result<(), GraphError> {
        for i in 0..self.nodes.len() {
            let from = self.nodes[i];
            let to = self.nodes[(i + 1) % self.nodes.len()];
            if !graph.has_edge(from, to) {
                return Err(GraphError::NotACycle { from, to });
            }
        }
        Ok(())
    }
}

fn canonical_rotation(nodes: Vec<NodeId>) -> Vec<NodeId> {
    assert!(!nodes.is_empty(), "a cycle has at least one node");
    let min_pos = nodes
        .iter()
        .enumerate()
        .min_by_key(|&(_, &n)| n)
        .map(|(i, _)| i)
        .unwrap();
    let mut rotated = Vec::with_capacity(nodes.len());
    rotated.extend_from_slice(&nodes[min_pos..]);
    rotated.extend_from_slice(&nodes[..min_pos]);
    rotated
}

/// Enumerate all distinct elementary cycles with the default node cap.
pub fn elementary_cycles(graph: &MemoryGraph) -> Result<Vec<ElementaryCycle>, GraphError> {
    elementary_cycles_with_cap(graph, DEFAULT_NODE_CAP)
}

/// Enumerate all distinct elementary cycles (up to cyclic permutation),
/// each in canonical rotation, sorted by length then node sequence.
///
/// The search starts a blocked depth-first pass from every node `s` inside
/// the strongly connected component of the subgraph induced by
/// `{s, ..., n-1}`, which yields each cycle exactly once with its minimum
/// node first. Self-loops are reported separately as length-1 cycles.
pub fn elementary_cycles_with_cap(
    graph: &MemoryGraph,
    cap: usize,
) -> Result<Vec<ElementaryCycle>, GraphError> {
    let n = graph.node_count();
    if n > cap {
        return Err(GraphError::InstanceTooLarge { nodes: n, cap });
    }

    let mut cycles: Vec<ElementaryCycle> = Vec::new();
    for v in 0..n {
        if graph.has_edge(v, v) {
            cycles.push(ElementaryCycle::new(vec![v]));
        }
    }

    // Adjacency without self-loops, ascending order for determinism.
    let adj: Vec<Vec<NodeId>> = (0..n)
        .map(|v| graph.successors(v).filter(|&w| w != v).collect())
        .collect();

    for start in 0..n {
        let scc = scc_containing(&adj, start);
        if scc.iter().filter(|&&m| m).count() < 2 {
            continue;
        }
        find_circuits_from(start, &adj, &scc, &mut cycles);
    }

    cycles.sort_by(|a, b| (a.len(), a.nodes()).cmp(&(b.len(), b.nodes())));
    Ok(cycles)
}

/// Membership mask of the strongly connected component containing `start`
/// in the subgraph induced by nodes `>= start` (iterative Tarjan).
fn scc_containing(adj: &[Vec<NodeId>], start: NodeId) -> Vec<bool> {
    let n = adj.len();
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<NodeId> = Vec::new();
    let mut next_index = 0usize;
    let mut member = vec![false; n];

    // Explicit DFS: (node, next child position)
    let mut frames: Vec<(NodeId, usize)> = vec![(start, 0)];
    index[start] = next_index;
    lowlink[start] = next_index;
    next_index += 1;
    stack.push(start);
    on_stack[start] = true;

    while !frames.is_empty() {
        let top = frames.len() - 1;
        let (v, child) = frames[top];
        let succ = adj[v].iter().copied().filter(|&w| w >= start).nth(child);
        match succ {
            Some(w) => {
                frames[top].1 += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
            }
            None => {
                frames.pop();
                if lowlink[v] == index[v] {
                    // v is an SCC root; unwind its component.
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    if component.contains(&start) {
                        for w in component {
                            member[w] = true;
                        }
                        return member;
                    }
                }
                if let Some(&(parent, _)) = frames.last() {
                    lowlink[parent] = lowlink[parent].min(lowlink[v]);
                }
            }
        }
    }
    member[start] = true;
    member
}

/// Blocked DFS for all circuits through `start` whose nodes lie in `scc`
/// and are all `>= start` (iterative form of the classic circuit search).
fn find_circuits_from(
    start: NodeId,
    adj: &[Vec<NodeId>],
    scc: &[bool],
    out: &mut Vec<ElementaryCycle>,
) {
    let n = adj.len();
    let mut blocked = vec![false; n];
    let mut blist: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut path: Vec<NodeId> = vec![start];
    blocked[start] = true;

    let allowed = |w: NodeId| w >= start && scc[w];

    // Frame: (node, next neighbor position, circuit found in subtree)
    let mut frames: Vec<(NodeId, usize, bool)> = vec![(start, 0, false)];

    while !frames.is_empty() {
        let top = frames.len() - 1;
        let (v, pos, _) = frames[top];
        let next = adj[v].iter().copied().filter(|&w| allowed(w)).nth(pos);
        match next {
            Some(w) => {
                frames[top].1 += 1;
                if w == start {
                    out.push(ElementaryCycle::new(path.clone()));
                    frames[top].2 = true;
                } else if !blocked[w] {
                    path.push(w);
                    blocked[w] = true;
                    frames.push((w, 0, false));
                }
            }
            None => {
                let (v, _, found) = frames.pop().unwrap();
                path.pop();
                if found {
                    unblock(v, &mut blocked, &mut blist);
                    if let Some(parent) = frames.last_mut() {
                        parent.2 = true;
                    }
                } else {
                    for &w in adj[v].iter().filter(|&&w| allowed(w)) {
                        if !blist[w].contains(&v) {
                            blist[w].push(v);
                        }
                    }
                }
            }
        }
    }
}

fn unblock(v: NodeId, blocked: &mut [bool], blist: &mut [Vec<NodeId>]) {
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        blocked[u] = false;
        for w in std::mem::take(&mut blist[u]) {
            if blocked[w] {
                stack.push(w);
            }
        }
    }
}

/// A prime cycle: an elementary cycle whose node set contains no proper
/// subset that forms an elementary cycle. Each prime cycle carries the
/// uniform distribution over its nodes, and those distributions are the
/// extreme points of the stationary polytope.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrimeCycle {
    nodes: Vec<NodeId>,
}

impl PrimeCycle {
    pub fn new(nodes: Vec<NodeId>) -> Self {
        Self {
            nodes: canonical_rotation(nodes),
        }
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    /// Number of distinct nodes on the cycle.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn closed_nodes(&self) -> Vec<NodeId> {
        let mut out = self.nodes.clone();
        out.push(self.nodes[0]);
        out
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.nodes.contains(&node)
    }

    /// Successor of `node` along the cycle, if `node` lies on it.
    pub fn next_on_cycle(&self, node: NodeId) -> Option<NodeId> {
        let pos = self.nodes.iter().position(|&x| x == node)?;
        Some(self.nodes[(pos + 1) % self.nodes.len()])
    }

    /// Periodic signal of length `len` obtained by traversing the cycle
    /// and emitting the newest entry of each node. The prefill holds the
    /// remaining history of the first node, so every sliding window of the
    /// extended signal lies on the cycle and the signal is exactly
    /// periodic from `t = 1`.
    pub fn signal(&self, graph: &MemoryGraph, len: usize) -> Signal {
        assert!(len >= 1, "signal length must be at least 1");
        let samples = (0..len)
            .map(|t| graph.newest_value(self.nodes[t % self.nodes.len()]))
            .collect();
        let first = graph.node_values(self.nodes[0]);
        let prefill = first[..graph.memory() - 1].to_vec();
        Signal::with_prefill(samples, prefill)
    }

    /// Render the closed cycle with alphabet values, e.g. `((0, 1), (1, 0), (0, 1))`.
    pub fn format_values(&self, graph: &MemoryGraph) -> String {
        let node = |id: NodeId| {
            let vals: Vec<String> = graph.node_values(id).iter().map(|v| v.to_string()).collect();
            format!("({})", vals.join(", "))
        };
        let parts: Vec<String> = self.closed_nodes().into_iter().map(node).collect();
        format!("({})", parts.join(", "))
    }
}

/// The complete set of prime cycles of a memory graph, in deterministic
/// order; spans the stationary polytope via convex combination.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleBasis {
    graph: MemoryGraph,
    cycles: Vec<PrimeCycle>,
}

impl CycleBasis {
    /// Enumerate the prime cycles of `graph` with the default cap.
    pub fn enumerate(graph: &MemoryGraph) -> Result<Self, GraphError> {
        Self::enumerate_with_cap(graph, DEFAULT_NODE_CAP)
    }

    /// Enumerate the prime cycles of `graph`.
    ///
    /// For memory `m >= 2` this enumerates the elementary cycles of the
    /// memory-`(m-1)` graph and lifts them; for `m = 1` the elementary
    /// cycles of the graph itself are used as the basis.
    pub fn enumerate_with_cap(graph: &MemoryGraph, cap: usize) -> Result<Self, GraphError> {
        if graph.memory() == 1 {
            let cycles = elementary_cycles_with_cap(graph, cap)?
                .into_iter()
                .map(|c| PrimeCycle::new(c.nodes().to_vec()))
                .collect();
            return Ok(Self {
                graph: graph.clone(),
                cycles,
            });
        }
        let source = MemoryGraph::new(graph.alphabet().clone(), graph.memory() - 1)?;
        let elems = elementary_cycles_with_cap(&source, cap)?;
        lift_prime_cycles(&elems, &source, graph)
    }

    pub fn graph(&self) -> &MemoryGraph {
        &self.graph
    }

    pub fn cycles(&self) -> &[PrimeCycle] {
        &self.cycles
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub(crate) fn from_parts(graph: MemoryGraph, mut cycles: Vec<PrimeCycle>) -> Self {
        cycles.sort_by(|a, b| (a.len(), a.nodes()).cmp(&(b.len(), b.nodes())));
        Self { graph, cycles }
    }
}

/// Lift elementary cycles of the memory-`(m-1)` graph to prime cycles of
/// the memory-`m` graph.
///
/// Consecutive windows of the periodically extended source cycle overlap
/// in `m - 2` entries, so each adjacent pair concatenates into one
/// `m`-tuple: the lifted node at position `j` extends source node `j` by
/// the newest entry of source node `j + 1`.
pub fn lift_prime_cycles(
    cycles: &[ElementaryCycle],
    source: &MemoryGraph,
    target: &MemoryGraph,
) -> Result<CycleBasis, GraphError> {
    if source.alphabet() != target.alphabet() || source.memory() + 1 != target.memory() {
        return Err(GraphError::GraphMismatch {
            expected: format!("memory {} over the target alphabet", target.memory() - 1),
            found: source.signature(),
        });
    }
    let c = source.alphabet().len();
    let mut lifted = Vec::with_capacity(cycles.len());
    for cycle in cycles {
        cycle.validate_on(source)?;
        let nodes = cycle.nodes();
        let target_nodes: Vec<NodeId> = (0..nodes.len())
            .map(|j| nodes[j] * c + (nodes[(j + 1) % nodes.len()] % c))
            .collect();
        let prime = PrimeCycle::new(target_nodes);
        debug_assert!(ElementaryCycle::new(prime.nodes().to_vec())
            .validate_on(target)
            .is_ok());
        lifted.push(prime);
    }
    Ok(CycleBasis::from_parts(target.clone(), lifted))
}

// --- serialization ------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CycleBasisFile {
    schema_version: u32,
    alphabet: Vec<f64>,
    memory: usize,
    cycles: Vec<Vec<Vec<f64>>>,
}

pub const CYCLE_BASIS_SCHEMA_VERSION: u32 = 1;

impl CycleBasis {
    /// Serialize to the cache document: alphabet values, memory, and each
    /// cycle as its list of node value tuples.
    pub fn to_json(&self) -> serde_json::Value {
        let cycles = self
            .cycles
            .iter()
            .map(|cycle| {
                cycle
                    .nodes()
                    .iter()
                    .map(|&n| self.graph.node_values(n))
                    .collect()
            })
            .collect();
        serde_json::to_value(CycleBasisFile {
            schema_version: CYCLE_BASIS_SCHEMA_VERSION,
            alphabet: self.graph.alphabet().values().to_vec(),
            memory: self.graph.memory(),
            cycles,
        })
        .expect("cycle basis serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, GraphError> {
        let file: CycleBasisFile = serde_json::from_value(value.clone())
            .map_err(|_| GraphError::EmptyAlphabet)?;
        let alphabet = Alphabet::new(file.alphabet)?;
        let graph = MemoryGraph::new(alphabet, file.memory)?;
        let mut cycles = Vec::with_capacity(file.cycles.len());
        for tuple_list in &file.cycles {
            let mut nodes = Vec::with_capacity(tuple_list.len());
            for tuple in tuple_list {
                let digits: Option<Vec<usize>> = tuple
                    .iter()
                    .map(|&v| graph.alphabet().digit_of(v))
                    .collect();
                let digits = digits.ok_or(GraphError::InvalidAlphabetValue(f64::NAN))?;
                nodes.push(graph.node_from_digits(&digits));
            }
            let cycle = PrimeCycle::new(nodes);
            ElementaryCycle::new(cycle.nodes().to_vec()).validate_on(&graph)?;
            cycles.push(cycle);
        }
        Ok(Self::from_parts(graph, cycles))
    }
}
