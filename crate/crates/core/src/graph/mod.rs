//! Immutable undirected graphs with dense integer node ids, plus the derived
//! set types (edge subsets, pair sets) shared by every algorithm.

mod gen;
pub mod io;
mod oracle;

pub use gen::{
    build_general_lowerbound_graph, build_lowerbound_graph, build_projective_incidence, gen_gnp,
    PendantMap,
};
pub use io::{load_graph, load_pairs, load_sources};
pub use oracle::{bfs_with_reference, BfsTree};

use std::collections::BTreeSet;

use thiserror::Error;

/// Dense node identifier in `0..n`.
pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("node id {id} out of range (n = {n})")]
    NodeRange { id: u64, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("could not generate a connected graph within {0} reseeds")]
    ConnectivityRetries(u32),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("base graph girth {girth} is below required girth {required}")]
    GirthTooSmall { girth: usize, required: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// An undirected, unweighted, simple graph. Neighbor lists are sorted and the
/// structure is immutable after construction, so it can be shared freely
/// across threads and simulation phases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicate edges (in either
    /// orientation) collapse to one; self-loops are rejected; ids must be
    /// below `n`.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut adj = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for (u, v) in edges {
            if u as usize >= n {
                return Err(GraphError::NodeRange { id: u as u64, n });
            }
            if v as usize >= n {
                return Err(GraphError::NodeRange { id: v as u64, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            let key = (u.min(v), u.max(v));
            if seen.insert(key) {
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph {
            adj,
            edge_count: seen.len(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.adj.len()).map(|v| v as NodeId)
    }

    /// All edges, normalized as `(min, max)`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes().flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Returns a copy of this graph with one edge removed.
    pub fn without_edge(&self, u: NodeId, v: NodeId) -> Graph {
        let mut adj = self.adj.clone();
        let mut removed = 0;
        if let Ok(i) = adj[u as usize].binary_search(&v) {
            adj[u as usize].remove(i);
            removed = 1;
        }
        if let Ok(i) = adj[v as usize].binary_search(&u) {
            adj[v as usize].remove(i);
        }
        Graph {
            adj,
            edge_count: self.edge_count - removed,
        }
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0 as NodeId];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in self.neighbors(u) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }
}

/// A set of undirected edges, each stored normalized as `(min, max)`.
/// Used both for spanner outputs and for "missing edge" references.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeSet {
    set: BTreeSet<(NodeId, NodeId)>,
}

impl FromIterator<(NodeId, NodeId)> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = (NodeId, NodeId)>>(iter: I) -> EdgeSet {
        let mut s = EdgeSet::new();
        for (u, v) in iter {
            s.insert(u, v);
        }
        s
    }
}

impl EdgeSet {
    pub fn new() -> EdgeSet {
        EdgeSet::default()
    }

    /// Inserts the edge; returns true if it was new.
    pub fn insert(&mut self, u: NodeId, v: NodeId) -> bool {
        debug_assert_ne!(u, v);
        self.set.insert((u.min(v), u.max(v)))
    }

    pub fn contains(&self, u: NodeId, v: NodeId) -> bool {
        self.set.contains(&(u.min(v), u.max(v)))
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    /// Edges in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.set.iter().copied()
    }

    /// True iff every contained edge exists in `g`.
    pub fn is_subgraph_of(&self, g: &Graph) -> bool {
        self.iter().all(|(u, v)| g.has_edge(u, v))
    }
}

/// A set of unordered node pairs (the "relevant pairs" of a pairwise spanner
/// instance), deduplicated and normalized.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairSet {
    pairs: Vec<(NodeId, NodeId)>,
}

impl PairSet {
    /// Normalizes, deduplicates, and drops degenerate `(u, u)` pairs.
    pub fn new<I: IntoIterator<Item = (NodeId, NodeId)>>(iter: I) -> PairSet {
        let mut pairs: Vec<(NodeId, NodeId)> = iter
            .into_iter()
            .filter(|(u, v)| u != v)
            .map(|(u, v)| (u.min(v), u.max(v)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        PairSet { pairs }
    }

    /// All unordered pairs over a node subset.
    pub fn all_pairs_of(nodes: &[NodeId]) -> PairSet {
        let mut pairs = Vec::new();
        for (i, &u) in nodes.iter().enumerate() {
            for &v in &nodes[i + 1..] {
                pairs.push((u, v));
            }
        }
        PairSet::new(pairs)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.pairs.iter().copied()
    }

    /// The number of distinct nodes appearing in some pair.
    pub fn tau(&self) -> usize {
        self.endpoints().len()
    }

    /// Sorted distinct endpoints.
    pub fn endpoints(&self) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = self.pairs.iter().flat_map(|&(u, v)| [u, v]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    pub fn contains(&self, u: NodeId, v: NodeId) -> bool {
        let key = (u.min(v), u.max(v));
        self.pairs.binary_search(&key).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_edges_dedups_both_orientations() {
        let g = Graph::from_edges(2, [(0, 1), (1, 0)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.neighbors(0), &[1]);
    }

    #[test]
    fn from_edges_rejects_self_loop() {
        assert!(matches!(
            Graph::from_edges(2, [(0, 0)]),
            Err(GraphError::SelfLoop(0))
        ));
    }

    #[test]
    fn from_edges_rejects_out_of_range() {
        assert!(matches!(
            Graph::from_edges(2, [(0, 2)]),
            Err(GraphError::NodeRange { id: 2, n: 2 })
        ));
    }

    #[test]
    fn adjacency_is_symmetric_and_sorted() {
        let g = Graph::from_edges(4, [(2, 1), (3, 0), (1, 0)]).unwrap();
        for u in g.nodes() {
            let mut prev = None;
            for &v in g.neighbors(u) {
                assert!(g.has_edge(v, u));
                assert!(prev.is_none_or(|p| p < v));
                prev = Some(v);
            }
        }
        let total: usize = g.nodes().map(|v| g.degree(v)).sum();
        assert_eq!(total, 2 * g.edge_count());
    }

    #[test]
    fn pair_set_tau_counts_distinct_endpoints() {
        let p = PairSet::new([(0, 1), (1, 0), (2, 3), (1, 1)]);
        assert_eq!(p.len(), 2);
        assert_eq!(p.tau(), 4);
        assert!(p.tau() <= 2 * p.len());
    }

    #[test]
    fn all_pairs_of_subset() {
        let p = PairSet::all_pairs_of(&[3, 1, 5]);
        assert_eq!(p.len(), 3);
        assert!(p.contains(1, 3) && p.contains(1, 5) && p.contains(3, 5));
    }

    #[test]
    fn edge_set_normalizes() {
        let mut s = EdgeSet::new();
        assert!(s.insert(5, 2));
        assert!(!s.insert(2, 5));
        assert!(s.contains(2, 5));
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![(2, 5)]);
    }
}
