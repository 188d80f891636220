//! The executable side of the round lower bound for pairwise spanners: the
//! partial-complement relation, the forced-edge property of girth-6
//! incidence graphs, the reduction from spanner construction to the
//! relation, and two-party cut accounting over simulated runs.
//!
//! The quantitative floor of the relation (any adequate protocol conveys at
//! least p/100 bits about the hidden index set) is an information-theoretic
//! statement about all protocols; runs here record it as a reference line in
//! cut reports and assert nothing about it. Likewise, the simulated cut
//! traffic is CONGEST traffic, which upper-bounds what the two parties would
//! need in the unrestricted two-party model.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::congest::{account_cut_bits, SimConfig};
use crate::graph::{EdgeSet, Graph, NodeId, PairSet, PendantMap};
use crate::spanners::{build_spanner, AlgoConfig, SpannerError, SpannerInput, SpannerResult};

#[derive(Debug, Error)]
pub enum LowerBoundError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("pair ({0}, {1}) does not correspond to a base edge")]
    PairNotEdge(NodeId, NodeId),
    #[error("removing base edge ({u}, {v}) leaves its pendant pair within +2 (distance {dist})")]
    NotForced { u: NodeId, v: NodeId, dist: u32 },
    #[error(transparent)]
    Spanner(#[from] SpannerError),
}

/// An instance of the partial-complement relation: a hidden set `x` of `p`
/// indices out of `1..=m`, with `p <= m/3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartCompInstance {
    pub m: usize,
    pub p: usize,
    /// Sorted 1-based indices, |x| = p.
    pub x: Vec<usize>,
}

impl PartCompInstance {
    pub fn new(m: usize, p: usize, x: Vec<usize>) -> Result<PartCompInstance, LowerBoundError> {
        if p > m / 3 {
            return Err(LowerBoundError::InvalidInstance(format!(
                "p = {p} exceeds m/3 = {}",
                m / 3
            )));
        }
        let mut x = x;
        x.sort_unstable();
        x.dedup();
        if x.len() != p {
            return Err(LowerBoundError::InvalidInstance(format!(
                "|x| = {} but p = {p}",
                x.len()
            )));
        }
        if x.iter().any(|&i| i == 0 || i > m) {
            return Err(LowerBoundError::InvalidInstance(
                "x contains out-of-range indices".into(),
            ));
        }
        Ok(PartCompInstance { m, p, x })
    }

    /// A uniformly random instance.
    pub fn random(m: usize, p: usize, seed: u64) -> Result<PartCompInstance, LowerBoundError> {
        let mut indices: Vec<usize> = (1..=m).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        indices.shuffle(&mut rng);
        indices.truncate(p);
        PartCompInstance::new(m, p, indices)
    }
}

/// An answer to the relation: a set of `floor(m/2)` indices disjoint
/// from `x`. (Odd `m` from real incidence graphs rounds the required size
/// down; the reduction is unaffected.)
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartCompAnswer {
    pub y: Vec<usize>,
}

/// True iff `y` has exactly `floor(m/2)` indices, all within range and
/// disjoint from `x`.
pub fn partcomp_check(inst: &PartCompInstance, ans: &PartCompAnswer) -> bool {
    if ans.y.len() != inst.m / 2 {
        return false;
    }
    let mut seen = ans.y.clone();
    seen.sort_unstable();
    seen.dedup();
    seen.len() == ans.y.len()
        && seen.iter().all(|&i| i >= 1 && i <= inst.m)
        && seen.iter().all(|&i| inst.x.binary_search(&i).is_err())
}

/// Fixed 1-based indexing of the base-graph edges (both endpoints below the
/// pendant range), lexicographic over normalized endpoints.
#[derive(Debug, Clone)]
pub struct EdgeIndexing {
    edges: Vec<(NodeId, NodeId)>,
}

impl EdgeIndexing {
    pub fn new(lb_graph: &Graph, map: &PendantMap) -> EdgeIndexing {
        let base = map.base_count() as NodeId;
        let edges = lb_graph
            .edges()
            .filter(|&(u, v)| u < base && v < base)
            .collect();
        EdgeIndexing { edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// The edge with 1-based index `k`.
    pub fn edge(&self, k: usize) -> (NodeId, NodeId) {
        self.edges[k - 1]
    }

    /// The 1-based index of a base edge.
    pub fn index_of(&self, u: NodeId, v: NodeId) -> Option<usize> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok().map(|i| i + 1)
    }

    /// The pendant pair set an index set induces.
    pub fn pairs_for(&self, map: &PendantMap, x: &[usize]) -> PairSet {
        PairSet::new(x.iter().map(|&k| {
            let (u, v) = self.edge(k);
            (map.pendant_of(u), map.pendant_of(v))
        }))
    }
}

/// Maps each required pendant pair back to its base edge and verifies, by
/// oracle, that the edge is genuinely forced: removing it stretches the pair
/// beyond +2.
pub fn forced_edges(
    lb_graph: &Graph,
    map: &PendantMap,
    pairs: &PairSet,
) -> Result<EdgeSet, LowerBoundError> {
    let mut forced = EdgeSet::new();
    for (a, b) in pairs.iter() {
        let (u, v) = match (map.base_of(a), map.base_of(b)) {
            (Some(u), Some(v)) if lb_graph.has_edge(u, v) => (u, v),
            _ => return Err(LowerBoundError::PairNotEdge(a, b)),
        };
        let without = lb_graph.without_edge(u, v);
        let base_dist = lb_graph.distances_from(a)[b as usize].expect("pair connected");
        let stretched = without.distances_from(a)[b as usize];
        match stretched {
            Some(d) if d <= base_dist + 2 => {
                return Err(LowerBoundError::NotForced { u, v, dist: d })
            }
            _ => {}
        }
        forced.insert(u, v);
    }
    Ok(forced)
}

/// Outcome of the spanner-to-relation reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReductionOutcome {
    Answer(PartCompAnswer),
    /// The spanner kept more than half of the base edges, so no adequate
    /// answer can be read off it.
    TooDense {
        absent: usize,
        required: usize,
    },
}

/// Reads the relation answer off a spanner: `y` collects the indices of
/// base edges absent from H, truncated to the smallest `floor(m/2)` of them
/// for determinism.
pub fn reduction_extract_y(indexing: &EdgeIndexing, h_edges: &EdgeSet) -> ReductionOutcome {
    let m = indexing.len();
    let absent: Vec<usize> = (1..=m)
        .filter(|&k| {
            let (u, v) = indexing.edge(k);
            !h_edges.contains(u, v)
        })
        .collect();
    let required = m / 2;
    if absent.len() < required {
        return ReductionOutcome::TooDense {
            absent: absent.len(),
            required,
        };
    }
    ReductionOutcome::Answer(PartCompAnswer {
        y: absent[..required].to_vec(),
    })
}

/// Result of one simulated two-party run.
#[derive(Debug)]
pub struct CutSimulation {
    pub bits_across_cut: u64,
    pub result: SpannerResult,
    /// Base edges whose pendant pairs were required (all verified forced).
    pub forced: EdgeSet,
    /// How many forced edges the spanner kept (all of them, for a correct
    /// construction).
    pub forced_present: usize,
}

/// Runs a pairwise spanner construction on the lower-bound graph with the
/// pair set induced by `x`, tracing every message, and accounts the bits
/// crossing the pendant/base cut: the two simulated parties' conversation.
pub fn run_cut_simulation(
    lb_graph: &Graph,
    map: &PendantMap,
    indexing: &EdgeIndexing,
    x: &[usize],
    algo: &AlgoConfig,
    sim: &SimConfig,
) -> Result<CutSimulation, LowerBoundError> {
    let pairs = indexing.pairs_for(map, x);
    let forced = forced_edges(lb_graph, map, &pairs)?;

    let mut cfg = *sim;
    cfg.trace = true;
    let result = build_spanner(lb_graph, &SpannerInput::Pairs(pairs), algo, &cfg)?;

    let side: Vec<bool> = lb_graph.nodes().map(|v| map.is_alice(v)).collect();
    let bits = result
        .phase_traces
        .iter()
        .map(|trace| account_cut_bits(trace, &side))
        .sum();

    let forced_present = forced
        .iter()
        .filter(|&(u, v)| result.h_edges.contains(u, v))
        .count();
    Ok(CutSimulation {
        bits_across_cut: bits,
        result,
        forced,
        forced_present,
    })
}

/// One row of the cut-report CSV:
/// `q,n,m,p,bits_cut,p_over_100,rounds,spanner_edges,forced_present`.
#[derive(Debug, Clone)]
pub struct CutRow {
    pub q: u64,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub bits_cut: u64,
    pub rounds: u64,
    pub spanner_edges: usize,
    pub forced_present: usize,
}

impl CutRow {
    pub const CSV_HEADER: &'static str =
        "q,n,m,p,bits_cut,p_over_100,rounds,spanner_edges,forced_present";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:.2},{},{},{}",
            self.q,
            self.n,
            self.m,
            self.p,
            self.bits_cut,
            self.p as f64 / 100.0,
            self.rounds,
            self.spanner_edges,
            self.forced_present
        )
    }
}
