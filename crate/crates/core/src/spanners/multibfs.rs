//! Pipelined multi-source BFS under per-edge bandwidth limits.
//!
//! All searches start simultaneously. Every node keeps, per root, its best
//! known distance, and broadcasts pending (root, distance) pairs one per
//! round, smallest distance first; improved estimates are re-announced. Each
//! edge therefore carries at most one search token per round in each
//! direction, and excess tokens wait in the per-node priority queue. This
//! is the pipelining that puts `|roots| + D` within reach instead of
//! `|roots| * D`. The executor measures the actual round count; the
//! implementation constant is reported, not assumed.
//!
//! The distance wave is followed, where missing-edge counters are requested,
//! by a counter wave down the settled trees: a node learns the number of
//! reference-absent edges on its tree path from each root as soon as its
//! parent announces its own count. The counter wave also records each
//! announcement round, which later lets buying passes replay the schedule
//! backwards.
//!
//! Message schemas:
//!   distance wave:  { root: id_bits, dist: id_bits }
//!   counter wave:   { root: id_bits, missing: id_bits }
//!
//! Parent choice is the smallest-id neighbor in the previous layer, the
//! same rule as the sequential oracle, so the distributed trees coincide
//! with the oracle's canonical trees.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::Arc;

use super::SpannerError;
use crate::congest::{
    id_bits, run_simulation, Ctx, Message, NodeProgram, RoundStats, SimConfig, Status,
};
use crate::graph::{BfsTree, EdgeSet, Graph, NodeId};

/// Per-node result of the distance wave, slot-aligned with the shared sorted
/// root list.
#[derive(Debug, Clone)]
pub(crate) struct DistTable {
    /// Exact hop distance per root.
    pub dist: Vec<u32>,
    /// Smallest-id previous-layer neighbor per root; the root itself for its
    /// own slot.
    pub parent: Vec<NodeId>,
}

/// Per-node result of the counter wave.
#[derive(Debug, Clone)]
pub(crate) struct CounterTable {
    /// Missing-edge count of the tree path from each root.
    pub missing: Vec<u32>,
    /// Round in which this node announced each count; the backward buying
    /// passes replay these in reverse.
    pub announce_round: Vec<u32>,
}

const UNKNOWN: u32 = u32::MAX;

struct DistWaveNode {
    roots: Arc<Vec<NodeId>>,
    bits: u32,
    is_root: Option<usize>,
    dist: Vec<u32>,
    /// Per root, the smallest (distance claim, sender) ever heard. Claims
    /// never undershoot the sender's final distance, so at quiescence this
    /// is exactly (own dist - 1, smallest-id previous-layer neighbor): the
    /// canonical parent, without remembering every neighbor's claims.
    best_claim: Vec<(u32, NodeId)>,
    queue: BinaryHeap<Reverse<(u32, u32)>>,
}

impl DistWaveNode {
    fn pump(&mut self, ctx: &mut Ctx<'_>) -> Status {
        while let Some(&Reverse((d, slot))) = self.queue.peek() {
            if self.dist[slot as usize] != d {
                self.queue.pop();
                continue;
            }
            self.queue.pop();
            let mut m = Message::new();
            m.push(self.roots[slot as usize] as u64, self.bits)
                .push(d as u64, self.bits);
            ctx.broadcast(m);
            break;
        }
        if self.queue.is_empty() {
            Status::Idle
        } else {
            Status::Active
        }
    }
}

impl NodeProgram for DistWaveNode {
    type Output = DistTable;

    fn init(&mut self, ctx: &mut Ctx<'_>) -> Status {
        if let Some(slot) = self.is_root {
            self.dist[slot] = 0;
            self.queue.push(Reverse((0, slot as u32)));
            return self.pump(ctx);
        }
        Status::Idle
    }

    fn step(&mut self, ctx: &mut Ctx<'_>, inbox: &[(NodeId, Message)]) -> Status {
        for (src, msg) in inbox {
            let root = msg.word(0) as NodeId;
            let d = msg.word(1) as u32;
            let slot = self
                .roots
                .binary_search(&root)
                .expect("token names a registered root");
            let claim = (d, *src);
            if claim < self.best_claim[slot] {
                self.best_claim[slot] = claim;
            }
            if d + 1 < self.dist[slot] {
                self.dist[slot] = d + 1;
                self.queue.push(Reverse((d + 1, slot as u32)));
            }
        }
        self.pump(ctx)
    }

    fn finish(self) -> DistTable {
        let r = self.roots.len();
        let mut parent = vec![NodeId::MAX; r];
        for (slot, p) in parent.iter_mut().enumerate() {
            let d = self.dist[slot];
            assert_ne!(d, UNKNOWN, "connected graph reaches every root");
            if d == 0 {
                *p = self.roots[slot];
                continue;
            }
            let (claim, sender) = self.best_claim[slot];
            debug_assert_eq!(claim, d - 1, "smallest claim sits one layer up");
            *p = sender;
        }
        DistTable {
            dist: self.dist,
            parent,
        }
    }
}

struct CounterWaveNode {
    roots: Arc<Vec<NodeId>>,
    bits: u32,
    is_root: Option<usize>,
    table: DistTable,
    /// Whether the edge to each neighbor is present in the reference set.
    present: Vec<bool>,
    missing: Vec<u32>,
    announce_round: Vec<u32>,
    queue: BinaryHeap<Reverse<(u32, u32)>>,
}

impl CounterWaveNode {
    fn pump(&mut self, ctx: &mut Ctx<'_>) -> Status {
        if let Some(Reverse((_d, slot))) = self.queue.pop() {
            let mut m = Message::new();
            m.push(self.roots[slot as usize] as u64, self.bits)
                .push(self.missing[slot as usize] as u64, self.bits);
            ctx.broadcast(m);
            self.announce_round[slot as usize] = ctx.round() as u32;
        }
        if self.queue.is_empty() {
            Status::Idle
        } else {
            Status::Active
        }
    }
}

impl NodeProgram for CounterWaveNode {
    type Output = CounterTable;

    fn init(&mut self, _ctx: &mut Ctx<'_>) -> Status {
        if let Some(slot) = self.is_root {
            self.missing[slot] = 0;
            self.queue.push(Reverse((0, slot as u32)));
            return Status::Active;
        }
        Status::Idle
    }

    fn step(&mut self, ctx: &mut Ctx<'_>, inbox: &[(NodeId, Message)]) -> Status {
        for (src, msg) in inbox {
            let root = msg.word(0) as NodeId;
            let slot = self.roots.binary_search(&root).unwrap();
            if self.table.parent[slot] != *src || self.missing[slot] != UNKNOWN {
                continue;
            }
            let idx = ctx.neighbors().binary_search(src).unwrap();
            let absent = u32::from(!self.present[idx]);
            self.missing[slot] = msg.word(1) as u32 + absent;
            self.queue
                .push(Reverse((self.table.dist[slot], slot as u32)));
        }
        self.pump(ctx)
    }

    fn finish(self) -> CounterTable {
        CounterTable {
            missing: self.missing,
            announce_round: self.announce_round,
        }
    }
}

/// Result of [`parallel_bfs_phase`]: one tree per root, in root order.
#[derive(Debug)]
pub struct ParallelBfs {
    pub trees: Vec<BfsTree>,
    pub stats: RoundStats,
}

pub(crate) struct DistWaveOutcome {
    pub roots: Arc<Vec<NodeId>>,
    pub tables: Vec<DistTable>,
    pub stats: RoundStats,
    pub trace: Option<Vec<crate::congest::TraceRecord>>,
}

pub(crate) struct CounterWaveOutcome {
    pub tables: Vec<CounterTable>,
    pub stats: RoundStats,
    pub trace: Option<Vec<crate::congest::TraceRecord>>,
}

/// Runs the distance wave from `roots` (sorted, deduplicated internally).
pub(crate) fn run_dist_wave(
    g: &Graph,
    cfg: &SimConfig,
    roots: &[NodeId],
) -> Result<DistWaveOutcome, SpannerError> {
    let mut sorted: Vec<NodeId> = roots.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let roots = Arc::new(sorted);
    let n = g.node_count();
    let bits = id_bits(n);
    let r = roots.len();

    let out = run_simulation(g, cfg, vec![(); n], |id, _neighbors, _| DistWaveNode {
        roots: Arc::clone(&roots),
        bits,
        is_root: roots.binary_search(&id).ok(),
        dist: vec![UNKNOWN; r],
        best_claim: vec![(UNKNOWN, NodeId::MAX); r],
        queue: BinaryHeap::new(),
    })?;
    Ok(DistWaveOutcome {
        roots,
        tables: out.outputs,
        stats: out.stats,
        trace: out.trace,
    })
}

/// Runs the counter wave for `reference` over settled distance tables.
pub(crate) fn run_counter_wave(
    g: &Graph,
    cfg: &SimConfig,
    dist: &DistWaveOutcome,
    reference: &EdgeSet,
) -> Result<CounterWaveOutcome, SpannerError> {
    let n = g.node_count();
    let bits = id_bits(n);
    let r = dist.roots.len();
    let roots = Arc::clone(&dist.roots);
    let mut tables: Vec<Option<DistTable>> = dist.tables.iter().cloned().map(Some).collect();

    let out = run_simulation(g, cfg, vec![(); n], |id, neighbors, _| {
        let table = tables[id as usize].take().unwrap();
        CounterWaveNode {
            roots: Arc::clone(&roots),
            bits,
            is_root: roots.binary_search(&id).ok(),
            table,
            present: neighbors
                .iter()
                .map(|&u| reference.contains(id, u))
                .collect(),
            missing: vec![UNKNOWN; r],
            announce_round: vec![0; r],
            queue: BinaryHeap::new(),
        }
    })?;
    Ok(CounterWaveOutcome {
        tables: out.outputs,
        stats: out.stats,
        trace: out.trace,
    })
}

/// Builds `|roots|` BFS trees simultaneously, pipelined over the executor.
/// With a `reference` edge set, every tree also carries per-node counts of
/// tree-path edges missing from it (two waves; stats are combined).
pub fn parallel_bfs_phase(
    g: &Graph,
    cfg: &SimConfig,
    roots: &[NodeId],
    reference: Option<&EdgeSet>,
) -> Result<ParallelBfs, SpannerError> {
    let dist = run_dist_wave(g, cfg, roots)?;
    let mut stats = dist.stats;
    let counters = match reference {
        Some(h) => {
            let mut ctr_cfg = *cfg;
            ctr_cfg.seed = crate::congest::mix_seed(cfg.seed, 1);
            let out = run_counter_wave(g, &ctr_cfg, &dist, h)?;
            stats.absorb(&out.stats);
            Some(out)
        }
        None => None,
    };

    let n = g.node_count();
    let trees = dist
        .roots
        .iter()
        .enumerate()
        .map(|(slot, &root)| BfsTree {
            root,
            dist: (0..n).map(|v| Some(dist.tables[v].dist[slot])).collect(),
            parent: (0..n).map(|v| Some(dist.tables[v].parent[slot])).collect(),
            missing: counters
                .as_ref()
                .map(|c| (0..n).map(|v| c.tables[v].missing[slot]).collect()),
        })
        .collect();
    Ok(ParallelBfs { trees, stats })
}
