//! Edge buying: the backward replay of the BFS schedule, plus the
//! report/choose/notify exchange between cluster members and their centers.
//!
//! # Backward wave
//!
//! The counter wave recorded, per node and root, the round in which the node
//! announced its missing count. The buying pass replays that schedule in
//! exact reverse: with `R` the latest announcement round anywhere (learned
//! via a network fold), a node that announced root `s` at round `r` sends
//! its buying message for `s` to its tree parent at backward round
//! `R + 1 - r`. Children announced strictly later than their parents, so
//! every child's message arrives before the parent's own turn, walks from
//! different endpoints merge, and each node sends at most one message per
//! round.
//!
//! Two buying modes ride the same schedule:
//!
//! * plain: an initiating node starts a "buy" that adds every tree-path
//!   edge from it up to the root (present edges are no-ops);
//! * prefix/suffix: an initiating node starts a budgeted counter that buys
//!   the nearest `budget` missing edges walking rootward, is reset to the
//!   full budget by any other initiating node it passes, and once dead keeps
//!   riding until it reaches a node whose tree path from the root holds at
//!   most `budget` missing edges, where it turns into a plain buy. In
//!   total: the first and last `budget` missing edges of every initiator's
//!   path.
//!
//! Message schema: { root: id_bits, kind: 2, counter: id_bits }.
//!
//! # Report / choose / notify
//!
//! Clustered nodes stream one (root, distance, missing) report per round to
//! their center; once all reports are in, each participating center picks,
//! per root, the member with the shortest path whose missing count is within
//! the buying threshold (ties to the smaller member id) and streams one
//! notification per round back. Notified members become the initiators of a
//! subsequent plain backward wave.
//!
//! Message schemas: report { root: id_bits, dist: id_bits, missing: id_bits },
//! notify { root: id_bits }.

use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::sync::Arc;

use super::multibfs::{CounterTable, DistTable};
use super::SpannerError;
use crate::congest::{
    id_bits, run_simulation, Ctx, Message, NodeProgram, RoundStats, SimConfig, Status,
};
use crate::graph::{EdgeSet, Graph, NodeId};

const KIND_COUNTER: u64 = 0;
const KIND_SWITCH: u64 = 1;
const KIND_BUY: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BuyMode {
    /// Initiators buy their whole tree path up to the root.
    Plain,
    /// Initiators start a suffix counter with this budget.
    PrefixSuffix { budget: u32 },
}

struct BackwardNode {
    roots: Arc<Vec<NodeId>>,
    bits: u32,
    mode: BuyMode,
    dist: DistTable,
    counters: CounterTable,
    /// Slots where this node initiates (pair endpoint / notified member).
    active: Vec<bool>,
    /// Edge-to-neighbor presence in the reference H, frozen at phase start;
    /// the same snapshot the missing counts were measured against.
    present: Vec<bool>,
    neighbor_ids: Vec<NodeId>,
    /// Total forward rounds; the send round for slot s is R + 1 - announce(s).
    total_rounds: u32,
    best_counter: Vec<u32>,
    got_counter: Vec<bool>,
    got_switch: Vec<bool>,
    got_buy: Vec<bool>,
    /// (due round, slot) sorted ascending, consumed by a cursor.
    schedule: Vec<(u64, u32)>,
    cursor: usize,
    bought: Vec<(NodeId, NodeId)>,
}

impl BackwardNode {
    fn parent_edge_present(&self, slot: usize) -> bool {
        let p = self.dist.parent[slot];
        let idx = self
            .neighbor_ids
            .binary_search(&p)
            .expect("tree parent is a neighbor");
        self.present[idx]
    }

    fn send_slot(&mut self, ctx: &mut Ctx<'_>, slot: usize) {
        if self.dist.dist[slot] == 0 {
            return; // the root ends every walk
        }
        let (kind, counter, buys) = match self.mode {
            BuyMode::Plain => {
                if self.active[slot] || self.got_buy[slot] {
                    (KIND_BUY, 0u32, !self.parent_edge_present(slot))
                } else {
                    return;
                }
            }
            BuyMode::PrefixSuffix { budget } => {
                if self.got_switch[slot] {
                    (KIND_SWITCH, 0, !self.parent_edge_present(slot))
                } else if self.active[slot]
                    || (self.got_counter[slot] && self.best_counter[slot] > 0)
                {
                    // A fresh initiation resets to the full budget, which
                    // dominates any incoming live counter.
                    let mut c = if self.active[slot] {
                        budget
                    } else {
                        self.best_counter[slot]
                    };
                    let mut buys = false;
                    if c > 0 && !self.parent_edge_present(slot) {
                        buys = true;
                        c -= 1;
                    }
                    (KIND_COUNTER, c, buys)
                } else if self.got_counter[slot] {
                    // Dead counter: converts to a plain buy at the first node
                    // whose remaining path holds at most `budget` missing
                    // edges; otherwise it keeps riding rootward.
                    if self.counters.missing[slot] <= budget {
                        (KIND_SWITCH, 0, !self.parent_edge_present(slot))
                    } else {
                        (KIND_COUNTER, 0, false)
                    }
                } else {
                    return;
                }
            }
        };
        let parent = self.dist.parent[slot];
        if buys {
            self.bought.push((ctx.id(), parent));
        }
        let mut m = Message::new();
        m.push(self.roots[slot] as u64, self.bits)
            .push(kind, 2)
            .push(counter as u64, self.bits);
        ctx.send(parent, m);
    }
}

impl NodeProgram for BackwardNode {
    type Output = Vec<(NodeId, NodeId)>;

    fn init(&mut self, _ctx: &mut Ctx<'_>) -> Status {
        self.schedule = (0..self.roots.len())
            .filter(|&slot| self.dist.dist[slot] > 0)
            .map(|slot| {
                let due = (self.total_rounds + 1 - self.counters.announce_round[slot]) as u64;
                (due, slot as u32)
            })
            .collect();
        self.schedule.sort_unstable();
        if self.schedule.is_empty() {
            Status::Idle
        } else {
            Status::Active
        }
    }

    fn step(&mut self, ctx: &mut Ctx<'_>, inbox: &[(NodeId, Message)]) -> Status {
        for (_src, msg) in inbox {
            let root = msg.word(0) as NodeId;
            let slot = self.roots.binary_search(&root).unwrap();
            match msg.word(1) {
                KIND_COUNTER => {
                    let c = msg.word(2) as u32;
                    self.got_counter[slot] = true;
                    self.best_counter[slot] = self.best_counter[slot].max(c);
                }
                KIND_SWITCH => self.got_switch[slot] = true,
                KIND_BUY => self.got_buy[slot] = true,
                other => panic!("unknown buy kind {other}"),
            }
        }
        let round = ctx.round();
        // Distinct slots were announced in distinct rounds, so at most one
        // slot fires per round and the parent link carries one message.
        while let Some(&(due, slot)) = self.schedule.get(self.cursor) {
            if due > round {
                break;
            }
            debug_assert_eq!(due, round, "no due round may be skipped");
            self.cursor += 1;
            self.send_slot(ctx, slot as usize);
        }
        if self.cursor >= self.schedule.len() {
            Status::Idle
        } else {
            Status::Active
        }
    }

    fn finish(self) -> Vec<(NodeId, NodeId)> {
        self.bought
    }
}

pub(crate) struct BackwardOutcome {
    /// Edges newly added to H by this pass.
    pub bought: EdgeSet,
    pub stats: RoundStats,
    pub trace: Option<Vec<crate::congest::TraceRecord>>,
}

/// Replays the counter-wave schedule backwards, executing the buying mode.
/// `active[v]` flags the slots node `v` initiates; `reference` is the same H
/// snapshot the counters were measured against; `total_rounds` is the
/// counter wave's global round count (a network fold of announce rounds).
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_backward_wave(
    g: &Graph,
    cfg: &SimConfig,
    roots: &Arc<Vec<NodeId>>,
    dist: &[DistTable],
    counters: &[CounterTable],
    active: Vec<Vec<bool>>,
    reference: &EdgeSet,
    total_rounds: u32,
    mode: BuyMode,
) -> Result<BackwardOutcome, SpannerError> {
    let n = g.node_count();
    let bits = id_bits(n);
    let r = roots.len();
    let mut dist_in: Vec<Option<DistTable>> = dist.iter().cloned().map(Some).collect();
    let mut ctr_in: Vec<Option<CounterTable>> = counters.iter().cloned().map(Some).collect();
    let mut active_in: Vec<Option<Vec<bool>>> = active.into_iter().map(Some).collect();

    let out = run_simulation(g, cfg, vec![(); n], |id, neighbors, _| BackwardNode {
        roots: Arc::clone(roots),
        bits,
        mode,
        dist: dist_in[id as usize].take().unwrap(),
        counters: ctr_in[id as usize].take().unwrap(),
        active: active_in[id as usize].take().unwrap(),
        present: neighbors
            .iter()
            .map(|&u| reference.contains(id, u))
            .collect(),
        neighbor_ids: neighbors.to_vec(),
        total_rounds,
        best_counter: vec![0; r],
        got_counter: vec![false; r],
        got_switch: vec![false; r],
        got_buy: vec![false; r],
        schedule: Vec::new(),
        cursor: 0,
        bought: Vec::new(),
    })?;

    let mut bought = EdgeSet::new();
    for edges in &out.outputs {
        for &(u, v) in edges {
            bought.insert(u, v);
        }
    }
    Ok(BackwardOutcome {
        bought,
        stats: out.stats,
        trace: out.trace,
    })
}

// --- report / choose / notify ----------------------------------------------

struct ReportNode {
    roots: Arc<Vec<NodeId>>,
    bits: u32,
    /// This node's center, if it belongs to a cluster.
    center: Option<NodeId>,
    /// Size of this node's own cluster, if it is a center.
    member_count: usize,
    /// Whether this center takes part in choosing (in the A-set phase only
    /// the sampled centers buy paths).
    chooses: bool,
    dist: DistTable,
    counters: CounterTable,
    threshold: f64,
    /// Per root: best (dist, member) among reports within the threshold.
    best: Vec<Option<(u32, NodeId)>>,
    reports_seen: usize,
    chose: bool,
    /// Outgoing notifications, one queue per member; one message per member
    /// per round keeps each edge at one message.
    pending: BTreeMap<NodeId, VecDeque<u32>>,
    /// Root slots this node was told to initiate a buy for.
    chosen: Vec<u32>,
}

impl NodeProgram for ReportNode {
    type Output = Vec<u32>;

    fn init(&mut self, _ctx: &mut Ctx<'_>) -> Status {
        if self.center.is_some() {
            Status::Active
        } else {
            Status::Idle
        }
    }

    fn step(&mut self, ctx: &mut Ctx<'_>, inbox: &[(NodeId, Message)]) -> Status {
        let r = self.roots.len();
        for (src, msg) in inbox {
            if msg.len() == 3 {
                // Report from a member of this node's cluster.
                let slot = self.roots.binary_search(&(msg.word(0) as NodeId)).unwrap();
                let d = msg.word(1) as u32;
                let miss = msg.word(2) as u32;
                self.reports_seen += 1;
                if self.chooses && (miss as f64) <= self.threshold {
                    let cand = (d, *src);
                    if self.best[slot].is_none_or(|b| cand < b) {
                        self.best[slot] = Some(cand);
                    }
                }
            } else {
                // Notification from this node's center.
                debug_assert_eq!(Some(*src), self.center);
                let slot = self.roots.binary_search(&(msg.word(0) as NodeId)).unwrap();
                self.chosen.push(slot as u32);
            }
        }

        // Members stream one report per round, in slot order.
        let round = ctx.round() as usize;
        let mut busy = false;
        if let Some(center) = self.center {
            if (1..=r).contains(&round) {
                let slot = round - 1;
                let mut m = Message::new();
                m.push(self.roots[slot] as u64, self.bits)
                    .push(self.dist.dist[slot] as u64, self.bits)
                    .push(self.counters.missing[slot] as u64, self.bits);
                ctx.send(center, m);
            }
            busy = round < r;
        }

        // A center with every report in picks winners once, then streams.
        if self.member_count > 0 {
            if !self.chose && self.reports_seen == self.member_count * r {
                self.chose = true;
                if self.chooses {
                    for slot in 0..r {
                        if let Some((_, member)) = self.best[slot] {
                            self.pending
                                .entry(member)
                                .or_default()
                                .push_back(slot as u32);
                        }
                    }
                }
            }
            if !self.pending.is_empty() {
                let members: Vec<NodeId> = self.pending.keys().copied().collect();
                for member in members {
                    let queue = self.pending.get_mut(&member).unwrap();
                    let slot = queue.pop_front().unwrap();
                    if queue.is_empty() {
                        self.pending.remove(&member);
                    }
                    let mut m = Message::new();
                    m.push(self.roots[slot as usize] as u64, self.bits);
                    ctx.send(member, m);
                }
                busy = busy || !self.pending.is_empty();
            }
        }
        if busy {
            Status::Active
        } else {
            Status::Idle
        }
    }

    fn finish(mut self) -> Vec<u32> {
        self.chosen.sort_unstable();
        self.chosen
    }
}

pub(crate) struct ReportOutcome {
    /// Per node, the root slots it must initiate plain buys for.
    pub chosen: Vec<Vec<u32>>,
    pub stats: RoundStats,
    pub trace: Option<Vec<crate::congest::TraceRecord>>,
}

/// Members report (distance, missing) per root to their centers; each
/// participating center picks the best in-threshold member per root and
/// notifies it. `participating[v]` restricts which centers choose.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_report_choose_notify(
    g: &Graph,
    cfg: &SimConfig,
    roots: &Arc<Vec<NodeId>>,
    dist: &[DistTable],
    counters: &[CounterTable],
    membership: &[Option<NodeId>],
    member_counts: &[usize],
    participating: &[bool],
    threshold: f64,
) -> Result<ReportOutcome, SpannerError> {
    let n = g.node_count();
    let bits = id_bits(n);
    let r = roots.len();
    let mut dist_in: Vec<Option<DistTable>> = dist.iter().cloned().map(Some).collect();
    let mut ctr_in: Vec<Option<CounterTable>> = counters.iter().cloned().map(Some).collect();

    let out = run_simulation(g, cfg, vec![(); n], |id, _, _| ReportNode {
        roots: Arc::clone(roots),
        bits,
        center: membership[id as usize],
        member_count: member_counts[id as usize],
        chooses: participating[id as usize],
        dist: dist_in[id as usize].take().unwrap(),
        counters: ctr_in[id as usize].take().unwrap(),
        threshold,
        best: vec![None; r],
        reports_seen: 0,
        chose: false,
        pending: BTreeMap::new(),
        chosen: Vec::new(),
    })?;
    Ok(ReportOutcome {
        chosen: out.outputs,
        stats: out.stats,
        trace: out.trace,
    })
}
