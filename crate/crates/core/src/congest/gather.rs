//! Network-wide aggregation: convergecast a value up a BFS tree rooted at
//! node 0, then broadcast the combined result back down. Used by algorithms
//! to let every node learn global parameters (|S|, |P|, maximum phase
//! length) before acting on them.
//!
//! Node ids are dense, so "the node with the minimal identifier" is node 0
//! and needs no election. The tree is built by flooding; a node's parent is
//! its smallest-id neighbor in the previous layer. Everything completes in
//! at most 3*diameter + O(1) rounds.
//!
//! Message schema (2-bit tag + payload):
//!   Dist   { dist: id_bits, is_child: 1 }   flooding + child announcement
//!   Value  { value: value_bits }            convergecast of partial folds
//!   Result { value: value_bits }            broadcast of the final fold

use super::executor::{run_simulation, Ctx, NodeProgram, Status};
use super::{id_bits, Message, RoundStats, SimConfig, SimError};
use crate::graph::{Graph, NodeId};

const TAG_DIST: u64 = 0;
const TAG_VALUE: u64 = 1;
const TAG_RESULT: u64 = 2;

#[derive(Debug)]
pub struct GatherOutcome {
    /// Per-node combined value; identical at every node.
    pub values: Vec<u64>,
    pub stats: RoundStats,
    pub trace: Option<Vec<super::TraceRecord>>,
}

struct GatherNode {
    value: u64,
    value_bits: u32,
    dist_bits: u32,
    combine: fn(u64, u64) -> u64,

    dist: Option<u64>,
    dist_round: u64,
    parent: Option<NodeId>,
    heard: Vec<bool>,
    heard_count: usize,
    children: Vec<NodeId>,
    acc: u64,
    values_received: usize,
    sent_value: bool,
    result: Option<u64>,
}

impl GatherNode {
    fn dist_message(&self, is_child: bool) -> Message {
        let mut m = Message::new();
        m.push(TAG_DIST, 2)
            .push(self.dist.unwrap(), self.dist_bits)
            .push(u64::from(is_child), 1);
        m
    }

    fn value_message(&self, tag: u64, value: u64) -> Message {
        let mut m = Message::new();
        m.push(tag, 2).push(value, self.value_bits);
        m
    }
}

impl NodeProgram for GatherNode {
    type Output = u64;

    fn init(&mut self, ctx: &mut Ctx<'_>) -> Status {
        if ctx.id() == 0 {
            self.dist = Some(0);
            if ctx.neighbors().is_empty() {
                // Single-node network: the fold is the own value, with zero
                // communication rounds.
                self.result = Some(self.value);
            } else {
                ctx.broadcast(self.dist_message(false));
            }
        }
        Status::Idle
    }

    fn step(&mut self, ctx: &mut Ctx<'_>, inbox: &[(NodeId, Message)]) -> Status {
        for (src, msg) in inbox {
            let idx = ctx.neighbors().binary_search(src).unwrap();
            match msg.word(0) {
                TAG_DIST => {
                    if !self.heard[idx] {
                        self.heard[idx] = true;
                        self.heard_count += 1;
                    }
                    if msg.word(2) == 1 {
                        self.children.push(*src);
                    }
                    if self.dist.is_none() {
                        // All previous-layer announcements arrive in the same
                        // round; the smallest sender id becomes the parent.
                        self.dist = Some(msg.word(1) + 1);
                        self.dist_round = ctx.round();
                        if self.parent.is_none() {
                            self.parent = Some(*src);
                        }
                    }
                }
                TAG_VALUE => {
                    self.acc = (self.combine)(self.acc, msg.word(1));
                    self.values_received += 1;
                }
                TAG_RESULT => {
                    if self.result.is_none() {
                        self.result = Some(msg.word(1));
                        for i in 0..ctx.neighbors().len() {
                            let to = ctx.neighbors()[i];
                            if to != *src {
                                ctx.send(to, self.value_message(TAG_RESULT, msg.word(1)));
                            }
                        }
                    }
                }
                other => panic!("unknown gather tag {other}"),
            }
        }

        // Announce own distance in the round it was learned.
        if self.dist_round == ctx.round() && ctx.id() != 0 {
            for i in 0..ctx.neighbors().len() {
                let to = ctx.neighbors()[i];
                let is_child = Some(to) == self.parent;
                ctx.send(to, self.dist_message(is_child));
            }
        }

        // Once every neighbor has flooded, the child set is final; the fold
        // moves rootward as soon as all child partials are in.
        let children_known = self.dist.is_some() && self.heard_count == ctx.neighbors().len();
        if children_known && self.values_received == self.children.len() && !self.sent_value {
            // Strictly after our own flood round, so the parent link never
            // carries two messages in one round.
            if ctx.id() == 0 {
                self.sent_value = true;
                self.result = Some(self.acc);
                ctx.broadcast(self.value_message(TAG_RESULT, self.acc));
            } else if ctx.round() > self.dist_round {
                self.sent_value = true;
                let parent = self.parent.unwrap();
                ctx.send(parent, self.value_message(TAG_VALUE, self.acc));
            }
        }
        Status::Idle
    }

    fn finish(self) -> u64 {
        self.result.expect("connected network agrees on the fold")
    }
}

/// Combines `values` over the whole network with an associative, commutative
/// `combine`, leaving every node with the same fold. `value_bits` declares
/// the message width of any intermediate fold and must fit the bandwidth.
pub fn gather_and_spread(
    g: &Graph,
    cfg: &SimConfig,
    values: &[u64],
    value_bits: u32,
    combine: fn(u64, u64) -> u64,
) -> Result<GatherOutcome, SimError> {
    let n = g.node_count();
    let dist_bits = id_bits(n);
    let out = run_simulation(g, cfg, values.to_vec(), |_id, neighbors, value| {
        GatherNode {
            value,
            value_bits,
            dist_bits,
            combine,
            dist: None,
            dist_round: u64::MAX,
            parent: None,
            heard: vec![false; neighbors.len()],
            heard_count: 0,
            children: Vec::new(),
            acc: value,
            values_received: 0,
            sent_value: false,
            result: None,
        }
    })?;
    Ok(GatherOutcome {
        values: out.outputs,
        stats: out.stats,
        trace: out.trace,
    })
}
