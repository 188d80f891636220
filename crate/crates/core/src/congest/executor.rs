//! The round loop: init, step, deliver, account, detect quiescence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{mix_seed, Message, RoundStats, SimConfig, SimError, TraceRecord};
use crate::graph::{Graph, NodeId};

/// What a node reports at the end of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// The node may act spontaneously in a later round; keep stepping it.
    Active,
    /// The node has nothing to do unless a message arrives. The simulation
    /// ends once every node is idle and no messages are in flight.
    Idle,
}

/// Behavior of a single node. One instance exists per node; it sees only its
/// local context and inbox. Construction happens outside (so programs can
/// own per-node inputs); `init` runs before round 1 and may already send,
/// `step` runs once per round, and `finish` extracts the local output after
/// the run ends.
pub trait NodeProgram {
    type Output;

    fn init(&mut self, ctx: &mut Ctx<'_>) -> Status;

    fn step(&mut self, ctx: &mut Ctx<'_>, inbox: &[(NodeId, Message)]) -> Status;

    fn finish(self) -> Self::Output;
}

/// Per-node view offered to a program: identity, neighborhood, a private RNG
/// stream, and outgoing message slots for the current round.
pub struct Ctx<'a> {
    id: NodeId,
    n: usize,
    round: u64,
    neighbors: &'a [NodeId],
    rng: &'a mut ChaCha8Rng,
    outbox: &'a mut Vec<(NodeId, Message)>,
}

impl<'a> Ctx<'a> {
    pub fn id(&self) -> NodeId {
        self.id
    }

    /// Number of nodes in the network (global knowledge in the model).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Current round; 0 during `init`.
    pub fn round(&self) -> u64 {
        self.round
    }

    /// Sorted ids of the adjacent nodes.
    pub fn neighbors(&self) -> &[NodeId] {
        self.neighbors
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        self.rng
    }

    /// Queues a message to a neighbor for delivery next round. At most one
    /// message per neighbor per round.
    pub fn send(&mut self, to: NodeId, msg: Message) {
        debug_assert!(
            self.neighbors.binary_search(&to).is_ok(),
            "node {} tried to message non-neighbor {}",
            self.id,
            to
        );
        debug_assert!(
            !self.outbox.iter().any(|(t, _)| *t == to),
            "node {} sent two messages to {} in one round",
            self.id,
            to
        );
        self.outbox.push((to, msg));
    }

    /// Sends the same message to every neighbor.
    pub fn broadcast(&mut self, msg: Message) {
        for i in 0..self.neighbors.len() {
            let to = self.neighbors[i];
            self.outbox.push((to, msg.clone()));
        }
    }
}

/// Result of a completed simulation.
#[derive(Debug)]
pub struct SimOutcome<O> {
    pub outputs: Vec<O>,
    pub stats: RoundStats,
    pub trace: Option<Vec<TraceRecord>>,
}

impl<O> SimOutcome<O> {
    /// Bits that crossed the node partition, from the recorded trace.
    /// Requires the run to have been traced.
    pub fn cut_bits(&self, side: &[bool]) -> Result<u64, SimError> {
        match &self.trace {
            Some(t) => Ok(super::account_cut_bits(t, side)),
            None => Err(SimError::TraceMissing),
        }
    }
}

/// Runs a synchronous simulation of `program` instances over `g`.
///
/// `make(id, neighbors, input)` builds each node. All in-flight messages are
/// delivered exactly one round after sending, inboxes arrive sorted by
/// sender id, and nodes step in id order, so runs are bit-identical given
/// identical arguments. The run ends when every node is idle and nothing is
/// in flight, or errs when `max_rounds` is exceeded or a message breaks the
/// bandwidth limit.
pub fn run_simulation<P, I, F>(
    g: &Graph,
    cfg: &SimConfig,
    inputs: Vec<I>,
    mut make: F,
) -> Result<SimOutcome<P::Output>, SimError>
where
    P: NodeProgram,
    F: FnMut(NodeId, &[NodeId], I) -> P,
{
    let n = g.node_count();
    assert_eq!(inputs.len(), n, "one input per node");
    assert!(
        cfg.bandwidth_multiplier >= 1,
        "bandwidth multiplier must be positive"
    );
    assert!(cfg.max_rounds >= 1, "round cutoff must be positive");
    let bandwidth = cfg.bandwidth_bits(n);

    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|v| ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, v as u64)))
        .collect();
    let mut nodes: Vec<P> = inputs
        .into_iter()
        .enumerate()
        .map(|(v, input)| make(v as NodeId, g.neighbors(v as NodeId), input))
        .collect();

    let mut stats = RoundStats::default();
    let mut trace = cfg.trace.then(Vec::new);
    let mut statuses = vec![Status::Active; n];

    // inboxes[v] holds messages to deliver to v at the start of the current
    // round; outboxes are gathered into `pending` during the round.
    let mut inboxes: Vec<Vec<(NodeId, Message)>> = vec![Vec::new(); n];
    let mut pending: Vec<Vec<(NodeId, Message)>> = vec![Vec::new(); n];
    let mut outbox: Vec<(NodeId, Message)> = Vec::new();
    let mut in_flight = 0u64;

    let drain_outbox = |from: NodeId,
                        round: u64,
                        outbox: &mut Vec<(NodeId, Message)>,
                        pending: &mut Vec<Vec<(NodeId, Message)>>,
                        stats: &mut RoundStats,
                        in_flight: &mut u64|
     -> Result<(), SimError> {
        for (to, msg) in outbox.drain(..) {
            let bits = msg.total_bits();
            if bits > bandwidth {
                return Err(SimError::Bandwidth {
                    node: from,
                    round,
                    bits,
                    limit: bandwidth,
                });
            }
            stats.messages_sent += 1;
            stats.total_bits += bits as u64;
            stats.max_message_bits = stats.max_message_bits.max(bits);
            *in_flight += 1;
            pending[to as usize].push((from, msg));
        }
        Ok(())
    };

    // Round 0: init. Messages sent here are delivered in round 1.
    for v in 0..n {
        let mut ctx = Ctx {
            id: v as NodeId,
            n,
            round: 0,
            neighbors: g.neighbors(v as NodeId),
            rng: &mut rngs[v],
            outbox: &mut outbox,
        };
        statuses[v] = nodes[v].init(&mut ctx);
        drain_outbox(
            v as NodeId,
            0,
            &mut outbox,
            &mut pending,
            &mut stats,
            &mut in_flight,
        )?;
    }

    loop {
        let all_idle = statuses.iter().all(|s| *s == Status::Idle);
        if all_idle && in_flight == 0 {
            break;
        }
        if stats.rounds >= cfg.max_rounds {
            return Err(SimError::Timeout {
                max_rounds: cfg.max_rounds,
                partial: stats,
            });
        }
        let round = stats.rounds + 1;

        // Deliver: everything sent last round becomes this round's inboxes.
        // Senders drained in id order, so inboxes are already sender-sorted.
        std::mem::swap(&mut inboxes, &mut pending);
        in_flight = 0;
        for (v, inbox) in inboxes.iter_mut().enumerate() {
            debug_assert!(inbox.windows(2).all(|w| w[0].0 <= w[1].0));
            if let Some(t) = trace.as_mut() {
                for (src, msg) in inbox.iter() {
                    t.push(TraceRecord {
                        round,
                        src: *src,
                        dst: v as NodeId,
                        bits: msg.total_bits(),
                    });
                }
            }
        }

        for v in 0..n {
            let mut ctx = Ctx {
                id: v as NodeId,
                n,
                round,
                neighbors: g.neighbors(v as NodeId),
                rng: &mut rngs[v],
                outbox: &mut outbox,
            };
            statuses[v] = nodes[v].step(&mut ctx, &inboxes[v]);
            inboxes[v].clear();
            drain_outbox(
                v as NodeId,
                round,
                &mut outbox,
                &mut pending,
                &mut stats,
                &mut in_flight,
            )?;
        }
        stats.rounds = round;
    }

    Ok(SimOutcome {
        outputs: nodes.into_iter().map(NodeProgram::finish).collect(),
        stats,
        trace,
    })
}
