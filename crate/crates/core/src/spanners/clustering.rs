//! Randomized clustering: every node becomes a center with a common
//! probability; a node adjacent to at least one center joins the
//! smallest-id center among them and contributes that edge; a node adjacent
//! to none contributes every edge it touches. Constant rounds.
//!
//! Message schema (2-bit tag, no payload): Center announcement, Join, and
//! Unclustered announcement.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SpannerError;
use crate::congest::{
    mix_seed, run_simulation, Ctx, Message, NodeProgram, RoundStats, SimConfig, Status, TraceRecord,
};
use crate::graph::{EdgeSet, Graph, NodeId};

const TAG_CENTER: u64 = 0;
const TAG_JOIN: u64 = 1;
const TAG_UNCLUSTERED: u64 = 2;

/// Outcome of the clustering phase.
#[derive(Debug, Clone)]
pub struct ClusterState {
    /// Sorted cluster center ids.
    pub centers: Vec<NodeId>,
    /// For each node, the center it joined (centers themselves may join a
    /// neighboring center; a node with no adjacent center stays unclustered).
    pub membership: Vec<Option<NodeId>>,
    /// Every edge contributed by this phase: one edge per clustered node
    /// plus all edges incident to unclustered nodes.
    pub cluster_edges: EdgeSet,
    /// The member-to-center edges only (for phase attribution).
    pub join_edges: EdgeSet,
    /// Sorted members per center, aligned with `centers`.
    pub members: Vec<Vec<NodeId>>,
}

impl ClusterState {
    pub fn is_center(&self, v: NodeId) -> bool {
        self.centers.binary_search(&v).is_ok()
    }

    pub fn members_of(&self, center: NodeId) -> &[NodeId] {
        match self.centers.binary_search(&center) {
            Ok(i) => &self.members[i],
            Err(_) => &[],
        }
    }

    /// Test-support constructor for driving the buying phases with a
    /// hand-picked clustering.
    pub fn from_parts(
        g: &Graph,
        centers: Vec<NodeId>,
        membership: Vec<Option<NodeId>>,
    ) -> ClusterState {
        let mut centers = centers;
        centers.sort_unstable();
        centers.dedup();
        let mut members = vec![Vec::new(); centers.len()];
        let mut join_edges = EdgeSet::new();
        for v in g.nodes() {
            if let Some(c) = membership[v as usize] {
                let i = centers.binary_search(&c).expect("member of a real center");
                members[i].push(v);
                join_edges.insert(v, c);
            }
        }
        let mut cluster_edges = join_edges.clone();
        for v in g.nodes() {
            if membership[v as usize].is_none() {
                for &u in g.neighbors(v) {
                    cluster_edges.insert(v, u);
                }
            }
        }
        ClusterState {
            centers,
            membership,
            cluster_edges,
            join_edges,
            members,
        }
    }
}

struct ClusterNode {
    is_center: bool,
    joined: Option<NodeId>,
    members: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId)>,
}

struct ClusterOutput {
    is_center: bool,
    joined: Option<NodeId>,
    members: Vec<NodeId>,
    edges: Vec<(NodeId, NodeId)>,
}

impl NodeProgram for ClusterNode {
    type Output = ClusterOutput;

    fn init(&mut self, ctx: &mut Ctx<'_>) -> Status {
        if self.is_center {
            let mut m = Message::new();
            m.push(TAG_CENTER, 2);
            ctx.broadcast(m);
        }
        Status::Active
    }

    fn step(&mut self, ctx: &mut Ctx<'_>, inbox: &[(NodeId, Message)]) -> Status {
        if ctx.round() == 1 {
            let id = ctx.id();
            let center = inbox
                .iter()
                .filter(|(_, m)| m.word(0) == TAG_CENTER)
                .map(|(src, _)| *src)
                .min();
            match center {
                Some(c) => {
                    self.joined = Some(c);
                    self.edges.push((id, c));
                    let mut m = Message::new();
                    m.push(TAG_JOIN, 2);
                    ctx.send(c, m);
                }
                None => {
                    for &u in ctx.neighbors() {
                        self.edges.push((id, u));
                    }
                    let mut m = Message::new();
                    m.push(TAG_UNCLUSTERED, 2);
                    ctx.broadcast(m);
                }
            }
            return Status::Active;
        }
        if ctx.round() == 2 {
            for (src, m) in inbox {
                if m.word(0) == TAG_JOIN {
                    self.members.push(*src);
                }
            }
        }
        Status::Idle
    }

    fn finish(self) -> ClusterOutput {
        ClusterOutput {
            is_center: self.is_center,
            joined: self.joined,
            members: self.members,
            edges: self.edges,
        }
    }
}

/// Runs the clustering phase. Each node is a center with probability
/// `center_prob` on its private coin stream; `override_centers` replaces the
/// coins entirely (test hook for degenerate cases).
pub fn clustering_phase(
    g: &Graph,
    cfg: &SimConfig,
    center_prob: f64,
    override_centers: Option<&[bool]>,
) -> Result<(ClusterState, RoundStats, Option<Vec<TraceRecord>>), SpannerError> {
    let n = g.node_count();
    let out = run_simulation(g, cfg, vec![(); n], |id, _, _| {
        let is_center = match override_centers {
            Some(flags) => flags[id as usize],
            // The same coin a node would toss itself: first draw of its
            // private stream.
            None => ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, id as u64))
                .random_bool(center_prob.clamp(0.0, 1.0)),
        };
        ClusterNode {
            is_center,
            joined: None,
            members: Vec::new(),
            edges: Vec::new(),
        }
    })?;

    let mut centers = Vec::new();
    let mut membership = vec![None; n];
    let mut cluster_edges = EdgeSet::new();
    let mut join_edges = EdgeSet::new();
    for (v, o) in out.outputs.iter().enumerate() {
        if o.is_center {
            centers.push(v as NodeId);
        }
        membership[v] = o.joined;
        if o.joined.is_some() {
            let (a, b) = o.edges[0];
            join_edges.insert(a, b);
        }
        for &(a, b) in &o.edges {
            cluster_edges.insert(a, b);
        }
    }
    let mut members = vec![Vec::new(); centers.len()];
    for (i, &c) in centers.iter().enumerate() {
        members[i] = out.outputs[c as usize].members.clone();
        members[i].sort_unstable();
    }
    Ok((
        ClusterState {
            centers,
            membership,
            cluster_edges,
            join_edges,
            members,
        },
        out.stats,
        out.trace,
    ))
}

/// Per-node coin for phase-local sampling, identical to the stream the node
/// would draw inside the executor.
fn local_coin(seed: u64, node: NodeId, p: f64) -> bool {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, node as u64)).random_bool(p.clamp(0.0, 1.0))
}

/// Picks BFS roots among the cluster centers, independently with probability
/// `root_prob`. Pure local coin flips; no communication.
pub fn select_bfs_roots(cluster: &ClusterState, root_prob: f64, seed: u64) -> Vec<NodeId> {
    cluster
        .centers
        .iter()
        .copied()
        .filter(|&c| local_coin(seed, c, root_prob))
        .collect()
}

/// Picks the buying subset A among the cluster centers, independently with
/// probability `a_prob`. Pure local coin flips; no communication.
pub fn select_set_a(cluster: &ClusterState, a_prob: f64, seed: u64) -> Vec<NodeId> {
    cluster
        .centers
        .iter()
        .copied()
        .filter(|&c| local_coin(seed, c, a_prob))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star() -> Graph {
        Graph::from_edges(6, (1..6).map(|v| (0, v as NodeId))).unwrap()
    }

    #[test]
    fn forced_single_center_collects_all_leaves() {
        let g = star();
        let mut flags = vec![false; 6];
        flags[0] = true;
        let (cs, stats, _) = clustering_phase(&g, &SimConfig::new(1), 0.0, Some(&flags)).unwrap();
        assert_eq!(cs.centers, vec![0]);
        for v in 1..6 {
            assert_eq!(cs.membership[v], Some(0));
        }
        // The center has no adjacent center, so it is unclustered and adds
        // all its edges; those coincide with the join edges here.
        assert_eq!(cs.membership[0], None);
        assert_eq!(cs.cluster_edges.len(), 5);
        assert_eq!(cs.members_of(0), &[1, 2, 3, 4, 5]);
        assert!(stats.rounds <= 3, "constant rounds, got {}", stats.rounds);
    }

    #[test]
    fn probability_zero_leaves_everyone_unclustered() {
        let g = star();
        let (cs, _, _) = clustering_phase(&g, &SimConfig::new(1), 0.0, None).unwrap();
        assert!(cs.centers.is_empty());
        assert!(cs.membership.iter().all(Option::is_none));
        // Every edge of the graph enters through its unclustered endpoints.
        assert_eq!(cs.cluster_edges.len(), g.edge_count());
    }

    #[test]
    fn probability_one_makes_everyone_a_center() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let (cs, _, _) = clustering_phase(&g, &SimConfig::new(1), 1.0, None).unwrap();
        assert_eq!(cs.centers, vec![0, 1, 2, 3]);
        // Every node has an adjacent center, so each joins its smallest
        // center neighbor and contributes exactly that edge.
        assert_eq!(cs.membership[0], Some(1));
        assert_eq!(cs.membership[1], Some(0));
        assert_eq!(cs.membership[2], Some(1));
        assert_eq!(cs.membership[3], Some(0));
        assert!(cs.cluster_edges.len() <= 4);
        // Clustered nodes are adjacent to their centers.
        for v in g.nodes() {
            if let Some(c) = cs.membership[v as usize] {
                assert!(g.has_edge(v, c));
            }
        }
    }

    #[test]
    fn unclustered_nodes_contribute_all_incident_edges() {
        // Path 0-1-2-3 with only node 0 a center: 1 joins 0; 2 and 3 are
        // unclustered and contribute edges {1,2} and {2,3}.
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut flags = vec![false; 4];
        flags[0] = true;
        let (cs, _, _) = clustering_phase(&g, &SimConfig::new(1), 0.0, Some(&flags)).unwrap();
        assert_eq!(cs.membership, vec![None, Some(0), None, None]);
        assert!(cs.cluster_edges.contains(0, 1));
        assert!(cs.cluster_edges.contains(1, 2));
        assert!(cs.cluster_edges.contains(2, 3));
        assert_eq!(cs.join_edges.len(), 1);
    }

    #[test]
    fn selection_is_deterministic_and_respects_probability_bounds() {
        let g = star();
        let (cs, _, _) = clustering_phase(&g, &SimConfig::new(9), 1.0, None).unwrap();
        assert_eq!(select_bfs_roots(&cs, 1.0, 5), cs.centers);
        assert!(select_bfs_roots(&cs, 0.0, 5).is_empty());
        assert_eq!(select_bfs_roots(&cs, 0.5, 5), select_bfs_roots(&cs, 0.5, 5));
        let empty = ClusterState::from_parts(&g, vec![], vec![None; 6]);
        assert!(select_bfs_roots(&empty, 1.0, 5).is_empty());
        assert!(select_set_a(&empty, 1.0, 5).is_empty());
    }
}
