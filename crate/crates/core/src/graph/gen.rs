//! Deterministic graph generators: Erdős–Rényi samples, projective-plane
//! point-line incidence graphs, and the pendant-augmented families used by
//! the communication lower bound. All generators are pure functions of their
//! parameters and seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Graph, GraphError, NodeId};

/// Reseed attempts before giving up on a connected G(n,p) sample.
const GNP_RETRIES: u32 = 16;

/// Erdős–Rényi G(n, p), resampled with `seed+1, seed+2, ...` until connected
/// (all algorithms and the diameter are defined on connected graphs).
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    assert!((0.0..=1.0).contains(&p), "p must be a probability");
    for attempt in 0..GNP_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let mut edges = Vec::new();
        for u in 0..n as NodeId {
            for v in u + 1..n as NodeId {
                if rng.random_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        let g = Graph::from_edges(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::ConnectivityRetries(GNP_RETRIES))
}

fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Canonical representatives of the 1-dimensional subspaces of GF(q)^3:
/// (1, a, b), (0, 1, a), (0, 0, 1). There are q^2 + q + 1 of them.
fn projective_points(q: u64) -> Vec<[u64; 3]> {
    let mut pts = Vec::with_capacity((q * q + q + 1) as usize);
    for a in 0..q {
        for b in 0..q {
            pts.push([1, a, b]);
        }
    }
    for a in 0..q {
        pts.push([0, 1, a]);
    }
    pts.push([0, 0, 1]);
    pts
}

/// Point-line incidence graph of the projective plane PG(2, q), for prime q.
///
/// Nodes `0..N` are points and `N..2N` are lines, `N = q^2 + q + 1`;
/// a point lies on a line iff the dot product of their coordinate vectors
/// vanishes mod q. Every node has degree q + 1; the graph has girth 6 and
/// diameter 3, which is exactly what makes single edges irreplaceable under
/// additive stretch 2.
pub fn build_projective_incidence(q: u64) -> Result<Graph, GraphError> {
    if !is_prime(q) {
        return Err(GraphError::NotPrime(q));
    }
    let pts = projective_points(q);
    let n_side = pts.len();
    let mut edges = Vec::with_capacity(n_side * (q as usize + 1));
    for (pi, p) in pts.iter().enumerate() {
        for (li, l) in pts.iter().enumerate() {
            let dot = (p[0] * l[0] + p[1] * l[1] + p[2] * l[2]) % q;
            if dot == 0 {
                edges.push((pi as NodeId, (n_side + li) as NodeId));
            }
        }
    }
    Graph::from_edges(2 * n_side, edges)
}

/// Correspondence between the nodes of a base graph and the degree-1 pendant
/// nodes attached to them. Pendants form the "Alice" side of the two-party
/// cut; everything else (base nodes, and for the general construction the
/// apex and its connecting paths) belongs to "Bob".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendantMap {
    base_count: usize,
    first_pendant: NodeId,
}

impl PendantMap {
    pub fn base_count(&self) -> usize {
        self.base_count
    }

    /// The pendant attached to base node `v`.
    pub fn pendant_of(&self, v: NodeId) -> NodeId {
        assert!((v as usize) < self.base_count);
        self.first_pendant + v
    }

    /// The base node a pendant hangs off, or `None` for non-pendants.
    pub fn base_of(&self, v: NodeId) -> Option<NodeId> {
        (v >= self.first_pendant).then(|| v - self.first_pendant)
    }

    /// True for pendant nodes (the side simulated by Alice in the two-party
    /// reduction).
    pub fn is_alice(&self, v: NodeId) -> bool {
        v >= self.first_pendant
    }

    pub fn pendants(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.base_count as NodeId).map(|v| self.first_pendant + v)
    }
}

/// The lower-bound graph for additive stretch 2: the PG(2, q) incidence
/// graph plus one pendant node per incidence node, attached by a single
/// edge. For any incidence edge `{u', w'}` the pendant pair `(u, w)` is at
/// distance 3, and removing that one edge stretches it to 7.
pub fn build_lowerbound_graph(q: u64) -> Result<(Graph, PendantMap), GraphError> {
    let base = build_projective_incidence(q)?;
    let nb = base.node_count();
    let mut edges: Vec<(NodeId, NodeId)> = base.edges().collect();
    for v in 0..nb as NodeId {
        edges.push((v, nb as NodeId + v));
    }
    let g = Graph::from_edges(2 * nb, edges)?;
    Ok((
        g,
        PendantMap {
            base_count: nb,
            first_pendant: nb as NodeId,
        },
    ))
}

/// The generalized lower-bound graph for (alpha, beta) stretch, built over an
/// arbitrary base of girth at least `g = 3*alpha + beta`: an apex node joined
/// to every base node by a disjoint path of `floor(g/2)` fresh internal
/// nodes, plus one pendant per base node. The apex paths cap the diameter at
/// O(g) without shortening any base cycle.
///
/// Node layout: base `0..n'`, apex `n'`, then the path interiors, then the
/// pendants.
pub fn build_general_lowerbound_graph(
    alpha: usize,
    beta: usize,
    base: &Graph,
) -> Result<(Graph, PendantMap), GraphError> {
    assert!(alpha >= 1, "alpha must be at least 1");
    let g_required = 3 * alpha + beta;
    let girth = base.girth().unwrap_or(usize::MAX);
    if girth < g_required {
        return Err(GraphError::GirthTooSmall {
            girth,
            required: g_required,
        });
    }

    let nb = base.node_count();
    let path_len = g_required / 2;
    let apex = nb as NodeId;
    let first_path = nb + 1;
    let first_pendant = (first_path + nb * path_len) as NodeId;
    let total = first_pendant as usize + nb;

    let mut edges: Vec<(NodeId, NodeId)> = base.edges().collect();
    for v in 0..nb {
        let start = (first_path + v * path_len) as NodeId;
        if path_len == 0 {
            edges.push((v as NodeId, apex));
        } else {
            edges.push((v as NodeId, start));
            for j in 0..path_len - 1 {
                edges.push((start + j as NodeId, start + j as NodeId + 1));
            }
            edges.push((start + path_len as NodeId - 1, apex));
        }
        edges.push((v as NodeId, first_pendant + v as NodeId));
    }
    let g = Graph::from_edges(total, edges)?;
    Ok((
        g,
        PendantMap {
            base_count: nb,
            first_pendant,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gnp_with_p_one_is_complete() {
        let g = gen_gnp(5, 1.0, 42).unwrap();
        assert_eq!(g.edge_count(), 10);
    }

    #[test]
    fn gnp_with_p_zero_fails_connectivity() {
        assert!(matches!(
            gen_gnp(5, 0.0, 42),
            Err(GraphError::ConnectivityRetries(_))
        ));
    }

    #[test]
    fn gnp_is_deterministic() {
        let a = gen_gnp(100, 0.1, 7).unwrap();
        let b = gen_gnp(100, 0.1, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.is_connected());
    }

    #[test]
    fn fano_incidence_counts() {
        let g = build_projective_incidence(2).unwrap();
        assert_eq!(g.node_count(), 14);
        assert_eq!(g.edge_count(), 21);
        for v in g.nodes() {
            assert_eq!(g.degree(v), 3);
        }
        assert_eq!(g.girth(), Some(6));
        assert_eq!(g.diameter().unwrap(), 3);
    }

    #[test]
    fn order_three_incidence_counts() {
        let g = build_projective_incidence(3).unwrap();
        assert_eq!(g.node_count(), 26);
        assert_eq!(g.edge_count(), 52);
        for v in g.nodes() {
            assert_eq!(g.degree(v), 4);
        }
    }

    #[test]
    fn incidence_graph_is_bipartite_with_expected_sides() {
        // Independent enumeration oracle: count 1-dim subspaces of GF(q)^3
        // by brute force over all nonzero vectors, and check incidences per
        // line by brute force too.
        for q in [2u64, 3] {
            let mut reps: Vec<[u64; 3]> = Vec::new();
            for x in 0..q {
                for y in 0..q {
                    for z in 0..q {
                        if (x, y, z) == (0, 0, 0) {
                            continue;
                        }
                        let mut canonical = true;
                        for s in 2..q {
                            let scaled = [(s * x) % q, (s * y) % q, (s * z) % q];
                            if scaled < [x, y, z] {
                                canonical = false;
                                break;
                            }
                        }
                        if canonical {
                            reps.push([x, y, z]);
                        }
                    }
                }
            }
            let n_side = (q * q + q + 1) as usize;
            assert_eq!(reps.len(), n_side);

            let g = build_projective_incidence(q).unwrap();
            assert_eq!(g.node_count(), 2 * n_side);
            assert_eq!(g.edge_count(), (q as usize + 1) * n_side);
            // Bipartite: every edge joins a point node to a line node.
            for (u, v) in g.edges() {
                assert!((u as usize) < n_side && (v as usize) >= n_side);
            }
        }
    }

    #[test]
    fn non_prime_order_rejected() {
        assert!(matches!(
            build_projective_incidence(4),
            Err(GraphError::NotPrime(4))
        ));
        assert!(matches!(
            build_lowerbound_graph(6),
            Err(GraphError::NotPrime(6))
        ));
    }

    #[test]
    fn lowerbound_graph_counts_and_pendants() {
        let (g, map) = build_lowerbound_graph(2).unwrap();
        assert_eq!(g.node_count(), 28);
        assert_eq!(g.edge_count(), 35);
        for v in map.pendants() {
            assert_eq!(g.degree(v), 1);
            assert_eq!(map.base_of(v), Some(v - 14));
            assert!(map.is_alice(v));
        }
        assert!(!map.is_alice(3));
        assert_eq!(map.pendant_of(3), 17);
    }

    #[test]
    fn lowerbound_graph_diameter() {
        // Pendant to pendant through the incidence graph: 1 + 3 + 1 hops,
        // confirmed by the brute-force all-pairs oracle on all 28 nodes.
        let (g, _) = build_lowerbound_graph(2).unwrap();
        assert_eq!(g.diameter().unwrap(), 5);
    }

    #[test]
    fn lowerbound_pairs_sit_at_distance_three_and_stretch_to_seven() {
        for q in [2u64, 3] {
            let (g, map) = build_lowerbound_graph(q).unwrap();
            let base = build_projective_incidence(q).unwrap();
            for (u, v) in base.edges() {
                let (pu, pv) = (map.pendant_of(u), map.pendant_of(v));
                let d = g.distances_from(pu)[pv as usize].unwrap();
                assert_eq!(d, 3);
                let cut = g.without_edge(u, v);
                let d = cut.distances_from(pu)[pv as usize].unwrap();
                assert_eq!(d, 7);
            }
        }
    }

    #[test]
    fn general_lowerbound_graph_layout() {
        let base = build_projective_incidence(2).unwrap();
        // alpha=1, beta=2 gives girth requirement 5 and paths of 2 interior
        // nodes: 14 base + 1 apex + 28 path + 14 pendants = 57 nodes.
        let (g, map) = build_general_lowerbound_graph(1, 2, &base).unwrap();
        assert_eq!(g.node_count(), 57);
        assert_eq!(g.edge_count(), 21 + 14 * 3 + 14);
        assert_eq!(g.girth(), base.girth());
        // Every node is within floor(g/2)+1 hops of the apex, plus one
        // pendant hop; brute-force diameter confirms the cap.
        assert!(g.diameter().unwrap() <= 2 * (5 / 2 + 1));
        for v in map.pendants() {
            assert_eq!(g.degree(v), 1);
        }
    }

    #[test]
    fn general_lowerbound_graph_checks_base_girth() {
        let base = build_projective_incidence(2).unwrap(); // girth 6
        assert!(matches!(
            build_general_lowerbound_graph(2, 1, &base), // requires girth 7
            Err(GraphError::GirthTooSmall {
                girth: 6,
                required: 7
            })
        ));
    }
}
