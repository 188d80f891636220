//! Sequential ground-truth oracles: BFS trees, girth, diameter.
//!
//! These run centrally on the whole graph and are used both inside the
//! algorithms (e.g. to pick deterministic shortest paths) and by the
//! verification layer as the reference the distributed implementations are
//! checked against.

use super::{EdgeSet, Graph, GraphError, NodeId};

/// A rooted BFS tree. Distances are exact hop counts; the parent of a reached
/// non-root node is always its smallest-id neighbor in the previous layer, so
/// "the" shortest path between two nodes is well-defined and reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsTree {
    pub root: NodeId,
    /// Hop distance per node; `None` for unreached nodes.
    pub dist: Vec<Option<u32>>,
    /// Parent per reached node; the root is its own parent.
    pub parent: Vec<Option<NodeId>>,
    /// Per node, the number of tree-path edges absent from the reference
    /// edge set. Present only when the tree was built with a reference.
    pub missing: Option<Vec<u32>>,
}

impl BfsTree {
    pub fn distance(&self, v: NodeId) -> Option<u32> {
        self.dist[v as usize]
    }

    /// The tree path from `root` to `v` (inclusive), or `None` if unreached.
    pub fn path_to(&self, v: NodeId) -> Option<Vec<NodeId>> {
        self.dist[v as usize]?;
        let mut path = vec![v];
        let mut cur = v;
        while cur != self.root {
            cur = self.parent[cur as usize].expect("reached node has a parent");
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

/// BFS from `root`. Parent ties break toward the smallest neighbor id at the
/// previous layer. When `reference` is given, each node also gets the count
/// of tree-path edges missing from it.
pub fn bfs_with_reference(g: &Graph, root: NodeId, reference: Option<&EdgeSet>) -> BfsTree {
    let n = g.node_count();
    let mut dist: Vec<Option<u32>> = vec![None; n];
    let mut order = Vec::with_capacity(n);
    dist[root as usize] = Some(0);
    order.push(root);
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        let du = dist[u as usize].unwrap();
        for &v in g.neighbors(u) {
            if dist[v as usize].is_none() {
                dist[v as usize] = Some(du + 1);
                order.push(v);
            }
        }
    }

    // Second pass so the parent rule is independent of queue order.
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    parent[root as usize] = Some(root);
    for &v in &order {
        if v == root {
            continue;
        }
        let dv = dist[v as usize].unwrap();
        let p = g
            .neighbors(v)
            .iter()
            .copied()
            .find(|&u| dist[u as usize] == Some(dv - 1))
            .expect("non-root reached node has a previous-layer neighbor");
        parent[v as usize] = Some(p);
    }

    let missing = reference.map(|h| {
        let mut miss = vec![0u32; n];
        for &v in &order {
            if v == root {
                continue;
            }
            let p = parent[v as usize].unwrap();
            miss[v as usize] = miss[p as usize] + u32::from(!h.contains(v, p));
        }
        miss
    });

    BfsTree {
        root,
        dist,
        parent,
        missing,
    }
}

/// BFS from `root` without missing-edge counters.
pub fn bfs(g: &Graph, root: NodeId) -> BfsTree {
    bfs_with_reference(g, root, None)
}

impl Graph {
    pub fn bfs(&self, root: NodeId) -> BfsTree {
        bfs(self, root)
    }

    /// Exact hop distances from `root` (`None` where unreached).
    pub fn distances_from(&self, root: NodeId) -> Vec<Option<u32>> {
        bfs(self, root).dist
    }

    /// Exact girth, or `None` for acyclic graphs. Per-root BFS cycle
    /// detection: for each root, any non-tree edge closes a walk of length
    /// `dist(u) + dist(v) + 1`; the minimum over all roots is the girth.
    pub fn girth(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for r in self.nodes() {
            let dist = self.distances_from(r);
            let mut parent: Vec<Option<NodeId>> = vec![None; self.node_count()];
            // Reconstruct one tree to exclude tree edges from closing walks.
            for v in self.nodes() {
                if v == r || dist[v as usize].is_none() {
                    continue;
                }
                let dv = dist[v as usize].unwrap();
                parent[v as usize] = self
                    .neighbors(v)
                    .iter()
                    .copied()
                    .find(|&u| dist[u as usize] == Some(dv - 1));
            }
            for (u, v) in self.edges() {
                if parent[u as usize] == Some(v) || parent[v as usize] == Some(u) {
                    continue;
                }
                if let (Some(du), Some(dv)) = (dist[u as usize], dist[v as usize]) {
                    let walk = du as usize + dv as usize + 1;
                    if best.is_none_or(|b| walk < b) {
                        best = Some(walk);
                    }
                }
            }
        }
        best
    }

    /// Exact diameter. Errors on disconnected graphs.
    pub fn diameter(&self) -> Result<usize, GraphError> {
        let mut diam = 0usize;
        for r in self.nodes() {
            for d in self.distances_from(r) {
                match d {
                    Some(d) => diam = diam.max(d as usize),
                    None => return Err(GraphError::Disconnected),
                }
            }
        }
        Ok(diam)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen::build_projective_incidence;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (0..n - 1).map(|i| (i as NodeId, i as NodeId + 1))).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i as NodeId, ((i + 1) % n) as NodeId))).unwrap()
    }

    #[test]
    fn bfs_on_path() {
        let t = path(3).bfs(0);
        assert_eq!(t.dist, vec![Some(0), Some(1), Some(2)]);
        assert_eq!(t.parent, vec![Some(0), Some(0), Some(1)]);
    }

    #[test]
    fn bfs_on_star() {
        let g = Graph::from_edges(6, (1..6).map(|v| (0, v as NodeId))).unwrap();
        let t = g.bfs(0);
        for v in 1..6 {
            assert_eq!(t.dist[v], Some(1));
        }
    }

    #[test]
    fn bfs_on_fano_incidence_has_depth_three() {
        let g = build_projective_incidence(2).unwrap();
        assert_eq!(g.node_count(), 14);
        for r in g.nodes() {
            let max = g
                .distances_from(r)
                .into_iter()
                .map(|d| d.unwrap())
                .max()
                .unwrap();
            assert_eq!(max, 3);
        }
    }

    #[test]
    fn bfs_parent_prefers_smallest_id() {
        // 0-1, 0-2, 1-3, 2-3: node 3 is at distance 2 with both 1 and 2 in
        // the previous layer; the canonical parent is 1.
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let t = g.bfs(0);
        assert_eq!(t.parent[3], Some(1));
        assert_eq!(t.path_to(3).unwrap(), vec![0, 1, 3]);
    }

    #[test]
    fn bfs_marks_unreached() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let t = g.bfs(0);
        assert_eq!(t.dist[2], None);
        assert_eq!(t.path_to(2), None);
    }

    #[test]
    fn missing_counts_accumulate_along_tree_paths() {
        let g = path(4);
        let mut h = EdgeSet::new();
        h.insert(1, 2);
        let t = bfs_with_reference(&g, 0, Some(&h));
        assert_eq!(t.missing.as_ref().unwrap(), &vec![0, 1, 1, 2]);
        // An empty reference makes every tree edge missing.
        let t = bfs_with_reference(&g, 0, Some(&EdgeSet::new()));
        let miss = t.missing.unwrap();
        for v in g.nodes() {
            assert_eq!(miss[v as usize], t.dist[v as usize].unwrap());
        }
    }

    #[test]
    fn girth_of_small_graphs() {
        let tri = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(tri.girth(), Some(3));
        assert_eq!(cycle(5).girth(), Some(5));
        assert_eq!(path(5).girth(), None);
        assert_eq!(build_projective_incidence(2).unwrap().girth(), Some(6));
    }

    #[test]
    fn diameter_of_small_graphs() {
        assert_eq!(path(4).diameter().unwrap(), 3);
        let k5 = Graph::from_edges(
            5,
            (0..5).flat_map(|u| (u + 1..5).map(move |v| (u as NodeId, v as NodeId))),
        )
        .unwrap();
        assert_eq!(k5.diameter().unwrap(), 1);
        let disconnected = Graph::from_edges(3, [(0, 1)]).unwrap();
        assert!(disconnected.diameter().is_err());
    }
}
