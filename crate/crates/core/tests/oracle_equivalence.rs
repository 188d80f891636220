//! Cross-checks of the BFS machinery against an independent brute-force
//! distance oracle, on graphs small enough to afford it.

use spanlab::congest::SimConfig;
use spanlab::graph::{gen_gnp, Graph, NodeId};
use spanlab::spanners::parallel_bfs_phase;
use spanlab::verify::{verify_stretch, CheckPairs};
use spanlab::EdgeSet;

/// Floyd–Warshall over the adjacency matrix: a deliberately different
/// algorithm and code path from the BFS under test.
fn floyd_distances(g: &Graph) -> Vec<Vec<u32>> {
    const INF: u32 = u32::MAX / 4;
    let n = g.node_count();
    let mut d = vec![vec![INF; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for (u, v) in g.edges() {
        d[u as usize][v as usize] = 1;
        d[v as usize][u as usize] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k] == INF {
                continue;
            }
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn assert_bfs_matches_floyd(g: &Graph) {
    let brute = floyd_distances(g);
    for r in g.nodes() {
        let tree = g.bfs(r);
        for v in g.nodes() {
            let expected = brute[r as usize][v as usize];
            match tree.dist[v as usize] {
                Some(d) => assert_eq!(d, expected, "root {r} node {v}"),
                None => assert!(expected >= u32::MAX / 4, "root {r} node {v} reachable"),
            }
        }
    }
}

#[test]
fn bfs_equals_floyd_on_random_graphs() {
    for (n, p, seed) in [
        (20, 0.15, 1u64),
        (60, 0.08, 2),
        (120, 0.04, 3),
        (200, 0.025, 4),
    ] {
        let g = gen_gnp(n, p, seed).unwrap();
        assert_bfs_matches_floyd(&g);
    }
}

#[test]
fn bfs_handles_disconnected_components() {
    // Two separate triangles.
    let g = Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
    assert_bfs_matches_floyd(&g);
    let t = g.bfs(0);
    assert_eq!(t.dist[4], None);
}

#[test]
fn pipelined_bfs_distances_equal_floyd() {
    for seed in 0..4u64 {
        let g = gen_gnp(80, 0.06, 40 + seed).unwrap();
        let brute = floyd_distances(&g);
        let roots: Vec<NodeId> = (0..16).map(|i| (i * 5) % 80).collect();
        let out = parallel_bfs_phase(&g, &SimConfig::new(seed), &roots, None).unwrap();
        for tree in &out.trees {
            for v in g.nodes() {
                assert_eq!(
                    tree.dist[v as usize].unwrap(),
                    brute[tree.root as usize][v as usize]
                );
            }
        }
    }
}

#[test]
fn stretch_checker_distances_equal_floyd() {
    // The checker's oracle is plain BFS; cross-check the distances it acts
    // on by feeding a partial H and recomputing every violation by hand.
    let g = gen_gnp(50, 0.1, 11).unwrap();
    let brute_g = floyd_distances(&g);
    let h_edges: EdgeSet = EdgeSet::from_iter(g.edges().filter(|&(u, v)| (u + v) % 3 != 0));
    let h = Graph::from_edges(g.node_count(), h_edges.iter()).unwrap();
    let brute_h = floyd_distances(&h);

    let report = verify_stretch(&g, &h_edges, CheckPairs::All, 1.0, 1);
    let mut expected = 0;
    for u in 0..g.node_count() {
        for v in u + 1..g.node_count() {
            let dg = brute_g[u][v];
            let dh = brute_h[u][v];
            if dh > dg + 1 {
                expected += 1;
            }
        }
    }
    assert_eq!(report.violations.len(), expected);
    for viol in &report.violations {
        assert_eq!(viol.dist_g, brute_g[viol.u as usize][viol.v as usize]);
        let dh = brute_h[viol.u as usize][viol.v as usize];
        match viol.dist_h {
            Some(d) => assert_eq!(d, dh),
            None => assert!(dh >= u32::MAX / 4),
        }
    }
}
