//! Ground-truth validation of spanner outputs: subgraph checks, additive
//! stretch against the sequential BFS oracle, and edge/round budget reports
//! in the shape of the constructions' guarantees.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::congest::RoundStats;
use crate::graph::{EdgeSet, Graph, NodeId, PairSet};
use crate::spanners::Algorithm;

/// True iff every edge of `h_edges` exists in `g`.
pub fn verify_subgraph(g: &Graph, h_edges: &EdgeSet) -> bool {
    h_edges.is_subgraph_of(g)
}

/// Which pairs a stretch check covers.
#[derive(Debug, Clone)]
pub enum CheckPairs<'a> {
    /// Every unordered node pair.
    All,
    /// Every (source, node) pair.
    SourceToAll(&'a [NodeId]),
    /// Every unordered pair within the subset.
    Among(&'a [NodeId]),
    /// An explicit pair set.
    Pairs(&'a PairSet),
    /// `count` random pairs (for graphs too large for the full oracle);
    /// reports are labeled as sampled.
    Sample { count: usize, seed: u64 },
}

/// One stretch violation: the pair, its true distance, and its distance in
/// H (`None` when the pair is disconnected in H).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub u: NodeId,
    pub v: NodeId,
    pub dist_g: u32,
    pub dist_h: Option<u32>,
}

/// Outcome of a stretch check over a set of required pairs.
#[derive(Debug, Clone, Serialize)]
pub struct StretchReport {
    pub checked_pairs: usize,
    /// Maximum of dist_H - dist_G over the checked pairs; `i64::MAX` when
    /// some pair is disconnected in H.
    pub max_additive_excess: i64,
    pub violations: Vec<Violation>,
    pub bound_alpha: f64,
    pub bound_beta: u32,
    /// True when only a random sample of pairs was checked.
    pub sampled: bool,
}

impl StretchReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

struct StretchOracle<'a> {
    g: &'a Graph,
    h: Graph,
    g_trees: BTreeMap<NodeId, Vec<Option<u32>>>,
    h_trees: BTreeMap<NodeId, Vec<Option<u32>>>,
}

impl<'a> StretchOracle<'a> {
    fn new(g: &'a Graph, h_edges: &EdgeSet) -> StretchOracle<'a> {
        let h = Graph::from_edges(g.node_count(), h_edges.iter())
            .expect("H is a subgraph over the same nodes");
        StretchOracle {
            g,
            h,
            g_trees: BTreeMap::new(),
            h_trees: BTreeMap::new(),
        }
    }

    fn distances(&mut self, root: NodeId) -> (&[Option<u32>], &[Option<u32>]) {
        let g = self.g;
        let h = &self.h;
        let gd = self
            .g_trees
            .entry(root)
            .or_insert_with(|| g.distances_from(root));
        let hd = self
            .h_trees
            .entry(root)
            .or_insert_with(|| h.distances_from(root));
        (gd, hd)
    }
}

/// Checks `dist_H <= alpha * dist_G + beta` for the requested pairs, with
/// distances measured by BFS from each distinct endpoint (once). Pairs that
/// H disconnects always violate a finite bound.
pub fn verify_stretch(
    g: &Graph,
    h_edges: &EdgeSet,
    pairs: CheckPairs<'_>,
    alpha: f64,
    beta: u32,
) -> StretchReport {
    let n = g.node_count();
    let mut oracle = StretchOracle::new(g, h_edges);
    let mut report = StretchReport {
        checked_pairs: 0,
        max_additive_excess: 0,
        violations: Vec::new(),
        bound_alpha: alpha,
        bound_beta: beta,
        sampled: matches!(pairs, CheckPairs::Sample { .. }),
    };

    let check_from = |oracle: &mut StretchOracle,
                      u: NodeId,
                      targets: &mut dyn Iterator<Item = NodeId>,
                      report: &mut StretchReport| {
        let (gd, hd) = oracle.distances(u);
        for v in targets {
            if v == u {
                continue;
            }
            let Some(dg) = gd[v as usize] else { continue };
            let dh = hd[v as usize];
            report.checked_pairs += 1;
            let excess = match dh {
                Some(dh) => dh as i64 - dg as i64,
                None => i64::MAX,
            };
            report.max_additive_excess = report.max_additive_excess.max(excess);
            let violated = match dh {
                Some(dh) => dh as f64 > alpha * dg as f64 + beta as f64,
                None => true,
            };
            if violated {
                report.violations.push(Violation {
                    u: u.min(v),
                    v: u.max(v),
                    dist_g: dg,
                    dist_h: dh,
                });
            }
        }
    };

    match pairs {
        CheckPairs::All => {
            for u in 0..n as NodeId {
                check_from(&mut oracle, u, &mut (u + 1..n as NodeId), &mut report);
            }
        }
        CheckPairs::SourceToAll(sources) => {
            let mut sorted: Vec<NodeId> = sources.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            for (i, &s) in sorted.iter().enumerate() {
                // Count source-source pairs once.
                let later_sources = &sorted[..i];
                let mut targets = (0..n as NodeId).filter(|v| !later_sources.contains(v));
                check_from(&mut oracle, s, &mut targets, &mut report);
            }
        }
        CheckPairs::Among(subset) => {
            let mut sorted: Vec<NodeId> = subset.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            for (i, &s) in sorted.iter().enumerate() {
                let rest = sorted[i + 1..].to_vec();
                check_from(&mut oracle, s, &mut rest.into_iter(), &mut report);
            }
        }
        CheckPairs::Pairs(p) => {
            for (u, v) in p.iter() {
                check_from(&mut oracle, u, &mut std::iter::once(v), &mut report);
            }
        }
        CheckPairs::Sample { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..count {
                let u = rng.random_range(0..n as NodeId);
                let v = rng.random_range(0..n as NodeId);
                if u != v {
                    check_from(&mut oracle, u, &mut std::iter::once(v), &mut report);
                }
            }
        }
    }
    report
}

/// Input-size facts a report formula may need.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputSize {
    None,
    Sources { count: usize },
    Pairs { count: usize, tau: usize },
}

impl InputSize {
    fn source_count(&self) -> usize {
        match self {
            InputSize::Sources { count } => *count,
            _ => panic!("algorithm needs a source count"),
        }
    }

    fn pair_count(&self) -> usize {
        match self {
            InputSize::Pairs { count, .. } => *count,
            _ => panic!("algorithm needs a pair count"),
        }
    }

    /// The driving parameter recorded in report rows.
    pub fn param(&self) -> usize {
        match self {
            InputSize::None => 0,
            InputSize::Sources { count } => *count,
            InputSize::Pairs { count, .. } => *count,
        }
    }
}

fn ln_n(n: usize) -> f64 {
    (n.max(2) as f64).ln()
}

/// The constant-free edge-budget expression each construction promises
/// (natural log throughout).
pub fn size_bound_formula(algorithm: Algorithm, n: usize, input: InputSize) -> f64 {
    let nf = n as f64;
    let ln = ln_n(n);
    match algorithm {
        Algorithm::TwoS => nf.powf(1.25) * (input.source_count() as f64).powf(0.25) * ln.powf(0.75),
        Algorithm::TwoP => nf * (input.pair_count() as f64).powf(1.0 / 3.0) * ln.powf(2.0 / 3.0),
        Algorithm::FourP => nf * (input.pair_count() as f64).powf(2.0 / 7.0) * ln.powf(6.0 / 7.0),
        Algorithm::FourAp => nf.powf(1.4) * ln.powf(0.8),
        Algorithm::EightAp => nf.powf(15.0 / 11.0) * ln.powf(10.0 / 11.0),
        Algorithm::Sub2 => {
            let s = input.source_count() as f64;
            let pairwise = nf * s.powf(2.0 / 3.0) * ln.powf(2.0 / 3.0);
            let sourcewise = nf.powf(1.25) * s.powf(0.25) * ln.powf(0.75);
            pairwise.min(sourcewise)
        }
        Algorithm::Sub4 => {
            let s = input.source_count() as f64;
            let pairwise = nf * s.powf(4.0 / 7.0) * ln.powf(6.0 / 7.0);
            let all_pairs = nf.powf(1.4) * ln.powf(0.8);
            pairwise.min(all_pairs)
        }
    }
}

/// The round-budget argument each construction promises.
pub fn round_bound_argument(
    algorithm: Algorithm,
    n: usize,
    input: InputSize,
    diameter: usize,
) -> f64 {
    let nf = n as f64;
    let ln = ln_n(n);
    let d = diameter as f64;
    match algorithm {
        Algorithm::TwoS | Algorithm::Sub2 | Algorithm::Sub4 => input.source_count() as f64 + d,
        Algorithm::TwoP | Algorithm::FourP => match input {
            InputSize::Pairs { tau, .. } => tau as f64 + d,
            _ => panic!("pairwise algorithms need tau"),
        },
        Algorithm::FourAp => nf.powf(0.6) * ln.powf(0.2) + d,
        Algorithm::EightAp => nf.powf(7.0 / 11.0) * ln.powf(1.0 / 11.0) + d,
    }
}

/// Edge count against the constant-free budget expression.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SizeReport {
    pub edge_count: usize,
    pub bound_formula_value: f64,
    pub ratio: f64,
}

pub fn size_report(
    algorithm: Algorithm,
    n: usize,
    input: InputSize,
    edge_count: usize,
) -> SizeReport {
    let bound = size_bound_formula(algorithm, n, input);
    SizeReport {
        edge_count,
        bound_formula_value: bound,
        ratio: edge_count as f64 / bound,
    }
}

/// Measured rounds against the promised round argument.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RoundReport {
    pub rounds: u64,
    pub bound_argument: f64,
    pub ratio: f64,
}

pub fn round_report(
    stats: &RoundStats,
    algorithm: Algorithm,
    n: usize,
    input: InputSize,
    diameter: usize,
) -> RoundReport {
    let arg = round_bound_argument(algorithm, n, input, diameter);
    RoundReport {
        rounds: stats.rounds,
        bound_argument: arg,
        ratio: stats.rounds as f64 / arg,
    }
}

/// One experiment row. Serializes to the CSV schema
/// `algo,n,D,param,edges,ratio_size,rounds,ratio_rounds,max_excess,violations`.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub algo: String,
    pub n: usize,
    pub diameter: usize,
    pub param: usize,
    pub edges: usize,
    pub ratio_size: f64,
    pub rounds: u64,
    pub ratio_rounds: f64,
    pub max_excess: i64,
    pub violations: usize,
}

impl ReportRow {
    pub const CSV_HEADER: &'static str =
        "algo,n,D,param,edges,ratio_size,rounds,ratio_rounds,max_excess,violations";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6},{},{:.6},{},{}",
            self.algo,
            self.n,
            self.diameter,
            self.param,
            self.edges,
            self.ratio_size,
            self.rounds,
            self.ratio_rounds,
            self.max_excess,
            self.violations
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_lowerbound_graph, build_projective_incidence};

    fn k4() -> Graph {
        Graph::from_edges(
            4,
            (0..4).flat_map(|u| (u + 1..4).map(move |v| (u as NodeId, v as NodeId))),
        )
        .unwrap()
    }

    fn full_edge_set(g: &Graph) -> EdgeSet {
        EdgeSet::from_iter(g.edges())
    }

    #[test]
    fn subgraph_check() {
        let g = k4();
        assert!(verify_subgraph(&g, &EdgeSet::new()));
        assert!(verify_subgraph(&g, &full_edge_set(&g)));
        let mut bogus = EdgeSet::new();
        bogus.insert(0, 1);
        let path = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        bogus.insert(0, 3);
        assert!(!verify_subgraph(&path, &bogus));
    }

    #[test]
    fn identity_spanner_never_violates() {
        let g = k4();
        let report = verify_stretch(&g, &full_edge_set(&g), CheckPairs::All, 1.0, 0);
        assert!(report.ok());
        assert_eq!(report.max_additive_excess, 0);
        assert_eq!(report.checked_pairs, 6);
    }

    #[test]
    fn empty_spanner_violates_every_finite_pair() {
        let g = k4();
        let report = verify_stretch(&g, &EdgeSet::new(), CheckPairs::All, 1.0, 0);
        assert_eq!(report.violations.len(), 6);
        assert_eq!(report.max_additive_excess, i64::MAX);
        assert!(report.violations.iter().all(|v| v.dist_h.is_none()));
    }

    #[test]
    fn missing_incidence_edge_shows_the_three_to_seven_stretch() {
        let (g, map) = build_lowerbound_graph(2).unwrap();
        let base = build_projective_incidence(2).unwrap();
        let (u, v) = base.edges().next().unwrap();
        let mut h = full_edge_set(&g);
        let h = {
            let mut keep = EdgeSet::new();
            for (a, b) in h.iter() {
                if (a, b) != (u.min(v), u.max(v)) {
                    keep.insert(a, b);
                }
            }
            h = keep;
            h
        };
        let pair = PairSet::new([(map.pendant_of(u), map.pendant_of(v))]);
        let report = verify_stretch(&g, &h, CheckPairs::Pairs(&pair), 1.0, 2);
        assert_eq!(report.violations.len(), 1);
        let viol = report.violations[0];
        assert_eq!(viol.dist_g, 3);
        assert_eq!(viol.dist_h, Some(7));
        assert_eq!(report.max_additive_excess, 4);
    }

    #[test]
    fn source_to_all_counts_each_pair_once() {
        let g = k4();
        let report = verify_stretch(
            &g,
            &full_edge_set(&g),
            CheckPairs::SourceToAll(&[0, 1]),
            1.0,
            0,
        );
        // (0,1), (0,2), (0,3), (1,2), (1,3): five distinct pairs.
        assert_eq!(report.checked_pairs, 5);
    }

    #[test]
    fn size_report_matches_independent_arithmetic() {
        let report = size_report(
            Algorithm::TwoP,
            1000,
            InputSize::Pairs { count: 64, tau: 0 },
            8000,
        );
        // Independent route: n * cbrt(|P|) * exp((2/3) ln ln n).
        let expected = 1000.0 * 64f64.cbrt() * ((1000f64).ln().ln() * 2.0 / 3.0).exp();
        assert!((report.bound_formula_value - expected).abs() < 1e-6);
        assert!((report.bound_formula_value - 14507.44).abs() < 1.0);
        assert!((report.ratio - 0.5517).abs() < 1e-3);
        // Degenerate numerator.
        let zero = size_report(
            Algorithm::TwoP,
            1000,
            InputSize::Pairs { count: 64, tau: 0 },
            0,
        );
        assert_eq!(zero.ratio, 0.0);
    }

    #[test]
    fn round_report_ratio() {
        let stats = RoundStats {
            rounds: 120,
            ..Default::default()
        };
        let report = round_report(
            &stats,
            Algorithm::TwoS,
            1000,
            InputSize::Sources { count: 20 },
            10,
        );
        assert_eq!(report.ratio, 4.0);
        // The all-pairs-4 argument is n^{3/5} ln^{1/5} n + D.
        let arg = round_bound_argument(Algorithm::FourAp, 1000, InputSize::None, 10);
        let expected = 1000f64.powf(0.6) * 1000f64.ln().powf(0.2) + 10.0;
        assert!((arg - expected).abs() < 1e-9);
    }

    #[test]
    fn adding_edges_never_increases_excess() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 4)]).unwrap();
        let mut h = EdgeSet::new();
        let mut prev = i64::MAX;
        for (u, v) in g.edges() {
            h.insert(u, v);
            let report = verify_stretch(&g, &h, CheckPairs::All, 1.0, 0);
            assert!(report.max_additive_excess <= prev);
            prev = report.max_additive_excess;
        }
        assert_eq!(prev, 0);
    }

    #[test]
    fn sampling_mode_is_labeled() {
        let g = k4();
        let report = verify_stretch(
            &g,
            &full_edge_set(&g),
            CheckPairs::Sample { count: 10, seed: 3 },
            1.0,
            0,
        );
        assert!(report.sampled);
        assert!(report.ok());
        let full = verify_stretch(&g, &full_edge_set(&g), CheckPairs::All, 1.0, 0);
        assert!(!full.sampled);
    }

    #[test]
    fn csv_row_shape() {
        let row = ReportRow {
            algo: "2p".into(),
            n: 100,
            diameter: 5,
            param: 50,
            edges: 400,
            ratio_size: 0.25,
            rounds: 80,
            ratio_rounds: 1.5,
            max_excess: 1,
            violations: 0,
        };
        assert_eq!(row.to_csv(), "2p,100,5,50,400,0.250000,80,1.500000,1,0");
        assert_eq!(
            ReportRow::CSV_HEADER.split(',').count(),
            row.to_csv().split(',').count()
        );
    }
}
