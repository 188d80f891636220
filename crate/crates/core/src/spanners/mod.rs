//! Purely additive spanner construction in the CONGEST model.
//!
//! Seven algorithm variants share four distributed phases: randomized
//! clustering, BFS trees from sampled centers, pipelined multi-source BFS
//! with missing-edge counters, and backward buying passes. The variants
//! differ in how the scale parameter and the buying thresholds are derived
//! from the input, and in which node sets the counter searches start from:
//!
//! * `2s`: additive 2 for all (source, node) pairs of a source set;
//! * `2p`: additive 2 for an explicit pair set;
//! * `4p`: additive 4 for an explicit pair set (prefix/suffix buying plus
//!   a sampled center-to-cluster buying pass);
//! * `4ap`: additive 4 for all pairs (`2s` with the centers as sources);
//! * `8ap`: additive 8 for all pairs (`4p` on all pairs of centers);
//! * `sub2`/`sub4`: additive 2/4 on a subset, by running `2p`/`4p` on all
//!   subset pairs and switching to `2s`/`4ap` when the subset is large.
//!
//! Every randomized decision draws from a stream derived of (seed, node id),
//! so whole runs are reproducible bit for bit.

mod buying;
mod clustering;
mod multibfs;

pub use clustering::{clustering_phase, select_bfs_roots, select_set_a, ClusterState};
pub use multibfs::{parallel_bfs_phase, ParallelBfs};

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use buying::BuyMode;
use multibfs::{run_counter_wave, run_dist_wave, CounterWaveOutcome, DistWaveOutcome};

use crate::congest::{
    gather_and_spread, id_bits, mix_seed, RoundStats, SimConfig, SimError, TraceRecord,
};
use crate::graph::{EdgeSet, Graph, NodeId, PairSet};

#[derive(Debug, Error)]
pub enum SpannerError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("algorithm {algorithm} expects {expected} as input")]
    InputMismatch {
        algorithm: Algorithm,
        expected: &'static str,
    },
}

/// The seven construction variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[serde(rename = "2s")]
    TwoS,
    #[serde(rename = "2p")]
    TwoP,
    #[serde(rename = "4p")]
    FourP,
    #[serde(rename = "4ap")]
    FourAp,
    #[serde(rename = "8ap")]
    EightAp,
    Sub2,
    Sub4,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::TwoS,
        Algorithm::TwoP,
        Algorithm::FourP,
        Algorithm::FourAp,
        Algorithm::EightAp,
        Algorithm::Sub2,
        Algorithm::Sub4,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::TwoS => "2s",
            Algorithm::TwoP => "2p",
            Algorithm::FourP => "4p",
            Algorithm::FourAp => "4ap",
            Algorithm::EightAp => "8ap",
            Algorithm::Sub2 => "sub2",
            Algorithm::Sub4 => "sub4",
        }
    }

    pub fn parse(s: &str) -> Option<Algorithm> {
        match s.to_ascii_lowercase().as_str() {
            "2s" => Some(Algorithm::TwoS),
            "2p" => Some(Algorithm::TwoP),
            "4p" => Some(Algorithm::FourP),
            "4ap" => Some(Algorithm::FourAp),
            "8ap" => Some(Algorithm::EightAp),
            "sub2" => Some(Algorithm::Sub2),
            "sub4" => Some(Algorithm::Sub4),
            _ => None,
        }
    }

    /// The additive stretch this variant guarantees on its required pairs.
    pub fn beta(&self) -> u32 {
        match self {
            Algorithm::TwoS | Algorithm::TwoP | Algorithm::Sub2 => 2,
            Algorithm::FourP | Algorithm::FourAp | Algorithm::Sub4 => 4,
            Algorithm::EightAp => 8,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// User-facing knobs; everything else derives from these and the input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlgoConfig {
    pub algorithm: Algorithm,
    /// The confidence constant in all sampling probabilities and buying
    /// thresholds (one constant throughout).
    pub c: f64,
    pub seed: u64,
}

impl AlgoConfig {
    pub fn new(algorithm: Algorithm, c: f64, seed: u64) -> AlgoConfig {
        AlgoConfig { algorithm, c, seed }
    }
}

/// Natural log of the node count, floored at ln 2 so degenerate graphs do
/// not zero out probabilities. All formulas use natural log consistently;
/// the base only shifts constants.
fn log_n(n: usize) -> f64 {
    (n.max(2) as f64).ln()
}

fn clamp_prob(p: f64) -> f64 {
    if p.is_nan() {
        1.0
    } else {
        p.clamp(0.0, 1.0)
    }
}

/// Parameters derived from (config, n, input size): the degree scale (nodes
/// of larger degree are clustered with high probability, and the expected
/// number of BFS roots matches it), sampling probabilities clamped to [0,1],
/// and the missing-edge budgets of the buying phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    pub degree_scale: f64,
    pub center_prob: f64,
    pub root_prob: f64,
    /// Missing-edge threshold for threshold path buying.
    pub buy_threshold: f64,
    /// Prefix/suffix budget (4p/8ap only).
    pub prefix_budget: Option<f64>,
    /// Sampling probability of the buying center set (4p/8ap only).
    pub set_a_prob: Option<f64>,
}

impl DerivedParams {
    fn from_scale(n: usize, c: f64, scale: f64, prefix_budget: Option<f64>) -> DerivedParams {
        let ln = log_n(n);
        DerivedParams {
            degree_scale: scale,
            center_prob: clamp_prob(c * ln / scale),
            root_prob: clamp_prob(scale * scale / (c * n as f64 * ln)),
            buy_threshold: 2.0 * c * c * n as f64 * ln * ln / (scale * scale),
            prefix_budget,
            set_a_prob: prefix_budget.map(|b| clamp_prob(16.0 * c * ln / b)),
        }
    }

    pub fn sourcewise(n: usize, sources: usize, c: f64) -> DerivedParams {
        let scale = (n as f64 * sources as f64).powf(0.25) * log_n(n).powf(0.75);
        Self::from_scale(n, c, scale, None)
    }

    pub fn pairwise2(n: usize, pair_count: usize, c: f64) -> DerivedParams {
        let scale = (pair_count as f64).powf(1.0 / 3.0) * log_n(n).powf(2.0 / 3.0);
        Self::from_scale(n, c, scale, None)
    }

    pub fn pairwise4(n: usize, pair_count: usize, c: f64) -> DerivedParams {
        let ln = log_n(n);
        let scale = (pair_count as f64).powf(2.0 / 7.0) * ln.powf(6.0 / 7.0);
        let budget = n as f64 * ln.powi(3) / scale.powf(2.5);
        Self::from_scale(n, c, scale, Some(budget))
    }

    pub fn all_pairs4(n: usize, c: f64) -> DerivedParams {
        let scale = (n as f64).powf(0.4) * log_n(n).powf(0.8);
        Self::from_scale(n, c, scale, None)
    }

    pub fn all_pairs8(n: usize, c: f64) -> DerivedParams {
        let ln = log_n(n);
        let scale = (n as f64).powf(4.0 / 11.0) * ln.powf(10.0 / 11.0);
        let budget = n as f64 * ln.powi(3) / scale.powf(2.5);
        Self::from_scale(n, c, scale, Some(budget))
    }

    /// The integer prefix/suffix budget: buying `l` edges means `ceil(l)`,
    /// capped at n-1 (no tree path has more edges).
    pub fn prefix_budget_int(&self, n: usize) -> u32 {
        let b = self.prefix_budget.expect("prefix budget derived");
        (b.ceil().max(0.0) as u64).min(n.saturating_sub(1) as u64) as u32
    }
}

/// Which phase first contributed an edge to H.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Cluster,
    Unclustered,
    Bfs,
    PrefixSuffix,
    PathBuy,
}

/// Input of a construction run; which variant accepts which is checked by
/// [`build_spanner`].
#[derive(Debug, Clone)]
pub enum SpannerInput {
    None,
    Sources(Vec<NodeId>),
    Pairs(PairSet),
}

/// The constructed spanner: its edges, per-edge phase attribution, round
/// accounting (total and per phase), and the parameters that produced it.
#[derive(Debug)]
pub struct SpannerResult {
    pub algorithm: Algorithm,
    pub config: AlgoConfig,
    pub sim: SimConfig,
    pub params: DerivedParams,
    pub h_edges: EdgeSet,
    pub attribution: BTreeMap<(NodeId, NodeId), Phase>,
    pub stats: RoundStats,
    pub phase_stats: Vec<(String, RoundStats)>,
    /// Per-phase message traces, present when the run was traced.
    pub phase_traces: Vec<Vec<TraceRecord>>,
    /// Set when a size/round guard replaced the main pipeline.
    pub fallback: Option<String>,
}

impl SpannerResult {
    pub fn attribution_counts(&self) -> BTreeMap<Phase, usize> {
        let mut counts = BTreeMap::new();
        for tag in self.attribution.values() {
            *counts.entry(*tag).or_insert(0) += 1;
        }
        counts
    }

    /// Edge-list file body in the graph text format.
    pub fn edge_list_text(&self, n: usize) -> String {
        crate::graph::io::format_edge_list(n, self.h_edges.iter())
    }

    /// JSON metadata record: config, derived parameters, stats, attribution.
    /// The bandwidth multiplier and the log base behind every formula are
    /// part of the record so runs can be audited and replayed.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "algorithm": self.algorithm.name(),
            "config": self.config,
            "bandwidth_multiplier": self.sim.bandwidth_multiplier,
            "max_rounds": self.sim.max_rounds,
            "log_base": "natural",
            "params": self.params,
            "edges": self.h_edges.len(),
            "stats": self.stats,
            "phase_stats": self.phase_stats.iter()
                .map(|(name, s)| serde_json::json!({"phase": name, "stats": s}))
                .collect::<Vec<_>>(),
            "attribution": self.attribution_counts().iter()
                .map(|(p, c)| (format!("{p:?}").to_lowercase(), *c))
                .collect::<BTreeMap<_, _>>(),
            "fallback": self.fallback,
        })
    }
}

// --- pipeline plumbing -------------------------------------------------------

/// Accumulates H, attribution and stats across the phases of one run, and
/// hands each phase its own seed stream.
struct Pipeline<'g> {
    g: &'g Graph,
    base: SimConfig,
    phase_idx: u64,
    h: EdgeSet,
    attribution: BTreeMap<(NodeId, NodeId), Phase>,
    stats: RoundStats,
    phase_stats: Vec<(String, RoundStats)>,
    phase_traces: Vec<Vec<TraceRecord>>,
}

impl<'g> Pipeline<'g> {
    fn new(g: &'g Graph, base: SimConfig) -> Pipeline<'g> {
        Pipeline {
            g,
            base,
            phase_idx: 0,
            h: EdgeSet::new(),
            attribution: BTreeMap::new(),
            stats: RoundStats::default(),
            phase_stats: Vec::new(),
            phase_traces: Vec::new(),
        }
    }

    fn next_cfg(&mut self) -> SimConfig {
        let mut cfg = self.base;
        cfg.seed = mix_seed(self.base.seed, self.phase_idx);
        self.phase_idx += 1;
        cfg
    }

    fn record(&mut self, name: &str, stats: RoundStats, trace: Option<Vec<TraceRecord>>) {
        self.stats.absorb(&stats);
        self.phase_stats.push((name.to_string(), stats));
        if let Some(t) = trace {
            self.phase_traces.push(t);
        }
    }

    fn add_edges<I: IntoIterator<Item = (NodeId, NodeId)>>(&mut self, edges: I, tag: Phase) {
        for (u, v) in edges {
            if self.h.insert(u, v) {
                self.attribution.insert((u.min(v), u.max(v)), tag);
            }
        }
    }

    /// Network fold so every node (and the orchestrator) learns a global
    /// quantity before the next phase acts on it.
    fn gather(
        &mut self,
        name: &str,
        values: &[u64],
        value_bits: u32,
        combine: fn(u64, u64) -> u64,
    ) -> Result<u64, SpannerError> {
        let cfg = self.next_cfg();
        let out = gather_and_spread(self.g, &cfg, values, value_bits, combine)?;
        self.record(name, out.stats, out.trace);
        Ok(out.values[0])
    }

    fn gather_sum_indicator(&mut self, name: &str, flags: &[bool]) -> Result<u64, SpannerError> {
        let values: Vec<u64> = flags.iter().map(|&b| u64::from(b)).collect();
        let bits = id_bits(self.g.node_count()) + 1;
        self.gather(name, &values, bits, |a, b| a + b)
    }

    fn run_clustering(&mut self, params: &DerivedParams) -> Result<ClusterState, SpannerError> {
        let cfg = self.next_cfg();
        let (cluster, stats, trace) = clustering_phase(self.g, &cfg, params.center_prob, None)?;
        self.record("clustering", stats, trace);
        let join: Vec<_> = cluster.join_edges.iter().collect();
        self.add_edges(join, Phase::Cluster);
        let rest: Vec<_> = cluster.cluster_edges.iter().collect();
        self.add_edges(rest, Phase::Unclustered);
        Ok(cluster)
    }

    /// BFS trees from `roots`, added whole to H.
    fn run_tree_wave(&mut self, name: &str, roots: &[NodeId]) -> Result<(), SpannerError> {
        if roots.is_empty() {
            return Ok(());
        }
        let cfg = self.next_cfg();
        let wave = run_dist_wave(self.g, &cfg, roots)?;
        self.record(name, wave.stats, wave.trace.clone());
        let mut edges = Vec::new();
        for (v, table) in wave.tables.iter().enumerate() {
            for slot in 0..wave.roots.len() {
                if table.dist[slot] > 0 {
                    edges.push((v as NodeId, table.parent[slot]));
                }
            }
        }
        self.add_edges(edges, Phase::Bfs);
        Ok(())
    }

    /// Distance + counter waves from `roots` against the current H, plus the
    /// fold that fixes the global backward schedule length.
    fn run_counter_bfs(
        &mut self,
        name: &str,
        roots: &[NodeId],
    ) -> Result<(DistWaveOutcome, CounterWaveOutcome, u32), SpannerError> {
        let cfg = self.next_cfg();
        let dist = run_dist_wave(self.g, &cfg, roots)?;
        self.record(&format!("{name}-dist"), dist.stats, dist.trace.clone());
        let cfg = self.next_cfg();
        let counters = run_counter_wave(self.g, &cfg, &dist, &self.h)?;
        self.record(
            &format!("{name}-counters"),
            counters.stats,
            counters.trace.clone(),
        );

        let maxima: Vec<u64> = counters
            .tables
            .iter()
            .map(|t| t.announce_round.iter().copied().max().unwrap_or(0) as u64)
            .collect();
        let n = self.g.node_count();
        let bits = (2 * id_bits(n) + 1).min(4 * id_bits(n) - 2);
        let total = self.gather(&format!("{name}-schedule"), &maxima, bits, u64::max)?;
        Ok((dist, counters, total as u32))
    }

    fn run_backward(
        &mut self,
        name: &str,
        waves: &(DistWaveOutcome, CounterWaveOutcome, u32),
        active: Vec<Vec<bool>>,
        mode: BuyMode,
        tag: Phase,
    ) -> Result<EdgeSet, SpannerError> {
        let (dist, counters, total) = waves;
        let cfg = self.next_cfg();
        let out = buying::run_backward_wave(
            self.g,
            &cfg,
            &dist.roots,
            &dist.tables,
            &counters.tables,
            active,
            &self.h,
            *total,
            mode,
        )?;
        self.record(name, out.stats, out.trace);
        let bought: Vec<_> = out.bought.iter().collect();
        self.add_edges(bought, tag);
        Ok(out.bought)
    }

    /// Report/choose/notify, returning per-node initiation flags.
    fn run_choose(
        &mut self,
        name: &str,
        waves: &(DistWaveOutcome, CounterWaveOutcome, u32),
        cluster: &ClusterState,
        participating: &[bool],
        threshold: f64,
    ) -> Result<Vec<Vec<bool>>, SpannerError> {
        let (dist, counters, _) = waves;
        let n = self.g.node_count();
        let mut member_counts = vec![0usize; n];
        for (i, &c) in cluster.centers.iter().enumerate() {
            member_counts[c as usize] = cluster.members[i].len();
        }
        let cfg = self.next_cfg();
        let out = buying::run_report_choose_notify(
            self.g,
            &cfg,
            &dist.roots,
            &dist.tables,
            &counters.tables,
            &cluster.membership,
            &member_counts,
            participating,
            threshold,
        )?;
        self.record(name, out.stats, out.trace);
        let r = dist.roots.len();
        let mut active = vec![vec![false; r]; n];
        for (v, slots) in out.chosen.iter().enumerate() {
            for &slot in slots {
                active[v][slot as usize] = true;
            }
        }
        Ok(active)
    }
}

// --- public phase operations -------------------------------------------------

/// Threshold path buying for sourcewise instances: counter BFS from every
/// source against `current`, members report to their centers, each center
/// buys the shortest in-threshold path per source. Returns the newly bought
/// edges.
pub fn path_buying_sourcewise(
    g: &Graph,
    cfg: &SimConfig,
    sources: &[NodeId],
    cluster: &ClusterState,
    current: &EdgeSet,
    threshold: f64,
) -> Result<(EdgeSet, RoundStats), SpannerError> {
    let mut pipe = Pipeline::new(g, *cfg);
    pipe.h = current.clone();
    if sources.is_empty() {
        return Ok((EdgeSet::new(), RoundStats::default()));
    }
    let waves = pipe.run_counter_bfs("pathbuy", sources)?;
    let participating = vec![true; g.node_count()];
    let active = pipe.run_choose("pathbuy-choose", &waves, cluster, &participating, threshold)?;
    let bought = pipe.run_backward(
        "pathbuy-backward",
        &waves,
        active,
        BuyMode::Plain,
        Phase::PathBuy,
    )?;
    Ok((bought, pipe.stats))
}

/// Threshold path buying for pairwise instances: counter BFS from every pair
/// endpoint; an endpoint whose tree path from a partner has at most
/// `threshold` missing edges buys it outright.
pub fn path_buying_pairwise(
    g: &Graph,
    cfg: &SimConfig,
    pairs: &PairSet,
    current: &EdgeSet,
    threshold: f64,
) -> Result<(EdgeSet, RoundStats), SpannerError> {
    let mut pipe = Pipeline::new(g, *cfg);
    pipe.h = current.clone();
    if pairs.is_empty() {
        return Ok((EdgeSet::new(), RoundStats::default()));
    }
    let endpoints = pairs.endpoints();
    let waves = pipe.run_counter_bfs("pathbuy", &endpoints)?;
    let active = pairwise_initiators(g, pairs, &waves, Some(threshold));
    let bought = pipe.run_backward(
        "pathbuy-backward",
        &waves,
        active,
        BuyMode::Plain,
        Phase::PathBuy,
    )?;
    Ok((bought, pipe.stats))
}

/// Prefix/suffix buying: every pair endpoint starts a budgeted counter on
/// its partners' trees, buying the first and last `ceil(budget)` missing
/// edges of each pair's canonical path.
pub fn prefix_suffix_buying(
    g: &Graph,
    cfg: &SimConfig,
    pairs: &PairSet,
    current: &EdgeSet,
    budget: f64,
) -> Result<(EdgeSet, RoundStats), SpannerError> {
    let mut pipe = Pipeline::new(g, *cfg);
    pipe.h = current.clone();
    let budget_int =
        (budget.ceil().max(0.0) as u64).min(g.node_count().saturating_sub(1) as u64) as u32;
    if pairs.is_empty() || budget_int == 0 {
        return Ok((EdgeSet::new(), RoundStats::default()));
    }
    let endpoints = pairs.endpoints();
    let waves = pipe.run_counter_bfs("prefix-suffix", &endpoints)?;
    let active = pairwise_initiators(g, pairs, &waves, None);
    let bought = pipe.run_backward(
        "prefix-suffix-backward",
        &waves,
        active,
        BuyMode::PrefixSuffix { budget: budget_int },
        Phase::PrefixSuffix,
    )?;
    Ok((bought, pipe.stats))
}

/// Center-pair path buying: counter BFS from the sampled center set A; each
/// center of A buys, per root in A, the shortest in-threshold path to one of
/// its members.
pub fn path_buying_4p(
    g: &Graph,
    cfg: &SimConfig,
    set_a: &[NodeId],
    cluster: &ClusterState,
    current: &EdgeSet,
    threshold: f64,
) -> Result<(EdgeSet, RoundStats), SpannerError> {
    let mut pipe = Pipeline::new(g, *cfg);
    pipe.h = current.clone();
    if set_a.is_empty() {
        return Ok((EdgeSet::new(), RoundStats::default()));
    }
    let waves = pipe.run_counter_bfs("pathbuy", set_a)?;
    let mut participating = vec![false; g.node_count()];
    for &c in set_a {
        participating[c as usize] = true;
    }
    let active = pipe.run_choose("pathbuy-choose", &waves, cluster, &participating, threshold)?;
    let bought = pipe.run_backward(
        "pathbuy-backward",
        &waves,
        active,
        BuyMode::Plain,
        Phase::PathBuy,
    )?;
    Ok((bought, pipe.stats))
}

/// Initiation flags for pair-driven buying: node v initiates on the tree of
/// every partner root (optionally only when its missing count is within the
/// threshold). This is a node-local decision; it reads only v's own table.
fn pairwise_initiators(
    g: &Graph,
    pairs: &PairSet,
    waves: &(DistWaveOutcome, CounterWaveOutcome, u32),
    threshold: Option<f64>,
) -> Vec<Vec<bool>> {
    let (dist, counters, _) = waves;
    let r = dist.roots.len();
    let mut active = vec![vec![false; r]; g.node_count()];
    for v in g.nodes() {
        for (slot, &root) in dist.roots.iter().enumerate() {
            if root == v || !pairs.contains(v, root) {
                continue;
            }
            let within = match threshold {
                Some(t) => (counters.tables[v as usize].missing[slot] as f64) <= t,
                None => true,
            };
            if within {
                active[v as usize][slot] = true;
            }
        }
    }
    active
}

// --- the orchestrator ---------------------------------------------------------

/// Builds a spanner with the configured variant. `input` must match the
/// variant: a source set for `2s`/`sub2`/`sub4`, a pair set for `2p`/`4p`,
/// nothing for `4ap`/`8ap`.
pub fn build_spanner(
    g: &Graph,
    input: &SpannerInput,
    algo: &AlgoConfig,
    sim: &SimConfig,
) -> Result<SpannerResult, SpannerError> {
    let mut base = *sim;
    base.seed = algo.seed;
    let mut pipe = Pipeline::new(g, base);
    let n = g.node_count();
    let c = algo.c;
    let ln = log_n(n);

    let need_sources = |input: &SpannerInput| -> Result<Vec<NodeId>, SpannerError> {
        match input {
            SpannerInput::Sources(s) => {
                let mut s = s.clone();
                s.sort_unstable();
                s.dedup();
                Ok(s)
            }
            _ => Err(SpannerError::InputMismatch {
                algorithm: algo.algorithm,
                expected: "a source set",
            }),
        }
    };
    let need_pairs = |input: &SpannerInput| -> Result<PairSet, SpannerError> {
        match input {
            SpannerInput::Pairs(p) => Ok(p.clone()),
            _ => Err(SpannerError::InputMismatch {
                algorithm: algo.algorithm,
                expected: "a pair set",
            }),
        }
    };

    let (params, fallback) = match algo.algorithm {
        Algorithm::TwoS => {
            let sources = need_sources(input)?;
            run_sourcewise(&mut pipe, &sources, c)?
        }
        Algorithm::FourAp => run_all_pairs4(&mut pipe, c)?,
        Algorithm::TwoP => {
            let pairs = need_pairs(input)?;
            run_pairwise2(&mut pipe, &pairs, c)?
        }
        Algorithm::FourP => {
            let pairs = need_pairs(input)?;
            run_pairwise4(&mut pipe, &pairs, c)?
        }
        Algorithm::EightAp => run_all_pairs8(&mut pipe, c)?,
        Algorithm::Sub2 => {
            let sources = need_sources(input)?;
            let count = gather_source_count(&mut pipe, &sources)?;
            if count as f64 > (n as f64).powf(0.6) * ln.powf(0.2) {
                let (p, f) = run_sourcewise(&mut pipe, &sources, c)?;
                (p, Some(f.unwrap_or_else(|| "sourcewise switchover".into())))
            } else {
                let pairs = PairSet::all_pairs_of(&sources);
                run_pairwise2(&mut pipe, &pairs, c)?
            }
        }
        Algorithm::Sub4 => {
            let sources = need_sources(input)?;
            let count = gather_source_count(&mut pipe, &sources)?;
            if count as f64 > (n as f64).powf(0.7) * ln.powf(-0.1) {
                let (p, f) = run_all_pairs4(&mut pipe, c)?;
                (p, Some(f.unwrap_or_else(|| "all-pairs switchover".into())))
            } else {
                let pairs = PairSet::all_pairs_of(&sources);
                run_pairwise4(&mut pipe, &pairs, c)?
            }
        }
    };

    debug_assert!(pipe.h.is_subgraph_of(g));
    Ok(SpannerResult {
        algorithm: algo.algorithm,
        config: *algo,
        sim: base,
        params,
        h_edges: pipe.h,
        attribution: pipe.attribution,
        stats: pipe.stats,
        phase_stats: pipe.phase_stats,
        phase_traces: pipe.phase_traces,
        fallback,
    })
}

fn gather_source_count(pipe: &mut Pipeline, sources: &[NodeId]) -> Result<u64, SpannerError> {
    let mut flags = vec![false; pipe.g.node_count()];
    for &s in sources {
        flags[s as usize] = true;
    }
    pipe.gather_sum_indicator("source-count", &flags)
}

/// Folds |P| (via pair-degrees, each pair counted at both ends) and the
/// endpoint count tau.
fn gather_pair_counts(pipe: &mut Pipeline, pairs: &PairSet) -> Result<(u64, u64), SpannerError> {
    let n = pipe.g.node_count();
    let mut pair_degree = vec![0u64; n];
    let mut endpoint = vec![false; n];
    for (u, v) in pairs.iter() {
        pair_degree[u as usize] += 1;
        pair_degree[v as usize] += 1;
        endpoint[u as usize] = true;
        endpoint[v as usize] = true;
    }
    let twice = pipe.gather("pair-count", &pair_degree, 2 * id_bits(n), |a, b| a + b)?;
    let tau = pipe.gather_sum_indicator("endpoint-count", &endpoint)?;
    Ok((twice / 2, tau))
}

type RunOutcome = (DerivedParams, Option<String>);

fn run_sourcewise(
    pipe: &mut Pipeline,
    sources: &[NodeId],
    c: f64,
) -> Result<RunOutcome, SpannerError> {
    let n = pipe.g.node_count();
    let count = gather_source_count(pipe, sources)? as usize;
    let params = DerivedParams::sourcewise(n, count, c);

    // Small source sets do not pay for clustering: when the scale reaches
    // |S|, the union of exact BFS trees from all sources is already within
    // the size budget.
    if params.degree_scale >= count as f64 {
        pipe.run_tree_wave("source-trees", sources)?;
        return Ok((params, Some("union of source BFS trees".into())));
    }

    let cluster = pipe.run_clustering(&params)?;
    sourcewise_tail(pipe, &cluster, sources, &params)?;
    Ok((params, None))
}

/// The shared 2s tail: sampled root trees, then sourcewise path buying.
fn sourcewise_tail(
    pipe: &mut Pipeline,
    cluster: &ClusterState,
    sources: &[NodeId],
    params: &DerivedParams,
) -> Result<(), SpannerError> {
    let roots = select_bfs_roots(cluster, params.root_prob, pipe.next_cfg().seed);
    pipe.run_tree_wave("root-trees", &roots)?;
    if sources.is_empty() {
        return Ok(());
    }
    let waves = pipe.run_counter_bfs("pathbuy", sources)?;
    let participating = vec![true; pipe.g.node_count()];
    let active = pipe.run_choose(
        "pathbuy-choose",
        &waves,
        cluster,
        &participating,
        params.buy_threshold,
    )?;
    pipe.run_backward(
        "pathbuy-backward",
        &waves,
        active,
        BuyMode::Plain,
        Phase::PathBuy,
    )?;
    Ok(())
}

fn run_all_pairs4(pipe: &mut Pipeline, c: f64) -> Result<RunOutcome, SpannerError> {
    let params = DerivedParams::all_pairs4(pipe.g.node_count(), c);
    let cluster = pipe.run_clustering(&params)?;
    let centers = cluster.centers.clone();
    sourcewise_tail(pipe, &cluster, &centers, &params)?;
    Ok((params, None))
}

fn run_pairwise2(pipe: &mut Pipeline, pairs: &PairSet, c: f64) -> Result<RunOutcome, SpannerError> {
    let n = pipe.g.node_count();
    let (pair_count, tau) = gather_pair_counts(pipe, pairs)?;
    let params = DerivedParams::pairwise2(n, pair_count as usize, c);

    // Few distinct endpoints (including the degenerate empty instance):
    // exact BFS trees from each of them are sparser than the clustering
    // route and give stretch 0.
    if pairs.is_empty()
        || (tau as f64)
            < 2.0 * c * c * (pair_count as f64).powf(1.0 / 3.0) * log_n(n).powf(2.0 / 3.0)
    {
        let endpoints = pairs.endpoints();
        pipe.run_tree_wave("endpoint-trees", &endpoints)?;
        return Ok((params, Some("union of endpoint BFS trees".into())));
    }

    let cluster = pipe.run_clustering(&params)?;
    let roots = select_bfs_roots(&cluster, params.root_prob, pipe.next_cfg().seed);
    pipe.run_tree_wave("root-trees", &roots)?;

    if !pairs.is_empty() {
        let endpoints = pairs.endpoints();
        let waves = pipe.run_counter_bfs("pathbuy", &endpoints)?;
        let active = pairwise_initiators(pipe.g, pairs, &waves, Some(params.buy_threshold));
        pipe.run_backward(
            "pathbuy-backward",
            &waves,
            active,
            BuyMode::Plain,
            Phase::PathBuy,
        )?;
    }
    Ok((params, None))
}

fn run_pairwise4(pipe: &mut Pipeline, pairs: &PairSet, c: f64) -> Result<RunOutcome, SpannerError> {
    let n = pipe.g.node_count();
    let (pair_count, _tau) = gather_pair_counts(pipe, pairs)?;

    // Tiny pair sets: the additive-2 pairwise construction is sparser and
    // runs in the same time.
    if (pair_count as f64) < log_n(n).powi(4) {
        let (params, inner) = run_pairwise2(pipe, pairs, c)?;
        let note = match inner {
            Some(i) => format!("delegated to 2p ({i})"),
            None => "delegated to 2p".into(),
        };
        return Ok((params, Some(note)));
    }

    let params = DerivedParams::pairwise4(n, pair_count as usize, c);
    let cluster = pipe.run_clustering(&params)?;
    pairwise4_tail(pipe, &cluster, pairs, &params)?;
    Ok((params, None))
}

/// The shared 4p tail after clustering: sampled root trees, prefix/suffix
/// buying over the pair set, then center-pair buying over the sampled
/// center set A.
fn pairwise4_tail(
    pipe: &mut Pipeline,
    cluster: &ClusterState,
    pairs: &PairSet,
    params: &DerivedParams,
) -> Result<(), SpannerError> {
    let n = pipe.g.node_count();
    let roots = select_bfs_roots(cluster, params.root_prob, pipe.next_cfg().seed);
    pipe.run_tree_wave("root-trees", &roots)?;

    if !pairs.is_empty() {
        let endpoints = pairs.endpoints();
        let budget = params.prefix_budget_int(n);
        if budget > 0 {
            let waves = pipe.run_counter_bfs("prefix-suffix", &endpoints)?;
            let active = pairwise_initiators(pipe.g, pairs, &waves, None);
            pipe.run_backward(
                "prefix-suffix-backward",
                &waves,
                active,
                BuyMode::PrefixSuffix { budget },
                Phase::PrefixSuffix,
            )?;
        }
    }

    let set_a = select_set_a(
        cluster,
        params.set_a_prob.expect("4p derives the A probability"),
        pipe.next_cfg().seed,
    );
    if !set_a.is_empty() {
        let waves = pipe.run_counter_bfs("a-pathbuy", &set_a)?;
        let mut participating = vec![false; n];
        for &a in &set_a {
            participating[a as usize] = true;
        }
        let active = pipe.run_choose(
            "a-pathbuy-choose",
            &waves,
            cluster,
            &participating,
            params.buy_threshold,
        )?;
        pipe.run_backward(
            "a-pathbuy-backward",
            &waves,
            active,
            BuyMode::Plain,
            Phase::PathBuy,
        )?;
    }
    Ok(())
}

fn run_all_pairs8(pipe: &mut Pipeline, c: f64) -> Result<RunOutcome, SpannerError> {
    let params = DerivedParams::all_pairs8(pipe.g.node_count(), c);
    let cluster = pipe.run_clustering(&params)?;
    let pairs = PairSet::all_pairs_of(&cluster.centers);
    pairwise4_tail(pipe, &cluster, &pairs, &params)?;
    Ok((params, None))
}
