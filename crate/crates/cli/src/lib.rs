//! Experiment driver behind the `spanlab` binary: builds graphs, runs the
//! spanner constructions, verifies the results against the sequential
//! oracle, and emits CSV rows (plus markdown summaries of collected rows).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spanlab::congest::{mix_seed, SimConfig};
use spanlab::graph::{
    build_lowerbound_graph, build_projective_incidence, gen_gnp, load_graph, load_pairs,
    load_sources, Graph, NodeId,
};
use spanlab::lowerbound::{CutRow, EdgeIndexing, PartCompInstance};
use spanlab::spanners::{build_spanner, AlgoConfig, Algorithm, SpannerError, SpannerInput};
use spanlab::verify::{
    round_report, size_report, verify_stretch, CheckPairs, InputSize, ReportRow,
};
use spanlab::PairSet;

/// Full-oracle stretch checks run BFS from every node; beyond this size the
/// all-pairs algorithms are spot-checked on a labeled random sample instead.
const FULL_ORACLE_LIMIT: usize = 5000;
const SAMPLE_PAIRS: usize = 2000;

#[derive(Debug, Parser)]
#[command(name = "spanlab", about = "CONGEST spanner construction experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a graph, run a spanner construction, verify, and emit CSV rows.
    Run(RunArgs),
    /// Run the two-party cut experiment on a lower-bound graph.
    Lowerbound(LowerboundArgs),
    /// Summarize result CSVs into a markdown table of per-algorithm medians.
    Table(TableArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Algorithm: 2s, 2p, 4p, 4ap, 8ap, sub2, sub4.
    #[arg(long)]
    pub algo: String,

    /// Random graph "n,p" (resampled per repetition).
    #[arg(long)]
    pub gnp: Option<String>,
    /// Graph file (first line n, then "u v" edge lines, # comments).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Projective-plane incidence graph of prime order q.
    #[arg(long)]
    pub pg: Option<u64>,
    /// Lower-bound graph (incidence graph plus pendants) of prime order q.
    #[arg(long)]
    pub lbgraph: Option<u64>,

    /// Source set: a file of node ids, or "random:k".
    #[arg(long)]
    pub sources: Option<String>,
    /// Pair set: a file of "u v" lines, or "random:k".
    #[arg(long)]
    pub pairs: Option<String>,

    /// Confidence constant in probabilities and thresholds.
    #[arg(long, default_value_t = 3.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-edge bandwidth is this many ceil(log2 n)-bit words per round.
    #[arg(long = "bandwidth-mult", default_value_t = 4)]
    pub bandwidth_mult: u32,
    /// Round cutoff (default 64*(n+D)).
    #[arg(long = "max-rounds")]
    pub max_rounds: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub reps: u64,
    /// Append rows here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LowerboundArgs {
    /// Prime order of the projective plane.
    #[arg(long)]
    pub q: u64,
    /// Size of the hidden index set (at most m/3).
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value = "2p")]
    pub algo: String,
    #[arg(long, default_value_t = 3.0)]
    pub c: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "bandwidth-mult", default_value_t = 4)]
    pub bandwidth_mult: u32,
    #[arg(long = "max-rounds")]
    pub max_rounds: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub reps: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Result CSV files (the `run` schema).
    pub files: Vec<PathBuf>,
}

enum GraphSource {
    Gnp { n: usize, p: f64 },
    File(PathBuf),
    Projective(u64),
    LowerBound(u64),
}

impl GraphSource {
    fn parse(args: &RunArgs) -> Result<GraphSource> {
        let mut sources = Vec::new();
        if let Some(spec) = &args.gnp {
            let (n, p) = spec
                .split_once(',')
                .context("--gnp expects n,p")
                .and_then(|(n, p)| Ok((n.trim().parse()?, p.trim().parse()?)))
                .context("--gnp expects n,p")?;
            sources.push(GraphSource::Gnp { n, p });
        }
        if let Some(path) = &args.graph {
            sources.push(GraphSource::File(path.clone()));
        }
        if let Some(q) = args.pg {
            sources.push(GraphSource::Projective(q));
        }
        if let Some(q) = args.lbgraph {
            sources.push(GraphSource::LowerBound(q));
        }
        match sources.len() {
            0 => bail!("choose a graph source: --gnp, --graph, --pg, or --lbgraph"),
            1 => Ok(sources.pop().unwrap()),
            _ => bail!("choose exactly one graph source"),
        }
    }

    fn build(&self, rep_seed: u64) -> Result<Graph> {
        Ok(match self {
            GraphSource::Gnp { n, p } => gen_gnp(*n, *p, rep_seed)?,
            GraphSource::File(path) => load_graph(path)?,
            GraphSource::Projective(q) => build_projective_incidence(*q)?,
            GraphSource::LowerBound(q) => build_lowerbound_graph(*q)?.0,
        })
    }
}

enum SetSource {
    File(PathBuf),
    Random(usize),
}

impl SetSource {
    fn parse(spec: &str) -> Result<SetSource> {
        if let Some(k) = spec.strip_prefix("random:") {
            Ok(SetSource::Random(
                k.parse().context("random:k expects a count")?,
            ))
        } else {
            Ok(SetSource::File(PathBuf::from(spec)))
        }
    }
}

fn random_sources(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<NodeId> {
    let mut nodes: Vec<NodeId> = (0..n as NodeId).collect();
    nodes.shuffle(rng);
    nodes.truncate(k.min(n));
    nodes.sort_unstable();
    nodes
}

fn random_pairs(n: usize, k: usize, rng: &mut ChaCha8Rng) -> PairSet {
    let mut pairs = Vec::new();
    let mut guard = 0;
    while pairs.len() < k && guard < 100 * k + 100 {
        guard += 1;
        let u = rng.random_range(0..n as NodeId);
        let v = rng.random_range(0..n as NodeId);
        if u != v {
            let key = (u.min(v), u.max(v));
            if !pairs.contains(&key) {
                pairs.push(key);
            }
        }
    }
    PairSet::new(pairs)
}

/// A sink that either appends to a file (creating it with a header) or
/// prints to stdout.
struct Sink {
    path: Option<PathBuf>,
    buffer: String,
}

impl Sink {
    fn new(path: Option<PathBuf>, header: &str) -> Result<Sink> {
        let mut sink = Sink {
            path,
            buffer: String::new(),
        };
        let need_header = match &sink.path {
            Some(p) => !p.exists() || fs::metadata(p)?.len() == 0,
            None => true,
        };
        if need_header {
            sink.line(header);
        }
        Ok(sink)
    }

    fn line(&mut self, s: &str) {
        self.buffer.push_str(s);
        self.buffer.push('\n');
    }

    fn flush(self) -> Result<()> {
        match self.path {
            Some(p) => {
                use std::io::Write;
                let mut f = fs::OpenOptions::new().create(true).append(true).open(&p)?;
                f.write_all(self.buffer.as_bytes())?;
            }
            None => print!("{}", self.buffer),
        }
        Ok(())
    }
}

/// Outcome of a command: rows written, and whether any stretch violation or
/// timeout occurred (which drives the nonzero exit code).
#[derive(Debug, Default)]
pub struct CmdOutcome {
    pub rows: u64,
    pub violations: u64,
    pub timeouts: u64,
}

impl CmdOutcome {
    pub fn failed(&self) -> bool {
        self.violations > 0 || self.timeouts > 0
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<CmdOutcome> {
    let algorithm = Algorithm::parse(&args.algo)
        .with_context(|| format!("unknown algorithm {:?}", args.algo))?;
    if args.reps == 0 {
        bail!("--reps must be at least 1");
    }

    // Input kind must match the algorithm up front.
    let wants_sources = matches!(
        algorithm,
        Algorithm::TwoS | Algorithm::Sub2 | Algorithm::Sub4
    );
    let wants_pairs = matches!(algorithm, Algorithm::TwoP | Algorithm::FourP);
    if wants_sources && args.sources.is_none() {
        bail!("{algorithm} needs --sources");
    }
    if wants_pairs && args.pairs.is_none() {
        bail!("{algorithm} needs --pairs");
    }
    if !wants_sources && args.sources.is_some() {
        bail!("{algorithm} does not take --sources");
    }
    if !wants_pairs && args.pairs.is_some() {
        bail!("{algorithm} does not take --pairs");
    }

    let graph_source = GraphSource::parse(args)?;
    let sources_spec = args.sources.as_deref().map(SetSource::parse).transpose()?;
    let pairs_spec = args.pairs.as_deref().map(SetSource::parse).transpose()?;

    let header = format!("{},seed", ReportRow::CSV_HEADER);
    let mut sink = Sink::new(args.out.clone(), &header)?;
    let mut outcome = CmdOutcome::default();

    for rep in 0..args.reps {
        let rep_seed = mix_seed(args.seed, rep);
        let g = graph_source.build(rep_seed)?;
        let n = g.node_count();
        let diameter = g.diameter()?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(rep_seed, 1));

        let (input, input_size, sources, pairs) = match (&sources_spec, &pairs_spec) {
            (Some(spec), None) => {
                let s = match spec {
                    SetSource::File(p) => load_sources(p, n)?,
                    SetSource::Random(k) => random_sources(n, *k, &mut rng),
                };
                let size = InputSize::Sources { count: s.len() };
                (SpannerInput::Sources(s.clone()), size, Some(s), None)
            }
            (None, Some(spec)) => {
                let p = match spec {
                    SetSource::File(path) => load_pairs(path, n)?,
                    SetSource::Random(k) => random_pairs(n, *k, &mut rng),
                };
                let size = InputSize::Pairs {
                    count: p.len(),
                    tau: p.tau(),
                };
                (SpannerInput::Pairs(p.clone()), size, None, Some(p))
            }
            (None, None) => (SpannerInput::None, InputSize::None, None, None),
            (Some(_), Some(_)) => unreachable!("rejected above"),
        };

        let algo_cfg = AlgoConfig::new(algorithm, args.c, mix_seed(rep_seed, 2));
        let mut sim = SimConfig::new(algo_cfg.seed);
        sim.bandwidth_multiplier = args.bandwidth_mult;
        sim.max_rounds = args.max_rounds.unwrap_or(64 * (n as u64 + diameter as u64));

        log::info!(
            "rep {rep}: {algorithm} on n={n} m={} D={diameter} (seed {rep_seed})",
            g.edge_count()
        );
        let result = match build_spanner(&g, &input, &algo_cfg, &sim) {
            Ok(r) => r,
            Err(SpannerError::Sim(e @ spanlab::congest::SimError::Timeout { .. })) => {
                log::error!("rep {rep}: {e}");
                outcome.timeouts += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };

        let check = match (algorithm, &sources, &pairs) {
            (Algorithm::TwoS, Some(s), _) => CheckPairs::SourceToAll(s),
            (Algorithm::Sub2 | Algorithm::Sub4, Some(s), _) => CheckPairs::Among(s),
            (Algorithm::TwoP | Algorithm::FourP, _, Some(p)) => CheckPairs::Pairs(p),
            _ if n <= FULL_ORACLE_LIMIT => CheckPairs::All,
            _ => CheckPairs::Sample {
                count: SAMPLE_PAIRS,
                seed: rep_seed,
            },
        };
        let stretch = verify_stretch(&g, &result.h_edges, check, 1.0, algorithm.beta());
        let size = size_report(algorithm, n, input_size, result.h_edges.len());
        let rounds = round_report(&result.stats, algorithm, n, input_size, diameter);

        outcome.violations += u64::from(!stretch.ok());
        let row = ReportRow {
            algo: algorithm.name().into(),
            n,
            diameter,
            param: input_size.param(),
            edges: result.h_edges.len(),
            ratio_size: size.ratio,
            rounds: rounds.rounds,
            ratio_rounds: rounds.ratio,
            max_excess: stretch.max_additive_excess,
            violations: stretch.violations.len(),
        };
        sink.line(&format!("{},{}", row.to_csv(), rep_seed));
        outcome.rows += 1;
    }
    sink.flush()?;
    Ok(outcome)
}

pub fn cmd_lowerbound(args: &LowerboundArgs) -> Result<CmdOutcome> {
    let algorithm = Algorithm::parse(&args.algo)
        .with_context(|| format!("unknown algorithm {:?}", args.algo))?;
    if args.reps == 0 {
        bail!("--reps must be at least 1");
    }
    let (g, map) = build_lowerbound_graph(args.q)?;
    let indexing = EdgeIndexing::new(&g, &map);
    let m = indexing.len();
    if args.p > m / 3 {
        bail!("p = {} exceeds m/3 = {} (m = {m})", args.p, m / 3);
    }

    let header = format!("{},seed", CutRow::CSV_HEADER);
    let mut sink = Sink::new(args.out.clone(), &header)?;
    let mut outcome = CmdOutcome::default();

    for rep in 0..args.reps {
        let rep_seed = mix_seed(args.seed, rep);
        let inst = PartCompInstance::random(m, args.p, mix_seed(rep_seed, 1))
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let algo_cfg = AlgoConfig::new(algorithm, args.c, mix_seed(rep_seed, 2));
        let mut sim = SimConfig::new(algo_cfg.seed);
        sim.bandwidth_multiplier = args.bandwidth_mult;
        sim.max_rounds = args
            .max_rounds
            .unwrap_or(64 * (g.node_count() as u64 + g.diameter()? as u64));

        let cut = match spanlab::lowerbound::run_cut_simulation(
            &g, &map, &indexing, &inst.x, &algo_cfg, &sim,
        ) {
            Ok(c) => c,
            Err(spanlab::lowerbound::LowerBoundError::Spanner(SpannerError::Sim(
                e @ spanlab::congest::SimError::Timeout { .. },
            ))) => {
                log::error!("rep {rep}: {e}");
                outcome.timeouts += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };

        let pairs = indexing.pairs_for(&map, &inst.x);
        let stretch = verify_stretch(&g, &cut.result.h_edges, CheckPairs::Pairs(&pairs), 1.0, 2);
        outcome.violations += u64::from(!stretch.ok());

        let row = CutRow {
            q: args.q,
            n: g.node_count(),
            m,
            p: args.p,
            bits_cut: cut.bits_across_cut,
            rounds: cut.result.stats.rounds,
            spanner_edges: cut.result.h_edges.len(),
            forced_present: cut.forced_present,
        };
        sink.line(&format!("{},{}", row.to_csv(), rep_seed));
        outcome.rows += 1;
    }
    sink.flush()?;
    Ok(outcome)
}

pub fn cmd_table(args: &TableArgs) -> Result<String> {
    if args.files.is_empty() {
        bail!("table needs at least one CSV file");
    }
    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    for path in &args.files {
        collect_rows(path, &mut rows).with_context(|| format!("reading {}", path.display()))?;
    }
    if rows.is_empty() {
        bail!("no data rows found");
    }

    let mut algos: Vec<String> = rows.iter().map(|(a, _, _)| a.clone()).collect();
    algos.sort();
    algos.dedup();

    let mut out = String::new();
    writeln!(
        out,
        "| algo | runs | median ratio_size | median ratio_rounds |"
    )
    .unwrap();
    writeln!(
        out,
        "|------|-----:|------------------:|--------------------:|"
    )
    .unwrap();
    for algo in algos {
        let mut sizes: Vec<f64> = Vec::new();
        let mut rounds: Vec<f64> = Vec::new();
        for (a, s, r) in &rows {
            if *a == algo {
                sizes.push(*s);
                rounds.push(*r);
            }
        }
        writeln!(
            out,
            "| {} | {} | {:.4} | {:.4} |",
            algo,
            sizes.len(),
            median(&mut sizes),
            median(&mut rounds)
        )
        .unwrap();
    }
    Ok(out)
}

fn collect_rows(path: &Path, rows: &mut Vec<(String, f64, f64)>) -> Result<()> {
    let text = fs::read_to_string(path)?;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("algo,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 10 {
            bail!("short row: {line:?}");
        }
        let ratio_size: f64 = fields[5].parse().context("ratio_size")?;
        let ratio_rounds: f64 = fields[7].parse().context("ratio_rounds")?;
        rows.push((fields[0].to_string(), ratio_size, ratio_rounds));
    }
    Ok(())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        (values[k / 2 - 1] + values[k / 2]) / 2.0
    }
}

pub fn main_with(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => {
            let outcome = cmd_run(&args)?;
            log::info!(
                "{} rows, {} violations, {} timeouts",
                outcome.rows,
                outcome.violations,
                outcome.timeouts
            );
            Ok(if outcome.failed() { 1 } else { 0 })
        }
        Command::Lowerbound(args) => {
            let outcome = cmd_lowerbound(&args)?;
            Ok(if outcome.failed() { 1 } else { 0 })
        }
        Command::Table(args) => {
            print!("{}", cmd_table(&args)?);
            Ok(0)
        }
    }
}
