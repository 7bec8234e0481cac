use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use reqgossip::analysis::verify_bound;
use reqgossip::engine::{Protocol, QueueInit};
use reqgossip::graph::{generate, GraphKind};
use reqgossip::harness::config::{parse_claims, ExperimentConfig, GraphSource, ValueSource};
use reqgossip::harness::{
    compare_protocols, instance_count, run_experiment, search_protocol1_failure, summarize, CompareConfig,
    ConfigError, HarnessError, RunSetup, SearchSpace,
};
use reqgossip::value::format_rational;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "reqgossip", version, about = "Request-based gossip simulator and verifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and check the requested claims.
    Run(RunArgs),
    /// Check claims on a run directory written by `run --out`.
    Verify(VerifyArgs),
    /// Run Protocols II and III from the same start and compare them.
    Compare(CompareArgs),
    /// Look for a Protocol I run that cycles away from consensus.
    SearchFailure(SearchArgs),
    /// Print a generated graph with its metrics.
    GenGraph(GenArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Graph file (edge list or {"n", "edges"} JSON).
    #[arg(long, conflicts_with = "gen")]
    graph: Option<PathBuf>,
    /// Generated graph: KIND,n[,p] with KIND in path, cycle, star, complete,
    /// grid, random-tree, random-connected.
    #[arg(long)]
    gen: Option<String>,
    /// Seed for random graph kinds.
    #[arg(long, default_value_t = 0)]
    graph_seed: u64,
}

#[derive(Args)]
struct StartArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Comma-separated initial values (integers or num/den).
    #[arg(long, conflicts_with = "x0_seed", allow_hyphen_values = true)]
    x0: Option<String>,
    /// Seed for random integer initial values.
    #[arg(long)]
    x0_seed: Option<u64>,
    /// Range LO:HI for random initial values.
    #[arg(long, default_value = "0:100", allow_hyphen_values = true)]
    x0_range: String,
    /// Explicit queues: agents separated by ';', labels by ','.
    #[arg(long, conflicts_with = "queue_seed")]
    queues: Option<String>,
    /// Seed for shuffled queues (sorted queues when neither flag is given).
    #[arg(long)]
    queue_seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Stop once V drops below this fraction P/Q of its start value.
    #[arg(long)]
    stop_ratio: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; replaces every other option except --out.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    protocol: Option<String>,
    #[command(flatten)]
    start: StartArgs,
    /// Comma-separated claim names.
    #[arg(long)]
    claims: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Directory holding setup.json and trace.jsonl.
    #[arg(long)]
    from: PathBuf,
    #[arg(long)]
    claims: String,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    start: StartArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value = "1")]
    protocol: String,
    /// Largest graph order to search.
    #[arg(long, default_value_t = 5)]
    max_n: usize,
    /// Initial values range over 0..=VALUE_MAX.
    #[arg(long, default_value_t = 2)]
    value_max: i64,
    #[arg(long, default_value_t = 32)]
    values_per_graph: usize,
    #[arg(long, default_value_t = 8)]
    queues_per_graph: usize,
    #[arg(long, default_value_t = 200)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    gen: String,
    #[arg(long, default_value_t = 0)]
    graph_seed: u64,
    /// Print the edge list instead of JSON.
    #[arg(long)]
    edge_list: bool,
}

fn config_err(field: &str, msg: impl Into<String>) -> HarnessError {
    ConfigError::new(field, msg).into()
}

fn graph_source(a: &GraphArgs) -> Result<GraphSource, HarnessError> {
    match (&a.graph, &a.gen) {
        (Some(path), _) => Ok(GraphSource::File(path.clone())),
        (None, Some(spec)) => GraphKind::parse_cli(spec, a.graph_seed)
            .map(GraphSource::Generate)
            .map_err(|e| config_err("gen", e.to_string())),
        (None, None) => Err(config_err("graph", "one of --graph or --gen is required")),
    }
}

fn value_source(a: &StartArgs) -> Result<ValueSource, HarnessError> {
    if let Some(list) = &a.x0 {
        return Ok(ValueSource::Explicit(list.split(',').map(|s| s.trim().to_string()).collect()));
    }
    let seed = a.x0_seed.ok_or_else(|| config_err("x0", "one of --x0 or --x0-seed is required"))?;
    let (lo, hi) = a
        .x0_range
        .split_once(':')
        .and_then(|(lo, hi)| Some((lo.trim().parse().ok()?, hi.trim().parse().ok()?)))
        .ok_or_else(|| config_err("x0_range", format!("{:?} is not LO:HI", a.x0_range)))?;
    Ok(ValueSource::random(seed, lo, hi))
}

fn queue_source(a: &StartArgs) -> Result<QueueInit, HarnessError> {
    if let Some(text) = &a.queues {
        let queues = text
            .split(';')
            .map(|agent| {
                agent
                    .split(',')
                    .map(|l| l.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| config_err("queues", format!("{text:?}: {e}")))?;
        return Ok(QueueInit::Explicit(queues));
    }
    Ok(a.queue_seed.map_or(QueueInit::Sorted, QueueInit::Seeded))
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn write_json(path: &std::path::Path, value: &impl serde::Serialize) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value).expect("reports serialize") + "\n";
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn cmd_run(a: RunArgs) -> Result<bool, HarnessError> {
    let mut cfg = if let Some(path) = &a.config {
        let text = fs::read_to_string(path).map_err(|e| config_err("config", format!("{}: {e}", path.display())))?;
        ExperimentConfig::from_json(&text)?
    } else {
        let start = &a.start;
        ExperimentConfig {
            protocol: a.protocol.clone().unwrap_or_default(),
            graph: graph_source(&start.graph)?,
            x0: value_source(start)?,
            queues: queue_source(start)?,
            max_iters: start.max_iters,
            stop_ratio: start.stop_ratio.clone(),
            claims: a.claims.as_deref().map(split_list).unwrap_or_default(),
            out_dir: None,
        }
    };
    if a.out.is_some() {
        cfg.out_dir = a.out.clone();
    }
    let outcome = run_experiment(&cfg)?;
    print_json(&summarize(&cfg, &outcome));
    Ok(outcome.all_pass())
}

fn cmd_verify(a: VerifyArgs) -> Result<bool, HarnessError> {
    let read = |name: &str| {
        let path = a.from.join(name);
        fs::read_to_string(&path).map_err(|e| config_err("from", format!("{}: {e}", path.display())))
    };
    let setup: RunSetup =
        serde_json::from_str(&read("setup.json")?).map_err(|e| config_err("from", format!("setup.json: {e}")))?;
    let trace = setup.load_trace(&read("trace.jsonl")?)?;
    let claims = parse_claims(&split_list(&a.claims), setup.protocol, &setup.graph)?;
    let reports = claims
        .iter()
        .map(|&c| verify_bound(&trace, c))
        .collect::<Result<Vec<_>, _>>()?;
    print_json(&reports);
    Ok(reports.iter().all(|r| r.pass))
}

fn cmd_compare(a: CompareArgs) -> Result<bool, HarnessError> {
    let cfg = CompareConfig {
        graph: graph_source(&a.start.graph)?,
        x0: value_source(&a.start)?,
        queues: queue_source(&a.start)?,
        max_iters: a.start.max_iters,
        stop_ratio: a.start.stop_ratio.clone().unwrap_or_else(|| "1/1000000".into()),
    };
    let report = compare_protocols(&cfg)?;
    if let Some(dir) = &a.out {
        write_json(&dir.join("compare.json"), &serde_json::json!({ "config": cfg, "report": report }))?;
    }
    print_json(&report);
    let capped = |s: &reqgossip::harness::ProtocolSummary| s.max_transmissions <= report.transmission_cap;
    Ok(capped(&report.protocol_ii) && capped(&report.protocol_iii))
}

fn cmd_search(a: SearchArgs) -> Result<bool, HarnessError> {
    let protocol: Protocol = a
        .protocol
        .parse()
        .map_err(|_| config_err("protocol", format!("unknown protocol {:?}", a.protocol)))?;
    if !(2..=8).contains(&a.max_n) {
        return Err(config_err("max_n", "must be in 2..=8"));
    }
    let space = SearchSpace {
        protocol,
        graphs: SearchSpace::small_graphs(a.max_n),
        value_max: a.value_max,
        values_per_graph: a.values_per_graph,
        queues_per_graph: a.queues_per_graph,
        seed: a.seed,
    };
    eprintln!("searching {} instances", instance_count(&space));
    let found = search_protocol1_failure(&space, a.horizon)?;
    let result = serde_json::json!({ "certificate": found });
    if let Some(dir) = &a.out {
        write_json(&dir.join("search.json"), &result)?;
    }
    print_json(&result);
    if let Some(cert) = &found {
        eprintln!("replay identical: {}", cert.replay()?);
    }
    Ok(found.is_some())
}

fn cmd_gen(a: GenArgs) -> Result<bool, HarnessError> {
    let kind = GraphKind::parse_cli(&a.gen, a.graph_seed).map_err(|e| config_err("gen", e.to_string()))?;
    let g = generate(&kind).map_err(|e| config_err("gen", e.to_string()))?;
    if a.edge_list {
        print!("{}", g.to_edge_list());
    } else {
        let m = g.metrics();
        print_json(&serde_json::json!({
            "graph": g,
            "metrics": {
                "n": m.n,
                "edges": m.edge_count,
                "max_degree": m.max_degree,
                "average_degree": format_rational(&m.average_degree),
                "diameter": m.diameter,
            }
        }));
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Compare(a) => cmd_compare(a),
        Command::SearchFailure(a) => cmd_search(a),
        Command::GenGraph(a) => cmd_gen(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e @ (HarnessError::Config(_) | HarnessError::Analysis(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}
