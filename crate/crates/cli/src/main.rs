use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use shuffle_core::analysis::{
    load_general, load_graph_based, load_universal, lower_bound, tradeoff_curve, worst_case_load,
};
use shuffle_core::decomposition::{decompose, search_decompositions};
use shuffle_core::fixtures::run_goldens;
use shuffle_core::harness::{
    check_records, run_experiment, summarize, sweep_svg, tradeoff_svg, write_records_csv, write_tradeoff_csv,
    ExperimentConfig, LoadSummary, ShuffleMode,
};
use shuffle_core::model::{canonicalize_assignment, AssignmentFile};
use shuffle_core::placement::place_caches;
use shuffle_core::protocol::execute_shuffle;
use shuffle_core::verify::{minimality_probe, optimality_sweep};
use shuffle_core::{FileTransitionGraph, SystemParams};

#[derive(Parser)]
#[command(name = "shuffle", version, about = "Coded data shuffling: loads, simulations and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form loads for every cache size, or one trade-off curve.
    Analyze(AnalyzeArgs),
    /// Random, worst-case or explicit shuffling experiments.
    Simulate(SimulateArgs),
    /// Exhaustive sweeps over every permutation for small K.
    Verify(VerifyArgs),
    /// Decomposes one explicit assignment and checks its broadcast.
    Decompose(DecomposeArgs),
    /// Reruns the worked-example fixtures.
    Goldens,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(short = 'k', long)]
    workers: usize,
    /// Cycle count of the transition graph; defaults to 1.
    #[arg(long, default_value_t = 1)]
    gamma: usize,
    /// Files per worker for the general-N column.
    #[arg(long, default_value_t = 1)]
    files_per_worker: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Random,
    WorstCase,
    Explicit,
}

impl ModeArg {
    fn name(self) -> &'static str {
        match self {
            ModeArg::Random => "random",
            ModeArg::WorstCase => "worst-case",
            ModeArg::Explicit => "explicit",
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON experiment config; its keys override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short = 'n', long)]
    files: Option<usize>,
    #[arg(short = 'k', long)]
    workers: Option<usize>,
    #[arg(short = 's', long)]
    cache: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Random)]
    mode: ModeArg,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    search_budget: usize,
    #[arg(long, default_value_t = 0)]
    payload_bytes: usize,
    /// Scenario file for explicit mode.
    #[arg(long)]
    assignment: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Comma-separated N/K values; runs one configuration per value at fixed K and Ŝ.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 6)]
    max_k: usize,
    /// Also drop each message in turn and confirm decoding breaks.
    #[arg(long)]
    minimality: bool,
}

#[derive(Args)]
struct DecomposeArgs {
    assignment: PathBuf,
    #[arg(long, default_value_t = 0)]
    search_budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

/// Flags first, then the config file's keys on top (`params` merged field by field).
fn build_config(args: &SimulateArgs) -> anyhow::Result<ExperimentConfig> {
    let mut params = serde_json::Map::new();
    for (key, v) in [("n_files", args.files), ("n_workers", args.workers), ("cache_size", args.cache)] {
        if let Some(v) = v {
            params.insert(key.into(), json!(v));
        }
    }
    let mut cfg = json!({
        "mode": args.mode.name(),
        "trials": args.trials,
        "rounds": args.rounds,
        "seed": args.seed,
        "search_budget": args.search_budget,
        "payload_bytes": args.payload_bytes,
        "assignment": args.assignment,
        "csv": args.csv,
        "svg": args.svg,
    });
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let Value::Object(file) = file else { bail!("config must be a JSON object") };
        for (key, v) in file {
            match (key.as_str(), v) {
                ("params", Value::Object(p)) => params.extend(p),
                (_, v) => {
                    cfg[key.as_str()] = v;
                }
            }
        }
    }
    cfg["params"] = Value::Object(params);
    let config: ExperimentConfig = serde_json::from_value(cfg).context("invalid experiment config")?;
    config.params.validate()?;
    Ok(config)
}

fn read_assignment(path: &Path) -> anyhow::Result<(SystemParams, shuffle_core::Assignment)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    AssignmentFile::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print_summary(label: &str, s: &LoadSummary) {
    println!(
        "{label}: trials={} min={} q1={} median={} q3={} max={} mean={} ({:.4}) worst={} ({:.4})",
        s.count,
        s.min,
        s.q1,
        s.median,
        s.q3,
        s.max,
        s.mean,
        s.mean.to_f64(),
        s.worst,
        s.worst.to_f64()
    );
}

fn analyze(args: &AnalyzeArgs) -> anyhow::Result<bool> {
    let k = args.workers;
    if k == 0 || args.gamma == 0 || args.gamma > k {
        bail!("need 1 <= gamma <= K");
    }
    let q = args.files_per_worker.max(1);
    println!("K={k} gamma={} N/K={q}", args.gamma);
    println!("{:>4} {:>12} {:>12} {:>12} {:>12}", "S^", "universal", "graph", "converse", "general");
    for shat in 1..=k {
        println!(
            "{:>4} {:>12} {:>12} {:>12} {:>12}",
            shat,
            load_universal(k, shat).to_string(),
            load_graph_based(k, shat, args.gamma).to_string(),
            lower_bound(k, shat, args.gamma).to_string(),
            load_general(k * q, k, shat).to_string(),
        );
    }
    let curve = tradeoff_curve(k, args.gamma);
    if let Some(path) = &args.csv {
        write_tradeoff_csv(&curve, std::fs::File::create(path)?)?;
    }
    if let Some(path) = &args.svg {
        std::fs::write(path, tradeoff_svg(&curve))?;
    }
    Ok(true)
}

fn simulate(args: &SimulateArgs) -> anyhow::Result<bool> {
    let config = build_config(args)?;
    let explicit = match (&config.mode, &config.assignment) {
        (ShuffleMode::Explicit, Some(path)) => {
            let (p, a) = read_assignment(path)?;
            if p != config.params {
                bail!("scenario parameters {p:?} differ from the config's {:?}", config.params);
            }
            Some(a)
        }
        (ShuffleMode::Explicit, None) => bail!("explicit mode needs --assignment"),
        _ => None,
    };

    let q_values = if args.sweep.is_empty() { vec![config.params.files_per_worker()] } else { args.sweep.clone() };
    let mut all = Vec::new();
    let mut points = Vec::new();
    let mut ok = true;
    for q in q_values {
        let mut c = config.clone();
        if !args.sweep.is_empty() {
            let k = c.params.n_workers;
            c.params = SystemParams::new(k * q, k, c.params.shat() * q)?;
        }
        let records = run_experiment(&c, explicit.as_ref())?;
        if let Err(e) = check_records(&records) {
            eprintln!("verification failed: {e}");
            ok = false;
        }
        if let Some(s) = summarize(&records) {
            print_summary(&format!("N={} K={} S={}", c.params.n_files, c.params.n_workers, c.params.cache_size), &s);
            points.push((q, s));
        }
        all.extend(records);
    }
    if let Some(path) = &config.csv {
        write_records_csv(&all, std::fs::File::create(path)?)?;
    }
    if let Some(path) = &config.svg {
        let title = format!("K = {}, S^ = {}, {} mode", config.params.n_workers, config.params.shat(), config.mode.as_str());
        std::fs::write(path, sweep_svg(&title, &points))?;
    }
    Ok(ok)
}

fn verify(args: &VerifyArgs) -> anyhow::Result<bool> {
    let mut ok = true;
    for k in 1..=args.max_k {
        let r = optimality_sweep(k);
        println!("K={k}: {} instances, {} failures", r.instances, r.failures.len());
        for f in r.failures.iter().take(5) {
            println!("  {f}");
        }
        ok &= r.passed();
        if args.minimality {
            let m = minimality_probe(k);
            println!("K={k}: minimality over {} instances, {} failures", m.instances, m.failures.len());
            for f in m.failures.iter().take(5) {
                println!("  {f}");
            }
            ok &= m.passed();
        }
    }
    Ok(ok)
}

fn decompose_cmd(args: &DecomposeArgs) -> anyhow::Result<bool> {
    let (params, a) = read_assignment(&args.assignment)?;
    let (a, _) = canonicalize_assignment(&a);
    let g = FileTransitionGraph::from_assignment(&a);
    let d = if args.search_budget > 0 {
        search_decompositions(&g, params.shat(), args.search_budget, args.seed)?.best
    } else {
        decompose(&g)?
    };
    let outcome = execute_shuffle(&params, &a, &place_caches(&params, &a), &d, None)?;
    let worst = worst_case_load(params.n_files, params.n_workers, params.shat());
    if args.json {
        let out = json!({
            "gammas": d.gammas,
            "load": outcome.load,
            "worst": worst,
            "subgraphs": d.edge_lists(),
            "verified": outcome.verified(),
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        println!("gammas {:?}  load {}  worst {}", d.gammas, outcome.load, worst);
        for (i, edges) in d.edge_lists().iter().enumerate() {
            let shown: Vec<String> = edges.iter().map(|e| format!("{}->{}:{}", e.from, e.to, e.file)).collect();
            println!("  subgraph {}: {}", i + 1, shown.join(" "));
        }
        println!("verified {}", outcome.verified());
    }
    Ok(outcome.verified())
}

fn goldens() -> anyhow::Result<bool> {
    let checks = run_goldens();
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
        Command::Decompose(a) => decompose_cmd(a),
        Command::Goldens => goldens(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
