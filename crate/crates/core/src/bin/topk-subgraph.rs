use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use topk_subgraph::generator::{generate_database, GenParams};
use topk_subgraph::metrics::{kendall_tau_b, precision_at_k, support_pairs, RankedList};
use topk_subgraph::oracle::{ground_truth, read_truth_tsv, DEFAULT_ENUMERATION_CAP};
use topk_subgraph::report::{mined_ranking, read_result, write_result};
use topk_subgraph::{mine, run_chains, Execution, GraphDatabase, MhMode, MineConfig, ScoreFn};

#[derive(Parser)]
#[command(name = "topk-subgraph", version, about = "Sample the top-k frequent induced subgraphs of a graph database")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine frequent p-subgraphs by MCMC sampling
    Mine(MineArgs),
    /// Exhaustively enumerate p-subgraphs and write exact supports
    Enumerate(EnumerateArgs),
    /// Compare a mined result against an enumerated truth file
    Evaluate(EvaluateArgs),
    /// Generate a synthetic database
    Gen(GenArgs),
    /// Print database statistics
    Stats(StatsArgs),
}

#[derive(Args)]
struct MineArgs {
    #[arg(long)]
    input: PathBuf,
    /// Result file (JSON header line + one JSON line per pattern)
    #[arg(long, default_value = "mined.jsonl")]
    output: PathBuf,
    /// Pattern size in vertices
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 100)]
    topk: usize,
    #[arg(long, default_value_t = 100_000)]
    iters: u64,
    #[arg(long, default_value = "s2")]
    score: ScoreFn,
    #[arg(long, default_value = "paper")]
    mh_mode: MhMode,
    #[arg(long, default_value_t = 100_000)]
    queue_cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    #[arg(long, default_value_t = 0.05)]
    jaccard_eps: f64,
    /// Iterations between convergence checkpoints (default: iters/100)
    #[arg(long)]
    checkpoint_every: Option<u64>,
    /// Also write the convergence trace as CSV
    #[arg(long)]
    trace_csv: Option<PathBuf>,
    /// Include wall-clock timings in the result header (makes the file non-reproducible)
    #[arg(long)]
    record_timings: bool,
    /// Run chains on one thread
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    size: usize,
    /// Truth TSV: code, support, comma-separated support-set
    #[arg(long, default_value = "truth.tsv")]
    output: PathBuf,
    /// Per-graph occurrence counts TSV: gid, x
    #[arg(long, default_value = "counts.tsv")]
    counts_output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    mined: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, short)]
    k: usize,
    /// Metrics JSON output
    #[arg(long, default_value = "metrics.json")]
    output: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "db.g")]
    output: PathBuf,
    #[arg(long, default_value_t = 20)]
    graphs: usize,
    #[arg(long, default_value_t = 30)]
    vertices: usize,
    #[arg(long, default_value_t = 1.5)]
    edge_factor: f64,
    #[arg(long, default_value_t = 4)]
    vertex_labels: usize,
    #[arg(long, default_value_t = 2)]
    edge_labels: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
}

fn load(path: &Path) -> Result<GraphDatabase> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let (db, report) =
        GraphDatabase::parse(BufReader::new(file)).with_context(|| format!("cannot parse {}", path.display()))?;
    if !report.rejected.is_empty() {
        eprintln!("warning: {} invalid transaction(s) skipped", report.rejected.len());
    }
    Ok(db)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn cmd_mine(args: MineArgs) -> Result<()> {
    let db = load(&args.input)?;
    let config = MineConfig {
        p: args.size,
        k: args.topk,
        max_iter: args.iters,
        score: args.score,
        mh_mode: args.mh_mode,
        queue_capacity: args.queue_cap,
        seed: args.seed,
        checkpoint_every: args.checkpoint_every,
        num_chains: args.chains,
        jaccard_eps: args.jaccard_eps,
        execution: execution(args.sequential),
        ..Default::default()
    };
    let start = Instant::now();
    let result = if config.num_chains > 1 { run_chains(&db, &config)? } else { mine(&db, &config)? };
    let elapsed = start.elapsed().as_secs_f64();
    write_file(&args.output, &write_result(&result, args.record_timings))?;
    if let Some(path) = &args.trace_csv {
        let mut csv = String::from("iteration,mean_jaccard\n");
        for c in &result.convergence {
            csv.push_str(&format!("{},{}\n", c.iteration, c.mean_jaccard));
        }
        write_file(path, &csv)?;
    }

    println!("{} iterations, {} patterns reported, {:.2}s", result.iterations, result.top.len(), elapsed);
    let t = &result.timings;
    println!("time: sampling {:.3}s, canonical coding {:.3}s, queue {:.3}s", t.sampling_s, t.coding_s, t.queue_s);
    if !result.skipped_graphs.is_empty() {
        println!("{} graph(s) smaller than p were skipped", result.skipped_graphs.len());
    }
    for rec in result.top.iter().take(10) {
        println!("{:>4}  support_a={:<5} score={:<8.3} {}", rec.rank, rec.support_a, rec.score, rec.code);
    }
    Ok(())
}

fn cmd_enumerate(args: EnumerateArgs) -> Result<()> {
    let db = load(&args.input)?;
    let truth = ground_truth(&db, args.size, args.cap, execution(args.sequential))?;
    write_file(&args.output, &truth.to_tsv())?;
    write_file(&args.counts_output, &truth.counts_tsv())?;
    println!(
        "{} distinct patterns, {} occurrences over {} graphs",
        truth.codes.len(),
        truth.per_graph.iter().sum::<u64>(),
        truth.graphs()
    );
    Ok(())
}

#[derive(Serialize)]
struct Metrics {
    k: usize,
    precision_at_k: f64,
    kendall_tau_b: Option<f64>,
    /// Codes in the union of the true and mined top-k.
    union_size: usize,
    convention: &'static str,
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let mined_file = File::open(&args.mined).with_context(|| format!("cannot open {}", args.mined.display()))?;
    let (_, records) = read_result(BufReader::new(mined_file))?;
    let truth_file = File::open(&args.truth).with_context(|| format!("cannot open {}", args.truth.display()))?;
    let mut rows = read_truth_tsv(BufReader::new(truth_file))?;
    if args.k > rows.len() {
        bail!("k = {} exceeds the {} patterns in the truth file", args.k, rows.len());
    }
    // support descending, ties by code ascending
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let actual: HashMap<_, _> = rows.iter().map(|r| (r.0.clone(), r.1)).collect();
    let truth = RankedList::new(rows.into_iter().map(|r| (r.0, r.1 as f64)).collect())?;
    let mined = mined_ranking(&records)?;

    let precision = precision_at_k(&mined, &truth, args.k)?;
    let pairs = support_pairs(&mined, &truth, &actual, args.k);
    let xy: Vec<(f64, f64)> = pairs.iter().map(|p| (p.1, p.2)).collect();
    let tau = match kendall_tau_b(&xy) {
        Ok(t) => Some(t),
        Err(e) => {
            eprintln!("warning: {e}");
            None
        }
    };
    let metrics = Metrics {
        k: args.k,
        precision_at_k: precision,
        kendall_tau_b: tau,
        union_size: pairs.len(),
        convention: "unsampled patterns have expected support 0; truth ties ranked by code",
    };
    write_file(&args.output, &(serde_json::to_string_pretty(&metrics)? + "\n"))?;
    println!("pr@{} = {:.2}", args.k, precision);
    match tau {
        Some(t) => println!("tau-b = {t:.4} over {} patterns", pairs.len()),
        None => println!("tau-b = undefined"),
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let params = GenParams {
        graphs: args.graphs,
        vertices_mean: args.vertices,
        edge_factor: args.edge_factor,
        vertex_labels: args.vertex_labels,
        edge_labels: args.edge_labels,
        seed: args.seed,
    };
    let db = generate_database(&params)?;
    write_file(&args.output, &db.write())?;
    println!("wrote {} graphs to {}", db.len(), args.output.display());
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let db = load(&args.input)?;
    let s = db.stats();
    println!("graphs:        {}", s.graphs);
    println!("avg vertices:  {:.2}", s.avg_vertices);
    println!("avg edges:     {:.2}", s.avg_edges);
    println!("vertex labels: {}", s.vertex_labels);
    println!("edge labels:   {}", s.edge_labels);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Mine(a) => cmd_mine(a),
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Stats(a) => cmd_stats(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
