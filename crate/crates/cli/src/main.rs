//! Command-line front door: ingest datasets, run, explain, and benchmark
//! queries.
//!
//! Exit codes: 0 on success, 1 on runtime errors (IO, execution), 2 on
//! usage errors including query syntax and validation failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use triejoin::executor::{execute, ExecOptions, RuleResult};
use triejoin::frontend::{parse_program, validate, Program, RuleIR};
use triejoin::planner::{explain, plan_rule, PlanOptions};
use triejoin::setkernel::{oracle_optimize, Granularity};
use triejoin::storage::{
    encode_graph, load_relation, read_snapshot, register_graph, write_snapshot, AnnotType, Catalog,
    GraphDataset, OrderingStrategy,
};

#[derive(Parser)]
#[command(name = "triejoin", version, about = "Trie-based worst-case-optimal join engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest an edge list: encode, order, optionally prune, snapshot.
    Load(LoadArgs),
    /// Run a query file and print its results.
    Query(RunArgs),
    /// Print the chosen plan for each rule of a query file.
    Explain(RunArgs),
    /// Time a query over repeated runs and report metrics.
    Bench(BenchArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Edge-list file: whitespace-separated pairs, `#` comments, optional
    /// numeric third column.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Snapshot to read (query/bench/explain) or write (load).
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Node ordering applied at encode time.
    #[arg(long, default_value = "degree")]
    ordering: String,
    /// Keep only edges with src id > dst id (symmetric inputs).
    #[arg(long)]
    prune: bool,
    /// Seed for the random ordering.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct LoadArgs {
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Relation,
    Set,
    Block,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputArg {
    Tsv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Query file in the rule language.
    #[arg(long)]
    query: PathBuf,
    /// Set-layout granularity (`oracle` reports, under bench only).
    #[arg(long, value_enum, default_value = "set")]
    layout: LayoutArg,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, value_enum, default_value = "tsv")]
    output: OutputArg,
    /// Force the single-node plan.
    #[arg(long)]
    no_ghd: bool,
    /// Disable shared-node elimination.
    #[arg(long)]
    no_dedup: bool,
    /// Disable selection pushdown.
    #[arg(long)]
    no_pushdown: bool,
    /// Force full re-evaluation per round for fixpoint rules.
    #[arg(long)]
    naive: bool,
    /// Emit metrics JSON to stderr after the results.
    #[arg(long)]
    metrics: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Timed repetitions; the lowest and highest are dropped.
    #[arg(long, default_value_t = 7)]
    repeat: usize,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Load(args) => cmd_load(&args),
        Command::Query(args) => cmd_query(&args),
        Command::Explain(args) => cmd_explain(&args),
        Command::Bench(args) => cmd_bench(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn granularity_of(layout: LayoutArg) -> Granularity {
    match layout {
        LayoutArg::Relation => Granularity::RelationLevel,
        LayoutArg::Set | LayoutArg::Oracle => Granularity::SetLevel,
        LayoutArg::Block => Granularity::block_level(),
    }
}

fn load_dataset(data: &DataArgs) -> Result<GraphDataset, CliError> {
    if let Some(snap) = &data.snapshot {
        if snap.exists() && data.dataset.is_none() {
            return read_snapshot(snap).map_err(|e| CliError::Runtime(e.to_string()));
        }
    }
    let Some(path) = &data.dataset else {
        return Err(CliError::Usage(
            "either --dataset or an existing --snapshot is required".into(),
        ));
    };
    let strategy = OrderingStrategy::parse(&data.ordering, data.seed)
        .ok_or_else(|| CliError::Usage(format!("unknown ordering `{}`", data.ordering)))?;
    let raw = load_relation(path, 2, None).map_err(|e| CliError::Runtime(e.to_string()))?;
    encode_graph(&raw, strategy, data.prune).map_err(|e| CliError::Runtime(e.to_string()))
}

fn read_query(path: &Path) -> Result<Program, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    parse_program(&text).map_err(|e| CliError::Usage(e.to_string()))
}

/// Binds every unknown binary atom name in the query to the dataset's
/// edge relation, so pattern queries over aliases run without a bind step.
fn auto_bind(catalog: &mut Catalog, program: &Program) -> Result<(), CliError> {
    let mut heads: Vec<&str> = Vec::new();
    for rule in &program.rules {
        for atom in &rule.body_atoms {
            let known = catalog.contains(&atom.relation)
                || heads.contains(&atom.relation.as_str())
                || atom.relation == triejoin::frontend::IMPLICIT_INV_DEGREE;
            if !known && atom.terms.len() == 2 {
                catalog
                    .alias(&atom.relation, "Edge")
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
            }
        }
        heads.push(&rule.head_name);
    }
    Ok(())
}

fn prepare(args: &RunArgs) -> Result<(Catalog, Vec<RuleIR>, ExecOptions), CliError> {
    let dataset = load_dataset(&args.data)?;
    let mut catalog = Catalog::new();
    register_graph(&mut catalog, "Edge", &dataset, granularity_of(args.layout))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let program = read_query(&args.query)?;
    auto_bind(&mut catalog, &program)?;
    let ir = validate(&program, &catalog).map_err(|e| CliError::Usage(e.to_string()))?;
    let opts = ExecOptions {
        threads: args.threads.max(1),
        force_naive: args.naive,
        capture_workload: false,
        granularity: granularity_of(args.layout),
        plan: PlanOptions {
            no_ghd: args.no_ghd,
            no_dedup: args.no_dedup,
            no_selection_pushdown: args.no_pushdown,
            edge_cap: None,
        },
        ..Default::default()
    };
    Ok((catalog, ir, opts))
}

fn cmd_load(args: &LoadArgs) -> Result<(), CliError> {
    if args.data.dataset.is_none() {
        return Err(CliError::Usage("load requires --dataset".into()));
    }
    let dataset = load_dataset(&args.data)?;
    let mut catalog = Catalog::new();
    register_graph(&mut catalog, "Edge", &dataset, Granularity::SetLevel)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(snap) = &args.data.snapshot {
        write_snapshot(snap, &dataset).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let skew = dataset
        .density_skew()
        .map(|s| format!("{s:.4}"))
        .unwrap_or_else(|_| "n/a".into());
    println!(
        "loaded {} edges over {} nodes (ordering {}, pruned {}, density skew {})",
        dataset.edges.len(),
        dataset.dict.len(),
        dataset.ordering_name,
        dataset.pruned,
        skew
    );
    Ok(())
}

fn format_value(v: f64, ty: Option<AnnotType>) -> String {
    match ty {
        Some(AnnotType::Int) | Some(AnnotType::Long) => format!("{}", v as i64),
        _ => format!("{v}"),
    }
}

fn print_result(result: &RuleResult, output: OutputArg) {
    match output {
        OutputArg::Tsv => {
            if result.key_vars.is_empty() {
                if let Some(v) = result.scalar() {
                    println!("{}", format_value(v, result.annotation));
                }
                return;
            }
            for (row, value) in result.decoded() {
                let mut line = row.join("\t");
                if let Some(v) = value {
                    line.push('\t');
                    line.push_str(&format_value(v, result.annotation));
                }
                println!("{line}");
            }
        }
        OutputArg::Json => {
            let rows: Vec<serde_json::Value> = result
                .decoded()
                .into_iter()
                .map(|(row, value)| {
                    serde_json::json!({
                        "key": row,
                        "value": value,
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "head": result.head,
                "columns": result.key_vars,
                "rows": rows,
            });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
        }
    }
}

fn cmd_query(args: &RunArgs) -> Result<(), CliError> {
    let (catalog, ir, opts) = prepare(args)?;
    let outcome = execute(&ir, &catalog, &opts).map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(last) = outcome.results.last() {
        print_result(last, args.output);
    }
    if args.metrics {
        eprintln!(
            "{}",
            serde_json::to_string_pretty(&metrics_doc(&outcome.metrics)).unwrap()
        );
    }
    Ok(())
}

fn cmd_explain(args: &RunArgs) -> Result<(), CliError> {
    let (catalog, ir, opts) = prepare(args)?;
    let mut docs = Vec::new();
    for rule in &ir {
        let plan =
            plan_rule(rule, &catalog, &opts.plan).map_err(|e| CliError::Runtime(e.to_string()))?;
        let ex = explain(rule, &plan);
        match args.output {
            OutputArg::Tsv => print!("{ex}"),
            OutputArg::Json => docs.push(serde_json::to_value(&ex).unwrap()),
        }
    }
    if matches!(args.output, OutputArg::Json) {
        println!(
            "{}",
            serde_json::to_string_pretty(&serde_json::Value::Array(docs)).unwrap()
        );
    }
    Ok(())
}

fn metrics_doc(metrics: &triejoin::executor::ExecMetrics) -> serde_json::Value {
    serde_json::json!({
        "schema_version": 1,
        "metrics": metrics,
    })
}

fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    if args.repeat < 3 {
        return Err(CliError::Usage("--repeat must be at least 3".into()));
    }
    let (catalog, ir, mut opts) = prepare(&args.run)?;
    let oracle = matches!(args.run.layout, LayoutArg::Oracle);
    opts.capture_workload = oracle;

    let mut timings = Vec::with_capacity(args.repeat);
    let mut last = None;
    for _ in 0..args.repeat {
        let start = std::time::Instant::now();
        let outcome =
            execute(&ir, &catalog, &opts).map_err(|e| CliError::Runtime(e.to_string()))?;
        timings.push(start.elapsed().as_secs_f64() * 1e3);
        last = Some(outcome);
    }
    let outcome = last.expect("bench ran");

    // Drop the extremes, average the rest.
    let mut sorted = timings.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let kept = &sorted[1..sorted.len() - 1];
    let mean = kept.iter().sum::<f64>() / kept.len() as f64;

    let mut doc = serde_json::json!({
        "schema_version": 1,
        "repeats": args.repeat,
        "timings_ms": timings,
        "mean_ms_trimmed": mean,
        "results": outcome
            .results
            .last()
            .map(|r| serde_json::json!({"head": r.head, "rows": r.tuples.len(), "scalar": r.scalar()})),
        "metrics": outcome.metrics,
    });
    if oracle {
        let report = oracle_optimize(&outcome.workload);
        doc["layout_oracle"] = serde_json::to_value(&report).unwrap();
    }
    println!("{}", serde_json::to_string_pretty(&doc).unwrap());
    Ok(())
}
