//! `bilink` command-line tool.
//!
//! Exit status: 0 on success, 1 when a scoring method fails, 2 for usage,
//! configuration or I/O problems.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::{Map, Value};

use bilink::config::RunConfig;
use bilink::eval::{benchmark_run, read_results_csv, render_markdown, EvalContext, RESULTS_FILE};
use bilink::graph::{load_edge_list, split_per_left_node, EdgeFormat};
use bilink::{BipartiteGraph, EdgeSplit, Method};

#[derive(Parser)]
#[command(name = "bilink", version, about = "Link prediction on bipartite graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load an edge list and print its size, degrees and density.
    Ingest(IngestArgs),
    /// Hold out a fraction of every left node's links and save both parts.
    Split(SplitArgs),
    /// Split, score every candidate pair with one method and evaluate.
    Run(RunArgs),
    /// Run the dataset x method x seed matrix described by a config file.
    Benchmark(BenchmarkArgs),
    /// Render a results CSV as a Markdown table.
    Report(ReportArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list file.
    input: PathBuf,
    /// `tsv` (left, right per line) or `movielens` (u.data layout).
    #[arg(long, default_value = "tsv", value_parser = parse_format)]
    format: EdgeFormat,
    /// Drop left nodes with fewer links, then right nodes left isolated.
    #[arg(long)]
    min_left_degree: Option<usize>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Also write the (filtered) graph as a TSV edge list.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    #[arg(long)]
    seed: u64,
    /// Directory for train.tsv, test.tsv and split.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// katz, l3, l5, l7, lp, pa, dist, spm, gbdt, pca, lda, bpr or lightgcn.
    #[arg(long)]
    method: String,
    /// Split seed; also seeds any randomness inside the method.
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    fraction: f64,
    /// Reuse a split saved by `bilink split` instead of drawing one.
    #[arg(long)]
    split: Option<PathBuf>,
    /// JSON object of method parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Override one parameter, e.g. `--set model.n_trees=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Directory for scores.tsv and report.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    config: PathBuf,
    /// Write here instead of the config's output_dir.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// results.csv, or a benchmark output directory containing one.
    results: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(anyhow::Error),
    Method(anyhow::Error),
}

trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn method(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn method(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Method(e.into()))
    }
}

fn parse_format(s: &str) -> Result<EdgeFormat, String> {
    s.replace('-', "_").parse().map_err(|e: bilink::Error| e.to_string())
}

fn load_graph(args: &GraphArgs) -> anyhow::Result<BipartiteGraph> {
    let graph = load_edge_list(&args.input, args.format)?;
    Ok(match args.min_left_degree {
        Some(min) => graph.min_degree_filter(min)?,
        None => graph,
    })
}

fn ingest(args: IngestArgs) -> Result<(), Failure> {
    let graph = load_graph(&args.graph).usage()?;
    let stats = graph.degree_stats();
    println!("left nodes\tright nodes\tlinks\tmean degree\tmean left degree\tmean right degree\tdensity");
    println!(
        "{}\t{}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.5}",
        graph.left_count(),
        graph.right_count(),
        graph.edge_count(),
        stats.mean_degree,
        stats.mean_left_degree,
        stats.mean_right_degree,
        graph.density().usage()?
    );
    if let Some(out) = args.out {
        graph.write_tsv(&out).usage()?;
    }
    Ok(())
}

fn split(args: SplitArgs) -> Result<(), Failure> {
    let graph = load_graph(&args.graph).usage()?;
    let split = split_per_left_node(&graph, args.fraction, args.seed).usage()?;
    split.save(&graph, &args.out).usage()?;
    println!(
        "train {}\ttest {}\t-> {}",
        split.train_edges.len(),
        split.test_edges.len(),
        args.out.display()
    );
    Ok(())
}

/// Sets `path` (dot-separated) in `object`; the key must already exist.
fn set_param(object: &mut Value, path: &str, value: Value) -> anyhow::Result<()> {
    let mut target = object;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let map = target
            .as_object_mut()
            .ok_or_else(|| anyhow!("parameter {path:?}: {} is not an object", keys[..i].join(".")))?;
        target = map
            .get_mut(*key)
            .ok_or_else(|| anyhow!("this method has no parameter {path:?}"))?;
    }
    *target = value;
    Ok(())
}

fn build_method(args: &RunArgs) -> anyhow::Result<Method> {
    let base = Method::from_name(&args.method).ok_or_else(|| {
        anyhow!(
            "unknown method {:?}; expected one of katz, l3, l5, l7, lp, pa, dist, spm, gbdt, pca, lda, bpr, lightgcn",
            args.method
        )
    })?;
    let mut value = serde_json::to_value(&base)?;
    if let Some(path) = &args.params {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let params: Map<String, Value> =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        for (key, v) in params {
            if key != "method" {
                set_param(&mut value, &key, v)?;
            }
        }
    }
    let flags: [(&str, Option<Value>); 7] = [
        ("alpha", args.alpha.map(Value::from)),
        ("epsilon", args.epsilon.map(Value::from)),
        ("repetitions", args.repetitions.map(Value::from)),
        ("layers", args.layers.map(Value::from)),
        ("epochs", args.epochs.map(Value::from)),
        ("dim", args.dim.map(Value::from)),
        ("learning_rate", args.learning_rate.map(Value::from)),
    ];
    for (key, v) in flags {
        if let Some(v) = v {
            set_param(&mut value, key, v)?;
        }
    }
    for assignment in &args.set {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {assignment:?}"))?;
        let v = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set_param(&mut value, key, v)?;
    }
    Ok(serde_json::from_value(value)?)
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let method = build_method(&args).usage()?;
    let graph = load_graph(&args.graph).usage()?;
    let split = match &args.split {
        Some(dir) => {
            let split = EdgeSplit::load(&graph, dir).usage()?;
            if split.seed != args.seed {
                return Err(Failure::Usage(anyhow!(
                    "split in {} was drawn with seed {}, not {}",
                    dir.display(),
                    split.seed,
                    args.seed
                )));
            }
            split
        }
        None => split_per_left_node(&graph, args.fraction, args.seed).usage()?,
    };
    let dataset = args
        .graph
        .input
        .file_stem()
        .map_or_else(|| "graph".to_string(), |s| s.to_string_lossy().into_owned());
    let ctx = EvalContext::new(&dataset, &graph, &split).usage()?;
    info!("scoring {} candidate pairs with {method}", ctx.candidates.len());
    let (report, table) = ctx
        .evaluate(&method)
        .with_context(|| format!("method {method} failed"))
        .method()?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .usage()?;
    table
        .write_tsv_annotated(
            &ctx.train,
            &args.out.join("scores.tsv"),
            &[("config", &report.config_digest)],
        )
        .usage()?;
    let report_path = args.out.join("report.json");
    let json = serde_json::to_string_pretty(&report).usage()?;
    fs::write(&report_path, json + "\n")
        .with_context(|| format!("writing {}", report_path.display()))
        .usage()?;
    println!(
        "{}\t{}\tseed {}\tAUPR {:.4}\tAUROC {:.4}\t{:.2} s",
        report.dataset_name, report.method_name, report.seed, report.aupr, report.auroc, report.runtime_seconds
    );
    Ok(())
}

fn benchmark(args: BenchmarkArgs) -> Result<(), Failure> {
    let mut config = RunConfig::load(&args.config)
        .with_context(|| format!("loading {}", args.config.display()))
        .usage()?;
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }
    if args.workers.is_some() {
        config.workers = args.workers;
    }
    let report = benchmark_run(&config).usage()?;
    print!("{}", render_markdown(&report.cells, Some(&report.run_digest)));
    match report.failures() {
        0 => Ok(()),
        n => Err(Failure::Method(anyhow!(
            "{n} of {} cells failed; see {}",
            report.cells.len(),
            config.output_dir.join(RESULTS_FILE).display()
        ))),
    }
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let path = if args.results.is_dir() {
        args.results.join(RESULTS_FILE)
    } else {
        args.results
    };
    let cells = read_results_csv(&path).usage()?;
    let md = render_markdown(&cells, None);
    match args.out {
        Some(out) => write_text(&out, &md).usage()?,
        None => print!("{md}"),
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Split(a) => split(a),
        Command::Run(a) => run(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Method(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
