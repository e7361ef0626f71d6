use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{digest, EvalContext, LinkScorer};
use crate::config::{MethodEntry, RunConfig};
use crate::error::{Error, Result};
use crate::graph::{split_per_left_node, BipartiteGraph, Pair};
use crate::scores::ScoreTable;

pub const RESULTS_FILE: &str = "results.csv";
pub const RUNTIMES_FILE: &str = "runtimes.csv";
pub const SUMMARY_FILE: &str = "summary.md";
/// Environment variable capping the number of concurrently running cells
/// below the configured (or available) parallelism.
pub const WORKERS_ENV: &str = "BILINK_WORKERS";
const INCOMPLETE_MARKER: &str = "INCOMPLETE";

/// One (dataset, method, seed) cell. Failed cells carry `error` and no metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: String,
    pub method: String,
    pub seed: u64,
    pub aupr: Option<f64>,
    pub auroc: Option<f64>,
    pub n_positives: Option<usize>,
    pub n_candidates: Option<usize>,
    pub config_digest: String,
    pub error: Option<String>,
    #[serde(skip)]
    pub runtime_seconds: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RuntimeRow {
    dataset: String,
    method: String,
    seed: u64,
    runtime_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkReport {
    pub run_digest: String,
    pub cells: Vec<CellResult>,
}

struct Labelled<'a>(&'a MethodEntry);

impl LinkScorer for Labelled<'_> {
    fn name(&self) -> &str {
        self.0.label()
    }

    fn params(&self) -> serde_json::Value {
        serde_json::to_value(&self.0.method).expect("method serializes")
    }

    fn score(&self, train: &BipartiteGraph, pairs: Vec<Pair>, seed: u64) -> Result<ScoreTable> {
        self.0.method.score(train, pairs, seed)
    }
}

fn file_stem(dataset: &str, method: &str, seed: u64) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect()
    };
    format!("{}__{}__{seed}", clean(dataset), clean(method))
}

fn worker_count(config: &RunConfig) -> usize {
    let cap = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0);
    let wanted = config
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    cap.map_or(wanted, |cap| wanted.min(cap))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Precondition(format!("csv {}: {other:?}", path.display())),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

struct CellJob<'a> {
    entry: &'a MethodEntry,
    seed: u64,
}

/// Runs every (dataset, method, seed) cell of `config`, writing per-cell
/// reports and the aggregate CSV and Markdown files under `output_dir`.
/// A failing cell is recorded and the run carries on.
pub fn benchmark_run(config: &RunConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let out = &config.output_dir;
    let cells_dir = out.join("cells");
    let scores_dir = out.join("scores");
    fs::create_dir_all(&cells_dir).map_err(|e| Error::io(&cells_dir, e))?;
    if config.persist_scores {
        fs::create_dir_all(&scores_dir).map_err(|e| Error::io(&scores_dir, e))?;
    }
    let run_digest = config.digest();
    let marker = out.join(INCOMPLETE_MARKER);
    fs::write(
        &marker,
        format!("run {run_digest} started; outputs here are partial until this file is removed\n"),
    )
    .map_err(|e| Error::io(&marker, e))?;
    let resolved = out.join("config.json");
    let config_json = serde_json::json!({ "digest": run_digest, "config": config });
    fs::write(&resolved, serde_json::to_string_pretty(&config_json)?).map_err(|e| Error::io(&resolved, e))?;

    let workers = worker_count(config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    info!("benchmark {run_digest}: {workers} worker(s)");

    let mut cells = Vec::new();
    for dataset in &config.datasets {
        let graph = dataset.load().map_err(|e| e.to_string());
        let mut seeds: Vec<u64> = Vec::new();
        for entry in &config.methods {
            for s in config.seeds_for(entry) {
                if !seeds.contains(&s) {
                    seeds.push(s);
                }
            }
        }
        let contexts: HashMap<u64, std::result::Result<EvalContext, String>> = seeds
            .iter()
            .map(|&seed| {
                let ctx = graph.as_ref().map_err(Clone::clone).and_then(|g| {
                    split_per_left_node(g, config.split.test_fraction, seed)
                        .and_then(|split| EvalContext::new(&dataset.name, g, &split))
                        .map_err(|e| e.to_string())
                });
                (seed, ctx)
            })
            .collect();

        let jobs: Vec<CellJob> = config
            .methods
            .iter()
            .flat_map(|entry| {
                config
                    .seeds_for(entry)
                    .into_iter()
                    .map(move |seed| CellJob { entry, seed })
            })
            .collect();
        let run_one = |job: &CellJob| -> CellResult {
            let scorer = Labelled(job.entry);
            let failed = |digest: String, error: String| CellResult {
                dataset: dataset.name.clone(),
                method: job.entry.label().to_string(),
                seed: job.seed,
                aupr: None,
                auroc: None,
                n_positives: None,
                n_candidates: None,
                config_digest: digest,
                error: Some(error),
                runtime_seconds: None,
            };
            let ctx = match &contexts[&job.seed] {
                Ok(ctx) => ctx,
                Err(e) => {
                    let d = digest(&serde_json::json!({
                        "dataset": dataset.name, "seed": job.seed,
                        "method": scorer.name(), "params": scorer.params(),
                    }));
                    return failed(d, e.clone());
                }
            };
            let stem = file_stem(&dataset.name, job.entry.label(), job.seed);
            let result = ctx.evaluate(&scorer).and_then(|(report, table)| {
                let path = cells_dir.join(format!("{stem}.json"));
                fs::write(&path, serde_json::to_string_pretty(&report)?).map_err(|e| Error::io(&path, e))?;
                if config.persist_scores {
                    let path = scores_dir.join(format!("{stem}.tsv"));
                    table.write_tsv_annotated(&ctx.train, &path, &[("config", &report.config_digest)])?;
                }
                Ok(report)
            });
            match result {
                Ok(r) => {
                    info!(
                        "{} {} seed {}: AUPR {:.4} AUROC {:.4} ({:.2} s)",
                        r.dataset_name, r.method_name, r.seed, r.aupr, r.auroc, r.runtime_seconds
                    );
                    CellResult {
                        dataset: r.dataset_name,
                        method: r.method_name,
                        seed: r.seed,
                        aupr: Some(r.aupr),
                        auroc: Some(r.auroc),
                        n_positives: Some(r.n_positives),
                        n_candidates: Some(r.n_candidates),
                        config_digest: r.config_digest,
                        error: None,
                        runtime_seconds: Some(r.runtime_seconds),
                    }
                }
                Err(e) => {
                    warn!("{} {} seed {} failed: {e}", dataset.name, job.entry.label(), job.seed);
                    let path = cells_dir.join(format!("{stem}.json"));
                    let _ = fs::write(&path, serde_json::json!({ "error": e.to_string() }).to_string());
                    failed(ctx.digest(&scorer), e.to_string())
                }
            }
        };
        cells.extend(pool.install(|| jobs.par_iter().map(run_one).collect::<Vec<_>>()));
    }

    let report = BenchmarkReport { run_digest, cells };
    report.write(out)?;
    fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    Ok(report)
}

impl BenchmarkReport {
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }

    pub fn results_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.cells {
            w.serialize(c).map_err(|e| csv_error(Path::new(RESULTS_FILE), e))?;
        }
        w.into_inner().map_err(|e| Error::Precondition(e.to_string()))
    }

    pub fn runtimes_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.cells {
            if let Some(runtime_seconds) = c.runtime_seconds {
                let row = RuntimeRow {
                    dataset: c.dataset.clone(),
                    method: c.method.clone(),
                    seed: c.seed,
                    runtime_seconds,
                };
                w.serialize(row).map_err(|e| csv_error(Path::new(RUNTIMES_FILE), e))?;
            }
        }
        w.into_inner().map_err(|e| Error::Precondition(e.to_string()))
    }

    /// Writes the results, runtimes and summary files into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join(RESULTS_FILE), &self.results_csv()?)?;
        write_atomic(&dir.join(RUNTIMES_FILE), &self.runtimes_csv()?)?;
        write_atomic(
            &dir.join(SUMMARY_FILE),
            render_markdown(&self.cells, Some(&self.run_digest)).as_bytes(),
        )
    }
}

/// Reads a results CSV, attaching runtimes from a sibling runtimes file if present.
pub fn read_results_csv(path: &Path) -> Result<Vec<CellResult>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut cells: Vec<CellResult> = reader
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| csv_error(path, e))?;
    let runtimes: PathBuf = path.with_file_name(RUNTIMES_FILE);
    if runtimes.is_file() {
        let mut reader = csv::Reader::from_path(&runtimes).map_err(|e| csv_error(&runtimes, e))?;
        let mut by_cell = HashMap::new();
        for row in reader.deserialize::<RuntimeRow>() {
            let row = row.map_err(|e| csv_error(&runtimes, e))?;
            by_cell.insert((row.dataset, row.method, row.seed), row.runtime_seconds);
        }
        for c in &mut cells {
            c.runtime_seconds = by_cell.get(&(c.dataset.clone(), c.method.clone(), c.seed)).copied();
        }
    }
    Ok(cells)
}

fn mean_sd(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

fn metric_cell(values: &[f64], failed: usize, decimals: usize) -> String {
    if values.is_empty() {
        return if failed > 0 {
            format!("failed ({failed})")
        } else {
            String::new()
        };
    }
    let (mean, sd) = mean_sd(values);
    let mut s = match sd {
        Some(sd) => format!("{mean:.decimals$} ± {sd:.decimals$}"),
        None => format!("{mean:.decimals$}"),
    };
    if failed > 0 {
        let _ = write!(s, " ({failed} failed)");
    }
    s
}

/// Table with one row per method and AUPR, AUROC and time columns per
/// dataset; cells show the mean ± sample standard deviation over seeds.
pub fn render_markdown(cells: &[CellResult], run_digest: Option<&str>) -> String {
    let mut datasets: Vec<&str> = Vec::new();
    let mut methods: Vec<&str> = Vec::new();
    for c in cells {
        if !datasets.contains(&c.dataset.as_str()) {
            datasets.push(&c.dataset);
        }
        if !methods.contains(&c.method.as_str()) {
            methods.push(&c.method);
        }
    }
    let mut header = vec!["Method".to_string()];
    for d in &datasets {
        header.extend([format!("{d} AUPR"), format!("{d} AUROC"), format!("{d} Time (s)")]);
    }
    let mut rows = vec![header];
    for m in &methods {
        let mut row = vec![m.to_string()];
        for d in &datasets {
            let group: Vec<&CellResult> = cells.iter().filter(|c| c.dataset == *d && c.method == *m).collect();
            let failed = group.iter().filter(|c| c.error.is_some()).count();
            let collect =
                |f: fn(&CellResult) -> Option<f64>| -> Vec<f64> { group.iter().filter_map(|c| f(c)).collect() };
            row.push(metric_cell(&collect(|c| c.aupr), failed, 4));
            row.push(metric_cell(&collect(|c| c.auroc), failed, 4));
            row.push(metric_cell(&collect(|c| c.runtime_seconds), 0, 2));
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0).max(3))
        .collect();
    let line = |r: &[String]| -> String {
        let padded: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(s, &w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut out = String::new();
    if let Some(d) = run_digest {
        let _ = writeln!(out, "Run `{d}`. Mean ± sample standard deviation over seeds.\n");
    }
    out.push_str(&line(&rows[0]));
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    out.push_str(&line(&rule));
    for r in &rows[1..] {
        out.push_str(&line(r));
    }
    out
}
