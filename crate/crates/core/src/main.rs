use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use topic_context::config::RunConfig;
use topic_context::ensemble::ConsensusConfig;
use topic_context::hierarchy::Granularity;
use topic_context::pipeline::{report_from_table, report_paths, run_pipeline, Pipeline};
use topic_context::recsys::Algorithm;
use topic_context::{Error, Result};

/// Topic hierarchies from privileged text views, used as context for
/// context-aware recommendation.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Comma-separated list lengths, e.g. `5,10`.
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Clone)]
struct Cell {
    /// Weight row as `alpha,beta,theta`; the first configured row by default.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    /// Granularity as `min,max`; the first configured one by default.
    #[arg(long, value_delimiter = ',')]
    granularity: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the three term-value views and the privileged split.
    Ingest(Common),
    /// Ensemble co-association matrices, consensus and dendrogram per weight row.
    Cluster(Common),
    /// Select and label topics for every weight row and granularity.
    Topics(Common),
    /// Train one algorithm on the full log and dump the model.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cell: Cell,
        #[arg(long)]
        algorithm: Algorithm,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate every configured cell and write the report.
    Evaluate(Common),
    /// Print the summary of a written report table.
    Report {
        /// `report.tsv` of a previous run.
        table: PathBuf,
    },
    /// Run every stage end to end.
    RunAll(Common),
}

fn load(c: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&c.config)?;
    if let Some(d) = &c.output_dir {
        cfg.output_dir = d.clone();
    }
    cfg.k = c.k.unwrap_or(cfg.k);
    cfg.tau = c.tau.unwrap_or(cfg.tau);
    cfg.folds = c.folds.unwrap_or(cfg.folds);
    if let Some(n) = &c.n_values {
        cfg.n_values = n.clone();
    }
    cfg.workers = c.workers.or(cfg.workers);
    Ok(cfg)
}

fn print(value: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&value).expect("json"));
}

fn cache_dir(p: &Pipeline, stage: &str, key: &str) -> String {
    p.config().output_dir.join("cache").join(stage).join(key).display().to_string()
}

fn pick_cell(cfg: &RunConfig, cell: &Cell) -> Result<(ConsensusConfig, Granularity)> {
    let w = match cell.weights.as_deref() {
        Some(&[a, b, t]) => ConsensusConfig::new(a, b, t)?,
        Some(v) => return Err(Error::Config(format!("--weights needs 3 values, got {}", v.len()))),
        None => cfg.weights[0],
    };
    let g = match cell.granularity.as_deref() {
        Some(&[x, y]) => Granularity::new(x, y)?,
        Some(v) => return Err(Error::Config(format!("--granularity needs 2 values, got {}", v.len()))),
        None => cfg.granularities[0],
    };
    Ok((w, g))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(c) => {
            let p = Pipeline::new(load(&c)?)?;
            let ing = p.ingest()?;
            print(json!({
                "stage": "ingest",
                "dir": cache_dir(&p, "ingest", &ing.key),
                "privileged": ing.privileged.len(),
                "remainder": ing.remainder.len(),
                "skipped": ing.skipped.entries.len(),
            }));
        }
        Command::Cluster(c) => {
            let p = Pipeline::new(load(&c)?)?;
            let ing = p.ingest()?;
            let ens = p.ensemble(&ing)?;
            let mut rows = Vec::new();
            for w in &p.config().weights {
                let h = p.hierarchy(&ens, w)?;
                rows.push(json!({"weights": w.label(), "dir": cache_dir(&p, "hierarchy", &h.key)}));
            }
            print(json!({"stage": "cluster", "ensemble": cache_dir(&p, "ensemble", &ens.key), "hierarchies": rows}));
        }
        Command::Topics(c) => {
            let p = Pipeline::new(load(&c)?)?;
            let ing = p.ingest()?;
            let ens = p.ensemble(&ing)?;
            let mut rows = Vec::new();
            for (w, r) in p.all_topics(&ing, &ens) {
                for t in r? {
                    rows.push(json!({
                        "weights": w.label(),
                        "granularity": t.granularity.to_string(),
                        "topics": t.topic_count(),
                        "dir": cache_dir(&p, "topics", &t.key),
                    }));
                }
            }
            print(json!({"stage": "topics", "results": rows}));
        }
        Command::Train {
            common,
            cell,
            algorithm,
            out,
        } => {
            let cfg = load(&common)?;
            let (w, g) = pick_cell(&cfg, &cell)?;
            let p = Pipeline::new(cfg)?;
            let topics = if algorithm == Algorithm::Ibcf {
                None
            } else {
                let ing = p.ingest()?;
                let ens = p.ensemble(&ing)?;
                let h = p.hierarchy(&ens, &w)?;
                Some(p.topics(&ing, &h, g)?)
            };
            p.train_and_dump(topics.as_ref(), algorithm, &out)?;
            print(json!({"stage": "train", "algorithm": algorithm.key(), "out": out.display().to_string()}));
        }
        Command::Evaluate(c) | Command::RunAll(c) => {
            let cfg = load(&c)?;
            let (report, stats) = run_pipeline(&cfg)?;
            let out = report_paths(&cfg.output_dir);
            eprint!("{}", report.summary());
            print(json!({
                "stage": "evaluate",
                "outputs": out,
                "cells": report.summaries.len(),
                "failed_cells": report.failures.len(),
                "stats": stats,
            }));
        }
        Command::Report { table } => {
            print!("{}", report_from_table(Path::new(&table))?.summary());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let detail: serde_json::Value = match &e {
                Error::Violations(v) => json!(v),
                _ => serde_json::Value::Null,
            };
            eprintln!("{}", json!({"error": e.to_string(), "kind": e.kind(), "violations": detail}));
            ExitCode::FAILURE
        }
    }
}
