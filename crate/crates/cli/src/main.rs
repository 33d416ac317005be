//! `coin`: train, evaluate, self-check and export co-cluster infomax
//! embeddings.

mod check;
mod config;
mod error;
mod eval;
mod export;
mod run;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coin_core::graph::Side;
use serde::de::DeserializeOwned;

use crate::config::{RunConfig, Task};
use crate::error::{CliError, Result};

#[derive(Parser, Debug)]
#[command(name = "coin", version, about = "Co-cluster infomax embeddings for bipartite graphs")]
struct Cli {
    /// Run on a single worker thread.
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one model per seed and write the run directory.
    Train(TrainArgs),
    /// Evaluate the checkpoints of a run directory.
    Eval(EvalArgs),
    /// Run a built-in self-check suite.
    Check(CheckArgs),
    /// Write node embeddings with their original ids.
    Export(ExportArgs),
}

fn parse_json_enum<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Train a single seed.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    clusters_k: Option<usize>,
    #[arg(long)]
    clusters_l: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    /// `literal` or `log`.
    #[arg(long)]
    loss_form: Option<String>,
    /// Link features: `hadamard` or `concat`.
    #[arg(long)]
    feature: Option<String>,
    /// Ranking rule: `mlp` or `dot`.
    #[arg(long)]
    scoring: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Train seeds concurrently.
    #[arg(long)]
    parallel_seeds: bool,
    /// Generic `key=value` override; repeatable. Dotted keys reach nested
    /// sections, e.g. `train.edge_batch=4096`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl TrainArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = RunConfig::load(&self.config)?;
        let mut sets = self.set.clone();
        let mut put = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                sets.insert(0, format!("{key}={v}"));
            }
        };
        let quote = |s: &Option<String>| s.as_ref().map(|s| format!("{s:?}"));
        put("train.lambda", self.lambda.map(|x| x.to_string()));
        put("train.n_k", self.clusters_k.map(|x| x.to_string()));
        put("train.n_l", self.clusters_l.map(|x| x.to_string()));
        put("train.epochs", self.epochs.map(|x| x.to_string()));
        put("train.lr", self.lr.map(|x| x.to_string()));
        put("train.dropout_p", self.dropout.map(|x| x.to_string()));
        put("train.instance_loss_form", quote(&self.loss_form));
        put("link.feature", quote(&self.feature));
        put("scoring", quote(&self.scoring));
        config.apply_overrides(&sets)?;
        if let Some(s) = self.seed {
            config.seeds = vec![s];
        }
        if let Some(s) = &self.seeds {
            config.seeds = s.clone();
        }
        if let Some(o) = &self.out {
            config.out = o.clone();
        }
        Ok(config)
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, value_enum)]
    task: Task,
    /// Run directory written by `train`.
    #[arg(long)]
    run: PathBuf,
    /// Checkpoints to evaluate; defaults to every seed of the run.
    #[arg(long = "checkpoint")]
    checkpoints: Vec<PathBuf>,
    /// Labels for the cluster task, overriding the run configuration.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, value_parser = parse_json_enum::<Side>)]
    label_side: Option<Side>,
    /// Comma-separated cutoffs for the rec task.
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    #[arg(long)]
    scoring: Option<String>,
    #[arg(long)]
    feature: Option<String>,
    /// Metrics JSON path; defaults to `metrics_{task}.json` in the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(value_enum)]
    suite: check::Suite,
    /// Random instances for the theory suite.
    #[arg(long, default_value_t = 100)]
    instances: usize,
    /// Perturb one analytic gradient entry so the failure path runs.
    #[arg(long, hide = true)]
    corrupt_gradient: bool,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tsv")]
    format: export::ExportFormat,
    /// Output directory; defaults to `export/` in the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn setup_threads(deterministic: bool) -> Result<()> {
    let threads = if deterministic {
        Some(1)
    } else {
        match std::env::var("COIN_THREADS") {
            Ok(s) => Some(
                s.parse::<usize>()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| CliError::Config(format!("COIN_THREADS={s:?} is not a positive integer")))?,
            ),
            Err(_) => None,
        }
    };
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    setup_threads(cli.deterministic)?;
    match cli.command {
        Command::Train(args) => {
            let config = args.resolve()?;
            let dir = train::run(&config, args.parallel_seeds)?;
            println!("wrote {}", dir.root.display());
        }
        Command::Eval(args) => {
            let mut sets = args.set.clone();
            if let Some(ks) = &args.ks {
                sets.push(format!("ks={ks:?}"));
            }
            if let Some(s) = &args.scoring {
                sets.push(format!("scoring={s:?}"));
            }
            if let Some(f) = &args.feature {
                sets.push(format!("link.feature={f:?}"));
            }
            let req = eval::EvalRequest {
                run: args.run,
                task: args.task,
                checkpoints: args.checkpoints,
                labels: args.labels,
                label_side: args.label_side,
                out: args.out,
            };
            let (report, path) = eval::run(&req, &sets)?;
            for (name, m) in &report.metrics {
                println!("{name}\t{:.4}\t±{:.4}", m.mean, m.std);
            }
            println!("wrote {}", path.display());
        }
        Command::Check(args) => check::run(args.suite, args.instances, args.corrupt_gradient)?,
        Command::Export(args) => {
            let export::ExportFormat::Tsv = args.format;
            let (u, v) = export::run(&args.run, args.checkpoint.as_deref(), args.out.as_deref())?;
            println!("wrote {} and {}", u.display(), v.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
