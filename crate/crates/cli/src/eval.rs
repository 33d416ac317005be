use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use coin_core::eval::{cluster_assign, evaluate_link_prediction, evaluate_ranking, nmi_with, MetricsReport};
use coin_core::graph::{load_labels, LabelSet, Side};
use coin_core::trainer::{load_model, Checkpoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{RunConfig, Task};
use crate::error::{CliError, Result};
use crate::run::{require, RunData, RunDir};

pub struct EvalRequest {
    pub run: PathBuf,
    pub task: Task,
    /// Explicit checkpoints; defaults to every seed of the run.
    pub checkpoints: Vec<PathBuf>,
    pub labels: Option<PathBuf>,
    pub label_side: Option<Side>,
    pub out: Option<PathBuf>,
}

/// Evaluates every checkpoint and aggregates the metrics across seeds.
pub fn run(req: &EvalRequest, overrides: &[String]) -> Result<(MetricsReport, PathBuf)> {
    let dir = RunDir::new(&req.run);
    require(&dir.config())?;
    let mut config = RunConfig::load(&dir.config())?;
    config.apply_overrides(overrides)?;
    let mut data = RunData::load(&dir)?;
    let checkpoints = if req.checkpoints.is_empty() {
        dir.checkpoints(&config)
    } else {
        req.checkpoints.clone()
    };
    for c in &checkpoints {
        require(c)?;
    }

    let labels = match req.task {
        Task::Cluster => {
            let path = req
                .labels
                .clone()
                .or_else(|| config.labels.clone())
                .ok_or_else(|| CliError::Config("cluster evaluation needs a labels file".into()))?;
            require(&path)?;
            let side = req.label_side.unwrap_or(config.label_side);
            let ids = match side {
                Side::U => &data.u_ids,
                Side::V => &data.v_ids,
            };
            Some(load_labels(&path, side, ids)?)
        }
        _ => None,
    };
    if req.task == Task::Link && !data.has_test_neg {
        let mut rng = ChaCha8Rng::seed_from_u64(config.split_seed);
        data.split.test_neg = data.split.sample_non_edges(data.split.test_pos.len(), &mut rng)?;
        log::info!(
            "no test negatives on file; sampled {} non-edges",
            data.split.test_neg.len()
        );
    }

    let mut runs = Vec::with_capacity(checkpoints.len());
    let mut seeds = Vec::with_capacity(checkpoints.len());
    let mut skipped_users = 0;
    for path in &checkpoints {
        let ckpt = load_model(path)?;
        ckpt.ensure_graph(data.split.train.num_u(), data.split.train.num_v())?;
        seeds.push(ckpt.config.seed);
        let (metrics, skipped) = evaluate_one(&ckpt, &config, req.task, &data, labels.as_ref(), path)?;
        skipped_users = skipped;
        runs.push(metrics);
    }
    let report = MetricsReport::aggregate(req.task.name(), &config.dataset, seeds, &runs, skipped_users)?;
    let out = req
        .out
        .clone()
        .unwrap_or_else(|| dir.root.join(format!("metrics_{}.json", req.task.name())));
    report.write_json(&out)?;
    Ok((report, out))
}

fn evaluate_one(
    ckpt: &Checkpoint,
    config: &RunConfig,
    task: Task,
    data: &RunData,
    labels: Option<&LabelSet>,
    path: &Path,
) -> Result<(BTreeMap<String, f64>, usize)> {
    let train = &data.split.train;
    let mut metrics = BTreeMap::new();
    let mut skipped = 0;
    match task {
        Task::Rec => {
            let emb = ckpt.model.embed(train)?;
            let r = evaluate_ranking(
                &emb,
                &ckpt.model.scorer,
                config.scoring,
                train,
                &data.split.test_pos,
                &config.ks,
            )?;
            metrics.extend(r.named_means());
            skipped = r.skipped_users;
        }
        Task::Link => {
            let emb = ckpt.model.embed(train)?;
            // Per-checkpoint generator so results do not depend on evaluation order.
            let mut rng = ChaCha8Rng::seed_from_u64(config.split_seed ^ ckpt.config.seed.rotate_left(32));
            let m = evaluate_link_prediction(
                &emb,
                train,
                &data.split.test_pos,
                &data.split.test_neg,
                &config.link,
                &mut rng,
            )?;
            metrics.insert("auc_roc".into(), m.auc_roc);
            metrics.insert("auc_pr".into(), m.auc_pr);
        }
        Task::Cluster => {
            let labels = labels.expect("labels loaded for the cluster task");
            let (pu, pv) = ckpt.model.cluster_probs(train)?;
            let assign = cluster_assign(if labels.side == Side::U { &pu } else { &pv });
            let pred: Vec<usize> = labels.nodes().map(|n| assign[n]).collect();
            metrics.insert("nmi".into(), nmi_with(&pred, &labels.classes(), config.nmi)?);
        }
    }
    log::info!("{}: {metrics:?}", path.display());
    Ok((metrics, skipped))
}
