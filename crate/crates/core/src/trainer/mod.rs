//! Training loop: negative sampling, forward and backward passes, Adam
//! updates, per-epoch MI logging and checkpoints.

mod adam;
mod checkpoint;
mod config;
mod model;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use coin_autodiff::{Graph, Tensor, Var};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoder::{encode_on, Dropout};
use crate::error::{CoinError, Result};
use crate::graph::{BipartiteGraph, EdgePrior, NegativeSampler};
use crate::objectives::{joint_on, mutual_information_on, reduced_instance_objective_on, PairScorer};

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_model, save_model, Checkpoint, CheckpointHeader, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::TrainConfig;
pub use model::{Model, ModelDims, ModelVars};

// Stream for the logging pass's negatives, kept apart from the training stream.
const LOG_STREAM: u64 = 0x5eed_1065;

/// Positive pairs `(us[i], pos[i])` with one sampled negative `neg[i]` each.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairBatch {
    pub us: Vec<usize>,
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

impl PairBatch {
    /// Repeats each edge `negatives` times with a fresh negative per copy.
    pub fn sample<R: Rng + ?Sized>(
        edges: &[(usize, usize)],
        graph: &BipartiteGraph,
        negatives: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let sampler = NegativeSampler::new(graph);
        let n = edges.len() * negatives;
        let mut batch = Self {
            us: Vec::with_capacity(n),
            pos: Vec::with_capacity(n),
            neg: Vec::with_capacity(n),
        };
        for &(u, v) in edges {
            for vn in sampler.sample(u, negatives, rng)? {
                batch.us.push(u);
                batch.pos.push(v);
                batch.neg.push(vn);
            }
        }
        Ok(batch)
    }

    pub fn len(&self) -> usize {
        self.us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.us.is_empty()
    }
}

/// Handles to the three objective terms on a graph.
#[derive(Clone, Copy, Debug)]
pub struct ObjectiveTerms {
    pub mi: Var,
    pub instance: Var,
    pub total: Var,
    pub joint: Var,
    pub pu: Var,
    pub pv: Var,
}

/// Records `λ · I(K;L) + L_I` on `g` in the maximized orientation.
#[allow(clippy::too_many_arguments)]
pub fn objective_on<R: Rng + ?Sized>(
    g: &mut Graph,
    graph: &BipartiteGraph,
    vars: &ModelVars,
    config: &TrainConfig,
    prior: &EdgePrior,
    batch: &PairBatch,
    dropout: Dropout,
    rng: &mut R,
) -> Result<ObjectiveTerms> {
    let (u, v) = encode_on(g, graph, &vars.encoder, vars.init_u, vars.init_v, dropout, rng)?;
    let (mu, mv) = if config.detach_mi {
        (g.detach(u), g.detach(v))
    } else {
        (u, v)
    };
    let pu = vars.head_u.probs(g, mu)?;
    let pv = vars.head_v.probs(g, mv)?;
    let joint = joint_on(g, pu, pv, prior, config.prior)?;
    let mi = mutual_information_on(g, joint)?;

    let scorer = PairScorer::new(g, u, v, Some(vars.scorer), config.similarity)?;
    let pos = scorer.score(g, &batch.us, &batch.pos)?;
    let neg = scorer.score(g, &batch.us, &batch.neg)?;
    let instance = reduced_instance_objective_on(g, pos, neg, config.instance_loss_form, config.instance_reduction)?;

    let weighted = g.scale(mi, config.lambda);
    let total = g.add(weighted, instance)?;
    Ok(ObjectiveTerms {
        mi,
        instance,
        total,
        joint,
        pu,
        pv,
    })
}

/// Logged values after `epoch` optimizer epochs; epoch 0 is the initial model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mi: f64,
    pub instance_obj: f64,
    pub total_obj: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    /// The untrained model's record, present when at least one epoch ran.
    pub initial: Option<EpochRecord>,
    /// One record per completed epoch.
    pub records: Vec<EpochRecord>,
    pub wall_time_secs: f64,
}

impl TrainReport {
    /// Initial record followed by per-epoch records.
    pub fn all_records(&self) -> impl Iterator<Item = &EpochRecord> {
        self.initial.iter().chain(&self.records)
    }

    pub fn record_at(&self, epoch: usize) -> Option<&EpochRecord> {
        self.all_records().find(|r| r.epoch == epoch)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| CoinError::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "epoch,mi,instance_obj,total_obj")?;
            for r in self.all_records() {
                writeln!(w, "{},{},{},{}", r.epoch, r.mi, r.instance_obj, r.total_obj)?;
            }
            w.flush()
        };
        write().map_err(|e| CoinError::io(path, e))
    }
}

/// Trains a fresh model on `graph`.
pub fn train(graph: &BipartiteGraph, config: &TrainConfig) -> Result<(Model, TrainReport)> {
    train_with(graph, config, |_| {})
}

/// Like [`train`], calling `on_epoch` after each record is logged.
pub fn train_with<F: FnMut(&EpochRecord)>(
    graph: &BipartiteGraph,
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<(Model, TrainReport)> {
    config.validate()?;
    if graph.num_edges() == 0 {
        return Err(CoinError::InvalidGraph("training graph has no edges".into()));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut log_rng = ChaCha8Rng::seed_from_u64(config.seed);
    log_rng.set_stream(LOG_STREAM);
    let mut model = Model::new(graph.num_u(), graph.num_v(), config, &mut rng)?;
    let mut report = TrainReport::default();
    if config.epochs == 0 {
        return Ok((model, report));
    }
    let prior = graph.edge_prior()?;
    let initial = log_record(&model, graph, config, &prior, 0, &mut log_rng)?;
    on_epoch(&initial);
    report.initial = Some(initial);

    let mut adam = AdamState::new(model.tensors(), config.beta1, config.beta2, config.adam_eps);
    let dropout = Dropout::Train(config.dropout_p);
    let mut edges = graph.edges().to_vec();
    for epoch in 1..=config.epochs {
        let batches: Vec<Vec<(usize, usize)>> = match config.edge_batch {
            Some(b) if b < edges.len() => {
                edges.shuffle(&mut rng);
                edges.chunks(b).map(<[_]>::to_vec).collect()
            }
            _ => vec![graph.edges().to_vec()],
        };
        for chunk in batches {
            let batch_prior;
            let prior = if chunk.len() == graph.num_edges() {
                &prior
            } else {
                batch_prior = EdgePrior::over_edges(graph.num_u(), graph.num_v(), &chunk)?;
                &batch_prior
            };
            let pairs = PairBatch::sample(&chunk, graph, config.negatives_per_positive, &mut rng)?;
            let mut g = Graph::new();
            let vars = model.register(&mut g);
            let terms = objective_on(&mut g, graph, &vars, config, prior, &pairs, dropout, &mut rng)?;
            check_finite(epoch, "mutual information", g.value(terms.mi).item())?;
            check_finite(epoch, "instance objective", g.value(terms.instance).item())?;
            let loss = g.scale(terms.total, -1.0);
            let mut grads = g.backward(loss)?;
            let grads: Vec<Tensor> = vars.all().iter().map(|&v| grads.take(v)).collect();
            if !grads.iter().all(Tensor::is_finite) {
                return Err(CoinError::NonFinite {
                    epoch,
                    term: "gradient",
                });
            }
            adam_step(&mut model.tensors_mut(), &grads, &mut adam, config.lr)?;
        }
        let record = log_record(&model, graph, config, &prior, epoch, &mut log_rng)?;
        log::debug!(
            "epoch {epoch}: mi={:.6} instance={:.6} total={:.6}",
            record.mi,
            record.instance_obj,
            record.total_obj
        );
        on_epoch(&record);
        report.records.push(record);
    }
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok((model, report))
}

fn check_finite(epoch: usize, term: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(CoinError::NonFinite { epoch, term })
    }
}

/// Evaluates every term with dropout off on the full training prior.
fn log_record<R: Rng + ?Sized>(
    model: &Model,
    graph: &BipartiteGraph,
    config: &TrainConfig,
    prior: &EdgePrior,
    epoch: usize,
    rng: &mut R,
) -> Result<EpochRecord> {
    let pairs = PairBatch::sample(graph.edges(), graph, config.negatives_per_positive, rng)?;
    let mut g = Graph::new();
    let vars = model.register(&mut g);
    let terms = objective_on(&mut g, graph, &vars, config, prior, &pairs, Dropout::Off, rng)?;
    let record = EpochRecord {
        epoch,
        mi: g.value(terms.mi).item(),
        instance_obj: g.value(terms.instance).item(),
        total_obj: g.value(terms.total).item(),
    };
    check_finite(epoch, "mutual information", record.mi)?;
    check_finite(epoch, "instance objective", record.instance_obj)?;
    Ok(record)
}
