use coin_core::trainer::{save_model, train_with, TrainConfig};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::Result;
use crate::run::{create_dir, RunData, RunDir};

/// Trains one model per configured seed and writes the run directory.
pub fn run(config: &RunConfig, parallel_seeds: bool) -> Result<RunDir> {
    config.validate()?;
    let dir = RunDir::new(&config.out);
    create_dir(&dir.root)?;
    let data = RunData::prepare(config)?;
    log::info!(
        "{}: {} U-nodes, {} V-nodes, {} training edges, {} test positives, {} test negatives",
        config.dataset,
        data.split.train.num_u(),
        data.split.train.num_v(),
        data.split.train.num_edges(),
        data.split.test_pos.len(),
        data.split.test_neg.len()
    );
    data.save(&dir)?;
    let text = serde_json::to_string_pretty(config).expect("config serializes");
    std::fs::write(dir.config(), text + "\n").map_err(|e| coin_core::CoinError::io(dir.config(), e))?;

    let train_seed = |&seed: &u64| -> Result<()> {
        let tc = TrainConfig {
            seed,
            ..config.train.clone()
        };
        let seed_dir = dir.seed_dir(seed);
        create_dir(&seed_dir)?;
        let (model, report) = train_with(&data.split.train, &tc, |r| {
            log::debug!(
                "seed {seed} epoch {}: mi={:.6e} instance={:.6}",
                r.epoch,
                r.mi,
                r.instance_obj
            );
        })?;
        save_model(&model, &tc, &dir.checkpoint(seed))?;
        report.write_csv(&seed_dir.join("mi_curve.csv"))?;
        let last = report.records.last().or(report.initial.as_ref());
        log::info!(
            "seed {seed}: {} epochs in {:.1}s, final mi={:.6e}",
            report.records.len(),
            report.wall_time_secs,
            last.map_or(0.0, |r| r.mi)
        );
        Ok(())
    };
    if parallel_seeds {
        config.seeds.par_iter().try_for_each(train_seed)?;
    } else {
        config.seeds.iter().try_for_each(train_seed)?;
    }
    Ok(dir)
}
