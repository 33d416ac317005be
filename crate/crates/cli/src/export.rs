use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use coin_core::graph::IdMap;
use coin_core::trainer::load_model;
use coin_core::{CoinError, Tensor};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::run::{create_dir, require, RunData, RunDir};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ExportFormat {
    Tsv,
}

/// Writes `u_embeddings.tsv` and `v_embeddings.tsv`, one `id\tv1\t…\tvd`
/// row per node, and returns their paths.
pub fn run(run: &Path, checkpoint: Option<&Path>, out: Option<&Path>) -> Result<(PathBuf, PathBuf)> {
    let dir = RunDir::new(run);
    for p in [dir.u_ids(), dir.v_ids()] {
        require(&p).map_err(|_| CliError::Config(format!("id map {} is missing", p.display())))?;
    }
    require(&dir.config())?;
    let config = RunConfig::load(&dir.config())?;
    let checkpoint = match checkpoint {
        Some(p) => p.to_path_buf(),
        None => dir.checkpoint(config.seeds[0]),
    };
    require(&checkpoint)?;
    let data = RunData::load(&dir)?;
    let ckpt = load_model(&checkpoint)?;
    ckpt.ensure_graph(data.split.train.num_u(), data.split.train.num_v())?;
    let emb = ckpt.model.embed(&data.split.train)?;

    let out = out.map_or_else(|| dir.root.join("export"), Path::to_path_buf);
    create_dir(&out)?;
    let u = out.join("u_embeddings.tsv");
    let v = out.join("v_embeddings.tsv");
    write_tsv(&u, &emb.emb_u, &data.u_ids)?;
    write_tsv(&v, &emb.emb_v, &data.v_ids)?;
    Ok((u, v))
}

fn write_tsv(path: &Path, m: &Tensor, ids: &IdMap) -> Result<()> {
    let mut text = String::new();
    for r in 0..m.rows() {
        let id = ids
            .original(r)
            .ok_or_else(|| CliError::Config(format!("row {r} has no original id")))?;
        text.push_str(id);
        for x in m.row(r) {
            // `Display` for f64 prints the shortest representation that round-trips.
            write!(text, "\t{x}").expect("write to string");
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CoinError::io(path, e).into())
}
