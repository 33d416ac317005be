//! Layout of a run directory and the data each command reads from it.
//!
//! ```text
//! out/config.json            resolved run configuration
//! out/u_ids.tsv, v_ids.tsv   id maps
//! out/split/train.tsv        training edges (original ids)
//! out/split/test.tsv         held-out positives
//! out/split/test_neg.tsv     held-out negatives, when any exist
//! out/seed_{s}/model.ckpt
//! out/seed_{s}/mi_curve.csv
//! ```

use std::path::{Path, PathBuf};

use coin_core::graph::{load_edge_list, make_split, read_pairs, write_pairs, BipartiteGraph, DatasetSplit, IdMap};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{RunConfig, Task};
use crate::error::{CliError, Result};

pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.json")
    }

    pub fn u_ids(&self) -> PathBuf {
        self.root.join("u_ids.tsv")
    }

    pub fn v_ids(&self) -> PathBuf {
        self.root.join("v_ids.tsv")
    }

    pub fn split_file(&self, name: &str) -> PathBuf {
        self.root.join("split").join(name)
    }

    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.root.join(format!("seed_{seed}"))
    }

    pub fn checkpoint(&self, seed: u64) -> PathBuf {
        self.seed_dir(seed).join("model.ckpt")
    }

    /// Checkpoints of the seeds listed in the run configuration.
    pub fn checkpoints(&self, config: &RunConfig) -> Vec<PathBuf> {
        config.seeds.iter().map(|&s| self.checkpoint(s)).collect()
    }
}

pub fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingPath(path.to_path_buf()))
    }
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| coin_core::CoinError::io(path, e).into())
}

/// Id maps plus the training graph and held-out pairs.
pub struct RunData {
    pub u_ids: IdMap,
    pub v_ids: IdMap,
    pub split: DatasetSplit,
    /// Whether `split.test_neg` came from a file or the random split rather
    /// than being absent.
    pub has_test_neg: bool,
}

impl RunData {
    /// Loads the dataset named by `config` and splits it for the task.
    pub fn prepare(config: &RunConfig) -> Result<Self> {
        if let Some(train_path) = &config.train_edges {
            let extra: Vec<&Path> = [&config.test_edges, &config.test_negatives]
                .into_iter()
                .filter_map(|p| p.as_deref())
                .collect();
            let data = load_edge_list(train_path, config.id_scheme, &extra)?;
            let test_pos = match &config.test_edges {
                Some(p) => data.map_pairs(p)?,
                None => Vec::new(),
            };
            let test_neg = match &config.test_negatives {
                Some(p) => data.map_pairs(p)?,
                None => Vec::new(),
            };
            let has_test_neg = config.test_negatives.is_some();
            let split = DatasetSplit::from_parts(data.graph, test_pos, test_neg)?;
            return Ok(Self {
                u_ids: data.u_ids,
                v_ids: data.v_ids,
                split,
                has_test_neg,
            });
        }
        let path = config
            .edges
            .as_ref()
            .ok_or_else(|| CliError::Config("no edge list configured".into()))?;
        let extra: Vec<&Path> = config.test_negatives.iter().map(PathBuf::as_path).collect();
        let data = load_edge_list(path, config.id_scheme, &extra)?;
        let given_neg = match &config.test_negatives {
            Some(p) => Some(data.map_pairs(p)?),
            None => None,
        };
        let split = if config.task == Task::Cluster {
            DatasetSplit::from_parts(data.graph, Vec::new(), Vec::new())?
        } else {
            let ratio = if config.task == Task::Link && given_neg.is_none() {
                config.test_neg_ratio
            } else {
                0.0
            };
            let mut rng = ChaCha8Rng::seed_from_u64(config.split_seed);
            let s = make_split(&data.graph, config.train_fraction, ratio, &mut rng)?;
            match given_neg {
                Some(neg) => DatasetSplit::from_parts(s.train, s.test_pos, neg)?,
                None => s,
            }
        };
        let has_test_neg = !split.test_neg.is_empty();
        Ok(Self {
            u_ids: data.u_ids,
            v_ids: data.v_ids,
            split,
            has_test_neg,
        })
    }

    pub fn save(&self, dir: &RunDir) -> Result<()> {
        create_dir(&dir.root.join("split"))?;
        self.u_ids.write_tsv(&dir.u_ids())?;
        self.v_ids.write_tsv(&dir.v_ids())?;
        let s = &self.split;
        write_pairs(&dir.split_file("train.tsv"), s.train.edges(), &self.u_ids, &self.v_ids)?;
        write_pairs(&dir.split_file("test.tsv"), &s.test_pos, &self.u_ids, &self.v_ids)?;
        if self.has_test_neg {
            write_pairs(&dir.split_file("test_neg.tsv"), &s.test_neg, &self.u_ids, &self.v_ids)?;
        }
        Ok(())
    }

    /// Reads the id maps and split persisted by a training run.
    pub fn load(dir: &RunDir) -> Result<Self> {
        for p in [
            dir.u_ids(),
            dir.v_ids(),
            dir.split_file("train.tsv"),
            dir.split_file("test.tsv"),
        ] {
            require(&p)?;
        }
        let u_ids = IdMap::read_tsv(&dir.u_ids())?;
        let v_ids = IdMap::read_tsv(&dir.v_ids())?;
        let train = read_pairs(&dir.split_file("train.tsv"), &u_ids, &v_ids)?;
        let train = BipartiteGraph::from_edges(u_ids.len(), v_ids.len(), train)?;
        let test_pos = read_pairs(&dir.split_file("test.tsv"), &u_ids, &v_ids)?;
        let neg_path = dir.split_file("test_neg.tsv");
        let has_test_neg = neg_path.exists();
        let test_neg = if has_test_neg {
            read_pairs(&neg_path, &u_ids, &v_ids)?
        } else {
            Vec::new()
        };
        Ok(Self {
            u_ids,
            v_ids,
            split: DatasetSplit::from_parts(train, test_pos, test_neg)?,
            has_test_neg,
        })
    }
}
