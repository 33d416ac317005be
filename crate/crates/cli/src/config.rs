//! Run configuration: dataset paths, task, seeds and the embedded training
//! configuration, loaded from JSON and patched by command-line overrides.

use std::path::{Path, PathBuf};

use coin_core::eval::{LinkEvalConfig, NmiNormalization, ScoringRule};
use coin_core::graph::{IdScheme, Side};
use coin_core::trainer::TrainConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Link,
    #[default]
    Rec,
    Cluster,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Self::Link => "link",
            Self::Rec => "rec",
            Self::Cluster => "cluster",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: String,
    pub task: Task,
    /// Full edge list, split at random when no predefined split is given.
    pub edges: Option<PathBuf>,
    pub train_edges: Option<PathBuf>,
    pub test_edges: Option<PathBuf>,
    pub test_negatives: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub label_side: Side,
    pub id_scheme: IdScheme,
    pub train_fraction: f64,
    /// Sampled test negatives per held-out positive for random splits.
    pub test_neg_ratio: f64,
    pub split_seed: u64,
    pub out: PathBuf,
    pub seeds: Vec<u64>,
    pub ks: Vec<usize>,
    pub scoring: ScoringRule,
    pub nmi: NmiNormalization,
    pub link: LinkEvalConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: "dataset".into(),
            task: Task::Rec,
            edges: None,
            train_edges: None,
            test_edges: None,
            test_negatives: None,
            labels: None,
            label_side: Side::U,
            id_scheme: IdScheme::FirstSeen,
            train_fraction: 0.8,
            test_neg_ratio: 1.0,
            split_seed: 0,
            out: PathBuf::from("runs"),
            seeds: vec![0, 1, 2],
            ks: vec![3, 5, 10],
            scoring: ScoringRule::Mlp,
            nmi: NmiNormalization::Arithmetic,
            link: LinkEvalConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|_| CliError::MissingPath(path.to_path_buf()))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies `key=value` assignments. Keys may be dotted (`train.lambda`);
    /// a bare key that only exists in the training section is routed there.
    /// Values parse as JSON, falling back to a plain string.
    pub fn apply_overrides(&mut self, assignments: &[String]) -> Result<()> {
        if assignments.is_empty() {
            return Ok(());
        }
        let mut doc = serde_json::to_value(&*self).expect("config serializes");
        for a in assignments {
            let (key, raw) = a
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override {a:?} is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut path: Vec<&str> = key.split('.').collect();
            if path.len() == 1 && doc.get(path[0]).is_none() && doc["train"].get(path[0]).is_some() {
                path.insert(0, "train");
            }
            set_path(&mut doc, &path, value).map_err(|msg| CliError::Config(format!("override {key}: {msg}")))?;
        }
        *self = serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must be nonempty".into()));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(CliError::Config("ks must be nonempty and positive".into()));
        }
        if self.edges.is_none() && self.train_edges.is_none() {
            return Err(CliError::Config("either edges or train_edges must be set".into()));
        }
        if self.train_edges.is_some() && self.test_edges.is_none() && self.task != Task::Cluster {
            return Err(CliError::Config("train_edges needs test_edges".into()));
        }
        if self.task == Task::Cluster && self.labels.is_none() {
            return Err(CliError::Config("cluster task needs a labels file".into()));
        }
        for p in self.input_paths() {
            if !p.exists() {
                return Err(CliError::MissingPath(p.to_path_buf()));
            }
        }
        self.train.validate()?;
        Ok(())
    }

    pub fn input_paths(&self) -> impl Iterator<Item = &Path> {
        [
            &self.edges,
            &self.train_edges,
            &self.test_edges,
            &self.test_negatives,
            &self.labels,
        ]
        .into_iter()
        .filter_map(|p| p.as_deref())
    }
}

fn set_path(doc: &mut Value, path: &[&str], value: Value) -> std::result::Result<(), String> {
    let (last, parents) = path.split_last().expect("nonempty key");
    let mut cur = doc;
    for p in parents {
        cur = cur.get_mut(*p).ok_or_else(|| format!("unknown section {p:?}"))?;
    }
    let obj = cur.as_object_mut().ok_or("not a section")?;
    if !obj.contains_key(*last) {
        return Err(format!("unknown field {last:?}"));
    }
    obj.insert((*last).to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_route_and_parse() {
        let mut c = RunConfig::default();
        c.apply_overrides(&[
            "lambda=0".into(),
            "train.epochs=3".into(),
            "dataset=toy".into(),
            "scoring=dot".into(),
            "link.feature=concat".into(),
        ])
        .unwrap();
        assert_eq!(c.train.lambda, 0.0);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.dataset, "toy");
        assert_eq!(c.scoring, ScoringRule::Dot);
        assert!(c.apply_overrides(&["nonsense=1".into()]).is_err());
        assert!(c.apply_overrides(&["epochs".into()]).is_err());
        assert!(c.apply_overrides(&["epochs=-1".into()]).is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"seedz": [1]}"#).is_err());
        let c: RunConfig = serde_json::from_str(r#"{"train": {"lambda": 10}}"#).unwrap();
        assert_eq!(c.train.lambda, 10.0);
        assert_eq!(c.seeds, vec![0, 1, 2]);
    }
}
