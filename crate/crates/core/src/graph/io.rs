//! Edge-list, label and id-map files.
//!
//! Edge lines are `u_id \t v_id [\t rating ...]`; fields after the second
//! are ignored, so MovieLens rating dumps load directly as binary
//! interactions. Blank lines and lines starting with `#` are skipped.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::BipartiteGraph;
use crate::error::{CoinError, Result};

/// How original node ids are mapped to dense indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdScheme {
    /// Index in order of first appearance across the input files.
    #[default]
    FirstSeen,
    /// Index in sorted order; ids that all parse as integers sort numerically.
    Sorted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    U,
    V,
}

/// Bijection between original ids and dense indices for one partition.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    fn build<'a>(scheme: IdScheme, seen: impl Iterator<Item = &'a str>) -> Self {
        let mut map = Self::default();
        for id in seen {
            map.insert(id);
        }
        if scheme == IdScheme::Sorted {
            let mut ids = std::mem::take(&mut map.ids);
            let numeric: Option<Vec<i64>> = ids.iter().map(|s| s.parse().ok()).collect();
            match numeric {
                Some(_) => ids.sort_by_key(|s| s.parse::<i64>().expect("checked numeric")),
                None => ids.sort(),
            }
            map = Self::default();
            for id in &ids {
                map.insert(id);
            }
        }
        map
    }

    fn insert(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), i);
        i
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn original(&self, index: usize) -> Option<&str> {
        self.ids.get(index).map(String::as_str)
    }

    /// Writes `original_id \t dense_index` lines.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| CoinError::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (i, id) in self.ids.iter().enumerate() {
            writeln!(out, "{id}\t{i}").map_err(|e| CoinError::io(path, e))?;
        }
        out.flush().map_err(|e| CoinError::io(path, e))
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CoinError::io(path, e))?;
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |msg: &str| CoinError::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                msg: msg.to_owned(),
            };
            let (id, idx) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected id<TAB>index"))?;
            let idx: usize = idx.trim().parse().map_err(|_| parse_err("index is not an integer"))?;
            entries.push((idx, id.to_owned()));
        }
        entries.sort();
        let mut map = Self::default();
        for (expected, (idx, id)) in entries.iter().enumerate() {
            if *idx != expected {
                return Err(CoinError::Parse {
                    path: path.to_path_buf(),
                    line: 0,
                    msg: format!("indices are not dense: missing {expected}"),
                });
            }
            map.insert(id);
        }
        Ok(map)
    }
}

fn read_raw_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| CoinError::io(path, e))?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t').map(str::trim);
        match (fields.next(), fields.next()) {
            (Some(u), Some(v)) if !u.is_empty() && !v.is_empty() => {
                pairs.push((u.to_owned(), v.to_owned()));
            }
            _ => {
                return Err(CoinError::Parse {
                    path: path.to_path_buf(),
                    line: n + 1,
                    msg: format!("expected `u_id<TAB>v_id`, got {trimmed:?}"),
                })
            }
        }
    }
    Ok(pairs)
}

/// A loaded graph together with the id maps for both partitions.
#[derive(Clone, Debug)]
pub struct EdgeListData {
    pub graph: BipartiteGraph,
    pub u_ids: IdMap,
    pub v_ids: IdMap,
}

impl EdgeListData {
    /// Persists both id maps as `u_ids.tsv` and `v_ids.tsv` under `dir`.
    pub fn write_id_maps(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let u = dir.join("u_ids.tsv");
        let v = dir.join("v_ids.tsv");
        self.u_ids.write_tsv(&u)?;
        self.v_ids.write_tsv(&v)?;
        Ok((u, v))
    }

    /// Maps a file of `u_id \t v_id` pairs through this graph's id maps.
    pub fn map_pairs(&self, path: &Path) -> Result<Vec<(usize, usize)>> {
        read_pairs(path, &self.u_ids, &self.v_ids)
    }
}

/// Loads an edge list. `extra` files (e.g. held-out test edges) contribute
/// node ids to the maps but not edges to the graph, so nodes that appear
/// only at test time still get an embedding row.
pub fn load_edge_list(path: &Path, scheme: IdScheme, extra: &[&Path]) -> Result<EdgeListData> {
    let pairs = read_raw_pairs(path)?;
    if pairs.is_empty() {
        return Err(CoinError::EmptyInput(path.to_path_buf()));
    }
    let mut extra_pairs = Vec::new();
    for p in extra {
        extra_pairs.extend(read_raw_pairs(p)?);
    }
    let all = || pairs.iter().chain(&extra_pairs);
    let u_ids = IdMap::build(scheme, all().map(|(u, _)| u.as_str()));
    let v_ids = IdMap::build(scheme, all().map(|(_, v)| v.as_str()));
    let edges = pairs
        .iter()
        .map(|(u, v)| (u_ids.get(u).expect("mapped"), v_ids.get(v).expect("mapped")));
    let graph = BipartiteGraph::from_edges(u_ids.len(), v_ids.len(), edges)?;
    Ok(EdgeListData { graph, u_ids, v_ids })
}

/// Reads `u_id \t v_id` pairs using existing id maps.
pub fn read_pairs(path: &Path, u_ids: &IdMap, v_ids: &IdMap) -> Result<Vec<(usize, usize)>> {
    let raw = read_raw_pairs(path)?;
    raw.iter()
        .map(|(u, v)| match (u_ids.get(u), v_ids.get(v)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(CoinError::InvalidArgument(format!(
                "{}: pair ({u}, {v}) uses an id unknown to the graph",
                path.display()
            ))),
        })
        .collect()
}

/// Writes dense-index pairs back out with their original ids.
pub fn write_pairs(path: &Path, pairs: &[(usize, usize)], u_ids: &IdMap, v_ids: &IdMap) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| CoinError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for &(u, v) in pairs {
        let (Some(a), Some(b)) = (u_ids.original(u), v_ids.original(v)) else {
            return Err(CoinError::InvalidArgument(format!(
                "pair ({u}, {v}) has no original id"
            )));
        };
        writeln!(out, "{a}\t{b}").map_err(|e| CoinError::io(path, e))?;
    }
    out.flush().map_err(|e| CoinError::io(path, e))
}

/// Class labels for the nodes of one partition.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelSet {
    pub side: Side,
    /// `(node index, class index)`, sorted by node index.
    pub labels: Vec<(usize, usize)>,
    pub num_classes: usize,
}

impl LabelSet {
    pub fn new(side: Side, mut labels: Vec<(usize, usize)>, num_nodes: usize) -> Result<Self> {
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(CoinError::InvalidArgument(format!("node {} labeled twice", w[0].0)));
        }
        if let Some(&(n, _)) = labels.iter().find(|&&(n, _)| n >= num_nodes) {
            return Err(CoinError::InvalidArgument(format!("label for unknown node index {n}")));
        }
        let mut classes: Vec<usize> = labels.iter().map(|&(_, c)| c).collect();
        classes.sort_unstable();
        classes.dedup();
        let num_classes = classes.len();
        // Re-densify so class indices cover 0..num_classes.
        let labels = labels
            .into_iter()
            .map(|(n, c)| (n, classes.binary_search(&c).expect("present")))
            .collect();
        Ok(Self {
            side,
            labels,
            num_classes,
        })
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().map(|&(n, _)| n)
    }

    pub fn classes(&self) -> Vec<usize> {
        self.labels.iter().map(|&(_, c)| c).collect()
    }
}

/// Loads `node_id \t class_id` lines for the given partition.
pub fn load_labels(path: &Path, side: Side, ids: &IdMap) -> Result<LabelSet> {
    let text = fs::read_to_string(path).map_err(|e| CoinError::io(path, e))?;
    let mut class_ids = IdMap::default();
    let mut labels = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| CoinError::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            msg,
        };
        let mut fields = trimmed.split('\t').map(str::trim);
        let (Some(node), Some(class)) = (fields.next(), fields.next()) else {
            return Err(parse_err(format!("expected `node_id<TAB>class_id`, got {trimmed:?}")));
        };
        let idx = ids
            .get(node)
            .ok_or_else(|| parse_err(format!("node id {node:?} does not appear in the graph")))?;
        labels.push((idx, class_ids.insert(class)));
    }
    LabelSet::new(side, labels, ids.len())
}
