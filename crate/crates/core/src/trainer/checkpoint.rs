//! Binary checkpoint format, little-endian throughout:
//!
//! ```text
//! magic      8 bytes  "COINCKPT"
//! version    u32
//! header     u64 byte length, then JSON {"config": …, "dims": …}
//! count      u32 tensor count
//! tensor*    u32 name length, name bytes, u32 rank, rank × u64 dims,
//!            then the f64 values row-major
//! ```
//!
//! Tensors appear in [`ModelDims::layout`] order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use coin_autodiff::Tensor;
use serde::{Deserialize, Serialize};

use super::model::{Model, ModelDims};
use super::TrainConfig;
use crate::error::{CoinError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"COINCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub config: TrainConfig,
    pub dims: ModelDims,
}

/// A loaded checkpoint: the model plus the config it was trained with.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub config: TrainConfig,
}

impl Checkpoint {
    /// Fails unless the model covers a graph of the given partition sizes.
    pub fn ensure_graph(&self, num_u: usize, num_v: usize) -> Result<()> {
        let dims = self.model.dims();
        if (dims.num_u, dims.num_v) != (num_u, num_v) {
            return Err(CoinError::Dimension(format!(
                "checkpoint was trained on a ({}, {}) graph, data has ({num_u}, {num_v}) nodes",
                dims.num_u, dims.num_v
            )));
        }
        Ok(())
    }

    pub fn ensure_width(&self, d: usize) -> Result<()> {
        let have = self.model.dims().d;
        if have != d {
            return Err(CoinError::Dimension(format!("checkpoint has d={have}, expected d={d}")));
        }
        Ok(())
    }
}

pub fn save_model(model: &Model, config: &TrainConfig, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| CoinError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_checkpoint(&mut w, model, config).map_err(|e| CoinError::io(path, e))?;
    w.flush().map_err(|e| CoinError::io(path, e))
}

fn write_checkpoint<W: Write>(w: &mut W, model: &Model, config: &TrainConfig) -> std::io::Result<()> {
    let header = CheckpointHeader {
        config: config.clone(),
        dims: model.dims(),
    };
    let json = serde_json::to_vec(&header).map_err(std::io::Error::other)?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    let tensors = model.named_tensors();
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for (name, t) in tensors {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &dim in t.shape() {
            w.write_all(&(dim as u64).to_le_bytes())?;
        }
        for &x in t.data() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes(&mut self, n: usize, what: &str) -> Result<Vec<u8>> {
        let mut buf = vec![0; n];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| CoinError::Checkpoint(format!("truncated while reading {what}")))?;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.bytes(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        let b = self.bytes(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    fn len(&mut self, what: &str, limit: u64) -> Result<usize> {
        let n = self.u64(what)?;
        if n > limit {
            return Err(CoinError::Checkpoint(format!("{what} of {n} exceeds sanity limit")));
        }
        Ok(n as usize)
    }
}

pub fn load_model(path: &Path) -> Result<Checkpoint> {
    let file = File::open(path).map_err(|e| CoinError::io(path, e))?;
    read_checkpoint(BufReader::new(file)).map_err(|e| match e {
        CoinError::Checkpoint(msg) => CoinError::Checkpoint(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn read_checkpoint<R: Read>(inner: R) -> Result<Checkpoint> {
    let mut r = Reader { inner };
    let magic = r.bytes(8, "magic")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(CoinError::Checkpoint("bad magic bytes, not a checkpoint file".into()));
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(CoinError::Checkpoint(format!(
            "format version {version}, this build reads version {CHECKPOINT_VERSION}"
        )));
    }
    let header_len = r.len("header length", 1 << 24)?;
    let header: CheckpointHeader = serde_json::from_slice(&r.bytes(header_len, "header")?)
        .map_err(|e| CoinError::Checkpoint(format!("malformed header: {e}")))?;
    let layout = header.dims.layout();
    let count = r.u32("tensor count")? as usize;
    if count != layout.len() {
        return Err(CoinError::Checkpoint(format!(
            "header implies {} tensors, file lists {count}",
            layout.len()
        )));
    }
    let mut tensors = Vec::with_capacity(count);
    for (name, shape) in &layout {
        let name_len = r.u32("tensor name length")? as usize;
        let got = String::from_utf8(r.bytes(name_len, "tensor name")?)
            .map_err(|_| CoinError::Checkpoint("tensor name is not UTF-8".into()))?;
        if &got != name {
            return Err(CoinError::Checkpoint(format!("expected tensor {name}, found {got}")));
        }
        let rank = r.u32("rank")? as usize;
        let dims = (0..rank)
            .map(|_| r.len("dimension", 1 << 32))
            .collect::<Result<Vec<_>>>()?;
        if &dims != shape {
            return Err(CoinError::Dimension(format!(
                "{name}: header implies {shape:?}, tensor stored as {dims:?}"
            )));
        }
        let n: usize = dims.iter().product();
        let raw = r.bytes(n * 8, name)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        tensors.push(Tensor::new(dims, data)?);
    }
    let model = Model::from_tensors(header.dims, header.config.leaky_slope, tensors)?;
    Ok(Checkpoint {
        model,
        config: header.config,
    })
}
