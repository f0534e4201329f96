//! Checkpoints: JSON metadata, named `f32` parameter tensors and the Adam
//! moment estimates, enough to resume training bit for bit.

use std::path::Path;

use anyhow::{ensure, Context, Result};
use cpdrums_core::nn::{AdamW, EarlyStopping, Grads, Model, ModelConfig, ParamStore, Tensor, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::bytes::{Reader, Writer};
use crate::store::{write_atomic, FORMAT_VERSION};

pub const MAGIC: [u8; 4] = *b"CPCK";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub seed: u64,
    pub config_hash: String,
    pub data_hash: String,
    pub vocab_hash: String,
    /// Zero-based epoch that just finished.
    pub epoch: usize,
    /// Optimiser steps taken so far.
    pub step: u64,
    pub early_stopping: EarlyStopping,
    pub valid_loss: f64,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub model: Model<f32>,
    pub m: Grads<f32>,
    pub v: Grads<f32>,
}

fn write_tensor_data(w: &mut Writer, t: &Tensor<f32>) {
    for &x in &t.data {
        w.f32(x);
    }
}

fn read_tensor_data(r: &mut Reader<'_>, rows: usize, cols: usize) -> Result<Tensor<f32>> {
    let n = rows.checked_mul(cols).context("tensor shape overflows")?;
    ensure!(n.saturating_mul(4) <= r.remaining(), "tensor of {rows}x{cols} exceeds the file");
    let data = (0..n).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
    Ok(Tensor::from_vec(rows, cols, data))
}

impl Checkpoint {
    pub fn new(meta: CheckpointMeta, model: &Model<f32>, opt: &AdamW<f32>) -> Self {
        Self { meta, model: model.clone(), m: opt.m.clone(), v: opt.v.clone() }
    }

    /// Optimiser state with hyperparameters from `train`.
    pub fn optimizer(&self, train: &TrainConfig) -> AdamW<f32> {
        let mut opt = AdamW::new(&self.model.params, train);
        opt.step = self.meta.step;
        opt.m = self.m.clone();
        opt.v = self.v.clone();
        opt
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::default();
        w.bytes(&MAGIC);
        w.u32(FORMAT_VERSION);
        w.str(&serde_json::to_string(&self.meta)?);
        let params = &self.model.params;
        w.len(params.len());
        for id in params.ids() {
            let t = params.get(id);
            w.str(params.name(id));
            w.len(t.rows);
            w.len(t.cols);
            write_tensor_data(&mut w, t);
        }
        for moments in [&self.m, &self.v] {
            for t in &moments.tensors {
                write_tensor_data(&mut w, t);
            }
        }
        Ok(w.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        ensure!(r.array::<4>()? == MAGIC, "not a checkpoint");
        let version = r.u32()?;
        ensure!(version == FORMAT_VERSION, "checkpoint version {version} is not supported");
        let meta: CheckpointMeta = serde_json::from_str(r.str()?).context("checkpoint metadata")?;
        let n = r.count(12)?;
        let mut params = ParamStore::<f32>::default();
        for _ in 0..n {
            let name = r.str()?.to_owned();
            let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
            params.add(name, read_tensor_data(&mut r, rows, cols)?);
        }
        let mut moments = Vec::with_capacity(2);
        for _ in 0..2 {
            let mut g = Grads::zeros_like(&params);
            for t in &mut g.tensors {
                *t = read_tensor_data(&mut r, t.rows, t.cols)?;
            }
            moments.push(g);
        }
        r.finish()?;
        let v = moments.pop().expect("two moments");
        let m = moments.pop().expect("two moments");
        let model = Model::from_params(meta.model.clone(), params)?;
        Ok(Self { meta, model, m, v })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_bytes(&bytes).with_context(|| format!("loading checkpoint {}", path.display()))
    }
}

pub fn epoch_file(epoch: usize) -> String {
    format!("epoch-{epoch:03}.cpck")
}

/// Points a marker file (`best` or `last`) at a checkpoint file name.
pub fn set_marker(dir: &Path, marker: &str, file: &str) -> Result<()> {
    write_atomic(&dir.join(marker), format!("{file}\n").as_bytes())
}

/// Resolves a marker to a checkpoint path, if the marker exists.
pub fn resolve_marker(dir: &Path, marker: &str) -> Result<Option<std::path::PathBuf>> {
    let path = dir.join(marker);
    if !path.exists() {
        return Ok(None);
    }
    let name = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let name = name.trim();
    ensure!(
        !name.is_empty() && !name.contains(['/', '\\']),
        "marker {} does not name a checkpoint file",
        path.display()
    );
    Ok(Some(dir.join(name)))
}
