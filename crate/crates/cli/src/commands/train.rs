use std::fs::OpenOptions;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use cpdrums_core::nn::{evaluate, train_step, AdamW, EarlyStopping, EvalStats, Example, Model};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{token_path, VOCAB};
use crate::checkpoint::{epoch_file, resolve_marker, set_marker, Checkpoint, CheckpointMeta};
use crate::config::RunConfig;
use crate::store::{self, append_jsonl};
use crate::tokens::TokenFile;

pub const CHECKPOINTS: &str = "checkpoints";
pub const TRAIN_LOG: &str = "train_log.jsonl";
const SHUFFLE_SALT: u64 = 0x5348_5546_464C_4521;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Step { epoch: usize, step: u64, loss: f64, words: usize, grad_norm: f64, lr: f64, seed: u64 },
    Epoch {
        epoch: usize,
        step: u64,
        train_loss: f64,
        valid_loss: f64,
        onset_accuracy: f64,
        drums_accuracy: f64,
        best: bool,
        seed: u64,
    },
}

impl LogRecord {
    fn epoch(&self) -> usize {
        match self {
            LogRecord::Step { epoch, .. } | LogRecord::Epoch { epoch, .. } => *epoch,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Ignore existing checkpoints and start over.
    pub fresh: bool,
    /// Stop after this many epochs in this invocation.
    pub epochs: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub stage: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub vocab_hash: String,
    pub parameters: usize,
    pub resumed_after_epoch: Option<usize>,
    pub epochs_completed: usize,
    pub steps: u64,
    pub best_epoch: Option<usize>,
    pub best_valid_loss: Option<f64>,
    pub stopped_early: bool,
    pub last_valid: Option<EvalRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalRecord {
    pub loss: f64,
    pub onset_accuracy: f64,
    pub drums_accuracy: f64,
}

impl From<EvalStats> for EvalRecord {
    fn from(e: EvalStats) -> Self {
        Self { loss: e.loss, onset_accuracy: e.onset_accuracy, drums_accuracy: e.drums_accuracy }
    }
}

fn load_tokens(config: &RunConfig, split: &str, data_hash: &str, vocab_hash: &str) -> Result<Vec<Example>> {
    let path = config.path(&token_path(split));
    let file = TokenFile::read(&path).context("run tokenize first")?;
    file.expect(data_hash, vocab_hash, &path)?;
    Ok(file.records.iter().map(|r| r.example()).collect())
}

/// Keeps the log lines of epochs up to `last_epoch` and drops the rest,
/// which belong to work the resumed run is about to redo.
fn truncate_log(path: &Path, last_epoch: usize) -> Result<()> {
    let mut kept = Vec::new();
    if path.exists() {
        let file = std::fs::File::open(path)?;
        for line in BufReader::new(file).lines() {
            let line = line?;
            let rec: LogRecord = serde_json::from_str(&line).with_context(|| format!("parsing {}", path.display()))?;
            if rec.epoch() <= last_epoch {
                kept.extend_from_slice(line.as_bytes());
                kept.push(b'\n');
            }
        }
    }
    store::write_atomic(path, &kept)
}

pub fn read_log(path: &Path) -> Result<Vec<LogRecord>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines().map(|l| serde_json::from_str(l).with_context(|| format!("parsing {}", path.display()))).collect()
}

fn epoch_order(seed: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SHUFFLE_SALT);
    rng.set_stream(epoch as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

pub fn run(config: &RunConfig, options: &TrainOptions) -> Result<TrainSummary> {
    let s = &config.settings;
    let data_hash = config.data_hash();
    let seed = config.seed();
    let (vocab, vocab_hash) = store::read_vocab(&config.path(VOCAB), &data_hash).context("run vocab first")?;
    let train = load_tokens(config, "train", &data_hash, &vocab_hash)?;
    let mut valid = load_tokens(config, "valid", &data_hash, &vocab_hash)?;
    ensure!(!train.is_empty(), "the training split is empty");
    if valid.is_empty() {
        log::warn!("validation split is empty; validating on the training split");
        valid = train.clone();
    }
    let model_config = s.model_config(vocab.encoder.sizes(), vocab.decoder.sizes());
    let train_config = s.train_config();
    let dir = config.path(CHECKPOINTS);
    let log_path = config.path(TRAIN_LOG);

    let last = if options.fresh { None } else { resolve_marker(&dir, "last")? };
    let (mut model, mut opt, mut stopper, start_epoch, resumed) = match last {
        Some(path) => {
            let ck = Checkpoint::read(&path)?;
            if ck.meta.model != model_config {
                bail!("{} was trained with a different model configuration; rerun with --fresh", path.display());
            }
            ensure!(ck.meta.data_hash == data_hash, "{} was trained on other data; rerun with --fresh", path.display());
            ensure!(ck.meta.vocab_hash == vocab_hash, "{} uses another vocabulary; rerun with --fresh", path.display());
            ensure!(ck.meta.seed == seed, "{} was trained with seed {}; rerun with --fresh", path.display(), ck.meta.seed);
            truncate_log(&log_path, ck.meta.epoch)?;
            let mut stopper = ck.meta.early_stopping;
            stopper.patience = train_config.patience;
            log::info!("resuming after epoch {} (step {})", ck.meta.epoch, ck.meta.step);
            (ck.model.clone(), ck.optimizer(&train_config), stopper, ck.meta.epoch + 1, Some(ck.meta.epoch))
        }
        None => {
            if dir.exists() {
                std::fs::remove_dir_all(&dir).with_context(|| format!("clearing {}", dir.display()))?;
            }
            store::write_atomic(&log_path, b"")?;
            let model = Model::<f32>::new(model_config.clone(), seed)?;
            let opt = AdamW::new(&model.params, &train_config);
            (model, opt, EarlyStopping::new(train_config.patience), 0, None)
        }
    };
    let mut summary = TrainSummary {
        stage: "train",
        config_hash: config.hash(),
        seed,
        vocab_hash: vocab_hash.clone(),
        parameters: model.params.scalar_count(),
        resumed_after_epoch: resumed,
        epochs_completed: start_epoch,
        steps: opt.step,
        best_epoch: stopper.best.map(|_| stopper.best_epoch),
        best_valid_loss: stopper.best,
        stopped_early: stopper.should_stop(),
        last_valid: None,
    };
    if summary.stopped_early {
        return Ok(summary);
    }
    let mut log = OpenOptions::new().append(true).open(&log_path)?;
    let end_epoch = match options.epochs {
        Some(n) => train_config.max_epochs.min(start_epoch + n),
        None => train_config.max_epochs,
    };
    for epoch in start_epoch..end_epoch {
        let order = epoch_order(seed, epoch, train.len());
        let (mut loss_sum, mut words) = (0.0, 0usize);
        for chunk in order.chunks(train_config.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train[i]).collect();
            let st = train_step(&mut model, &mut opt, &batch, train_config.max_grad_norm, seed)?;
            loss_sum += st.loss * st.words as f64;
            words += st.words;
            append_jsonl(
                &mut log,
                &LogRecord::Step {
                    epoch,
                    step: st.step,
                    loss: st.loss,
                    words: st.words,
                    grad_norm: st.grad_norm,
                    lr: train_config.lr,
                    seed,
                },
            )?;
        }
        let v = evaluate(&model, &valid)?;
        let best = stopper.observe(epoch, v.loss);
        let meta = CheckpointMeta {
            model: model_config.clone(),
            train: train_config.clone(),
            seed,
            config_hash: config.hash(),
            data_hash: data_hash.clone(),
            vocab_hash: vocab_hash.clone(),
            epoch,
            step: opt.step,
            early_stopping: stopper,
            valid_loss: v.loss,
        };
        let file = epoch_file(epoch);
        Checkpoint::new(meta, &model, &opt).write(&dir.join(&file))?;
        if best {
            set_marker(&dir, "best", &file)?;
        }
        set_marker(&dir, "last", &file)?;
        let train_loss = loss_sum / words.max(1) as f64;
        append_jsonl(
            &mut log,
            &LogRecord::Epoch {
                epoch,
                step: opt.step,
                train_loss,
                valid_loss: v.loss,
                onset_accuracy: v.onset_accuracy,
                drums_accuracy: v.drums_accuracy,
                best,
                seed,
            },
        )?;
        log::info!(
            "epoch {epoch}: train {train_loss:.4}, valid {:.4}, accuracy {:.3}/{:.3}{}",
            v.loss,
            v.onset_accuracy,
            v.drums_accuracy,
            if best { " (best)" } else { "" }
        );
        summary.epochs_completed = epoch + 1;
        summary.steps = opt.step;
        summary.last_valid = Some(v.into());
        if stopper.should_stop() {
            summary.stopped_early = true;
            break;
        }
    }
    summary.best_epoch = stopper.best.map(|_| stopper.best_epoch);
    summary.best_valid_loss = stopper.best;
    Ok(summary)
}
