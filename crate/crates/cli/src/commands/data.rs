use anyhow::{Context, Result};
use cpdrums_core::codec::{build_vocab, encode_condition, encode_drums};
use cpdrums_core::nn::ModelConfig;
use cpdrums_core::preprocess::Phrase;
use serde::Serialize;

use super::preprocess::{PHRASES, SPLITS};
use crate::config::RunConfig;
use crate::store::{self, Header, SplitManifest, VocabFile, SPLITS as SPLIT_NAMES};
use crate::tokens::{TokenFile, TokenRecord};

pub const VOCAB: &str = "vocab.json";

pub fn token_path(split: &str) -> String {
    format!("tokens/{split}.bin")
}

/// Loads the phrase store and split manifest, checking both against the
/// current config.
pub fn load_phrases(config: &RunConfig) -> Result<(Vec<Phrase>, SplitManifest)> {
    let hash = config.data_hash();
    let path = config.path(PHRASES);
    let (header, phrases) = store::read_phrases(&path).context("run preprocess first")?;
    header.expect("phrases", &hash, &path)?;
    let spath = config.path(SPLITS);
    let manifest: SplitManifest = store::read_json(&spath)?;
    manifest.header.expect("splits", &hash, &spath)?;
    Ok((phrases, manifest))
}

#[derive(Debug, Clone, Serialize)]
pub struct VocabSummary {
    pub stage: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub vocab_hash: String,
    /// Onset, group, type, duration, value.
    pub encoder_sizes: [usize; 5],
    /// Onset, drums.
    pub decoder_sizes: [usize; 2],
    pub reference_encoder_sizes: [usize; 5],
    pub reference_decoder_sizes: [usize; 2],
}

/// Published vocabulary sizes of the full-scale corpus.
pub const REFERENCE_ENCODER_SIZES: [usize; 5] = [31, 5, 7, 40, 33];
pub const REFERENCE_DECODER_SIZES: [usize; 2] = [31, 16];

/// Builds the vocabulary over every stored phrase. Token inventories carry
/// no information about targets, and covering all splits keeps valid and
/// test phrases free of out-of-vocabulary durations or tempi.
pub fn vocab(config: &RunConfig) -> Result<VocabSummary> {
    let (phrases, _) = load_phrases(config)?;
    let vocab = build_vocab(&phrases, config.settings.codec_config())?;
    let vocab_hash = store::vocab_hash(&vocab);
    let hash = config.data_hash();
    let summary = VocabSummary {
        stage: "vocab",
        config_hash: hash.clone(),
        seed: config.seed(),
        vocab_hash: vocab_hash.clone(),
        encoder_sizes: vocab.encoder.sizes(),
        decoder_sizes: vocab.decoder.sizes(),
        reference_encoder_sizes: REFERENCE_ENCODER_SIZES,
        reference_decoder_sizes: REFERENCE_DECODER_SIZES,
    };
    store::write_json(&config.path(VOCAB), &VocabFile { header: Header::new("vocab", &hash, config.seed()), vocab_hash, vocab })?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct TokenizeSummary {
    pub stage: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub vocab_hash: String,
    /// Records written per split.
    pub records: [usize; 3],
    /// Phrases skipped because a stream exceeds the model's length limits.
    pub too_long: Vec<String>,
    pub max_encoder_len: usize,
    pub max_decoder_len: usize,
}

pub fn tokenize(config: &RunConfig) -> Result<TokenizeSummary> {
    let (phrases, manifest) = load_phrases(config)?;
    let hash = config.data_hash();
    let (vocab, vocab_hash) = store::read_vocab(&config.path(VOCAB), &hash).context("run vocab first")?;
    let mut summary = TokenizeSummary {
        stage: "tokenize",
        config_hash: hash.clone(),
        seed: config.seed(),
        vocab_hash: vocab_hash.clone(),
        records: [0; 3],
        too_long: Vec::new(),
        max_encoder_len: 0,
        max_decoder_len: 0,
    };
    for (k, split) in SPLIT_NAMES.iter().enumerate() {
        let mut records = Vec::new();
        for p in store::select(&phrases, &manifest, split)? {
            let condition = encode_condition(p, &vocab).with_context(|| format!("encoding {}", p.source_id))?;
            let drums = encode_drums(p, &vocab).with_context(|| format!("encoding {}", p.source_id))?;
            // The decoder reads every word but the last.
            if condition.len() > ModelConfig::MAX_ENC_LEN || drums.len() - 1 > ModelConfig::MAX_DEC_LEN {
                log::warn!("skipping {}: {} condition and {} drum words", p.source_id, condition.len(), drums.len());
                summary.too_long.push(p.source_id.clone());
                continue;
            }
            summary.max_encoder_len = summary.max_encoder_len.max(condition.len());
            summary.max_decoder_len = summary.max_decoder_len.max(drums.len());
            records.push(TokenRecord { source_id: p.source_id.clone(), condition, drums });
        }
        summary.records[k] = records.len();
        let file = TokenFile {
            data_hash: hash.clone(),
            vocab_hash: vocab_hash.clone(),
            seed: config.seed(),
            split: (*split).into(),
            records,
        };
        file.write(&config.path(&token_path(split)))?;
    }
    Ok(summary)
}
