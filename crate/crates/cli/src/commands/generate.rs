use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{ensure, Context, Result};
use cpdrums_core::codec::{decode_drums, decoder_tokens, encode_condition};
use cpdrums_core::midi::write_midi;
use cpdrums_core::nn::{generate, GenerateOptions, StopReason};
use cpdrums_core::preprocess::Phrase;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{load_phrases, VOCAB};
use super::train::CHECKPOINTS;
use crate::checkpoint::{resolve_marker, Checkpoint};
use crate::config::RunConfig;
use crate::render::phrase_to_score;
use crate::store::{self, write_atomic};

pub const GENERATED_DIR: &str = "generated";
pub const TRUTH_DIR: &str = "truth";
const GENERATE_SALT: u64 = 0x4745_4E45_5241_5445;

#[derive(Debug, Clone, Default)]
pub struct GenerateArgs {
    /// Defaults to the best checkpoint.
    pub checkpoint: Option<PathBuf>,
    pub split: Option<String>,
    pub limit: Option<usize>,
}

/// Contents of `generated/<id>.tokens.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenStream {
    pub config_hash: String,
    pub seed: u64,
    pub source_id: String,
    pub checkpoint_epoch: usize,
    pub tau: Option<f64>,
    pub stop: StopReason,
    pub bars: usize,
    /// Decoder words as `[onset id, drums id]`, BOS first.
    pub ids: Vec<[u32; 2]>,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratedItem {
    pub source_id: String,
    pub file: String,
    pub bars: usize,
    pub hits: usize,
    pub words: usize,
    pub stop: StopReason,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerateSummary {
    pub stage: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub checkpoint: String,
    pub split: String,
    pub items: Vec<GeneratedItem>,
}

/// File stem for a phrase id: characters outside `[A-Za-z0-9._-]` become
/// `_`, and a numeric suffix resolves collisions.
pub fn file_stem(id: &str, taken: &mut BTreeSet<String>) -> String {
    let base: String =
        id.chars().map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' }).collect();
    let mut stem = base.clone();
    let mut k = 1;
    while !taken.insert(stem.clone()) {
        stem = format!("{base}_{k}");
        k += 1;
    }
    stem
}

pub fn run(config: &RunConfig, args: &GenerateArgs) -> Result<GenerateSummary> {
    let s = &config.settings;
    let data_hash = config.data_hash();
    let seed = config.seed();
    let (vocab, vocab_hash) = store::read_vocab(&config.path(VOCAB), &data_hash).context("run vocab first")?;
    let ck_path = match &args.checkpoint {
        Some(p) => p.clone(),
        None => resolve_marker(&config.path(CHECKPOINTS), "best")?.context("no best checkpoint; run train first")?,
    };
    let ck = Checkpoint::read(&ck_path)?;
    ensure!(
        ck.meta.vocab_hash == vocab_hash,
        "{} was trained with vocab {} but vocab.json hashes to {vocab_hash}",
        ck_path.display(),
        ck.meta.vocab_hash
    );
    let (phrases, manifest) = load_phrases(config)?;
    let split = args.split.clone().unwrap_or_else(|| s.generate.split.clone());
    let mut seeds: Vec<&Phrase> = store::select(&phrases, &manifest, &split)?;
    if let Some(n) = args.limit.or(s.generate.limit) {
        seeds.truncate(n);
    }
    let options = GenerateOptions { temperature: s.temperature()?, max_len: s.generate.max_len };
    let (gen_dir, truth_dir) = (config.path(GENERATED_DIR), config.path(TRUTH_DIR));
    for d in [&gen_dir, &truth_dir] {
        if d.exists() {
            std::fs::remove_dir_all(d).with_context(|| format!("clearing {}", d.display()))?;
        }
        std::fs::create_dir_all(d)?;
    }
    let mut taken = BTreeSet::new();
    let mut items = Vec::with_capacity(seeds.len());
    for (k, phrase) in seeds.iter().enumerate() {
        let condition = encode_condition(phrase, &vocab).with_context(|| format!("encoding {}", phrase.source_id))?;
        let bar_steps = phrase
            .bars
            .iter()
            .map(|b| b.ts.bar_steps(vocab.config.grid).context("meter does not fit the grid"))
            .collect::<Result<Vec<_>>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ GENERATE_SALT);
        rng.set_stream(k as u64);
        let out = generate(&ck.model, &vocab.decoder, &condition, &bar_steps, &options, &mut rng)
            .with_context(|| format!("generating for {}", phrase.source_id))?;
        let decoded = decode_drums(&out.words, &vocab, &phrase.bars)?;
        let generated = Phrase { drums: decoded.hits.clone(), ..(*phrase).clone() };
        let stem = file_stem(&phrase.source_id, &mut taken);
        let file = format!("{stem}.mid");
        write_atomic(&gen_dir.join(&file), &write_midi(&phrase_to_score(&generated)?)?)?;
        write_atomic(&truth_dir.join(&file), &write_midi(&phrase_to_score(phrase)?)?)?;
        let tokens = decoder_tokens(&out.words, &vocab)?;
        let stream = TokenStream {
            config_hash: config.hash(),
            seed,
            source_id: phrase.source_id.clone(),
            checkpoint_epoch: ck.meta.epoch,
            tau: out.tau,
            stop: out.stop,
            bars: decoded.bars,
            ids: out.words.iter().map(|w| w.ids()).collect(),
            tokens: tokens.iter().map(|t| format!("{} {}", t.onset, t.drums)).collect(),
        };
        store::write_json(&gen_dir.join(format!("{stem}.tokens.json")), &stream)?;
        log::info!("{}: {} words, {} hits, {:?}", phrase.source_id, out.words.len(), decoded.hits.len(), out.stop);
        items.push(GeneratedItem {
            source_id: phrase.source_id.clone(),
            file,
            bars: decoded.bars,
            hits: decoded.hits.len(),
            words: out.words.len(),
            stop: out.stop,
            tau: out.tau,
        });
    }
    Ok(GenerateSummary {
        stage: "generate",
        config_hash: config.hash(),
        seed,
        checkpoint: ck_path.display().to_string(),
        split,
        items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_are_safe_and_unique() {
        let mut taken = BTreeSet::new();
        assert_eq!(file_stem("rock/song.mid#0", &mut taken), "rock_song.mid_0");
        assert_eq!(file_stem("rock_song.mid#0", &mut taken), "rock_song.mid_0_1");
        assert_eq!(file_stem("a b", &mut taken), "a_b");
    }
}
