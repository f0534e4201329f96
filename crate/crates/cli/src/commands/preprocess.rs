use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cpdrums_core::midi::parse_midi;
use cpdrums_core::preprocess::{process_score, split_dataset, PreprocessError};
use serde::Serialize;

use crate::config::RunConfig;
use crate::store::{self, Header, PreprocessStats, SplitManifest, StatsFile};

pub const PHRASES: &str = "phrases.jsonl";
pub const SPLITS: &str = "splits.json";
pub const STATS: &str = "stats.json";

/// MIDI files under `dir`, recursively, in path order.
pub fn midi_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).with_context(|| format!("listing {}", d.display()))? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi"))
            {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Path relative to the corpus root with `/` separators; the phrase ids
/// derive from it, so they do not depend on where the corpus lives.
fn relative_name(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/")
}

#[derive(Debug, Clone, Serialize)]
pub struct PreprocessSummary {
    pub stage: &'static str,
    pub config_hash: String,
    pub seed: u64,
    #[serde(flatten)]
    pub stats: PreprocessStats,
}

pub fn run(config: &RunConfig) -> Result<PreprocessSummary> {
    let s = &config.settings;
    let files = midi_files(&config.corpus_dir)?;
    if files.is_empty() {
        bail!("no input files: {} holds no .mid or .midi files", config.corpus_dir.display());
    }
    let mut stats = PreprocessStats { files_found: files.len(), ..Default::default() };
    let mut phrases = Vec::new();
    for path in &files {
        let name = relative_name(&config.corpus_dir, path);
        let score = match std::fs::read(path).map_err(anyhow::Error::from).and_then(|b| Ok(parse_midi(&b)?)) {
            Ok(score) => score,
            Err(e) => {
                log::warn!("skipping unreadable {name}: {e:#}");
                stats.unreadable.insert(name, format!("{e:#}"));
                continue;
            }
        };
        match process_score(&score, &s.filter, s.grid, &name) {
            Ok(outcome) => {
                stats.files_used += 1;
                stats.phrases_segmented += outcome.segmented;
                stats.phrases_filtered_out += outcome.filtered_out;
                for (pitch, n) in outcome.dropped_drum_pitches {
                    *stats.dropped_drum_pitches.entry(pitch).or_default() += n;
                }
                phrases.extend(outcome.phrases);
            }
            Err(PreprocessError::MissingRole(role)) => {
                let reason = format!("no {} track", format!("{role:?}").to_lowercase());
                log::info!("excluding {name}: {reason}");
                stats.excluded.insert(name, reason);
            }
            Err(e) => {
                log::warn!("skipping {name}: {e}");
                stats.unreadable.insert(name, e.to_string());
            }
        }
    }
    stats.phrases = phrases.len();
    let mut ts_histogram: BTreeMap<String, usize> = BTreeMap::new();
    for p in &phrases {
        for b in &p.bars {
            *ts_histogram.entry(b.ts.to_string()).or_default() += 1;
        }
    }
    stats.ts_histogram = ts_histogram;
    let ids: Vec<String> = phrases.iter().map(|p| p.source_id.clone()).collect();
    let split = split_dataset(ids, s.split_ratio, s.seed).context("splitting the phrase set")?;
    stats.split_sizes = [split.train.len(), split.valid.len(), split.test.len()];

    let hash = config.data_hash();
    let seed = config.seed();
    store::write_phrases(&config.path(PHRASES), &Header::new("phrases", &hash, seed), &phrases)?;
    let manifest = SplitManifest {
        header: Header::new("splits", &hash, seed),
        ratio: s.split_ratio,
        train: split.train,
        valid: split.valid,
        test: split.test,
    };
    store::write_json(&config.path(SPLITS), &manifest)?;
    store::write_json(&config.path(STATS), &StatsFile { header: Header::new("stats", &hash, seed), stats: stats.clone() })?;
    log::info!(
        "{} files, {} phrases ({} / {} / {})",
        stats.files_found,
        stats.phrases,
        stats.split_sizes[0],
        stats.split_sizes[1],
        stats.split_sizes[2]
    );
    Ok(PreprocessSummary { stage: "preprocess", config_hash: hash, seed, stats })
}
