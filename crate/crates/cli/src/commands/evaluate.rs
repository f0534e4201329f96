use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cpdrums_core::metrics::{density_report, metric_vector, MetricConfig, FEATURE_NAMES};
use cpdrums_core::midi::parse_midi;
use cpdrums_core::pattern::{cosiatec, parse_point_set};
use cpdrums_core::preprocess::Phrase;
use serde::Serialize;

use super::generate::{GENERATED_DIR, TRUTH_DIR};
use super::preprocess::midi_files;
use crate::render::score_to_phrase;
use crate::report::{evaluate_pairs, EvaluationBundle, Features};
use crate::store::{self, write_atomic};

pub const REPORTS: &str = "reports";

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Reads every MIDI file of `dir` as one phrase keyed by file stem. Files
/// that cannot be read are returned separately with the reason.
pub fn load_dir(dir: &Path, grid: u32) -> Result<(BTreeMap<String, Phrase>, BTreeMap<String, String>)> {
    let mut ok = BTreeMap::new();
    let mut failed = BTreeMap::new();
    for path in midi_files(dir)? {
        let key = stem(&path);
        let loaded = std::fs::read(&path)
            .map_err(anyhow::Error::from)
            .and_then(|b| Ok(parse_midi(&b)?))
            .and_then(|score| score_to_phrase(&score, grid, &key));
        match loaded {
            Ok(p) => {
                ok.insert(key, p);
            }
            Err(e) => {
                log::warn!("skipping {}: {e:#}", path.display());
                failed.insert(key, format!("{e:#}"));
            }
        }
    }
    Ok((ok, failed))
}

#[derive(Debug, Clone, Default)]
pub struct EvaluateArgs {
    pub generated: Option<PathBuf>,
    pub truth: Option<PathBuf>,
}

/// Evaluates `generated` against `truth` and writes the bundle and both
/// rendered tables under `out_dir`.
pub fn evaluate_dirs(
    generated: &Path,
    truth: &Path,
    out_dir: &Path,
    metrics: &MetricConfig,
    config_hash: &str,
    seed: u64,
) -> Result<EvaluationBundle> {
    let (gen, gen_failed) = load_dir(generated, metrics.grid)?;
    let (tru, tru_failed) = load_dir(truth, metrics.grid)?;
    let mut bundle = evaluate_pairs(&gen, &tru, metrics, config_hash, seed)?;
    for (k, why) in gen_failed {
        bundle.excluded.insert(k, format!("generated file unreadable: {why}"));
    }
    for (k, why) in tru_failed {
        bundle.excluded.insert(k, format!("truth file unreadable: {why}"));
    }
    bundle.unpaired.retain(|k| !bundle.excluded.contains_key(k));
    for k in &bundle.unpaired {
        log::warn!("unpaired file {k} left out");
    }
    store::write_json(&out_dir.join("evaluation.json"), &bundle)?;
    write_atomic(&out_dir.join("density.txt"), bundle.density_table.as_bytes())?;
    write_atomic(&out_dir.join("diff.txt"), bundle.diff_table.as_bytes())?;
    Ok(bundle)
}

pub fn run(config: &crate::RunConfig, args: &EvaluateArgs) -> Result<EvaluationBundle> {
    let generated = args.generated.clone().unwrap_or_else(|| config.path(GENERATED_DIR));
    let truth = args.truth.clone().unwrap_or_else(|| config.path(TRUTH_DIR));
    evaluate_dirs(
        &generated,
        &truth,
        &config.path(REPORTS),
        &config.settings.metric_config(),
        &config.hash(),
        config.seed(),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct MidiMetrics {
    pub source: String,
    pub bars: usize,
    pub hits: usize,
    pub features: [String; 5],
    /// Absent when the file has no drum hits.
    pub values: Option<Features>,
    pub density: [f64; 5],
}

pub fn midi_metrics(path: &Path, metrics: &MetricConfig) -> Result<MidiMetrics> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let phrase = score_to_phrase(&parse_midi(&bytes)?, metrics.grid, &stem(path))?;
    let values = if phrase.drums.is_empty() { None } else { Some((&metric_vector(&phrase, metrics)?).into()) };
    let d = density_report(&phrase.drums, &phrase.bars)?;
    Ok(MidiMetrics {
        source: path.display().to_string(),
        bars: phrase.bars.len(),
        hits: phrase.drums.len(),
        features: FEATURE_NAMES.map(String::from),
        values,
        density: d.columns().map(|r| *r.numer() as f64 / *r.denom() as f64),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PointMetrics {
    pub source: String,
    pub points: usize,
    pub tecs: usize,
    pub encoding_cost: u64,
    pub compression_ratio: String,
    pub compression_ratio_value: f64,
    /// Pattern and translator count of each TEC in cover order.
    pub cover: Vec<TecSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TecSummary {
    pub pattern: Vec<(i64, i64)>,
    pub translators: usize,
}

pub fn point_metrics(path: &Path) -> Result<PointMetrics> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let set = parse_point_set(&text)?;
    let result = cosiatec(&set)?;
    let r = result.ratio;
    Ok(PointMetrics {
        source: path.display().to_string(),
        points: set.len(),
        tecs: result.tecs.len(),
        encoding_cost: result.tecs.iter().map(|t| t.cost()).sum(),
        compression_ratio: format!("{}/{}", r.numer(), r.denom()),
        compression_ratio_value: *r.numer() as f64 / *r.denom() as f64,
        cover: result
            .tecs
            .iter()
            .map(|t| TecSummary { pattern: t.pattern.clone(), translators: t.translators.len() })
            .collect(),
    })
}
