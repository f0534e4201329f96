use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use cpdrums_core::codec::CodecConfig;
use cpdrums_core::metrics::{GrooveMode, MetricConfig};
use cpdrums_core::nn::{ModelConfig, Preset, Temperature, TrainConfig};
use cpdrums_core::preprocess::CorpusFilterConfig;
use serde::{Deserialize, Serialize};

use crate::hash;

/// One pipeline run, loaded from TOML.
///
/// Relative paths are resolved against the directory of the config file.
/// Everything except the two paths goes into the config hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus_dir: PathBuf,
    pub work_dir: PathBuf,
    #[serde(flatten)]
    pub settings: Settings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_preset")]
    pub preset: Preset,
    /// Onset grid, steps per quarter note.
    #[serde(default = "default_grid")]
    pub grid: u32,
    #[serde(default = "default_split")]
    pub split_ratio: [u32; 3],
    #[serde(default)]
    pub filter: CorpusFilterConfig,
    #[serde(default)]
    pub codec: CodecSettings,
    #[serde(default)]
    pub metrics: MetricSettings,
    #[serde(default)]
    pub train: TrainOverrides,
    #[serde(default)]
    pub generate: GenerateSettings,
}

fn default_preset() -> Preset {
    Preset::Desk
}

fn default_grid() -> u32 {
    4
}

fn default_split() -> [u32; 3] {
    [8, 1, 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecSettings {
    pub tempo_bin_width: u32,
    pub emit_highlevel_every_bar: bool,
}

impl Default for CodecSettings {
    fn default() -> Self {
        let c = CodecConfig::default();
        Self { tempo_bin_width: c.tempo_bin_width, emit_highlevel_every_bar: c.emit_highlevel_every_bar }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricSettings {
    pub pattern_resolution: u32,
    pub groove_mode: GrooveMode,
}

impl Default for MetricSettings {
    fn default() -> Self {
        let m = MetricConfig::default();
        Self { pattern_resolution: m.pattern_resolution, groove_mode: m.groove_mode }
    }
}

/// Optional replacements for the preset's training hyperparameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    pub lr: Option<f64>,
    pub weight_decay: Option<f64>,
    pub batch_size: Option<usize>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    /// Set to 0 to disable clipping.
    pub max_grad_norm: Option<f64>,
    pub dropout: Option<f64>,
    pub cross_attention: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSettings {
    /// `"uniform"`, `"greedy"` or a positive number.
    pub tau: String,
    /// Output length cap including BOS.
    pub max_len: Option<usize>,
    /// Which split provides the seed phrases.
    pub split: String,
    /// Generate for at most this many seeds.
    pub limit: Option<usize>,
}

impl Default for GenerateSettings {
    fn default() -> Self {
        Self { tau: "1.0".into(), max_len: None, split: "test".into(), limit: None }
    }
}

pub fn parse_tau(s: &str) -> Result<Temperature> {
    match s.trim() {
        "uniform" => Ok(Temperature::EXPLORE),
        "greedy" => Ok(Temperature::Greedy),
        other => {
            let t: f64 = other.parse().with_context(|| format!("tau must be a number, \"uniform\" or \"greedy\", got {other:?}"))?;
            if !(t > 0.0 && t.is_finite()) {
                bail!("tau must be positive and finite, got {t}");
            }
            Ok(Temperature::Fixed(t))
        }
    }
}

// Flattened structs cannot deny unknown fields, so the top level is
// checked by hand.
const TOP_LEVEL_KEYS: [&str; 11] = [
    "corpus_dir",
    "work_dir",
    "seed",
    "preset",
    "grid",
    "split_ratio",
    "filter",
    "codec",
    "metrics",
    "train",
    "generate",
];

/// Command-line overrides applied after loading and before hashing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub preset: Option<Preset>,
    pub tau: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let table: toml::Table = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(key) = table.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
            bail!("unknown key {key:?} in {}", path.display());
        }
        let mut config: RunConfig =
            table.try_into().with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.corpus_dir = base.join(&config.corpus_dir);
        config.work_dir = base.join(&config.work_dir);
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(seed) = overrides.seed {
            self.settings.seed = seed;
        }
        if let Some(p) = overrides.preset {
            self.settings.preset = p;
        }
        if let Some(t) = &overrides.tau {
            self.settings.generate.tau = t.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.corpus_dir.is_dir() {
            bail!("corpus directory {} does not exist", self.corpus_dir.display());
        }
        self.settings.validate()
    }

    pub fn seed(&self) -> u64 {
        self.settings.seed
    }

    /// Hash of every setting; recorded in checkpoints and reports.
    pub fn hash(&self) -> String {
        hash::json_sha256(&self.settings)
    }

    /// Hash of the settings that shape the phrase store, vocabulary and
    /// token files. Training-only changes leave it alone, so tokenized data
    /// survives a change of learning rate.
    pub fn data_hash(&self) -> String {
        let s = &self.settings;
        hash::json_sha256(&(s.seed, s.grid, s.split_ratio, &s.filter, &s.codec))
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.work_dir.join(rel)
    }
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.codec_config().validate()?;
        if self.split_ratio.iter().sum::<u32>() == 0 {
            bail!("split ratio must not be all zero");
        }
        if self.metrics.pattern_resolution == 0 {
            bail!("pattern resolution must be positive");
        }
        parse_tau(&self.generate.tau)?;
        self.train_config().validate()?;
        Ok(())
    }

    pub fn codec_config(&self) -> CodecConfig {
        CodecConfig {
            grid: self.grid,
            tempo_bin_width: self.codec.tempo_bin_width,
            emit_highlevel_every_bar: self.codec.emit_highlevel_every_bar,
        }
    }

    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            grid: self.grid,
            pattern_resolution: self.metrics.pattern_resolution,
            groove_mode: self.metrics.groove_mode,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let o = &self.train;
        let mut t = TrainConfig::preset(self.preset);
        t.lr = o.lr.unwrap_or(t.lr);
        t.weight_decay = o.weight_decay.unwrap_or(t.weight_decay);
        t.batch_size = o.batch_size.unwrap_or(t.batch_size);
        t.max_epochs = o.max_epochs.unwrap_or(t.max_epochs);
        t.patience = o.patience.unwrap_or(t.patience);
        if let Some(c) = o.max_grad_norm {
            t.max_grad_norm = (c > 0.0).then_some(c);
        }
        t
    }

    pub fn model_config(&self, enc_vocab: [usize; 5], dec_vocab: [usize; 2]) -> ModelConfig {
        let mut m = ModelConfig::preset(self.preset, enc_vocab, dec_vocab);
        m.dropout = self.train.dropout.unwrap_or(m.dropout);
        m.cross_attention = self.train.cross_attention.unwrap_or(m.cross_attention);
        m
    }

    pub fn temperature(&self) -> Result<Temperature> {
        parse_tau(&self.generate.tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("midi")).unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "corpus_dir = \"midi\"\nwork_dir = \"work\"\n").unwrap();
        let c = RunConfig::load(&path, &Overrides::default()).unwrap();
        assert_eq!(c.settings.grid, 4);
        assert_eq!(c.settings.split_ratio, [8, 1, 1]);
        assert_eq!(c.settings.preset, Preset::Desk);
        assert_eq!(c.corpus_dir, dir.path().join("midi"));
        assert_eq!(c.settings.temperature().unwrap(), Temperature::EVALUATION);
    }

    #[test]
    fn overrides_change_the_hash() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("midi")).unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "corpus_dir = \"midi\"\nwork_dir = \"work\"\nseed = 3\n").unwrap();
        let a = RunConfig::load(&path, &Overrides::default()).unwrap();
        let b = RunConfig::load(&path, &Overrides { seed: Some(4), ..Default::default() }).unwrap();
        let c = RunConfig::load(&path, &Overrides { tau: Some("uniform".into()), ..Default::default() }).unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_ne!(a.data_hash(), b.data_hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.data_hash(), c.data_hash());
    }

    #[test]
    fn rejects_bad_input() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "corpus_dir = \"missing\"\nwork_dir = \"w\"\n").unwrap();
        assert!(RunConfig::load(&path, &Overrides::default()).is_err());
        std::fs::create_dir(dir.path().join("missing")).unwrap();
        std::fs::write(&path, "corpus_dir = \"missing\"\nwork_dir = \"w\"\ncolour = 1\n").unwrap();
        assert!(RunConfig::load(&path, &Overrides::default()).is_err());
        std::fs::write(&path, "corpus_dir = \"missing\"\nwork_dir = \"w\"\n[generate]\ntau = \"hot\"\nsplit = \"test\"\n").unwrap();
        assert!(RunConfig::load(&path, &Overrides::default()).is_err());
    }

    #[test]
    fn tau_parsing() {
        assert_eq!(parse_tau("uniform").unwrap(), Temperature::EXPLORE);
        assert_eq!(parse_tau("greedy").unwrap(), Temperature::Greedy);
        assert_eq!(parse_tau("0.9").unwrap(), Temperature::Fixed(0.9));
        assert!(parse_tau("0").is_err());
        assert!(parse_tau("-1").is_err());
        assert!(parse_tau("nan").is_err());
    }
}
