//! JSON artifacts: phrase store, split manifest, preprocessing stats and
//! vocabulary. Each starts with a [`Header`] naming its kind, the data hash
//! of the settings that produced it and the run seed.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use cpdrums_core::codec::Vocabulary;
use cpdrums_core::preprocess::Phrase;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::hash;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub kind: String,
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
}

impl Header {
    pub fn new(kind: &str, config_hash: &str, seed: u64) -> Self {
        Self { kind: kind.into(), version: FORMAT_VERSION, config_hash: config_hash.into(), seed }
    }

    /// Errors unless this header has the expected kind, version and hash.
    pub fn expect(&self, kind: &str, config_hash: &str, what: &Path) -> Result<()> {
        ensure!(self.kind == kind, "{} holds {:?}, expected {kind:?}", what.display(), self.kind);
        ensure!(self.version == FORMAT_VERSION, "{} has format version {}", what.display(), self.version);
        ensure!(
            self.config_hash == config_hash,
            "{} was built under config {} but the current config hashes to {}; rerun the earlier stages",
            what.display(),
            self.config_hash,
            config_hash
        );
        Ok(())
    }
}

/// Writes through a temporary sibling and renames it into place, so a
/// crashed stage never leaves a half-written artifact behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", path.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_phrases(path: &Path, header: &Header, phrases: &[Phrase]) -> Result<()> {
    let mut out = Vec::new();
    serde_json::to_writer(&mut out, header)?;
    out.push(b'\n');
    for p in phrases {
        serde_json::to_writer(&mut out, p)?;
        out.push(b'\n');
    }
    write_atomic(path, &out)
}

pub fn read_phrases(path: &Path) -> Result<(Header, Vec<Phrase>)> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    let Some(first) = lines.next() else { bail!("{} is empty", path.display()) };
    let header: Header = serde_json::from_str(&first?).with_context(|| format!("header of {}", path.display()))?;
    let mut phrases = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let p: Phrase =
            serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), i + 2))?;
        phrases.push(p);
    }
    Ok((header, phrases))
}

/// Source ids of each partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitManifest {
    pub header: Header,
    pub ratio: [u32; 3],
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
}

impl SplitManifest {
    pub fn ids(&self, split: &str) -> Result<&[String]> {
        Ok(match split {
            "train" => &self.train,
            "valid" => &self.valid,
            "test" => &self.test,
            other => bail!("unknown split {other:?}; expected train, valid or test"),
        })
    }
}

pub const SPLITS: [&str; 3] = ["train", "valid", "test"];

/// Phrases of `split` in manifest order.
pub fn select<'a>(phrases: &'a [Phrase], manifest: &SplitManifest, split: &str) -> Result<Vec<&'a Phrase>> {
    let by_id: BTreeMap<&str, &Phrase> = phrases.iter().map(|p| (p.source_id.as_str(), p)).collect();
    manifest
        .ids(split)?
        .iter()
        .map(|id| by_id.get(id.as_str()).copied().with_context(|| format!("phrase {id:?} missing from the store")))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessStats {
    pub files_found: usize,
    /// Files that failed to read or parse, with the reason.
    pub unreadable: BTreeMap<String, String>,
    /// Files skipped by the track filter, with the reason.
    pub excluded: BTreeMap<String, String>,
    pub files_used: usize,
    pub phrases_segmented: usize,
    pub phrases_filtered_out: usize,
    pub phrases: usize,
    /// Drum pitches outside the component map, by GM pitch.
    pub dropped_drum_pitches: BTreeMap<u8, usize>,
    /// Bars per time signature over the kept phrases.
    pub ts_histogram: BTreeMap<String, usize>,
    pub split_sizes: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsFile {
    pub header: Header,
    pub stats: PreprocessStats,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VocabFile {
    pub header: Header,
    pub vocab_hash: String,
    pub vocab: Vocabulary,
}

/// Hash of the vocabulary alone, independent of the file header.
pub fn vocab_hash(vocab: &Vocabulary) -> String {
    hash::json_sha256(vocab)
}

pub fn read_vocab(path: &Path, data_hash: &str) -> Result<(Vocabulary, String)> {
    let f: VocabFile = read_json(path)?;
    f.header.expect("vocab", data_hash, path)?;
    let h = vocab_hash(&f.vocab);
    ensure!(h == f.vocab_hash, "{} records vocab hash {} but its content hashes to {h}", path.display(), f.vocab_hash);
    Ok((f.vocab, h))
}

/// Appends one JSON line.
pub fn append_jsonl<T: Serialize>(file: &mut std::fs::File, value: &T) -> Result<()> {
    let mut line = serde_json::to_vec(value)?;
    line.push(b'\n');
    file.write_all(&line)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use cpdrums_core::midi::Tempo;
    use cpdrums_core::preprocess::{AccompEvent, Bar, DrumComponent, DrumHit, EventKind};
    use cpdrums_core::{Quarters, TimeSignature};

    fn phrase(id: &str) -> Phrase {
        let q = |n, d| Quarters::new(n, d);
        Phrase {
            source_id: id.into(),
            bars: vec![Bar { index: 3, ts: TimeSignature::COMMON, tempo: Tempo::from_bpm(97).unwrap() }],
            guitar: vec![AccompEvent { onset: q(1, 4), duration: q(3, 2), kind: EventKind::Chord }],
            bass: vec![],
            drums: vec![DrumHit::new(q(0, 1), DrumComponent::from_index(0).unwrap())],
        }
    }

    #[test]
    fn phrase_store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        let h = Header::new("phrases", "abc", 9);
        let ps = vec![phrase("a#0"), phrase("b#1")];
        write_phrases(&path, &h, &ps).unwrap();
        let (h2, ps2) = read_phrases(&path).unwrap();
        assert_eq!(h, h2);
        assert_eq!(ps, ps2);
        assert!(h2.expect("phrases", "abc", &path).is_ok());
        assert!(h2.expect("phrases", "abd", &path).is_err());
        assert!(h2.expect("vocab", "abc", &path).is_err());
    }

    #[test]
    fn select_follows_manifest() {
        let ps = vec![phrase("a"), phrase("b"), phrase("c")];
        let m = SplitManifest {
            header: Header::new("splits", "h", 0),
            ratio: [8, 1, 1],
            train: vec!["c".into(), "a".into()],
            valid: vec!["b".into()],
            test: vec!["zz".into()],
        };
        let t = select(&ps, &m, "train").unwrap();
        assert_eq!(t.iter().map(|p| p.source_id.as_str()).collect::<Vec<_>>(), ["c", "a"]);
        assert!(select(&ps, &m, "test").is_err());
        assert!(select(&ps, &m, "dev").is_err());
    }
}
