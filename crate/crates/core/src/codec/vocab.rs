use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::encode::{condition_tokens, drum_tokens};
use super::token::{DrumsToken, DurationToken, GroupToken, OnsetToken, Token, TypeToken, ValueToken};
use super::CodecError;
use crate::preprocess::{DrumComponent, Phrase};
use crate::time::TimeSignature;

pub const VOCAB_SCHEMA_VERSION: u32 = 1;

/// One compound-word field: a sorted token list whose indices are the ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dim<T> {
    tokens: Vec<T>,
}

impl<T: Token> Dim<T> {
    pub fn from_tokens(tokens: impl IntoIterator<Item = T>) -> Self {
        let set: BTreeSet<T> = tokens.into_iter().collect();
        Self { tokens: set.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: T) -> Option<u32> {
        self.tokens.binary_search(&token).ok().map(|i| i as u32)
    }

    pub fn token(&self, id: u32) -> Option<T> {
        self.tokens.get(id as usize).copied()
    }

    pub fn tokens(&self) -> &[T] {
        &self.tokens
    }
}

/// Settings that shape the token streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CodecConfig {
    /// Onset grid steps per quarter note.
    pub grid: u32,
    /// Tempo tokens are rounded to the nearest multiple of this many BPM.
    pub tempo_bin_width: u32,
    /// Repeat the time-signature and tempo words in every bar rather than
    /// only in the first bar and where they change.
    pub emit_highlevel_every_bar: bool,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self { grid: 4, tempo_bin_width: 10, emit_highlevel_every_bar: true }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<(), CodecError> {
        if self.grid == 0 {
            return Err(CodecError::BadConfig("grid must be at least 1"));
        }
        if self.tempo_bin_width == 0 {
            return Err(CodecError::BadConfig("tempo bin width must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderVocab {
    pub onset: Dim<OnsetToken>,
    pub group: Dim<GroupToken>,
    pub kind: Dim<TypeToken>,
    pub duration: Dim<DurationToken>,
    pub value: Dim<ValueToken>,
}

impl EncoderVocab {
    /// Sizes in field order: onset, group, type, duration, value.
    pub fn sizes(&self) -> [usize; 5] {
        [self.onset.len(), self.group.len(), self.kind.len(), self.duration.len(), self.value.len()]
    }

    /// Longest duration token; longer events are clipped to it.
    pub fn max_duration(&self) -> Option<u32> {
        self.duration.tokens().iter().rev().find_map(|t| match t {
            DurationToken::Steps(s) => Some(*s),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoderVocab {
    pub onset: Dim<OnsetToken>,
    pub drums: Dim<DrumsToken>,
}

impl DecoderVocab {
    /// Sizes in field order: onset, drums.
    pub fn sizes(&self) -> [usize; 2] {
        [self.onset.len(), self.drums.len()]
    }
}

/// Encoder and decoder vocabularies together with the settings they were
/// built under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    pub config: CodecConfig,
    pub time_signatures: Vec<TimeSignature>,
    pub tempo_bins: Vec<u32>,
    pub encoder: EncoderVocab,
    pub decoder: DecoderVocab,
}

fn positions(max_steps: u32) -> impl Iterator<Item = OnsetToken> {
    [OnsetToken::Pad, OnsetToken::Bar, OnsetToken::Eos].into_iter().chain((0..max_steps).map(OnsetToken::Pos))
}

/// Builds both vocabularies from a corpus.
///
/// Onset fields cover every grid position of the longest observed bar so
/// that generated drums may land anywhere. Group, type and drums fields are
/// closed sets and always complete. Durations, time signatures and tempo
/// bins contain what the corpus uses.
pub fn build_vocab(corpus: &[Phrase], config: CodecConfig) -> Result<Vocabulary, CodecError> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(CodecError::EmptyCorpus);
    }
    let mut durations = BTreeSet::new();
    let mut values = BTreeSet::new();
    let mut time_signatures = BTreeSet::new();
    let mut max_steps = 0;
    for phrase in corpus {
        for bar in &phrase.bars {
            let steps = bar.ts.bar_steps(config.grid).ok_or(CodecError::GridMismatch(bar.ts))?;
            max_steps = max_steps.max(steps);
            time_signatures.insert(bar.ts);
        }
        for w in condition_tokens(phrase, &config)? {
            durations.insert(w.duration);
            values.insert(w.value);
        }
        // Checks drum onsets lie on the grid.
        drum_tokens(phrase, config.grid)?;
    }
    let tempo_bins = values
        .iter()
        .filter_map(|v| match v {
            ValueToken::Tempo(b) => Some(*b),
            _ => None,
        })
        .collect();
    let encoder = EncoderVocab {
        onset: Dim::from_tokens(positions(max_steps)),
        group: Dim::from_tokens([
            GroupToken::Pad,
            GroupToken::Eos,
            GroupToken::Guitar,
            GroupToken::Bass,
            GroupToken::HighLevel,
        ]),
        kind: Dim::from_tokens([
            TypeToken::Pad,
            TypeToken::Eos,
            TypeToken::Bar,
            TypeToken::TimeSig,
            TypeToken::Tempo,
            TypeToken::Note,
            TypeToken::Chord,
        ]),
        duration: Dim::from_tokens(
            [DurationToken::Pad, DurationToken::Eos, DurationToken::Bar].into_iter().chain(durations),
        ),
        value: Dim::from_tokens(
            [ValueToken::Pad, ValueToken::Eos, ValueToken::Nan, ValueToken::Bar].into_iter().chain(values),
        ),
    };
    let decoder = DecoderVocab {
        onset: Dim::from_tokens(positions(max_steps)),
        drums: Dim::from_tokens(
            [DrumsToken::Pad, DrumsToken::Bos, DrumsToken::Eos]
                .into_iter()
                .chain(DrumComponent::ALL.iter().map(|&c| DrumsToken::Hit(c))),
        ),
    };
    Ok(Vocabulary {
        config,
        time_signatures: time_signatures.into_iter().collect(),
        tempo_bins,
        encoder,
        decoder,
    })
}

#[cfg(feature = "serde")]
mod text {
    use alloc::string::{String, ToString};
    use alloc::vec::Vec;

    use serde::{Deserialize, Serialize};

    use super::*;

    fn names<T: Token>(dim: &Dim<T>) -> Vec<String> {
        dim.tokens().iter().map(|t| t.to_string()).collect()
    }

    fn parse<T: Token>(names: &[String]) -> Result<Dim<T>, String> {
        let mut tokens = Vec::with_capacity(names.len());
        for n in names {
            tokens.push(T::parse(n).ok_or_else(|| alloc::format!("unknown token {n:?}"))?);
        }
        if !tokens.windows(2).all(|w| w[0] < w[1]) {
            return Err("tokens must be listed in id order without duplicates".into());
        }
        Ok(Dim { tokens })
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct EncoderRepr {
        onset: Vec<String>,
        group: Vec<String>,
        #[serde(rename = "type")]
        kind: Vec<String>,
        duration: Vec<String>,
        value: Vec<String>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct DecoderRepr {
        onset: Vec<String>,
        drums: Vec<String>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct VocabRepr {
        schema_version: u32,
        config: CodecConfig,
        time_signatures: Vec<String>,
        tempo_bins: Vec<u32>,
        encoder: EncoderRepr,
        decoder: DecoderRepr,
    }

    impl Serialize for Vocabulary {
        fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
            VocabRepr {
                schema_version: VOCAB_SCHEMA_VERSION,
                config: self.config,
                time_signatures: self.time_signatures.iter().map(|t| t.to_string()).collect(),
                tempo_bins: self.tempo_bins.clone(),
                encoder: EncoderRepr {
                    onset: names(&self.encoder.onset),
                    group: names(&self.encoder.group),
                    kind: names(&self.encoder.kind),
                    duration: names(&self.encoder.duration),
                    value: names(&self.encoder.value),
                },
                decoder: DecoderRepr { onset: names(&self.decoder.onset), drums: names(&self.decoder.drums) },
            }
            .serialize(serializer)
        }
    }

    impl<'de> Deserialize<'de> for Vocabulary {
        fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
            use serde::de::Error;
            let r = VocabRepr::deserialize(deserializer)?;
            if r.schema_version != VOCAB_SCHEMA_VERSION {
                return Err(D::Error::custom(alloc::format!("unsupported schema version {}", r.schema_version)));
            }
            let mut time_signatures = Vec::new();
            for t in &r.time_signatures {
                let ts = t
                    .split_once('/')
                    .and_then(|(n, d)| TimeSignature::new(n.parse().ok()?, d.parse().ok()?))
                    .ok_or_else(|| D::Error::custom(alloc::format!("bad time signature {t:?}")))?;
                time_signatures.push(ts);
            }
            let e = &r.encoder;
            Ok(Vocabulary {
                config: r.config,
                time_signatures,
                tempo_bins: r.tempo_bins,
                encoder: EncoderVocab {
                    onset: parse(&e.onset).map_err(D::Error::custom)?,
                    group: parse(&e.group).map_err(D::Error::custom)?,
                    kind: parse(&e.kind).map_err(D::Error::custom)?,
                    duration: parse(&e.duration).map_err(D::Error::custom)?,
                    value: parse(&e.value).map_err(D::Error::custom)?,
                },
                decoder: DecoderVocab {
                    onset: parse(&r.decoder.onset).map_err(D::Error::custom)?,
                    drums: parse(&r.decoder.drums).map_err(D::Error::custom)?,
                },
            })
        }
    }
}
