use alloc::vec::Vec;

use super::token::{DrumsToken, DurationToken, GroupToken, OnsetToken, TypeToken, ValueToken};
use super::vocab::{CodecConfig, Dim, Vocabulary};
use super::CodecError;
use crate::midi::Tempo;
use crate::preprocess::{bar_of, AccompEvent, EventKind, Phrase};
use crate::time::{quarters_to_steps, Quarters};

/// One encoder compound word as token ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EncoderWord {
    pub onset: u32,
    pub group: u32,
    pub kind: u32,
    pub duration: u32,
    pub value: u32,
}

impl EncoderWord {
    pub const PAD: EncoderWord = EncoderWord { onset: 0, group: 0, kind: 0, duration: 0, value: 0 };

    pub fn ids(&self) -> [u32; 5] {
        [self.onset, self.group, self.kind, self.duration, self.value]
    }

    pub fn from_ids(ids: [u32; 5]) -> Self {
        let [onset, group, kind, duration, value] = ids;
        Self { onset, group, kind, duration, value }
    }
}

/// One decoder compound word as token ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DecoderWord {
    pub onset: u32,
    pub drums: u32,
}

impl DecoderWord {
    pub const PAD: DecoderWord = DecoderWord { onset: 0, drums: 0 };

    pub fn ids(&self) -> [u32; 2] {
        [self.onset, self.drums]
    }

    pub fn from_ids(ids: [u32; 2]) -> Self {
        Self { onset: ids[0], drums: ids[1] }
    }
}

/// An encoder word before id lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EncoderTokens {
    pub onset: OnsetToken,
    pub group: GroupToken,
    pub kind: TypeToken,
    pub duration: DurationToken,
    pub value: ValueToken,
}

/// A decoder word before id lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DecoderTokens {
    pub onset: OnsetToken,
    pub drums: DrumsToken,
}

impl DecoderTokens {
    pub const BOS: DecoderTokens = DecoderTokens { onset: OnsetToken::Pad, drums: DrumsToken::Bos };
    pub const BAR: DecoderTokens = DecoderTokens { onset: OnsetToken::Bar, drums: DrumsToken::Pad };
    pub const EOS: DecoderTokens = DecoderTokens { onset: OnsetToken::Eos, drums: DrumsToken::Eos };
}

/// Nearest multiple of `width` BPM, halves rounded up.
pub fn tempo_bin(tempo: Tempo, width: u32) -> u32 {
    let bins = tempo.bpm() / u64::from(width);
    (bins.round().to_integer() * u64::from(width)) as u32
}

fn high_level(kind: TypeToken, value: ValueToken) -> EncoderTokens {
    EncoderTokens { onset: OnsetToken::Bar, group: GroupToken::HighLevel, kind, duration: DurationToken::Bar, value }
}

fn steps(q: Quarters, grid: u32) -> Result<u32, CodecError> {
    quarters_to_steps(q, grid).and_then(|s| u32::try_from(s).ok()).ok_or(CodecError::OffGrid(q))
}

/// Condition stream as tokens. Durations are clipped at the bar end but not
/// yet to the vocabulary maximum.
pub fn condition_tokens(phrase: &Phrase, config: &CodecConfig) -> Result<Vec<EncoderTokens>, CodecError> {
    config.validate()?;
    phrase.validate().map_err(|_| CodecError::InvalidPhrase)?;
    let bounds = phrase.bar_bounds();
    let mut per_bar: Vec<Vec<EncoderTokens>> = alloc::vec![Vec::new(); phrase.bars.len()];
    let mut push = |group: GroupToken, events: &[AccompEvent]| -> Result<(), CodecError> {
        for e in events {
            let bar = bar_of(&bounds, e.onset).ok_or(CodecError::InvalidPhrase)?;
            let end = core::cmp::min(e.onset + e.duration, bounds[bar + 1]);
            per_bar[bar].push(EncoderTokens {
                onset: OnsetToken::Pos(steps(e.onset - bounds[bar], config.grid)?),
                group,
                kind: match e.kind {
                    EventKind::Note => TypeToken::Note,
                    EventKind::Chord => TypeToken::Chord,
                },
                duration: DurationToken::Steps(steps(end - e.onset, config.grid)?),
                value: ValueToken::Nan,
            });
        }
        Ok(())
    };
    push(GroupToken::Guitar, &phrase.guitar)?;
    push(GroupToken::Bass, &phrase.bass)?;

    let mut out = Vec::new();
    let mut previous: Option<(ValueToken, ValueToken)> = None;
    for (bar, mut events) in phrase.bars.iter().zip(per_bar) {
        let ts = ValueToken::TimeSig(bar.ts);
        let tempo = ValueToken::Tempo(tempo_bin(bar.tempo, config.tempo_bin_width));
        out.push(high_level(TypeToken::Bar, ValueToken::Bar));
        let every = config.emit_highlevel_every_bar;
        if every || previous.is_none_or(|(t, _)| t != ts) {
            out.push(high_level(TypeToken::TimeSig, ts));
        }
        if every || previous.is_none_or(|(_, b)| b != tempo) {
            out.push(high_level(TypeToken::Tempo, tempo));
        }
        previous = Some((ts, tempo));
        events.sort_by_key(|w| (w.onset, w.group, w.kind, w.duration));
        out.extend(events);
    }
    Ok(out)
}

/// Drum stream as tokens: BOS, then per bar a BAR word and one word per hit
/// in (onset, component) order, then EOS.
pub fn drum_tokens(phrase: &Phrase, grid: u32) -> Result<Vec<DecoderTokens>, CodecError> {
    phrase.validate().map_err(|_| CodecError::InvalidPhrase)?;
    let mut out = alloc::vec![DecoderTokens::BOS];
    let mut hits = phrase.drums_by_bar().into_iter().peekable();
    for bar in 0..phrase.bars.len() {
        out.push(DecoderTokens::BAR);
        while let Some(&(b, onset, component)) = hits.peek() {
            if b != bar {
                break;
            }
            out.push(DecoderTokens { onset: OnsetToken::Pos(steps(onset, grid)?), drums: DrumsToken::Hit(component) });
            hits.next();
        }
    }
    out.push(DecoderTokens::EOS);
    Ok(out)
}

fn lookup<T: super::Token>(dim: &Dim<T>, token: T, dimension: &'static str) -> Result<u32, CodecError> {
    dim.id(token).ok_or_else(|| CodecError::OutOfVocabulary { dimension, token: alloc::format!("{token}") })
}

pub fn encoder_ids(words: &[EncoderTokens], vocab: &Vocabulary) -> Result<Vec<EncoderWord>, CodecError> {
    let v = &vocab.encoder;
    let max = v.max_duration();
    words
        .iter()
        .map(|w| {
            let duration = match (w.duration, max) {
                (DurationToken::Steps(s), Some(m)) if s > m => DurationToken::Steps(m),
                (d, _) => d,
            };
            Ok(EncoderWord {
                onset: lookup(&v.onset, w.onset, "onset")?,
                group: lookup(&v.group, w.group, "group")?,
                kind: lookup(&v.kind, w.kind, "type")?,
                duration: lookup(&v.duration, duration, "duration")?,
                value: lookup(&v.value, w.value, "value")?,
            })
        })
        .collect()
}

pub fn decoder_ids(words: &[DecoderTokens], vocab: &Vocabulary) -> Result<Vec<DecoderWord>, CodecError> {
    let v = &vocab.decoder;
    words
        .iter()
        .map(|w| Ok(DecoderWord { onset: lookup(&v.onset, w.onset, "onset")?, drums: lookup(&v.drums, w.drums, "drums")? }))
        .collect()
}

pub fn encoder_tokens(words: &[EncoderWord], vocab: &Vocabulary) -> Result<Vec<EncoderTokens>, CodecError> {
    fn get<T: super::Token>(dim: &Dim<T>, id: u32, dimension: &'static str) -> Result<T, CodecError> {
        dim.token(id).ok_or(CodecError::UnknownId { dimension, id })
    }
    let v = &vocab.encoder;
    words
        .iter()
        .map(|w| {
            Ok(EncoderTokens {
                onset: get(&v.onset, w.onset, "onset")?,
                group: get(&v.group, w.group, "group")?,
                kind: get(&v.kind, w.kind, "type")?,
                duration: get(&v.duration, w.duration, "duration")?,
                value: get(&v.value, w.value, "value")?,
            })
        })
        .collect()
}

pub fn decoder_tokens(words: &[DecoderWord], vocab: &Vocabulary) -> Result<Vec<DecoderTokens>, CodecError> {
    let v = &vocab.decoder;
    words
        .iter()
        .map(|w| {
            Ok(DecoderTokens {
                onset: v.onset.token(w.onset).ok_or(CodecError::UnknownId { dimension: "onset", id: w.onset })?,
                drums: v.drums.token(w.drums).ok_or(CodecError::UnknownId { dimension: "drums", id: w.drums })?,
            })
        })
        .collect()
}

/// The condition (guitar, bass and high-level) stream of a phrase.
pub fn encode_condition(phrase: &Phrase, vocab: &Vocabulary) -> Result<Vec<EncoderWord>, CodecError> {
    encoder_ids(&condition_tokens(phrase, &vocab.config)?, vocab)
}

/// The drum stream of a phrase, wrapped in BOS/EOS.
pub fn encode_drums(phrase: &Phrase, vocab: &Vocabulary) -> Result<Vec<DecoderWord>, CodecError> {
    decoder_ids(&drum_tokens(phrase, vocab.config.grid)?, vocab)
}
