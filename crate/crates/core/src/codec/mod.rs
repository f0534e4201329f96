//! Compound-word (CP) streams.
//!
//! The condition stream has five fields per word (onset, group, type,
//! duration, value) and describes guitar, bass and the per-bar meter and
//! tempo. The drum stream has two fields (onset, drums). Onsets count grid
//! steps from the start of the current bar.

mod decode;
mod encode;
mod grammar;
mod token;
mod vocab;

use alloc::string::String;

pub use decode::{decode_drum_tokens, decode_drums, DecodedDrums};
pub use encode::{
    condition_tokens, decoder_ids, decoder_tokens, drum_tokens, encode_condition, encode_drums, encoder_ids,
    encoder_tokens, tempo_bin, DecoderTokens, DecoderWord, EncoderTokens, EncoderWord,
};
pub use grammar::{check_condition, check_drums, GrammarViolation};
pub use token::{DrumsToken, DurationToken, GroupToken, OnsetToken, Token, TypeToken, ValueToken};
pub use vocab::{build_vocab, CodecConfig, DecoderVocab, Dim, EncoderVocab, Vocabulary, VOCAB_SCHEMA_VERSION};

use crate::time::{Quarters, TimeSignature};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("invalid codec configuration: {0}")]
    BadConfig(&'static str),
    #[error("time signature {0} does not divide into whole grid steps")]
    GridMismatch(TimeSignature),
    #[error("position {0} is not on the onset grid")]
    OffGrid(Quarters),
    #[error("phrase violates its invariants")]
    InvalidPhrase,
    #[error("{dimension} token {token} is not in the vocabulary")]
    OutOfVocabulary { dimension: &'static str, token: String },
    #[error("{dimension} id {id} is not in the vocabulary")]
    UnknownId { dimension: &'static str, id: u32 },
    #[error("drum stream does not start with BOS")]
    MissingBos,
    #[error("drum hit before the first BAR word")]
    HitBeforeBar,
    #[error("drum stream has more bars than the {0} given")]
    TooManyBars(usize),
    #[error("word {0} mixes structural and event tokens")]
    MalformedWord(usize),
}
