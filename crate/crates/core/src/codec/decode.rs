use alloc::vec::Vec;

use num_rational::Ratio;

use super::encode::{decoder_tokens, DecoderTokens, DecoderWord};
use super::token::{DrumsToken, OnsetToken};
use super::vocab::Vocabulary;
use super::CodecError;
use crate::preprocess::{bar_bounds, Bar, DrumHit};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodedDrums {
    /// Phrase-relative hits, sorted by (onset, component), without duplicates.
    pub hits: Vec<DrumHit>,
    /// Hits whose onset lay past the end of their bar and were moved to the
    /// bar's last grid step.
    pub clamped: usize,
    /// BAR words seen before EOS.
    pub bars: usize,
    pub saw_eos: bool,
}

/// Inverse of [`super::encode_drums`]. `bars` gives the meter of each bar so
/// onsets can be placed and checked. Words after EOS are ignored.
pub fn decode_drums(words: &[DecoderWord], vocab: &Vocabulary, bars: &[Bar]) -> Result<DecodedDrums, CodecError> {
    let tokens = decoder_tokens(words, vocab)?;
    decode_drum_tokens(&tokens, vocab.config.grid, bars)
}

pub fn decode_drum_tokens(tokens: &[DecoderTokens], grid: u32, bars: &[Bar]) -> Result<DecodedDrums, CodecError> {
    if tokens.first() != Some(&DecoderTokens::BOS) {
        return Err(CodecError::MissingBos);
    }
    let bounds = bar_bounds(bars);
    let mut out = DecodedDrums::default();
    for (i, &w) in tokens.iter().enumerate().skip(1) {
        match (w.onset, w.drums) {
            (OnsetToken::Eos, DrumsToken::Eos) => {
                out.saw_eos = true;
                break;
            }
            (OnsetToken::Bar, DrumsToken::Pad) => {
                if out.bars == bars.len() {
                    return Err(CodecError::TooManyBars(bars.len()));
                }
                out.bars += 1;
            }
            (OnsetToken::Pos(p), DrumsToken::Hit(component)) => {
                let bar = out.bars.checked_sub(1).ok_or(CodecError::HitBeforeBar)?;
                let len = bars[bar].ts.bar_steps(grid).ok_or(CodecError::GridMismatch(bars[bar].ts))?;
                let p = if p >= len {
                    out.clamped += 1;
                    len - 1
                } else {
                    p
                };
                let onset = bounds[bar] + Ratio::new(i64::from(p), i64::from(grid));
                out.hits.push(DrumHit::new(onset, component));
            }
            _ => return Err(CodecError::MalformedWord(i)),
        }
    }
    out.hits.sort();
    out.hits.dedup();
    Ok(out)
}
