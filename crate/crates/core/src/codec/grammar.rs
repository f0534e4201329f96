use super::encode::{DecoderTokens, EncoderTokens};
use super::token::{DrumsToken, DurationToken, GroupToken, OnsetToken, TypeToken, ValueToken};

/// The first word (by index) that breaks a stream rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("word {index}: {rule}")]
pub struct GrammarViolation {
    pub index: usize,
    pub rule: &'static str,
}

fn fail(index: usize, rule: &'static str) -> Result<(), GrammarViolation> {
    Err(GrammarViolation { index, rule })
}

/// Checks the condition-stream rules: a Bar word first, high-level words
/// typed as Bar/TimeSig/Tempo with a Bar duration, guitar and bass words
/// typed Note/Chord with a NaN value, and non-decreasing onsets between bar
/// lines.
pub fn check_condition(words: &[EncoderTokens]) -> Result<(), GrammarViolation> {
    match words.first() {
        Some(w) if w.group == GroupToken::HighLevel && w.kind == TypeToken::Bar => {}
        _ => return fail(0, "stream must start with a high-level Bar word"),
    }
    let mut last: Option<u32> = None;
    for (i, w) in words.iter().enumerate() {
        match w.group {
            GroupToken::HighLevel => {
                if !matches!(w.kind, TypeToken::Bar | TypeToken::TimeSig | TypeToken::Tempo) {
                    return fail(i, "high-level word must be Bar, TimeSig or Tempo");
                }
                if w.duration != DurationToken::Bar || w.onset != OnsetToken::Bar {
                    return fail(i, "high-level word must carry Bar onset and duration");
                }
                let value_ok = match w.kind {
                    TypeToken::Bar => w.value == ValueToken::Bar,
                    TypeToken::TimeSig => matches!(w.value, ValueToken::TimeSig(_)),
                    _ => matches!(w.value, ValueToken::Tempo(_)),
                };
                if !value_ok {
                    return fail(i, "high-level value does not match its type");
                }
                if w.kind == TypeToken::Bar {
                    last = None;
                } else if last.is_some() {
                    return fail(i, "high-level word after an event in the same bar");
                }
            }
            GroupToken::Guitar | GroupToken::Bass => {
                if !matches!(w.kind, TypeToken::Note | TypeToken::Chord) {
                    return fail(i, "guitar/bass word must be Note or Chord");
                }
                if w.value != ValueToken::Nan {
                    return fail(i, "guitar/bass word must carry a NaN value");
                }
                let (OnsetToken::Pos(p), DurationToken::Steps(d)) = (w.onset, w.duration) else {
                    return fail(i, "guitar/bass word needs a position and a length");
                };
                if d == 0 {
                    return fail(i, "zero duration");
                }
                if last.is_some_and(|l| p < l) {
                    return fail(i, "onsets decrease within a bar");
                }
                last = Some(p);
            }
            _ => return fail(i, "structural group token inside the stream"),
        }
    }
    Ok(())
}

/// Checks the drum-stream rules: BOS first, EOS last, `bars` BAR words,
/// hits only after a BAR word with non-decreasing onsets, and components in
/// canonical order among simultaneous hits.
pub fn check_drums(words: &[DecoderTokens], bars: usize) -> Result<(), GrammarViolation> {
    if words.first() != Some(&DecoderTokens::BOS) {
        return fail(0, "stream must start with BOS");
    }
    if words.len() < 2 || words.last() != Some(&DecoderTokens::EOS) {
        return fail(words.len().saturating_sub(1), "stream must end with EOS");
    }
    let mut seen_bars = 0;
    let mut last: Option<(u32, DrumsToken)> = None;
    for (i, &w) in words.iter().enumerate().take(words.len() - 1).skip(1) {
        if w == DecoderTokens::BAR {
            seen_bars += 1;
            last = None;
            continue;
        }
        let (OnsetToken::Pos(p), DrumsToken::Hit(_)) = (w.onset, w.drums) else {
            return fail(i, "expected a BAR or hit word");
        };
        if seen_bars == 0 {
            return fail(i, "hit before the first BAR");
        }
        if last.is_some_and(|l| (p, w.drums) <= l) {
            return fail(i, "hits out of order within a bar");
        }
        last = Some((p, w.drums));
    }
    if seen_bars != bars {
        return fail(words.len() - 1, "BAR count differs from the phrase");
    }
    Ok(())
}
