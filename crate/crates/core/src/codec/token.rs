use core::fmt;
use core::str::FromStr;

use crate::preprocess::DrumComponent;
use crate::time::TimeSignature;

/// A token that can live in a vocabulary dimension. Tokens are ordered so
/// that sorting gives the id order, and have a stable text form used in
/// vocabulary files.
pub trait Token: Copy + Ord + fmt::Display + fmt::Debug {
    fn parse(text: &str) -> Option<Self>;
}

/// Position inside a bar in grid steps, or a structural marker. Shared by
/// the encoder and decoder onset dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OnsetToken {
    Pad,
    Bar,
    Eos,
    Pos(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupToken {
    Pad,
    Eos,
    Guitar,
    Bass,
    HighLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeToken {
    Pad,
    Eos,
    Bar,
    TimeSig,
    Tempo,
    Note,
    Chord,
}

/// Length in grid steps; high-level words carry the `Bar` token instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DurationToken {
    Pad,
    Eos,
    Bar,
    Steps(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueToken {
    Pad,
    Eos,
    Nan,
    Bar,
    TimeSig(TimeSignature),
    /// Binned tempo in BPM.
    Tempo(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DrumsToken {
    Pad,
    Bos,
    Eos,
    Hit(DrumComponent),
}

fn prefixed(text: &str, prefix: &str) -> Option<u32> {
    text.strip_prefix(prefix).and_then(|s| u32::from_str(s).ok())
}

impl fmt::Display for OnsetToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OnsetToken::Pad => f.write_str("PAD"),
            OnsetToken::Bar => f.write_str("BAR"),
            OnsetToken::Eos => f.write_str("EOS"),
            OnsetToken::Pos(p) => write!(f, "pos:{p}"),
        }
    }
}

impl Token for OnsetToken {
    fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "PAD" => OnsetToken::Pad,
            "BAR" => OnsetToken::Bar,
            "EOS" => OnsetToken::Eos,
            _ => OnsetToken::Pos(prefixed(text, "pos:")?),
        })
    }
}

impl fmt::Display for GroupToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupToken::Pad => "PAD",
            GroupToken::Eos => "EOS",
            GroupToken::Guitar => "Guitar",
            GroupToken::Bass => "Bass",
            GroupToken::HighLevel => "HighLevel",
        })
    }
}

impl Token for GroupToken {
    fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "PAD" => GroupToken::Pad,
            "EOS" => GroupToken::Eos,
            "Guitar" => GroupToken::Guitar,
            "Bass" => GroupToken::Bass,
            "HighLevel" => GroupToken::HighLevel,
            _ => return None,
        })
    }
}

impl fmt::Display for TypeToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TypeToken::Pad => "PAD",
            TypeToken::Eos => "EOS",
            TypeToken::Bar => "Bar",
            TypeToken::TimeSig => "TimeSig",
            TypeToken::Tempo => "Tempo",
            TypeToken::Note => "Note",
            TypeToken::Chord => "Chord",
        })
    }
}

impl Token for TypeToken {
    fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "PAD" => TypeToken::Pad,
            "EOS" => TypeToken::Eos,
            "Bar" => TypeToken::Bar,
            "TimeSig" => TypeToken::TimeSig,
            "Tempo" => TypeToken::Tempo,
            "Note" => TypeToken::Note,
            "Chord" => TypeToken::Chord,
            _ => return None,
        })
    }
}

impl fmt::Display for DurationToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DurationToken::Pad => f.write_str("PAD"),
            DurationToken::Eos => f.write_str("EOS"),
            DurationToken::Bar => f.write_str("Bar"),
            DurationToken::Steps(s) => write!(f, "steps:{s}"),
        }
    }
}

impl Token for DurationToken {
    fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "PAD" => DurationToken::Pad,
            "EOS" => DurationToken::Eos,
            "Bar" => DurationToken::Bar,
            _ => DurationToken::Steps(prefixed(text, "steps:")?),
        })
    }
}

impl fmt::Display for ValueToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueToken::Pad => f.write_str("PAD"),
            ValueToken::Eos => f.write_str("EOS"),
            ValueToken::Nan => f.write_str("NaN"),
            ValueToken::Bar => f.write_str("Bar"),
            ValueToken::TimeSig(ts) => write!(f, "ts:{ts}"),
            ValueToken::Tempo(bpm) => write!(f, "bpm:{bpm}"),
        }
    }
}

impl Token for ValueToken {
    fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "PAD" => ValueToken::Pad,
            "EOS" => ValueToken::Eos,
            "NaN" => ValueToken::Nan,
            "Bar" => ValueToken::Bar,
            _ => {
                if let Some(ts) = text.strip_prefix("ts:") {
                    let (n, d) = ts.split_once('/')?;
                    ValueToken::TimeSig(TimeSignature::new(n.parse().ok()?, d.parse().ok()?)?)
                } else {
                    ValueToken::Tempo(prefixed(text, "bpm:")?)
                }
            }
        })
    }
}

impl fmt::Display for DrumsToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DrumsToken::Pad => f.write_str("PAD"),
            DrumsToken::Bos => f.write_str("BOS"),
            DrumsToken::Eos => f.write_str("EOS"),
            DrumsToken::Hit(c) => f.write_str(c.name()),
        }
    }
}

impl Token for DrumsToken {
    fn parse(text: &str) -> Option<Self> {
        Some(match text {
            "PAD" => DrumsToken::Pad,
            "BOS" => DrumsToken::Bos,
            "EOS" => DrumsToken::Eos,
            _ => DrumsToken::Hit(DrumComponent::from_name(text)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn round_trip<T: Token>(tokens: &[T]) {
        for &t in tokens {
            assert_eq!(T::parse(&t.to_string()), Some(t), "{t}");
        }
    }

    #[test]
    fn text_forms_round_trip() {
        round_trip(&[OnsetToken::Pad, OnsetToken::Bar, OnsetToken::Eos, OnsetToken::Pos(27)]);
        round_trip(&[GroupToken::Pad, GroupToken::Eos, GroupToken::Guitar, GroupToken::Bass, GroupToken::HighLevel]);
        round_trip(&[TypeToken::Bar, TypeToken::TimeSig, TypeToken::Tempo, TypeToken::Note, TypeToken::Chord]);
        round_trip(&[DurationToken::Bar, DurationToken::Steps(1), DurationToken::Eos]);
        round_trip(&[
            ValueToken::Nan,
            ValueToken::Bar,
            ValueToken::TimeSig(TimeSignature::new(12, 8).unwrap()),
            ValueToken::Tempo(120),
        ]);
        round_trip(&[DrumsToken::Bos, DrumsToken::Hit(DrumComponent::RideBell)]);
        assert_eq!(ValueToken::parse("ts:4/3"), None);
        assert_eq!(OnsetToken::parse("pos:x"), None);
    }

    #[test]
    fn structural_tokens_sort_first() {
        assert!(OnsetToken::Eos < OnsetToken::Pos(0));
        assert!(DrumsToken::Eos < DrumsToken::Hit(DrumComponent::Kick));
        assert!(ValueToken::Bar < ValueToken::TimeSig(TimeSignature::COMMON));
    }
}
