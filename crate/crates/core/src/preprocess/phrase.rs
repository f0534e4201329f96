use alloc::string::String;
use alloc::vec::Vec;

use num_rational::Ratio;

use super::{DrumComponent, PreprocessError};
use crate::midi::Tempo;
use crate::time::{Quarters, TimeSignature};

pub const MAX_PHRASE_BARS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bar {
    /// Bar number within the source piece.
    pub index: u32,
    pub ts: TimeSignature,
    pub tempo: Tempo,
}

impl Bar {
    pub fn quarters(&self) -> Quarters {
        self.ts.bar_quarters()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EventKind {
    Note,
    Chord,
}

/// A guitar or bass event. Pitch content is not kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AccompEvent {
    pub onset: Quarters,
    pub duration: Quarters,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DrumHit {
    pub onset: Quarters,
    pub component: DrumComponent,
}

impl DrumHit {
    pub fn new(onset: Quarters, component: DrumComponent) -> Self {
        Self { onset, component }
    }
}

/// A training unit of at most 16 bars. All onsets are in quarters from the
/// start of the phrase.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Phrase {
    pub source_id: String,
    pub bars: Vec<Bar>,
    pub guitar: Vec<AccompEvent>,
    pub bass: Vec<AccompEvent>,
    /// Sorted by (onset, component), no duplicates.
    pub drums: Vec<DrumHit>,
}

impl Phrase {
    /// Start of every bar plus the phrase end, in quarters.
    pub fn bar_bounds(&self) -> Vec<Quarters> {
        bar_bounds(&self.bars)
    }

    pub fn total_quarters(&self) -> Quarters {
        self.bars.iter().map(Bar::quarters).sum()
    }

    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.bars.is_empty() || self.bars.len() > MAX_PHRASE_BARS {
            return Err(PreprocessError::InvalidPhrase("bar count must be within 1..=16"));
        }
        let end = self.total_quarters();
        let zero = Ratio::from_integer(0);
        for e in self.guitar.iter().chain(&self.bass) {
            if e.onset < zero || e.onset >= end {
                return Err(PreprocessError::InvalidPhrase("accompaniment onset outside the phrase"));
            }
            if e.duration <= zero {
                return Err(PreprocessError::InvalidPhrase("accompaniment duration must be positive"));
            }
        }
        for h in &self.drums {
            if h.onset < zero || h.onset >= end {
                return Err(PreprocessError::InvalidPhrase("drum onset outside the phrase"));
            }
        }
        if !self.drums.windows(2).all(|w| (w[0].onset, w[0].component) < (w[1].onset, w[1].component)) {
            return Err(PreprocessError::InvalidPhrase("drum hits must be sorted and unique"));
        }
        Ok(())
    }

    /// Groups drum hits by bar: `(bar index, onset within bar, component)`.
    pub fn drums_by_bar(&self) -> Vec<(usize, Quarters, DrumComponent)> {
        let bounds = self.bar_bounds();
        self.drums
            .iter()
            .filter_map(|h| bar_of(&bounds, h.onset).map(|b| (b, h.onset - bounds[b], h.component)))
            .collect()
    }
}

pub fn bar_bounds(bars: &[Bar]) -> Vec<Quarters> {
    let mut out = Vec::with_capacity(bars.len() + 1);
    let mut acc = Ratio::from_integer(0);
    out.push(acc);
    for b in bars {
        acc += b.quarters();
        out.push(acc);
    }
    out
}

/// Index of the bar containing `onset`, given bounds from [`bar_bounds`].
pub fn bar_of(bounds: &[Quarters], onset: Quarters) -> Option<usize> {
    if bounds.len() < 2 || onset < bounds[0] || onset >= bounds[bounds.len() - 1] {
        return None;
    }
    Some(bounds.partition_point(|&b| b <= onset) - 1)
}
