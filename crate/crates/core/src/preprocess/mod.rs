//! Corpus preprocessing: role track selection, drum-component mapping,
//! phrase segmentation, meter/tempo filtering and dataset splitting.

mod drum_map;
mod phrase;
mod piece;
mod segment;
mod split;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::midi::{quantize, MidiError, Role, Score};

pub use drum_map::{map_drum_pitches, DrumComponent, DrumMapping, GM_TABLE};
pub use phrase::{bar_bounds, bar_of, AccompEvent, Bar, DrumHit, EventKind, Phrase, MAX_PHRASE_BARS};
pub use piece::{
    accompaniment_events, bar_grid, piece_from_tracks, prepare_piece, select_tracks, BarSpan, Piece, RoleSelection,
};
pub use segment::{filter_phrases, segment_phrases, CorpusFilterConfig};
pub use split::{split_dataset, split_sizes, Split};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PreprocessError {
    #[error("no {0:?} track")]
    MissingRole(Role),
    #[error(transparent)]
    Midi(#[from] MidiError),
    #[error("need at least 10 phrases to split, got {0}")]
    TooFewPhrases(usize),
    #[error("invalid configuration: {0}")]
    BadConfig(&'static str),
    #[error("invalid phrase: {0}")]
    InvalidPhrase(&'static str),
}

/// Result of running one score through the whole per-file pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileOutcome {
    pub phrases: Vec<Phrase>,
    pub segmented: usize,
    pub filtered_out: usize,
    pub dropped_drum_pitches: BTreeMap<u8, usize>,
}

/// Quantize to `grid` steps per quarter, select tracks, segment and filter.
pub fn process_score(
    score: &Score,
    config: &CorpusFilterConfig,
    grid: u32,
    source: &str,
) -> Result<FileOutcome, PreprocessError> {
    config.validate()?;
    let tpq = u32::from(score.ticks_per_quarter);
    if grid == 0 || tpq % grid != 0 {
        return Err(PreprocessError::Midi(MidiError::BadGrid { grid, ticks_per_quarter: tpq }));
    }
    let quantized = quantize(score, tpq / grid)?;
    let piece = prepare_piece(&quantized)?;
    let phrases = segment_phrases(&piece, config, source);
    let segmented = phrases.len();
    let phrases = filter_phrases(phrases, config);
    Ok(FileOutcome {
        filtered_out: segmented - phrases.len(),
        segmented,
        phrases,
        dropped_drum_pitches: piece.dropped_drum_pitches,
    })
}
