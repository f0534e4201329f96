//! Standard MIDI File model, reader and writer.
//!
//! Time is kept in integer ticks throughout; conversion to quarter-note
//! positions happens in the preprocessing layer.

mod parse;
mod quantize;
mod write;

use alloc::vec::Vec;

use num_rational::Ratio;

use crate::time::TimeSignature;

pub use parse::{parse_midi, parse_midi_with_warnings, ParseWarning};
pub use quantize::quantize;
pub use write::write_midi;

/// General MIDI percussion channel (channel 10, zero-based 9).
pub const DRUM_CHANNEL: u8 = 9;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MidiError {
    #[error("malformed MIDI at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: &'static str },
    #[error("unsupported MIDI at byte {offset}: {reason}")]
    Unsupported { offset: usize, reason: &'static str },
    #[error("tempo of {0} us per quarter is not representable")]
    TempoOutOfRange(u32),
    #[error("time signature {0} is not representable")]
    BadTimeSignature(TimeSignature),
    #[error("delta time {0} exceeds the 28-bit limit")]
    DeltaTooLarge(u64),
    #[error("invalid score: {0}")]
    InvalidScore(&'static str),
    #[error("grid of {grid} ticks does not evenly divide {ticks_per_quarter} ticks per quarter")]
    BadGrid { grid: u32, ticks_per_quarter: u32 },
}

/// Tempo stored the way MIDI stores it, as microseconds per quarter note, so
/// that reading and writing are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tempo {
    usec_per_quarter: u32,
}

impl Tempo {
    pub const DEFAULT: Tempo = Tempo { usec_per_quarter: 500_000 };

    /// Accepts the 24-bit range a tempo meta event can carry.
    pub fn from_usec(usec_per_quarter: u32) -> Option<Self> {
        (1..=0x00FF_FFFF)
            .contains(&usec_per_quarter)
            .then_some(Self { usec_per_quarter })
    }

    /// Nearest representable tempo to a whole BPM value.
    pub fn from_bpm(bpm: u32) -> Option<Self> {
        if bpm == 0 {
            return None;
        }
        Self::from_usec((60_000_000 + bpm / 2) / bpm)
    }

    pub fn usec_per_quarter(&self) -> u32 {
        self.usec_per_quarter
    }

    pub fn bpm(&self) -> Ratio<u64> {
        Ratio::new(60_000_000, u64::from(self.usec_per_quarter))
    }

    pub fn bpm_f64(&self) -> f64 {
        60_000_000.0 / f64::from(self.usec_per_quarter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Guitar,
    Bass,
    Drums,
    Other,
}

impl Role {
    /// Role from the channel and General MIDI program (zero-based).
    pub fn classify(channel: u8, program: u8) -> Self {
        match (channel, program) {
            (DRUM_CHANNEL, _) => Role::Drums,
            (_, 24..=31) => Role::Guitar,
            (_, 32..=39) => Role::Bass,
            _ => Role::Other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NoteEvent {
    pub onset: u64,
    pub duration: u64,
    pub pitch: u8,
}

impl NoteEvent {
    pub fn end(&self) -> u64 {
        self.onset + self.duration
    }
}

/// All notes of one channel within one track chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Track {
    pub channel: u8,
    pub program: u8,
    /// Sorted by onset (then pitch, then duration).
    pub notes: Vec<NoteEvent>,
}

impl Track {
    pub fn new(channel: u8, program: u8, mut notes: Vec<NoteEvent>) -> Self {
        notes.sort_by_key(|n| (n.onset, n.pitch, n.duration));
        Self { channel, program, notes }
    }

    pub fn role(&self) -> Role {
        Role::classify(self.channel, self.program)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TempoChange {
    pub tick: u64,
    pub tempo: Tempo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeSigChange {
    pub tick: u64,
    pub ts: TimeSignature,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Score {
    pub ticks_per_quarter: u16,
    pub tracks: Vec<Track>,
    pub tempo_map: Vec<TempoChange>,
    pub ts_map: Vec<TimeSigChange>,
    /// Latest end-of-track tick; never earlier than the last note end.
    pub end_tick: u64,
}

impl Score {
    /// An empty score with 120 BPM and 4/4 at tick 0.
    pub fn new(ticks_per_quarter: u16) -> Self {
        Self {
            ticks_per_quarter,
            tracks: Vec::new(),
            tempo_map: alloc::vec![TempoChange { tick: 0, tempo: Tempo::DEFAULT }],
            ts_map: alloc::vec![TimeSigChange { tick: 0, ts: TimeSignature::COMMON }],
            end_tick: 0,
        }
    }

    pub fn last_note_end(&self) -> u64 {
        self.tracks
            .iter()
            .flat_map(|t| t.notes.iter().map(NoteEvent::end))
            .max()
            .unwrap_or(0)
    }

    /// Time signature in force at `tick`.
    pub fn ts_at(&self, tick: u64) -> TimeSignature {
        self.ts_map
            .iter()
            .take_while(|c| c.tick <= tick)
            .last()
            .map_or(TimeSignature::COMMON, |c| c.ts)
    }

    /// Tempo in force at `tick`.
    pub fn tempo_at(&self, tick: u64) -> Tempo {
        self.tempo_map
            .iter()
            .take_while(|c| c.tick <= tick)
            .last()
            .map_or(Tempo::DEFAULT, |c| c.tempo)
    }

    pub fn validate(&self) -> Result<(), MidiError> {
        if self.ticks_per_quarter == 0 || self.ticks_per_quarter > 0x7FFF {
            return Err(MidiError::InvalidScore("ticks per quarter must be in 1..=32767"));
        }
        if !self.tempo_map.windows(2).all(|w| w[0].tick < w[1].tick) {
            return Err(MidiError::InvalidScore("tempo map must be sorted with unique ticks"));
        }
        if !self.ts_map.windows(2).all(|w| w[0].tick < w[1].tick) {
            return Err(MidiError::InvalidScore("time signature map must be sorted with unique ticks"));
        }
        for track in &self.tracks {
            if track.channel > 15 {
                return Err(MidiError::InvalidScore("channel out of range"));
            }
            if track.program > 127 {
                return Err(MidiError::InvalidScore("program out of range"));
            }
            if track.notes.iter().any(|n| n.pitch > 127) {
                return Err(MidiError::InvalidScore("pitch out of range"));
            }
            if !track.notes.windows(2).all(|w| w[0].onset <= w[1].onset) {
                return Err(MidiError::InvalidScore("notes must be sorted by onset"));
            }
        }
        if self.last_note_end() > self.end_tick {
            return Err(MidiError::InvalidScore("end tick precedes a note end"));
        }
        Ok(())
    }
}
