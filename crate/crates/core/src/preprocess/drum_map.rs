//! General MIDI percussion pitches to the 13 drum components.
//!
//! The table below is the committed mapping. Pitches that are not listed
//! (hand clap, cowbell, latin percussion, ...) are dropped and counted.
//!
//! | GM pitch | GM name              | component    |
//! |---------:|----------------------|--------------|
//! | 35       | Acoustic Bass Drum   | Kick         |
//! | 36       | Bass Drum 1          | Kick         |
//! | 37       | Side Stick           | SideStick    |
//! | 38       | Acoustic Snare       | Snare        |
//! | 40       | Electric Snare       | Snare        |
//! | 42       | Closed Hi-Hat        | ClosedHihat  |
//! | 44       | Pedal Hi-Hat         | ClosedHihat  |
//! | 46       | Open Hi-Hat          | OpenHihat    |
//! | 48       | Hi-Mid Tom           | TomHigh      |
//! | 50       | High Tom             | TomHigh      |
//! | 45       | Low Tom              | TomMid       |
//! | 47       | Low-Mid Tom          | TomMid       |
//! | 41       | Low Floor Tom        | TomLow       |
//! | 43       | High Floor Tom       | TomLow       |
//! | 49       | Crash Cymbal 1       | Crash1       |
//! | 57       | Crash Cymbal 2       | Crash2       |
//! | 55       | Splash Cymbal        | Crash2       |
//! | 52       | Chinese Cymbal       | China        |
//! | 53       | Ride Bell            | RideBell     |
//! | 51       | Ride Cymbal 1        | RideCymbal   |
//! | 59       | Ride Cymbal 2        | RideCymbal   |

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_rational::Ratio;

use crate::midi::NoteEvent;
use crate::time::Quarters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DrumComponent {
    Kick,
    Snare,
    SideStick,
    ClosedHihat,
    OpenHihat,
    TomHigh,
    TomMid,
    TomLow,
    Crash1,
    Crash2,
    China,
    RideBell,
    RideCymbal,
}

impl DrumComponent {
    pub const COUNT: usize = 13;

    /// Canonical order; simultaneous hits are emitted in this order.
    pub const ALL: [DrumComponent; 13] = [
        DrumComponent::Kick,
        DrumComponent::Snare,
        DrumComponent::SideStick,
        DrumComponent::ClosedHihat,
        DrumComponent::OpenHihat,
        DrumComponent::TomHigh,
        DrumComponent::TomMid,
        DrumComponent::TomLow,
        DrumComponent::Crash1,
        DrumComponent::Crash2,
        DrumComponent::China,
        DrumComponent::RideBell,
        DrumComponent::RideCymbal,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            DrumComponent::Kick => "Kick",
            DrumComponent::Snare => "Snare",
            DrumComponent::SideStick => "SideStick",
            DrumComponent::ClosedHihat => "ClosedHihat",
            DrumComponent::OpenHihat => "OpenHihat",
            DrumComponent::TomHigh => "TomHigh",
            DrumComponent::TomMid => "TomMid",
            DrumComponent::TomLow => "TomLow",
            DrumComponent::Crash1 => "Crash1",
            DrumComponent::Crash2 => "Crash2",
            DrumComponent::China => "China",
            DrumComponent::RideBell => "RideBell",
            DrumComponent::RideCymbal => "RideCymbal",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }

    /// Pitch used when rendering the component back to MIDI.
    pub fn gm_pitch(self) -> u8 {
        match self {
            DrumComponent::Kick => 36,
            DrumComponent::Snare => 38,
            DrumComponent::SideStick => 37,
            DrumComponent::ClosedHihat => 42,
            DrumComponent::OpenHihat => 46,
            DrumComponent::TomHigh => 50,
            DrumComponent::TomMid => 47,
            DrumComponent::TomLow => 43,
            DrumComponent::Crash1 => 49,
            DrumComponent::Crash2 => 57,
            DrumComponent::China => 52,
            DrumComponent::RideBell => 53,
            DrumComponent::RideCymbal => 51,
        }
    }

    pub fn from_gm_pitch(pitch: u8) -> Option<Self> {
        GM_TABLE.iter().find(|&&(p, _)| p == pitch).map(|&(_, c)| c)
    }
}

impl fmt::Display for DrumComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const GM_TABLE: [(u8, DrumComponent); 21] = [
    (35, DrumComponent::Kick),
    (36, DrumComponent::Kick),
    (37, DrumComponent::SideStick),
    (38, DrumComponent::Snare),
    (40, DrumComponent::Snare),
    (42, DrumComponent::ClosedHihat),
    (44, DrumComponent::ClosedHihat),
    (46, DrumComponent::OpenHihat),
    (48, DrumComponent::TomHigh),
    (50, DrumComponent::TomHigh),
    (45, DrumComponent::TomMid),
    (47, DrumComponent::TomMid),
    (41, DrumComponent::TomLow),
    (43, DrumComponent::TomLow),
    (49, DrumComponent::Crash1),
    (57, DrumComponent::Crash2),
    (55, DrumComponent::Crash2),
    (52, DrumComponent::China),
    (53, DrumComponent::RideBell),
    (51, DrumComponent::RideCymbal),
    (59, DrumComponent::RideCymbal),
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DrumMapping {
    /// Onsets in quarters from the start of the score.
    pub hits: Vec<(Quarters, DrumComponent)>,
    pub dropped: usize,
    pub dropped_by_pitch: BTreeMap<u8, usize>,
}

pub fn map_drum_pitches(notes: &[NoteEvent], ticks_per_quarter: u16) -> DrumMapping {
    let tpq = i64::from(ticks_per_quarter);
    let mut out = DrumMapping::default();
    for n in notes {
        match DrumComponent::from_gm_pitch(n.pitch) {
            Some(c) => out.hits.push((Ratio::new(n.onset as i64, tpq), c)),
            None => {
                out.dropped += 1;
                *out.dropped_by_pitch.entry(n.pitch).or_insert(0) += 1;
            }
        }
    }
    out
}
