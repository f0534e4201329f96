use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_rational::Ratio;

use super::drum_map::map_drum_pitches;
use super::phrase::{AccompEvent, Bar, DrumHit, EventKind};
use super::PreprocessError;
use crate::midi::{NoteEvent, Role, Score, Tempo, Track};
use crate::time::{Quarters, TimeSignature};

/// One bar of a score in ticks. A bar is irregular when a time-signature
/// change cuts it short.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BarSpan {
    pub start: u64,
    pub len: u64,
    pub ts: TimeSignature,
    pub tempo: Tempo,
    pub regular: bool,
}

/// The complete bars of a score: bars that end no later than the later of
/// the end-of-track tick and the last note end.
pub fn bar_grid(score: &Score) -> Vec<BarSpan> {
    let piece_end = score.end_tick.max(score.last_note_end());
    let tpq = u32::from(score.ticks_per_quarter);
    let mut bars = Vec::new();
    let mut t = 0u64;
    while t < piece_end {
        let ts = score.ts_at(t);
        let Some(len) = ts.bar_ticks(tpq) else { break };
        let next_change = score.ts_map.iter().map(|c| c.tick).find(|&c| c > t);
        let (len, regular) = match next_change {
            Some(c) if c < t + len => (c - t, false),
            _ => (len, true),
        };
        if t + len > piece_end {
            break;
        }
        bars.push(BarSpan { start: t, len, ts, tempo: score.tempo_at(t), regular });
        t += len;
    }
    bars
}

fn active_bar_count(notes: &[NoteEvent], bars: &[BarSpan]) -> u64 {
    let mut active = Vec::new();
    for n in notes {
        let idx = bars.partition_point(|b| b.start <= n.onset);
        active.push(idx);
    }
    active.dedup();
    active.len() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleSelection {
    pub guitar: usize,
    pub bass: usize,
    pub drums: usize,
}

/// Picks, per role, the track with the most notes per active bar. Ties go
/// to the lower track index.
pub fn select_tracks(score: &Score) -> Result<RoleSelection, PreprocessError> {
    let bars = bar_grid(score);
    let pick = |role: Role| -> Result<usize, PreprocessError> {
        let mut best: Option<(usize, u64, u64)> = None;
        for (i, track) in score.tracks.iter().enumerate().filter(|(_, t)| t.role() == role) {
            let notes = track.notes.len() as u64;
            let active = active_bar_count(&track.notes, &bars);
            let better = match best {
                None => true,
                // notes/active > best_notes/best_active, compared without division.
                Some((_, bn, ba)) => {
                    if active == 0 {
                        false
                    } else if ba == 0 {
                        true
                    } else {
                        notes * ba > bn * active
                    }
                }
            };
            if better {
                best = Some((i, notes, active));
            }
        }
        best.map(|b| b.0).ok_or(PreprocessError::MissingRole(role))
    };
    Ok(RoleSelection { guitar: pick(Role::Guitar)?, bass: pick(Role::Bass)?, drums: pick(Role::Drums)? })
}

/// A score reduced to the three selected roles, in quarter-note time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    /// `(start in quarters, bar, regular)` for every complete bar.
    pub bars: Vec<(Quarters, Bar, bool)>,
    pub guitar: Vec<AccompEvent>,
    pub bass: Vec<AccompEvent>,
    pub drums: Vec<DrumHit>,
    pub dropped_drum_pitches: BTreeMap<u8, usize>,
}

impl Piece {
    pub fn end(&self) -> Quarters {
        self.bars.last().map_or(Ratio::from_integer(0), |(s, b, _)| *s + b.quarters())
    }
}

/// Collapses notes sharing onset and duration into one event; two or more
/// such notes make a chord.
pub fn accompaniment_events(track: &Track, ticks_per_quarter: u16) -> Vec<AccompEvent> {
    let tpq = i64::from(ticks_per_quarter);
    let mut groups: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    for n in &track.notes {
        *groups.entry((n.onset, n.duration)).or_insert(0) += 1;
    }
    groups
        .into_iter()
        .filter(|&((_, dur), _)| dur > 0)
        .map(|((onset, dur), count)| AccompEvent {
            onset: Ratio::new(onset as i64, tpq),
            duration: Ratio::new(dur as i64, tpq),
            kind: if count >= 2 { EventKind::Chord } else { EventKind::Note },
        })
        .collect()
}

/// Selects the role tracks, maps drum pitches and lays out the bar grid.
pub fn prepare_piece(score: &Score) -> Result<Piece, PreprocessError> {
    let sel = select_tracks(score)?;
    Ok(piece_from_tracks(score, &score.tracks[sel.guitar], &score.tracks[sel.bass], &score.tracks[sel.drums]))
}

pub fn piece_from_tracks(score: &Score, guitar: &Track, bass: &Track, drums: &Track) -> Piece {
    let tpq = score.ticks_per_quarter;
    let bars = bar_grid(score)
        .into_iter()
        .enumerate()
        .map(|(i, b)| {
            let start = Ratio::new(b.start as i64, i64::from(tpq));
            (start, Bar { index: i as u32, ts: b.ts, tempo: b.tempo }, b.regular)
        })
        .collect();
    let mapping = map_drum_pitches(&drums.notes, tpq);
    let mut hits: Vec<DrumHit> = mapping.hits.into_iter().map(|(q, c)| DrumHit::new(q, c)).collect();
    hits.sort();
    hits.dedup();
    Piece {
        bars,
        guitar: accompaniment_events(guitar, tpq),
        bass: accompaniment_events(bass, tpq),
        drums: hits,
        dropped_drum_pitches: mapping.dropped_by_pitch,
    }
}
