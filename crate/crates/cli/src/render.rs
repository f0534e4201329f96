//! Phrases to three-track scores and back.

use anyhow::{bail, ensure, Context, Result};
use cpdrums_core::midi::{quantize, NoteEvent, Score, TempoChange, TimeSigChange, Track, DRUM_CHANNEL};
use cpdrums_core::preprocess::{prepare_piece, AccompEvent, EventKind, Phrase};
use cpdrums_core::Quarters;

pub const TICKS_PER_QUARTER: u16 = 480;
pub const GUITAR_PROGRAM: u8 = 29;
pub const BASS_PROGRAM: u8 = 33;
const GUITAR_BASE: u8 = 52;
const BASS_BASE: u8 = 28;
/// Semitones above the base that note allocation may use.
const PITCH_POOL: u8 = 24;

fn ticks(q: Quarters, tpq: u16) -> Result<u64> {
    let t = q * i64::from(tpq);
    ensure!(t.is_integer() && *t.numer() >= 0, "{q} quarters is not a whole number of ticks at {tpq} per quarter");
    Ok(*t.numer() as u64)
}

/// Renders accompaniment events so that no two notes of the same pitch
/// overlap or touch: each event takes the lowest free pitches of the pool,
/// two of them for a chord.
fn accompaniment_notes(events: &[AccompEvent], base: u8, tpq: u16) -> Result<Vec<NoteEvent>> {
    let mut sorted = events.to_vec();
    sorted.sort();
    let mut busy_until: Vec<Option<u64>> = vec![None; usize::from(PITCH_POOL)];
    let mut notes = Vec::new();
    for e in &sorted {
        let onset = ticks(e.onset, tpq)?;
        let duration = ticks(e.duration, tpq)?;
        ensure!(duration > 0, "event at {} has no duration", e.onset);
        let wanted = match e.kind {
            EventKind::Note => 1,
            EventKind::Chord => 2,
        };
        let free: Vec<usize> =
            (0..busy_until.len()).filter(|&p| busy_until[p].is_none_or(|end| end < onset)).take(wanted).collect();
        if free.len() < wanted {
            bail!("more than {PITCH_POOL} simultaneous notes at {}", e.onset);
        }
        for p in free {
            busy_until[p] = Some(onset + duration);
            notes.push(NoteEvent { onset, duration, pitch: base + p as u8 });
        }
    }
    Ok(notes)
}

/// Three tracks in the order guitar, bass, drums, with tempo and meter
/// written at the bars where they change. Drum hits last a sixteenth note,
/// or up to the next hit of the same component if that comes sooner.
pub fn phrase_to_score(phrase: &Phrase) -> Result<Score> {
    let tpq = TICKS_PER_QUARTER;
    let mut score = Score::new(tpq);
    score.tempo_map.clear();
    score.ts_map.clear();
    let mut start = Quarters::from_integer(0);
    for (i, bar) in phrase.bars.iter().enumerate() {
        let tick = ticks(start, tpq)?;
        if i == 0 || phrase.bars[i - 1].tempo != bar.tempo {
            score.tempo_map.push(TempoChange { tick, tempo: bar.tempo });
        }
        if i == 0 || phrase.bars[i - 1].ts != bar.ts {
            score.ts_map.push(TimeSigChange { tick, ts: bar.ts });
        }
        start += bar.quarters();
    }
    if phrase.bars.is_empty() {
        score = Score::new(tpq);
    }
    let end = ticks(start, tpq)?;
    let sixteenth = u64::from(tpq / 4);
    let mut drums = Vec::with_capacity(phrase.drums.len());
    for (i, h) in phrase.drums.iter().enumerate() {
        let onset = ticks(h.onset, tpq)?;
        let next_same = phrase.drums[i + 1..].iter().find(|n| n.component == h.component && n.onset > h.onset);
        let mut duration = sixteenth.min(end.saturating_sub(onset)).max(1);
        if let Some(n) = next_same {
            duration = duration.min(ticks(n.onset, tpq)? - onset);
        }
        drums.push(NoteEvent { onset, duration, pitch: h.component.gm_pitch() });
    }
    score.tracks = vec![
        Track::new(0, GUITAR_PROGRAM, accompaniment_notes(&phrase.guitar, GUITAR_BASE, tpq)?),
        Track::new(1, BASS_PROGRAM, accompaniment_notes(&phrase.bass, BASS_BASE, tpq)?),
        Track::new(DRUM_CHANNEL, 0, drums),
    ];
    score.end_tick = end.max(score.last_note_end());
    score.validate()?;
    Ok(score)
}

/// Reads a whole score as one phrase: quantizes to `grid`, selects the
/// guitar, bass and drum tracks and keeps every complete bar. Bars are
/// numbered from zero and the phrase may be longer than 16 bars.
pub fn score_to_phrase(score: &Score, grid: u32, source_id: &str) -> Result<Phrase> {
    let tpq = u32::from(score.ticks_per_quarter);
    ensure!(grid > 0 && tpq % grid == 0, "{tpq} ticks per quarter cannot be split into {grid} steps");
    let q = quantize(score, tpq / grid)?;
    let piece = prepare_piece(&q).context("selecting guitar, bass and drum tracks")?;
    if let Some((s, _, _)) = piece.bars.iter().find(|b| !b.2) {
        bail!("irregular bar at quarter {s}: the meter changes mid-bar");
    }
    let end = piece.end();
    let clip = |events: &[AccompEvent]| -> Vec<AccompEvent> {
        events
            .iter()
            .filter(|e| e.onset < end)
            .map(|e| AccompEvent { duration: e.duration.min(end - e.onset), ..*e })
            .collect()
    };
    Ok(Phrase {
        source_id: source_id.into(),
        bars: piece.bars.iter().map(|b| b.1).collect(),
        guitar: clip(&piece.guitar),
        bass: clip(&piece.bass),
        drums: piece.drums.iter().copied().filter(|h| h.onset < end).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cpdrums_core::midi::{parse_midi, write_midi, Tempo};
    use cpdrums_core::preprocess::{Bar, DrumComponent, DrumHit};
    use cpdrums_core::TimeSignature;

    fn q(n: i64, d: i64) -> Quarters {
        Quarters::new(n, d)
    }

    fn sample() -> Phrase {
        let ts = |n, d| TimeSignature::new(n, d).unwrap();
        let mut p = Phrase {
            source_id: "s".into(),
            bars: vec![
                Bar { index: 0, ts: ts(4, 4), tempo: Tempo::from_bpm(120).unwrap() },
                Bar { index: 1, ts: ts(6, 8), tempo: Tempo::from_bpm(120).unwrap() },
                Bar { index: 2, ts: ts(6, 8), tempo: Tempo::from_bpm(95).unwrap() },
            ],
            guitar: vec![
                AccompEvent { onset: q(0, 1), duration: q(2, 1), kind: EventKind::Chord },
                AccompEvent { onset: q(0, 1), duration: q(1, 2), kind: EventKind::Note },
                AccompEvent { onset: q(1, 2), duration: q(1, 4), kind: EventKind::Note },
                AccompEvent { onset: q(9, 1), duration: q(1, 1), kind: EventKind::Chord },
            ],
            bass: vec![AccompEvent { onset: q(4, 1), duration: q(3, 1), kind: EventKind::Note }],
            drums: vec![
                DrumHit::new(q(0, 1), DrumComponent::Kick),
                DrumHit::new(q(0, 1), DrumComponent::Crash1),
                DrumHit::new(q(1, 4), DrumComponent::ClosedHihat),
                DrumHit::new(q(2, 4), DrumComponent::ClosedHihat),
                DrumHit::new(q(39, 4), DrumComponent::Snare),
            ],
        };
        p.guitar.sort();
        p.drums.sort();
        p
    }

    #[test]
    fn phrase_round_trips_through_midi() {
        let p = sample();
        let score = phrase_to_score(&p).unwrap();
        assert_eq!(score.tracks.len(), 3);
        assert_eq!(score.end_tick, 10 * 480);
        let back = parse_midi(&write_midi(&score).unwrap()).unwrap();
        assert_eq!(back, score);
        let again = score_to_phrase(&back, 4, "s").unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn overlapping_events_get_distinct_pitches() {
        let notes = accompaniment_notes(&sample().guitar, 40, 480).unwrap();
        for (i, a) in notes.iter().enumerate() {
            for b in &notes[i + 1..] {
                if a.pitch == b.pitch {
                    assert!(a.end() < b.onset || b.end() < a.onset, "{a:?} {b:?}");
                }
            }
        }
    }

    #[test]
    fn empty_drums_still_give_three_tracks() {
        let mut p = sample();
        p.drums.clear();
        let score = phrase_to_score(&p).unwrap();
        let back = parse_midi(&write_midi(&score).unwrap()).unwrap();
        assert_eq!(back.tracks.len(), 3);
        assert!(score_to_phrase(&back, 4, "s").unwrap().drums.is_empty());
    }

    #[test]
    fn rejects_off_grid_time() {
        let mut p = sample();
        p.drums.push(DrumHit::new(q(1, 7), DrumComponent::Snare));
        p.drums.sort();
        assert!(phrase_to_score(&p).is_err());
    }
}
