use alloc::vec::Vec;

use super::{MidiError, NoteEvent, Role, Score, TempoChange, TimeSigChange, Track};

/// Nearest multiple of `grid`; exact halves round down.
fn snap(t: u64, grid: u64) -> u64 {
    let r = t % grid;
    if 2 * r > grid {
        t - r + grid
    } else {
        t - r
    }
}

/// Snaps every onset, duration and map entry to a grid of `ticks_per_step`.
///
/// Non-drum notes keep at least one step of duration. The end tick is
/// rounded up so no note is cut.
pub fn quantize(score: &Score, ticks_per_step: u32) -> Result<Score, MidiError> {
    let tpq = u32::from(score.ticks_per_quarter);
    if ticks_per_step == 0 || tpq % ticks_per_step != 0 {
        return Err(MidiError::BadGrid { grid: ticks_per_step, ticks_per_quarter: tpq });
    }
    let g = u64::from(ticks_per_step);

    let tracks = score
        .tracks
        .iter()
        .map(|track| {
            let min_dur = if track.role() == Role::Drums { 0 } else { g };
            let notes: Vec<NoteEvent> = track
                .notes
                .iter()
                .map(|n| NoteEvent {
                    onset: snap(n.onset, g),
                    duration: snap(n.duration, g).max(min_dur),
                    pitch: n.pitch,
                })
                .collect();
            Track::new(track.channel, track.program, notes)
        })
        .collect();

    let mut tempo_map: Vec<TempoChange> = Vec::with_capacity(score.tempo_map.len());
    for c in &score.tempo_map {
        let tick = snap(c.tick, g);
        match tempo_map.last_mut() {
            Some(last) if last.tick == tick => last.tempo = c.tempo,
            _ => tempo_map.push(TempoChange { tick, tempo: c.tempo }),
        }
    }
    let mut ts_map: Vec<TimeSigChange> = Vec::with_capacity(score.ts_map.len());
    for c in &score.ts_map {
        let tick = snap(c.tick, g);
        match ts_map.last_mut() {
            Some(last) if last.tick == tick => last.ts = c.ts,
            _ => ts_map.push(TimeSigChange { tick, ts: c.ts }),
        }
    }

    let mut out = Score {
        ticks_per_quarter: score.ticks_per_quarter,
        tracks,
        tempo_map,
        ts_map,
        end_tick: score.end_tick.div_ceil(g) * g,
    };
    out.end_tick = out.end_tick.max(out.last_note_end().div_ceil(g) * g);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score_with(notes: Vec<NoteEvent>, channel: u8) -> Score {
        let mut s = Score::new(480);
        s.tracks.push(Track::new(channel, 29, notes));
        s.end_tick = s.last_note_end();
        s
    }

    #[test]
    fn nearest_step_with_ties_down() {
        assert_eq!(snap(72, 120), 120); // 0.6 steps
        assert_eq!(snap(60, 120), 0); // exact half
        assert_eq!(snap(59, 120), 0);
        assert_eq!(snap(181, 120), 240);
    }

    #[test]
    fn fixed_point_and_min_duration() {
        let s = score_with(vec![NoteEvent { onset: 240, duration: 120, pitch: 40 }], 0);
        assert_eq!(quantize(&s, 120).unwrap(), s);
        let short = score_with(vec![NoteEvent { onset: 250, duration: 10, pitch: 40 }], 0);
        let q = quantize(&short, 120).unwrap();
        assert_eq!(q.tracks[0].notes[0], NoteEvent { onset: 240, duration: 120, pitch: 40 });
        let drum = score_with(vec![NoteEvent { onset: 250, duration: 10, pitch: 36 }], 9);
        assert_eq!(quantize(&drum, 120).unwrap().tracks[0].notes[0].duration, 0);
    }

    #[test]
    fn bad_grid() {
        let s = Score::new(480);
        assert!(quantize(&s, 0).is_err());
        assert!(quantize(&s, 7).is_err());
    }
}
