use alloc::vec::Vec;

use super::{MidiError, Score};

const MAX_DELTA: u64 = 0x0FFF_FFFF;
const VELOCITY: u8 = 100;

fn push_varlen(out: &mut Vec<u8>, value: u64) -> Result<(), MidiError> {
    if value > MAX_DELTA {
        return Err(MidiError::DeltaTooLarge(value));
    }
    let mut buf = [0u8; 4];
    let mut n = 0;
    let mut v = value as u32;
    loop {
        buf[n] = (v & 0x7F) as u8;
        n += 1;
        v >>= 7;
        if v == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        out.push(if i == 0 { buf[i] } else { buf[i] | 0x80 });
    }
    Ok(())
}

struct ChunkWriter {
    body: Vec<u8>,
    tick: u64,
}

impl ChunkWriter {
    fn new() -> Self {
        Self { body: Vec::new(), tick: 0 }
    }

    fn event(&mut self, tick: u64, bytes: &[u8]) -> Result<(), MidiError> {
        push_varlen(&mut self.body, tick - self.tick)?;
        self.tick = tick;
        self.body.extend_from_slice(bytes);
        Ok(())
    }

    fn finish(mut self, end_tick: u64, out: &mut Vec<u8>) -> Result<(), MidiError> {
        let end = end_tick.max(self.tick);
        self.event(end, &[0xFF, 0x2F, 0x00])?;
        out.extend_from_slice(b"MTrk");
        out.extend_from_slice(&(self.body.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.body);
        Ok(())
    }
}

/// Writes a format 1 file: a conductor chunk carrying the tempo and
/// time-signature maps, then one chunk per track.
pub fn write_midi(score: &Score) -> Result<Vec<u8>, MidiError> {
    score.validate()?;
    let mut out = Vec::new();
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    let chunks = u16::try_from(score.tracks.len() + 1).map_err(|_| MidiError::InvalidScore("too many tracks"))?;
    out.extend_from_slice(&chunks.to_be_bytes());
    out.extend_from_slice(&score.ticks_per_quarter.to_be_bytes());

    // Conductor: time signatures before tempos at equal ticks.
    let mut meta: Vec<(u64, u8, [u8; 9], usize)> = Vec::new();
    for c in &score.ts_map {
        let ts = c.ts;
        if !ts.denominator.is_power_of_two() || ts.numerator == 0 || ts.denominator > 64 {
            return Err(MidiError::BadTimeSignature(ts));
        }
        let dd = ts.denominator.trailing_zeros() as u8;
        meta.push((c.tick, 0, [0xFF, 0x58, 0x04, ts.numerator, dd, 24, 8, 0, 0], 7));
    }
    for c in &score.tempo_map {
        let usec = c.tempo.usec_per_quarter();
        if usec == 0 || usec > 0x00FF_FFFF {
            return Err(MidiError::TempoOutOfRange(usec));
        }
        let b = usec.to_be_bytes();
        meta.push((c.tick, 1, [0xFF, 0x51, 0x03, b[1], b[2], b[3], 0, 0, 0], 6));
    }
    meta.sort_by_key(|m| (m.0, m.1));
    let mut conductor = ChunkWriter::new();
    for (tick, _, bytes, len) in &meta {
        conductor.event(*tick, &bytes[..*len])?;
    }
    conductor.finish(score.end_tick, &mut out)?;

    for track in &score.tracks {
        let ch = track.channel;
        let mut w = ChunkWriter::new();
        w.event(0, &[0xC0 | ch, track.program])?;
        // Key: (tick, class, note index, is_off). Class 0 holds note-offs of
        // notes with length, so they precede note-ons at the same tick; a
        // zero-length note keeps its off right after its own on.
        let mut events: Vec<(u64, u8, usize, bool)> = Vec::with_capacity(track.notes.len() * 2);
        for (i, n) in track.notes.iter().enumerate() {
            events.push((n.onset, 1, i, false));
            let class = if n.duration == 0 { 1 } else { 0 };
            events.push((n.end(), class, i, true));
        }
        events.sort_unstable();
        for (tick, _, i, off) in events {
            let pitch = track.notes[i].pitch;
            if off {
                w.event(tick, &[0x80 | ch, pitch, 64])?;
            } else {
                w.event(tick, &[0x90 | ch, pitch, VELOCITY])?;
            }
        }
        w.finish(score.end_tick, &mut out)?;
    }
    Ok(out)
}
