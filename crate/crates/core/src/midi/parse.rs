use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::{MidiError, NoteEvent, Score, Tempo, TempoChange, TimeSigChange, Track};
use crate::time::TimeSignature;

/// Recoverable oddities found while reading a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseWarning {
    /// A note-on never matched by a note-off; closed at the end of its track.
    DanglingNote { chunk: usize, channel: u8, pitch: u8, onset: u64 },
    /// A note-off with no sounding note of that pitch.
    OrphanNoteOff { chunk: usize, channel: u8, pitch: u8, tick: u64 },
    /// A tempo or time-signature meta event that could not be interpreted.
    BadMeta { offset: usize },
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn malformed(&self, reason: &'static str) -> MidiError {
        MidiError::Malformed { offset: self.pos, reason }
    }

    fn u8(&mut self) -> Result<u8, MidiError> {
        let b = *self.data.get(self.pos).ok_or_else(|| self.malformed("unexpected end of data"))?;
        self.pos += 1;
        Ok(b)
    }

    fn peek(&self) -> Result<u8, MidiError> {
        self.data.get(self.pos).copied().ok_or_else(|| self.malformed("unexpected end of data"))
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8], MidiError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| self.malformed("length runs past end of data"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, MidiError> {
        let b = self.bytes(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, MidiError> {
        let b = self.bytes(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn varlen(&mut self) -> Result<u32, MidiError> {
        let mut value = 0u32;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | u32::from(b & 0x7F);
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(self.malformed("variable-length quantity longer than 4 bytes"))
    }

    fn data_byte(&mut self) -> Result<u8, MidiError> {
        let b = self.u8()?;
        if b & 0x80 != 0 {
            self.pos -= 1;
            return Err(self.malformed("status byte where a data byte was expected"));
        }
        Ok(b)
    }
}

#[derive(Default, Clone)]
struct ChannelState {
    used: bool,
    program: Option<u8>,
    notes: Vec<NoteEvent>,
}

/// Parses a format 0 or format 1 Standard MIDI File.
pub fn parse_midi(bytes: &[u8]) -> Result<Score, MidiError> {
    parse_midi_with_warnings(bytes).map(|(score, _)| score)
}

pub fn parse_midi_with_warnings(bytes: &[u8]) -> Result<(Score, Vec<ParseWarning>), MidiError> {
    let mut r = Reader { data: bytes, pos: 0 };
    if r.bytes(4).map_err(|_| MidiError::Malformed { offset: 0, reason: "missing MThd header" })? != b"MThd" {
        return Err(MidiError::Malformed { offset: 0, reason: "missing MThd header" });
    }
    let header_len = r.u32()? as usize;
    if header_len < 6 {
        return Err(r.malformed("header chunk shorter than 6 bytes"));
    }
    let header_start = r.pos;
    let format = r.u16()?;
    if format > 1 {
        return Err(MidiError::Unsupported { offset: header_start, reason: "only formats 0 and 1 are supported" });
    }
    let _declared_tracks = r.u16()?;
    let division_at = r.pos;
    let division = r.u16()?;
    if division & 0x8000 != 0 || division == 0 {
        return Err(MidiError::Unsupported { offset: division_at, reason: "SMPTE or zero time division" });
    }
    r.pos = header_start;
    r.bytes(header_len)?;

    let mut warnings = Vec::new();
    let mut tracks = Vec::new();
    // (tick, sequence, value): sequence keeps file order so the last event at a tick wins.
    let mut tempos: Vec<(u64, usize, Tempo)> = Vec::new();
    let mut sigs: Vec<(u64, usize, TimeSignature)> = Vec::new();
    let mut end_tick = 0u64;
    let mut chunk_index = 0usize;

    while r.pos < bytes.len() {
        let id = r.bytes(4)?;
        let len = r.u32()? as usize;
        let body_start = r.pos;
        r.bytes(len)?;
        if id != b"MTrk" {
            continue;
        }
        let mut t = Reader { data: &bytes[..body_start + len], pos: body_start };
        let chunk_end = parse_track(
            &mut t,
            chunk_index,
            &mut tracks,
            &mut tempos,
            &mut sigs,
            &mut warnings,
        )?;
        end_tick = end_tick.max(chunk_end);
        chunk_index += 1;
    }

    tempos.sort_by_key(|&(tick, seq, _)| (tick, seq));
    let mut tempo_map: Vec<TempoChange> = Vec::new();
    for (tick, _, tempo) in tempos {
        match tempo_map.last_mut() {
            Some(last) if last.tick == tick => last.tempo = tempo,
            _ => tempo_map.push(TempoChange { tick, tempo }),
        }
    }
    if tempo_map.first().is_none_or(|c| c.tick != 0) {
        tempo_map.insert(0, TempoChange { tick: 0, tempo: Tempo::DEFAULT });
    }
    sigs.sort_by_key(|&(tick, seq, _)| (tick, seq));
    let mut ts_map: Vec<TimeSigChange> = Vec::new();
    for (tick, _, ts) in sigs {
        match ts_map.last_mut() {
            Some(last) if last.tick == tick => last.ts = ts,
            _ => ts_map.push(TimeSigChange { tick, ts }),
        }
    }
    if ts_map.first().is_none_or(|c| c.tick != 0) {
        ts_map.insert(0, TimeSigChange { tick: 0, ts: TimeSignature::COMMON });
    }

    let mut score = Score { ticks_per_quarter: division, tracks, tempo_map, ts_map, end_tick };
    score.end_tick = score.end_tick.max(score.last_note_end());
    Ok((score, warnings))
}

/// Reads one MTrk body, appending one [`Track`] per channel that carried
/// channel-voice messages. Returns the chunk's end tick.
fn parse_track(
    r: &mut Reader<'_>,
    chunk: usize,
    tracks: &mut Vec<Track>,
    tempos: &mut Vec<(u64, usize, Tempo)>,
    sigs: &mut Vec<(u64, usize, TimeSignature)>,
    warnings: &mut Vec<ParseWarning>,
) -> Result<u64, MidiError> {
    let mut channels: Vec<ChannelState> = vec![ChannelState::default(); 16];
    let mut sounding: Vec<VecDeque<u64>> = vec![VecDeque::new(); 16 * 128];
    let mut tick = 0u64;
    let mut running: Option<u8> = None;

    while r.pos < r.data.len() {
        tick += u64::from(r.varlen()?);
        let event_at = r.pos;
        let mut status = r.peek()?;
        if status < 0x80 {
            status = running.ok_or_else(|| r.malformed("data byte with no running status"))?;
        } else {
            r.pos += 1;
        }
        match status {
            0x80..=0xEF => {
                running = Some(status);
                let kind = status & 0xF0;
                let ch = status & 0x0F;
                let a = r.data_byte()?;
                let b = if kind == 0xC0 || kind == 0xD0 { 0 } else { r.data_byte()? };
                let state = &mut channels[usize::from(ch)];
                state.used = true;
                let slot = &mut sounding[usize::from(ch) * 128 + usize::from(a)];
                match kind {
                    0x90 if b > 0 => slot.push_back(tick),
                    0x80 | 0x90 => match slot.pop_front() {
                        Some(onset) => state.notes.push(NoteEvent { onset, duration: tick - onset, pitch: a }),
                        None => warnings.push(ParseWarning::OrphanNoteOff { chunk, channel: ch, pitch: a, tick }),
                    },
                    0xC0
                        if state.program.is_none() => {
                            state.program = Some(a);
                        }
                    _ => {}
                }
            }
            0xFF => {
                running = None;
                let meta = r.u8()?;
                let len = r.varlen()? as usize;
                let data = r.bytes(len)?;
                match meta {
                    0x2F => break,
                    0x51 => match data {
                        [a, b, c] => {
                            let usec = u32::from_be_bytes([0, *a, *b, *c]);
                            match Tempo::from_usec(usec) {
                                Some(t) => tempos.push((tick, tempos.len(), t)),
                                None => warnings.push(ParseWarning::BadMeta { offset: event_at }),
                            }
                        }
                        _ => warnings.push(ParseWarning::BadMeta { offset: event_at }),
                    },
                    0x58 => {
                        let ts = match data {
                            [nn, dd, ..] if *dd <= 6 => TimeSignature::new(*nn, 1u8 << *dd),
                            _ => None,
                        };
                        match ts {
                            Some(ts) => sigs.push((tick, sigs.len(), ts)),
                            None => warnings.push(ParseWarning::BadMeta { offset: event_at }),
                        }
                    }
                    _ => {}
                }
            }
            0xF0 | 0xF7 => {
                running = None;
                let len = r.varlen()? as usize;
                r.bytes(len)?;
            }
            _ => {
                return Err(MidiError::Malformed { offset: event_at, reason: "system common/real-time message in file" });
            }
        }
    }

    for (ch, state) in channels.iter_mut().enumerate() {
        for pitch in 0..128u8 {
            for onset in sounding[ch * 128 + usize::from(pitch)].drain(..) {
                warnings.push(ParseWarning::DanglingNote { chunk, channel: ch as u8, pitch, onset });
                state.notes.push(NoteEvent { onset, duration: tick - onset, pitch });
            }
        }
    }
    for (ch, state) in channels.into_iter().enumerate() {
        if state.used {
            tracks.push(Track::new(ch as u8, state.program.unwrap_or(0), state.notes));
        }
    }
    Ok(tick)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(ntracks: u16, division: u16) -> Vec<u8> {
        let mut v = b"MThd".to_vec();
        v.extend_from_slice(&6u32.to_be_bytes());
        v.extend_from_slice(&1u16.to_be_bytes());
        v.extend_from_slice(&ntracks.to_be_bytes());
        v.extend_from_slice(&division.to_be_bytes());
        v
    }

    fn chunk(body: &[u8]) -> Vec<u8> {
        let mut v = b"MTrk".to_vec();
        v.extend_from_slice(&(body.len() as u32).to_be_bytes());
        v.extend_from_slice(body);
        v
    }

    #[test]
    fn two_notes_with_running_status_and_velocity_zero_off() {
        // Hand-assembled: ch 0, program 29; C4 at 0 for 96 ticks, then E4 at
        // 96 for 192 ticks (delta 0x81 0x40 = 192), closed by vel-0 note-ons
        // under running status.
        let body = [
            0x00, 0xC0, 29, //
            0x00, 0x90, 60, 100, //
            0x60, 60, 0, // running status, vel 0 => off at 96
            0x00, 64, 90, // E4 on at 96
            0x81, 0x40, 64, 0, // off at 288
            0x00, 0xFF, 0x2F, 0x00,
        ];
        let mut bytes = header(1, 96);
        bytes.extend(chunk(&body));
        let score = parse_midi(&bytes).unwrap();
        assert_eq!(score.tracks.len(), 1);
        let t = &score.tracks[0];
        assert_eq!(t.program, 29);
        assert_eq!(
            t.notes,
            vec![
                NoteEvent { onset: 0, duration: 96, pitch: 60 },
                NoteEvent { onset: 96, duration: 192, pitch: 64 },
            ]
        );
        assert_eq!(score.end_tick, 288);
        assert_eq!(score.tempo_map, vec![TempoChange { tick: 0, tempo: Tempo::DEFAULT }]);
    }

    #[test]
    fn no_notes_gives_empty_tracks_and_default_maps() {
        let mut bytes = header(1, 480);
        bytes.extend(chunk(&[0x00, 0xFF, 0x2F, 0x00]));
        let (score, warnings) = parse_midi_with_warnings(&bytes).unwrap();
        assert!(score.tracks.is_empty());
        assert!(warnings.is_empty());
        assert_eq!(score.ts_map[0].ts, TimeSignature::COMMON);
        assert_eq!(score.tempo_map[0].tempo.bpm(), num_rational::Ratio::from_integer(120));
    }

    #[test]
    fn dangling_note_closed_at_track_end() {
        let body = [0x00, 0x99, 36, 100, 0x83, 0x60, 0xFF, 0x2F, 0x00];
        let mut bytes = header(1, 480);
        bytes.extend(chunk(&body));
        let (score, warnings) = parse_midi_with_warnings(&bytes).unwrap();
        assert_eq!(score.tracks[0].notes[0], NoteEvent { onset: 0, duration: 480, pitch: 36 });
        assert!(matches!(warnings[0], ParseWarning::DanglingNote { pitch: 36, .. }));
    }

    #[test]
    fn malformed_inputs_report_offsets() {
        assert!(matches!(parse_midi(b"RIFF"), Err(MidiError::Malformed { offset: 0, .. })));
        let mut bytes = header(1, 480);
        bytes.extend_from_slice(b"MTrk");
        bytes.extend_from_slice(&100u32.to_be_bytes());
        match parse_midi(&bytes) {
            Err(MidiError::Malformed { offset, .. }) => assert_eq!(offset, 22),
            other => panic!("{other:?}"),
        }
        let mut smpte = header(1, 0xE728);
        smpte.extend(chunk(&[0x00, 0xFF, 0x2F, 0x00]));
        assert!(matches!(parse_midi(&smpte), Err(MidiError::Unsupported { .. })));
    }

    #[test]
    fn format0_splits_channels() {
        let body = [
            0x00, 0xC0, 33, 0x00, 0x90, 40, 80, //
            0x00, 0x99, 36, 80, //
            0x10, 0x80, 40, 0, 0x00, 0x89, 36, 0, //
            0x00, 0xFF, 0x2F, 0x00,
        ];
        let mut bytes = header(1, 96);
        bytes[9] = 0;
        bytes.extend(chunk(&body));
        let score = parse_midi(&bytes).unwrap();
        assert_eq!(score.tracks.len(), 2);
        assert_eq!(score.tracks[0].role(), super::super::Role::Bass);
        assert_eq!(score.tracks[1].role(), super::super::Role::Drums);
    }
}
