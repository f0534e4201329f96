//! The bundled toy corpus: twenty short rock arrangements generated from a
//! fixed seed, so the whole pipeline can be exercised offline.
//!
//! Files are mostly 4/4, with 3/4 and 6/8 pieces mixed in, tempos between 80
//! and 210 BPM and lengths of 16, 18, 20 or 32 bars. Drums play an eighth
//! note hi-hat or ride over a kick/snare pattern, with a crash every four
//! bars and a tom fill on the fourth. File 13 has no bass track and file 5
//! uses a cowbell, which the component map drops.

use std::path::Path;

use anyhow::{Context, Result};
use cpdrums_core::midi::{write_midi, NoteEvent, Score, Tempo, DRUM_CHANNEL};
use cpdrums_core::preprocess::{AccompEvent, Bar, DrumComponent, DrumHit, EventKind, Phrase};
use cpdrums_core::{Quarters, TimeSignature};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::render::phrase_to_score;

pub const TOY_FILES: usize = 20;
pub const TOY_SEED: u64 = 20_230_915;
pub const NO_BASS_FILE: usize = 13;
pub const COWBELL_FILE: usize = 5;
const COWBELL: u8 = 56;
const STEPS_PER_QUARTER: i64 = 4;

pub fn file_name(i: usize) -> String {
    format!("toy_{i:02}.mid")
}

fn step(s: i64) -> Quarters {
    Quarters::new(s, STEPS_PER_QUARTER)
}

struct Meter {
    ts: TimeSignature,
    steps: i64,
    /// Steps per beat: a quarter, or a dotted quarter in 6/8.
    beat: i64,
    kick_patterns: &'static [&'static [i64]],
    snare: &'static [i64],
}

fn meter(i: usize) -> Meter {
    match i % 8 {
        3 => Meter {
            ts: TimeSignature::new(3, 4).expect("valid"),
            steps: 12,
            beat: 4,
            kick_patterns: &[&[0], &[0, 6], &[0, 10]],
            snare: &[4, 8],
        },
        7 => Meter {
            ts: TimeSignature::new(6, 8).expect("valid"),
            steps: 12,
            beat: 6,
            kick_patterns: &[&[0], &[0, 10], &[0, 4]],
            snare: &[6],
        },
        _ => Meter {
            ts: TimeSignature::COMMON,
            steps: 16,
            beat: 4,
            kick_patterns: &[&[0, 8], &[0, 6, 8], &[0, 8, 10], &[0, 3, 8, 11]],
            snare: &[4, 12],
        },
    }
}

/// The arrangement of toy file `i` as one long phrase.
pub fn toy_phrase(i: usize) -> Phrase {
    let mut rng = ChaCha8Rng::seed_from_u64(TOY_SEED);
    rng.set_stream(i as u64);
    let m = meter(i);
    let bars = [16, 20, 32, 18][i % 4];
    let bpm = 80 + 10 * rng.gen_range(0..14u32);
    let tempo = Tempo::from_bpm(bpm).expect("positive bpm");
    let kick = m.kick_patterns[rng.gen_range(0..m.kick_patterns.len())];
    let ride_from = if rng.gen_bool(0.4) { bars / 2 } else { bars };
    let chug = rng.gen_bool(0.5);
    let mut p = Phrase { source_id: file_name(i), bars: Vec::new(), guitar: Vec::new(), bass: Vec::new(), drums: Vec::new() };
    for b in 0..bars {
        p.bars.push(Bar { index: b as u32, ts: m.ts, tempo });
        let start = b as i64 * m.steps;
        let fill = b % 4 == 3;
        let fill_from = if fill { m.steps - m.beat } else { m.steps };
        let mut hit = |s: i64, c: DrumComponent| p.drums.push(DrumHit::new(step(start + s), c));
        let cymbal = if b >= ride_from { DrumComponent::RideCymbal } else { DrumComponent::ClosedHihat };
        for s in (0..fill_from).step_by(2) {
            let open = cymbal == DrumComponent::ClosedHihat && s == fill_from - 2 && b % 2 == 1 && !fill;
            hit(s, if open { DrumComponent::OpenHihat } else { cymbal });
        }
        for &s in kick.iter().filter(|&&s| s < fill_from) {
            hit(s, DrumComponent::Kick);
        }
        for &s in m.snare.iter().filter(|&&s| s < fill_from) {
            hit(s, DrumComponent::Snare);
        }
        if b % 4 == 0 {
            hit(0, DrumComponent::Crash1);
        }
        if fill {
            let toms = [DrumComponent::TomHigh, DrumComponent::TomMid, DrumComponent::TomLow];
            for (k, s) in (fill_from..m.steps).enumerate() {
                hit(s, if k % 2 == 1 && rng.gen_bool(0.3) { DrumComponent::Snare } else { toms[k * 3 / m.beat as usize] });
            }
        }
        let root_len = if fill { m.steps } else { m.beat };
        for s in (0..m.steps).step_by(root_len as usize) {
            if chug && !fill {
                for e in (s..s + m.beat).step_by(2) {
                    p.guitar.push(AccompEvent { onset: step(start + e), duration: step(2), kind: EventKind::Note });
                }
            } else {
                p.guitar.push(AccompEvent { onset: step(start + s), duration: step(root_len), kind: EventKind::Chord });
            }
        }
        if i != NO_BASS_FILE {
            let mut onsets: Vec<i64> = kick.iter().copied().filter(|&s| s < fill_from).collect();
            onsets.extend((0..m.steps).step_by(m.beat as usize));
            onsets.sort();
            onsets.dedup();
            for (k, &s) in onsets.iter().enumerate() {
                let end = onsets.get(k + 1).copied().unwrap_or(m.steps);
                p.bass.push(AccompEvent { onset: step(start + s), duration: step(end - s), kind: EventKind::Note });
            }
        }
    }
    p.drums.sort();
    p.drums.dedup();
    p
}

pub fn toy_score(i: usize) -> Result<Score> {
    let phrase = toy_phrase(i);
    let mut score = phrase_to_score(&phrase)?;
    if i == NO_BASS_FILE {
        score.tracks.retain(|t| t.program != crate::render::BASS_PROGRAM);
    }
    if i == COWBELL_FILE {
        let drums = score.tracks.iter_mut().find(|t| t.channel == DRUM_CHANNEL).expect("drum track");
        let bar_ticks = 4 * u64::from(score.ticks_per_quarter);
        let bells = (0..phrase.bars.len() as u64).step_by(8).map(|b| NoteEvent { onset: b * bar_ticks + 240, duration: 60, pitch: COWBELL });
        drums.notes.extend(bells);
        drums.notes.sort_by_key(|n| (n.onset, n.pitch, n.duration));
    }
    Ok(score)
}

/// Writes the corpus as `toy_00.mid` … `toy_19.mid`; returns the paths.
pub fn write_toy_corpus(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut paths = Vec::with_capacity(TOY_FILES);
    for i in 0..TOY_FILES {
        let path = dir.join(file_name(i));
        std::fs::write(&path, write_midi(&toy_score(i)?)?).with_context(|| format!("writing {}", path.display()))?;
        paths.push(path);
    }
    Ok(paths)
}
