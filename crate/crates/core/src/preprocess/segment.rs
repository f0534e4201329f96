use alloc::format;
use alloc::vec::Vec;

use super::phrase::{AccompEvent, Bar, DrumHit, Phrase, MAX_PHRASE_BARS};
use super::piece::Piece;
use super::PreprocessError;
use crate::midi::Tempo;
use crate::time::{Quarters, TimeSignature};

/// Which phrases survive into the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorpusFilterConfig {
    pub allowed_ts: Vec<TimeSignature>,
    /// Inclusive BPM range.
    pub tempo_range: (u32, u32),
    /// A trailing remainder shorter than this is discarded.
    pub min_phrase_bars: usize,
}

impl Default for CorpusFilterConfig {
    /// Eight time signatures (a guess at the common ones in rock/metal
    /// corpora), 60–220 BPM, remainders of at least 2 bars.
    fn default() -> Self {
        let ts = |n, d| TimeSignature { numerator: n, denominator: d };
        Self {
            allowed_ts: alloc::vec![ts(4, 4), ts(3, 4), ts(6, 8), ts(2, 4), ts(5, 4), ts(7, 4), ts(12, 8), ts(2, 2)],
            tempo_range: (60, 220),
            min_phrase_bars: 2,
        }
    }
}

impl CorpusFilterConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.tempo_range.0 >= self.tempo_range.1 {
            return Err(PreprocessError::BadConfig("tempo range minimum must be below maximum"));
        }
        if self.min_phrase_bars == 0 || self.min_phrase_bars > MAX_PHRASE_BARS {
            return Err(PreprocessError::BadConfig("min_phrase_bars must be within 1..=16"));
        }
        Ok(())
    }

    pub fn accepts(&self, bar: &Bar) -> bool {
        // Compared in microseconds per quarter, the unit tempos are stored in.
        let (lo, hi) = self.tempo_range;
        let usec = bar.tempo.usec_per_quarter();
        let fastest = Tempo::from_bpm(hi).map_or(1, |t| t.usec_per_quarter());
        let slowest = Tempo::from_bpm(lo).map_or(u32::MAX, |t| t.usec_per_quarter());
        self.allowed_ts.contains(&bar.ts) && (fastest..=slowest).contains(&usec)
    }
}

fn clip_events(events: &[AccompEvent], start: Quarters, end: Quarters) -> Vec<AccompEvent> {
    events
        .iter()
        .filter(|e| e.onset >= start && e.onset < end)
        .map(|e| AccompEvent {
            onset: e.onset - start,
            duration: if e.onset + e.duration > end { end - e.onset } else { e.duration },
            kind: e.kind,
        })
        .collect()
}

/// Splits a piece at bar lines into phrases of at most 16 bars.
///
/// Irregular bars (cut short by a mid-bar meter change) act as hard breaks
/// and are never part of a phrase. Within each run of regular bars the last
/// chunk is kept only if it has at least `min_phrase_bars` bars.
pub fn segment_phrases(piece: &Piece, config: &CorpusFilterConfig, source: &str) -> Vec<Phrase> {
    let mut phrases = Vec::new();
    let mut run: Vec<(Quarters, Bar)> = Vec::new();
    let flush = |run: &mut Vec<(Quarters, Bar)>, phrases: &mut Vec<Phrase>| {
        for chunk in run.chunks(MAX_PHRASE_BARS) {
            if chunk.len() < MAX_PHRASE_BARS && chunk.len() < config.min_phrase_bars {
                continue;
            }
            let start = chunk[0].0;
            let (last_start, last_bar) = chunk[chunk.len() - 1];
            let end = last_start + last_bar.quarters();
            let drums: Vec<DrumHit> = piece
                .drums
                .iter()
                .filter(|h| h.onset >= start && h.onset < end)
                .map(|h| DrumHit::new(h.onset - start, h.component))
                .collect();
            phrases.push(Phrase {
                source_id: format!("{source}#{}", phrases.len()),
                bars: chunk.iter().map(|&(_, b)| b).collect(),
                guitar: clip_events(&piece.guitar, start, end),
                bass: clip_events(&piece.bass, start, end),
                drums,
            });
        }
        run.clear();
    };
    for &(start, bar, regular) in &piece.bars {
        if regular {
            run.push((start, bar));
        } else {
            flush(&mut run, &mut phrases);
        }
    }
    flush(&mut run, &mut phrases);
    phrases
}

/// Keeps phrases whose every bar has an allowed meter and tempo.
pub fn filter_phrases(phrases: Vec<Phrase>, config: &CorpusFilterConfig) -> Vec<Phrase> {
    phrases.into_iter().filter(|p| p.bars.iter().all(|b| config.accepts(b))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::phrase::EventKind;
    use crate::preprocess::DrumComponent;
    use num_rational::Ratio;

    fn zero() -> Quarters {
        Ratio::from_integer(0)
    }

    fn piece_of(bars: &[(TimeSignature, bool)]) -> Piece {
        let mut start = zero();
        let mut out = Vec::new();
        for (i, &(ts, regular)) in bars.iter().enumerate() {
            out.push((start, Bar { index: i as u32, ts, tempo: Tempo::DEFAULT }, regular));
            start += ts.bar_quarters();
        }
        // One kick and one guitar note at the start of every bar.
        let drums = out.iter().map(|(s, _, _)| DrumHit::new(*s, DrumComponent::Kick)).collect();
        let guitar = out
            .iter()
            .map(|(s, _, _)| AccompEvent { onset: *s, duration: Ratio::from_integer(8), kind: EventKind::Note })
            .collect();
        Piece { bars: out, guitar, bass: Vec::new(), drums, dropped_drum_pitches: Default::default() }
    }

    #[test]
    fn thirty_three_bars() {
        let piece = piece_of(&[(TimeSignature::COMMON, true); 33]);
        let cfg = CorpusFilterConfig { min_phrase_bars: 1, ..Default::default() };
        let phrases = segment_phrases(&piece, &cfg, "x");
        let lens: Vec<usize> = phrases.iter().map(|p| p.bars.len()).collect();
        assert_eq!(lens, vec![16, 16, 1]);
        let total: usize = phrases.iter().map(|p| p.drums.len()).sum();
        assert_eq!(total, 33);
        assert_eq!(phrases[1].source_id, "x#1");
        // Default minimum of 2 drops the single-bar remainder.
        assert_eq!(segment_phrases(&piece, &CorpusFilterConfig::default(), "x").len(), 2);
        for p in &phrases {
            p.validate().unwrap();
            // Guitar notes of 8 quarters are cut at the phrase end.
            assert!(p.guitar.iter().all(|e| e.onset + e.duration <= p.total_quarters()));
        }
    }

    #[test]
    fn sixteen_bars_single_phrase() {
        let piece = piece_of(&[(TimeSignature::COMMON, true); 16]);
        assert_eq!(segment_phrases(&piece, &CorpusFilterConfig::default(), "x").len(), 1);
    }

    #[test]
    fn meter_change_at_bar_nine() {
        let three = TimeSignature::new(3, 4).unwrap();
        let mut bars = vec![(TimeSignature::COMMON, true); 8];
        bars.extend(vec![(three, true); 8]);
        let phrases = segment_phrases(&piece_of(&bars), &CorpusFilterConfig::default(), "x");
        assert_eq!(phrases.len(), 1);
        let p = &phrases[0];
        assert!(p.bars[..8].iter().all(|b| b.ts == TimeSignature::COMMON));
        assert!(p.bars[8..].iter().all(|b| b.ts == three));
        assert_eq!(p.drums[9].onset, Ratio::from_integer(32 + 3));
    }

    #[test]
    fn irregular_bar_breaks_runs() {
        let mut bars = vec![(TimeSignature::COMMON, true); 3];
        bars.push((TimeSignature::COMMON, false));
        bars.extend(vec![(TimeSignature::COMMON, true); 2]);
        let phrases = segment_phrases(&piece_of(&bars), &CorpusFilterConfig::default(), "x");
        let lens: Vec<usize> = phrases.iter().map(|p| p.bars.len()).collect();
        assert_eq!(lens, vec![3, 2]);
    }

    #[test]
    fn filter_examples() {
        let cfg = CorpusFilterConfig::default();
        let mk = |ts: TimeSignature, bpm: u32| Phrase {
            source_id: "p".into(),
            bars: vec![Bar { index: 0, ts, tempo: Tempo::from_bpm(bpm).unwrap() }],
            guitar: vec![],
            bass: vec![],
            drums: vec![],
        };
        let rare = mk(TimeSignature::new(13, 16).unwrap(), 120);
        let plain = mk(TimeSignature::COMMON, 120);
        let fast = mk(TimeSignature::COMMON, 230);
        let edge = mk(TimeSignature::COMMON, 220);
        let kept = filter_phrases(vec![rare, plain.clone(), fast, edge.clone()], &cfg);
        assert_eq!(kept, vec![plain, edge]);
        assert_eq!(filter_phrases(kept.clone(), &cfg), kept);
        assert!(CorpusFilterConfig { tempo_range: (200, 100), ..cfg }.validate().is_err());
    }
}
