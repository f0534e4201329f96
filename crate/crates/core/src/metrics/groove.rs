use alloc::vec::Vec;

use num_rational::Ratio;

use super::MetricsError;
use crate::preprocess::{bar_of, Phrase};
use crate::time::{quarters_to_steps, Quarters, TimeSignature};

/// Binary onset vector of one bar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroovePattern {
    pub ts: TimeSignature,
    pub steps: Vec<bool>,
}

/// Which onsets make up a bar's groove pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GrooveMode {
    /// Drum onsets only.
    Drums,
    /// Drum, guitar and bass onsets merged into one vector.
    #[default]
    Union,
    /// Mean of the separate drum, guitar and bass consistencies. Experimental.
    PerTrack,
}

fn patterns_of(phrase: &Phrase, onsets: &[Quarters], grid: u32) -> Result<Vec<GroovePattern>, MetricsError> {
    let bounds = phrase.bar_bounds();
    let mut out = Vec::with_capacity(phrase.bars.len());
    for bar in &phrase.bars {
        let n = bar.ts.bar_steps(grid).ok_or(MetricsError::UnsupportedMeter { ts: bar.ts, grid })?;
        out.push(GroovePattern { ts: bar.ts, steps: alloc::vec![false; n as usize] });
    }
    for &q in onsets {
        let b = bar_of(&bounds, q).ok_or(MetricsError::OnsetOutsideBars)?;
        let step = quarters_to_steps(q - bounds[b], grid).ok_or(MetricsError::OffGrid(q))?;
        out[b].steps[step as usize] = true;
    }
    Ok(out)
}

/// Per-bar groove patterns of the drums, optionally merged with guitar and
/// bass onsets.
pub fn groove_patterns(phrase: &Phrase, grid: u32, include_condition: bool) -> Result<Vec<GroovePattern>, MetricsError> {
    let mut onsets: Vec<Quarters> = phrase.drums.iter().map(|h| h.onset).collect();
    if include_condition {
        onsets.extend(phrase.guitar.iter().chain(&phrase.bass).map(|e| e.onset));
    }
    patterns_of(phrase, &onsets, grid)
}

/// `1 - hamming / length`; bars of different meter are fully dissimilar.
pub fn pattern_similarity(a: &GroovePattern, b: &GroovePattern) -> Ratio<u64> {
    if a.ts != b.ts || a.steps.len() != b.steps.len() || a.steps.is_empty() {
        return Ratio::from_integer(0);
    }
    let hamming = a.steps.iter().zip(&b.steps).filter(|(x, y)| x != y).count() as u64;
    Ratio::new(a.steps.len() as u64 - hamming, a.steps.len() as u64)
}

/// Mean similarity of neighbouring bars.
pub fn consistency_of(patterns: &[GroovePattern]) -> Result<Ratio<u64>, MetricsError> {
    if patterns.len() < 2 {
        return Err(MetricsError::SingleBar);
    }
    let sum: Ratio<u64> = patterns.windows(2).map(|w| pattern_similarity(&w[0], &w[1])).sum();
    Ok(sum / (patterns.len() as u64 - 1))
}

pub fn groove_consistency(phrase: &Phrase, grid: u32, mode: GrooveMode) -> Result<Ratio<u64>, MetricsError> {
    match mode {
        GrooveMode::Drums => consistency_of(&groove_patterns(phrase, grid, false)?),
        GrooveMode::Union => consistency_of(&groove_patterns(phrase, grid, true)?),
        GrooveMode::PerTrack => {
            let drums: Vec<Quarters> = phrase.drums.iter().map(|h| h.onset).collect();
            let guitar: Vec<Quarters> = phrase.guitar.iter().map(|e| e.onset).collect();
            let bass: Vec<Quarters> = phrase.bass.iter().map(|e| e.onset).collect();
            let mut sum = Ratio::from_integer(0);
            for onsets in [drums, guitar, bass] {
                sum += consistency_of(&patterns_of(phrase, &onsets, grid)?)?;
            }
            Ok(sum / 3)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::midi::Tempo;
    use crate::preprocess::{Bar, DrumComponent, DrumHit};
    use alloc::vec;

    fn pattern(bits: &[usize]) -> GroovePattern {
        let mut steps = vec![false; 16];
        for &b in bits {
            steps[b] = true;
        }
        GroovePattern { ts: TimeSignature::COMMON, steps }
    }

    #[test]
    fn identical_and_complementary_bars() {
        let a = pattern(&[0, 4, 8, 12]);
        assert_eq!(consistency_of(&[a.clone(), a.clone(), a.clone()]).unwrap(), Ratio::from_integer(1));
        let mut c = a.clone();
        c.steps.iter_mut().for_each(|s| *s = !*s);
        assert_eq!(pattern_similarity(&a, &c), Ratio::from_integer(0));
        assert_eq!(consistency_of(&[a]), Err(MetricsError::SingleBar));
    }

    #[test]
    fn hamming_two_then_four() {
        let a = pattern(&[0, 4, 8, 12]);
        let b = pattern(&[0, 4, 8, 13]);
        let c = pattern(&[0, 1, 2, 3, 4, 13]);
        assert_eq!(pattern_similarity(&a, &b), Ratio::new(14, 16));
        assert_eq!(pattern_similarity(&b, &c), Ratio::new(12, 16));
        assert_eq!(consistency_of(&[a, b, c]).unwrap(), Ratio::new(13, 16));
    }

    #[test]
    fn meter_change_is_dissimilar() {
        let a = pattern(&[0]);
        let b = GroovePattern { ts: TimeSignature::new(3, 4).unwrap(), steps: vec![true; 12] };
        assert_eq!(pattern_similarity(&a, &b), Ratio::from_integer(0));
    }

    #[test]
    fn phrase_modes() {
        let bars = vec![Bar { index: 0, ts: TimeSignature::COMMON, tempo: Tempo::DEFAULT }; 2];
        let drums = vec![DrumHit::new(Ratio::from_integer(0), DrumComponent::Kick), DrumHit::new(Ratio::from_integer(4), DrumComponent::Kick)];
        let guitar = vec![crate::preprocess::AccompEvent {
            onset: Ratio::from_integer(1),
            duration: Ratio::from_integer(1),
            kind: crate::preprocess::EventKind::Note,
        }];
        let p = Phrase { source_id: "g".into(), bars, guitar, bass: vec![], drums };
        assert_eq!(groove_consistency(&p, 4, GrooveMode::Drums).unwrap(), Ratio::from_integer(1));
        assert_eq!(groove_consistency(&p, 4, GrooveMode::Union).unwrap(), Ratio::new(15, 16));
        // Drums 1, guitar 15/16, bass (empty bars) 1.
        assert_eq!(groove_consistency(&p, 4, GrooveMode::PerTrack).unwrap(), Ratio::new(47, 48));
    }
}
