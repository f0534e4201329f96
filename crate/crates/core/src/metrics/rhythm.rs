use alloc::vec::Vec;

use num_rational::Ratio;

use super::MetricsError;
use crate::preprocess::{bar_bounds, bar_of, Bar, DrumHit};
use crate::time::{quarters_to_steps, Quarters, TimeSignature};

/// Fraction of adjacent inter-onset-interval pairs that are equal. Fewer
/// than three distinct onsets count as fully symmetric.
pub fn symmetry(onsets: &[i64]) -> Ratio<u64> {
    let mut sorted = onsets.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 3 {
        return Ratio::from_integer(1);
    }
    let iois: Vec<i64> = sorted.windows(2).map(|w| w[1] - w[0]).collect();
    let equal = iois.windows(2).filter(|w| w[0] == w[1]).count();
    Ratio::new(equal as u64, (iois.len() - 1) as u64)
}

/// Distinct drum onsets of a phrase in grid steps from the phrase start.
pub fn drum_steps(drums: &[DrumHit], grid: u32) -> Result<Vec<i64>, MetricsError> {
    let mut out = Vec::with_capacity(drums.len());
    for h in drums {
        out.push(quarters_to_steps(h.onset, grid).ok_or(MetricsError::OffGrid(h.onset))?);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut p = 2;
    while n > 1 {
        while n.is_multiple_of(p) {
            out.push(p);
            n /= p;
        }
        p += 1;
    }
    out
}

/// Duple splits first, then triple; anything else has no place in the tree.
fn below_beat(steps: u32, ts: TimeSignature, grid: u32) -> Result<Vec<u32>, MetricsError> {
    let f = prime_factors(steps);
    if f.iter().any(|&p| p > 3) {
        return Err(MetricsError::UnsupportedMeter { ts, grid });
    }
    Ok(f)
}

/// Metrical weight of every grid step of a bar: 0 on the downbeat and one
/// less at each deeper level of the subdivision tree.
///
/// The bar first divides into beats (quarters, halves or eighths as the
/// denominator says; dotted quarters for compound meters). A beat count
/// with several prime factors splits in ascending factor order, so 4/4
/// weighs beat 3 above beats 2 and 4. Beats then split into three (compound
/// meters) and into halves down to the grid.
pub fn metrical_weights(ts: TimeSignature, grid: u32) -> Result<Vec<i32>, MetricsError> {
    let unsupported = MetricsError::UnsupportedMeter { ts, grid };
    let n = ts.bar_steps(grid).ok_or(unsupported.clone())?;
    let num = u32::from(ts.numerator);
    let mut factors;
    if ts.is_compound() {
        let beats = num / 3;
        factors = prime_factors(beats);
        let beat = n / beats;
        if beat % 3 != 0 {
            return Err(unsupported);
        }
        factors.push(3);
        factors.extend(below_beat(beat / 3, ts, grid)?);
    } else {
        if n % num != 0 {
            return Err(unsupported);
        }
        factors = prime_factors(num);
        factors.extend(below_beat(n / num, ts, grid)?);
    }
    let mut weights: Vec<Option<i32>> = alloc::vec![None; n as usize];
    weights[0] = Some(0);
    let mut span = n;
    for (depth, f) in factors.iter().enumerate() {
        span /= f;
        for pos in (0..n).step_by(span as usize) {
            weights[pos as usize].get_or_insert(-(depth as i32 + 1));
        }
    }
    Ok(weights.into_iter().map(|w| w.expect("factors multiply to the bar length")).collect())
}

/// Longuet-Higgins and Lee score of one bar: every onset followed by
/// silence that reaches a stronger position scores the weight difference to
/// the strongest silent position before the next onset or the bar end.
/// `onsets` are distinct step positions inside the bar.
pub fn bar_syncopation(onsets: &[u32], weights: &[i32]) -> u32 {
    let mut sorted = onsets.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let n = weights.len();
    let mut total = 0;
    for (i, &note) in sorted.iter().enumerate() {
        let next = sorted.get(i + 1).map_or(n, |&p| p as usize);
        let rest = weights[note as usize + 1..next].iter().max();
        if let Some(&r) = rest {
            if r > weights[note as usize] {
                total += (r - weights[note as usize]) as u32;
            }
        }
    }
    total
}

/// Highest score any onset set can reach in a bar with these weights.
pub fn max_bar_syncopation(weights: &[i32]) -> u32 {
    let n = weights.len();
    // best[i]: best score from a note at i onward, given a note at i.
    let mut best = alloc::vec![0u32; n + 1];
    for i in (0..n).rev() {
        let mut silence = i32::MIN;
        let mut b = 0;
        for j in i + 1..=n {
            let gain = if silence > weights[i] { (silence - weights[i]) as u32 } else { 0 };
            let tail = if j < n { best[j] } else { 0 };
            b = b.max(gain + tail);
            if j < n {
                silence = silence.max(weights[j]);
            }
        }
        best[i] = b;
    }
    best[..n].iter().copied().max().unwrap_or(0)
}

/// Phrase syncopation: summed bar scores over summed bar maxima, so the
/// result lies in [0, 1].
pub fn syncopation(drums: &[DrumHit], bars: &[Bar], grid: u32) -> Result<Ratio<u64>, MetricsError> {
    if bars.is_empty() {
        return Err(MetricsError::NoBars);
    }
    let bounds = bar_bounds(bars);
    let mut per_bar: Vec<Vec<u32>> = alloc::vec![Vec::new(); bars.len()];
    for h in drums {
        let b = bar_of(&bounds, h.onset).ok_or(MetricsError::OnsetOutsideBars)?;
        let step = quarters_to_steps(h.onset - bounds[b], grid).ok_or(MetricsError::OffGrid(h.onset))?;
        per_bar[b].push(step as u32);
    }
    let (mut score, mut max) = (0u64, 0u64);
    for (bar, onsets) in bars.iter().zip(&per_bar) {
        let w = metrical_weights(bar.ts, grid)?;
        score += u64::from(bar_syncopation(onsets, &w));
        max += u64::from(max_bar_syncopation(&w));
    }
    Ok(if max == 0 { Ratio::from_integer(0) } else { Ratio::new(score, max) })
}

/// Share of drum notes whose bar-relative onset falls on a grid of
/// `resolution` steps per quarter.
pub fn pattern_rate(onsets: &[Quarters], resolution: u32) -> Result<Ratio<u64>, MetricsError> {
    if onsets.is_empty() {
        return Err(MetricsError::NoDrums);
    }
    if resolution == 0 {
        return Err(MetricsError::BadResolution);
    }
    let on = onsets.iter().filter(|&&q| quarters_to_steps(q, resolution).is_some()).count();
    Ok(Ratio::new(on as u64, onsets.len() as u64))
}

/// Bar-relative onsets of every drum hit, for [`pattern_rate`].
pub fn bar_relative_onsets(drums: &[DrumHit], bars: &[Bar]) -> Result<Vec<Quarters>, MetricsError> {
    let bounds = bar_bounds(bars);
    drums
        .iter()
        .map(|h| bar_of(&bounds, h.onset).map(|b| h.onset - bounds[b]).ok_or(MetricsError::OnsetOutsideBars))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn symmetry_examples() {
        assert_eq!(symmetry(&[0, 4, 8, 12, 16]), Ratio::from_integer(1));
        // IOIs 1,2,1,2
        assert_eq!(symmetry(&[0, 1, 3, 4, 6]), Ratio::from_integer(0));
        // IOIs 1,1,2
        assert_eq!(symmetry(&[0, 1, 2, 4]), Ratio::new(1, 2));
        assert_eq!(symmetry(&[3, 5]), Ratio::from_integer(1));
        assert_eq!(symmetry(&[5, 0, 10, 10]), Ratio::from_integer(1));
    }

    #[test]
    fn common_time_weights() {
        let w8 = metrical_weights(TimeSignature::COMMON, 2).unwrap();
        assert_eq!(w8, vec![0, -3, -2, -3, -1, -3, -2, -3]);
        let w = metrical_weights(TimeSignature::new(6, 8).unwrap(), 2).unwrap();
        assert_eq!(w, vec![0, -2, -2, -1, -2, -2]);
        let w = metrical_weights(TimeSignature::new(3, 4).unwrap(), 1).unwrap();
        assert_eq!(w, vec![0, -1, -1]);
        let w = metrical_weights(TimeSignature::new(5, 4).unwrap(), 2).unwrap();
        assert_eq!(w, vec![0, -2, -1, -2, -1, -2, -1, -2, -1, -2]);
        assert_eq!(metrical_weights(TimeSignature::new(2, 2).unwrap(), 4).unwrap(), metrical_weights(TimeSignature::COMMON, 4).unwrap());
        assert!(metrical_weights(TimeSignature::COMMON, 5).is_err());
        assert!(metrical_weights(TimeSignature::new(3, 32).unwrap(), 4).is_err());
    }

    #[test]
    fn syncopation_examples() {
        let w = metrical_weights(TimeSignature::COMMON, 4).unwrap();
        assert_eq!(bar_syncopation(&[0, 4, 8, 12], &w), 0);
        assert_eq!(bar_syncopation(&[], &w), 0);
        let w8 = metrical_weights(TimeSignature::COMMON, 2).unwrap();
        // "and" of beat 2 with beat 3 silent: -1 - (-3).
        assert_eq!(bar_syncopation(&[0, 3], &w8), 2);
        assert_eq!(bar_syncopation(&[0, 3, 4], &w8), 0);
    }

    #[test]
    fn pattern_rate_examples() {
        let eighths: Vec<Quarters> = (0..8).map(|i| Ratio::new(i, 2)).collect();
        assert_eq!(pattern_rate(&eighths, 2).unwrap(), Ratio::from_integer(1));
        let mixed = [Ratio::new(0, 1), Ratio::new(1, 2), Ratio::new(1, 1), Ratio::new(5, 4)];
        assert_eq!(pattern_rate(&mixed, 2).unwrap(), Ratio::new(3, 4));
        assert_eq!(pattern_rate(&[], 2), Err(MetricsError::NoDrums));
    }
}
