use num_rational::Ratio;

use super::MetricsError;
use crate::preprocess::{bar_bounds, bar_of, Bar, DrumComponent, DrumHit};

/// The four component families the density table reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DensityGroup {
    KickSnares,
    HhRides,
    Toms,
    Cymbals,
}

impl DensityGroup {
    pub fn of(component: DrumComponent) -> Self {
        use DrumComponent::*;
        match component {
            Kick | Snare | SideStick => DensityGroup::KickSnares,
            ClosedHihat | OpenHihat | RideBell | RideCymbal => DensityGroup::HhRides,
            TomHigh | TomMid | TomLow => DensityGroup::Toms,
            Crash1 | Crash2 | China => DensityGroup::Cymbals,
        }
    }
}

/// Raw counts behind a density report. Counts from several phrases add up,
/// so a corpus report pools hits and bars rather than averaging phrase
/// averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DensityCounts {
    pub bars: u64,
    pub empty_bars: u64,
    /// Indexed by `DensityGroup as usize`.
    pub hits: [u64; 4],
}

impl DensityCounts {
    pub fn from_phrase(drums: &[DrumHit], bars: &[Bar]) -> Result<Self, MetricsError> {
        if bars.is_empty() {
            return Err(MetricsError::NoBars);
        }
        let bounds = bar_bounds(bars);
        let mut per_bar = alloc::vec![0u64; bars.len()];
        let mut hits = [0u64; 4];
        for h in drums {
            let bar = bar_of(&bounds, h.onset).ok_or(MetricsError::OnsetOutsideBars)?;
            per_bar[bar] += 1;
            hits[DensityGroup::of(h.component) as usize] += 1;
        }
        Ok(Self { bars: bars.len() as u64, empty_bars: per_bar.iter().filter(|&&n| n == 0).count() as u64, hits })
    }

    pub fn add(&mut self, other: &DensityCounts) {
        self.bars += other.bars;
        self.empty_bars += other.empty_bars;
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            *a += b;
        }
    }

    pub fn report(&self) -> Result<DensityReport, MetricsError> {
        if self.bars == 0 {
            return Err(MetricsError::NoBars);
        }
        let per_bar = |n: u64| Ratio::new(n, self.bars);
        Ok(DensityReport {
            empty_bars_pct: Ratio::new(100 * self.empty_bars, self.bars),
            kick_snares: per_bar(self.hits[0]),
            hh_rides: per_bar(self.hits[1]),
            toms: per_bar(self.hits[2]),
            cymbals: per_bar(self.hits[3]),
        })
    }
}

/// Average hits per bar for each family, and the share of bars without
/// any drum hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DensityReport {
    pub empty_bars_pct: Ratio<u64>,
    pub kick_snares: Ratio<u64>,
    pub hh_rides: Ratio<u64>,
    pub toms: Ratio<u64>,
    pub cymbals: Ratio<u64>,
}

impl DensityReport {
    /// Columns in table order: empty bars %, kick-snares, hh-rides, toms, cymbals.
    pub fn columns(&self) -> [Ratio<u64>; 5] {
        [self.empty_bars_pct, self.kick_snares, self.hh_rides, self.toms, self.cymbals]
    }
}

pub fn density_report(drums: &[DrumHit], bars: &[Bar]) -> Result<DensityReport, MetricsError> {
    DensityCounts::from_phrase(drums, bars)?.report()
}

/// Density row of the reference training corpus, in table order.
pub const REFERENCE_TRAINING_DENSITY: [f64; 5] = [5.91, 5.0588, 5.6203, 0.7919, 0.4902];
