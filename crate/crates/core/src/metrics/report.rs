use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use num_rational::Ratio;

use super::density::{DensityReport, REFERENCE_TRAINING_DENSITY};
use super::groove::{groove_consistency, GrooveMode};
use super::rhythm::{bar_relative_onsets, drum_steps, pattern_rate, symmetry, syncopation};
use super::MetricsError;
use crate::pattern::compression_ratio_metric;
use crate::preprocess::Phrase;

pub const FEATURE_NAMES: [&str; 5] = ["Compression Ratio", "Symmetry", "Syncopation", "Groove Consistency", "Pattern Rate"];

/// Published difference means (×100) of the reference model, per feature.
pub const REFERENCE_DIFF_MEAN: [f64; 5] = [7.11, 7.55, 3.76, 1.36, 1.54];
/// Published difference standard deviations (×100), per feature.
pub const REFERENCE_DIFF_STDDEV: [f64; 5] = [7.64, 8.12, 4.76, 1.69, 3.86];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricConfig {
    /// Steps per quarter of the onset grid.
    pub grid: u32,
    /// Steps per quarter that count as "on the pattern grid".
    pub pattern_resolution: u32,
    pub groove_mode: GrooveMode,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { grid: 4, pattern_resolution: 2, groove_mode: GrooveMode::Union }
    }
}

/// The five whole-phrase features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricVector {
    pub compression_ratio: Ratio<u64>,
    pub symmetry: Ratio<u64>,
    pub syncopation: Ratio<u64>,
    pub groove_consistency: Ratio<u64>,
    pub pattern_rate: Ratio<u64>,
}

impl MetricVector {
    pub fn features(&self) -> [Ratio<u64>; 5] {
        [self.compression_ratio, self.symmetry, self.syncopation, self.groove_consistency, self.pattern_rate]
    }
}

pub fn metric_vector(phrase: &Phrase, config: &MetricConfig) -> Result<MetricVector, MetricsError> {
    if phrase.drums.is_empty() {
        return Err(MetricsError::NoDrums);
    }
    Ok(MetricVector {
        compression_ratio: compression_ratio_metric(&phrase.drums, config.grid)?,
        symmetry: symmetry(&drum_steps(&phrase.drums, config.grid)?),
        syncopation: syncopation(&phrase.drums, &phrase.bars, config.grid)?,
        groove_consistency: groove_consistency(phrase, config.grid, config.groove_mode)?,
        pattern_rate: pattern_rate(&bar_relative_onsets(&phrase.drums, &phrase.bars)?, config.pattern_resolution)?,
    })
}

fn to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureStats {
    pub mean: f64,
    pub stddev: f64,
}

/// Per-system normalised absolute differences against ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffReport {
    pub pairs: usize,
    /// Largest absolute difference of each feature over all systems; each
    /// difference is divided by it (zero differences stay zero).
    pub normalizers: [f64; 5],
    pub systems: Vec<(String, [FeatureStats; 5])>,
}

/// Differences `|generated - truth|` per pair and feature, scaled by the
/// feature's largest difference across all systems, then summarised by
/// mean and population standard deviation.
pub fn metric_diff_report(
    systems: &[(&str, &[MetricVector])],
    truth: &[MetricVector],
) -> Result<DiffReport, MetricsError> {
    let mut diffs: Vec<Vec<[f64; 5]>> = Vec::with_capacity(systems.len());
    let mut normalizers = [0.0f64; 5];
    for (_, generated) in systems {
        if generated.len() != truth.len() {
            return Err(MetricsError::LengthMismatch { generated: generated.len(), truth: truth.len() });
        }
        let d: Vec<[f64; 5]> = generated
            .iter()
            .zip(truth)
            .map(|(g, t)| {
                let (g, t) = (g.features(), t.features());
                core::array::from_fn(|k| to_f64(if g[k] > t[k] { g[k] - t[k] } else { t[k] - g[k] }))
            })
            .collect();
        for row in &d {
            for k in 0..5 {
                normalizers[k] = normalizers[k].max(row[k]);
            }
        }
        diffs.push(d);
    }
    let systems = systems
        .iter()
        .zip(diffs)
        .map(|((name, _), d)| {
            let stats = core::array::from_fn(|k| {
                let values: Vec<f64> =
                    d.iter().map(|row| if normalizers[k] > 0.0 { row[k] / normalizers[k] } else { 0.0 }).collect();
                mean_stddev(&values)
            });
            (String::from(*name), stats)
        })
        .collect();
    Ok(DiffReport { pairs: truth.len(), normalizers, systems })
}

/// Two-pass mean and population standard deviation.
fn mean_stddev(values: &[f64]) -> FeatureStats {
    if values.is_empty() {
        return FeatureStats { mean: 0.0, stddev: 0.0 };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    FeatureStats { mean, stddev: libm::sqrt(var) }
}

fn table(header: &[&str], rows: &[(String, Vec<String>)]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for (name, cells) in rows {
        widths[0] = widths[0].max(name.len());
        for (i, c) in cells.iter().enumerate() {
            widths[i + 1] = widths[i + 1].max(c.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, first: &str, cells: &[&str]| {
        let _ = write!(out, "{first:<w$}", w = widths[0]);
        for (i, c) in cells.iter().enumerate() {
            let _ = write!(out, "  {c:>w$}", w = widths[i + 1]);
        }
        out.push('\n');
    };
    line(&mut out, header[0], &header[1..]);
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for (name, cells) in rows {
        let cells: Vec<&str> = cells.iter().map(String::as_str).collect();
        line(&mut out, name, &cells);
    }
    out
}

/// Density table: empty bars in percent, then average hits per bar. The
/// first row holds the published training-corpus values for reference.
pub fn render_density_table(rows: &[(&str, DensityReport)]) -> String {
    let header = ["", "Empty Bars", "Kick-Snares", "HH-Rides", "Toms", "Cymbals"];
    let fmt = |v: [f64; 5]| -> Vec<String> {
        v.iter().enumerate().map(|(i, x)| if i == 0 { alloc::format!("{x:.2}") } else { alloc::format!("{x:.4}") }).collect()
    };
    let mut body = alloc::vec![(String::from("Training Dataset (published)"), fmt(REFERENCE_TRAINING_DENSITY))];
    for (name, r) in rows {
        body.push((String::from(*name), fmt(r.columns().map(to_f64))));
    }
    table(&header, &body)
}

/// High-level difference table: normalised mean ×100 with the standard
/// deviation ×100 in parentheses. The published reference row comes last.
pub fn render_diff_table(report: &DiffReport) -> String {
    let mut header = alloc::vec![""];
    header.extend(FEATURE_NAMES);
    let cell = |m: f64, s: f64| alloc::format!("{:.2} ({:.2})", 100.0 * m, 100.0 * s);
    let mut body: Vec<(String, Vec<String>)> = report
        .systems
        .iter()
        .map(|(name, stats)| (name.clone(), stats.iter().map(|s| cell(s.mean, s.stddev)).collect()))
        .collect();
    body.push((
        String::from("Reference model (published)"),
        (0..5).map(|k| cell(REFERENCE_DIFF_MEAN[k] / 100.0, REFERENCE_DIFF_STDDEV[k] / 100.0)).collect(),
    ));
    table(&header, &body)
}
