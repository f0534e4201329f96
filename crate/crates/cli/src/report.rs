//! Evaluation of generated drums against ground truth.

use std::collections::BTreeMap;

use anyhow::Result;
use cpdrums_core::metrics::{
    metric_diff_report, metric_vector, render_density_table, render_diff_table, DensityCounts, DensityReport,
    MetricConfig, MetricVector, FEATURE_NAMES,
};
use cpdrums_core::preprocess::Phrase;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

pub const GENERATED: &str = "Generated";
pub const GROUND_TRUTH: &str = "Ground Truth";

fn f(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn exact(r: Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub values: [f64; 5],
    /// The same values as exact fractions.
    pub exact: [String; 5],
}

impl From<&MetricVector> for Features {
    fn from(v: &MetricVector) -> Self {
        let fs = v.features();
        Self { values: fs.map(f), exact: fs.map(exact) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub id: String,
    pub generated: Features,
    pub truth: Features,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub name: String,
    pub bars: u64,
    /// Empty bars in percent, then hits per bar for kick/snare,
    /// hi-hat/ride, toms and other cymbals.
    pub columns: [f64; 5],
}

impl DensityRow {
    fn new(name: &str, counts: &DensityCounts, report: &DensityReport) -> Self {
        Self { name: name.into(), bars: counts.bars, columns: report.columns().map(f) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffRow {
    pub name: String,
    pub mean: [f64; 5],
    pub stddev: [f64; 5],
}

/// Everything `evaluate` reports, in machine-readable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationBundle {
    pub config_hash: String,
    pub seed: u64,
    pub features: [String; 5],
    pub pairs: Vec<PairMetrics>,
    /// Files present on only one side.
    pub unpaired: Vec<String>,
    /// Pairs left out of the difference table, with the reason.
    pub excluded: BTreeMap<String, String>,
    pub density: Vec<DensityRow>,
    pub normalizers: [f64; 5],
    pub diff: Vec<DiffRow>,
    pub density_table: String,
    pub diff_table: String,
}

/// Pairs phrases by id, computes the five features for each pair and the
/// density and difference tables.
///
/// Density covers every paired phrase. The difference table covers pairs
/// where both sides have drums, since the features are undefined without
/// them.
pub fn evaluate_pairs(
    generated: &BTreeMap<String, Phrase>,
    truth: &BTreeMap<String, Phrase>,
    config: &MetricConfig,
    config_hash: &str,
    seed: u64,
) -> Result<EvaluationBundle> {
    let mut unpaired: Vec<String> = generated.keys().filter(|k| !truth.contains_key(*k)).cloned().collect();
    unpaired.extend(truth.keys().filter(|k| !generated.contains_key(*k)).cloned());
    unpaired.sort();
    let mut excluded = BTreeMap::new();
    let mut pairs = Vec::new();
    let (mut gen_vectors, mut truth_vectors) = (Vec::new(), Vec::new());
    let (mut gen_counts, mut truth_counts) = (DensityCounts::default(), DensityCounts::default());
    for (id, g) in generated {
        let Some(t) = truth.get(id) else { continue };
        if g.bars != t.bars {
            excluded.insert(id.clone(), "bar structure differs between generated and truth".into());
            continue;
        }
        gen_counts.add(&DensityCounts::from_phrase(&g.drums, &g.bars)?);
        truth_counts.add(&DensityCounts::from_phrase(&t.drums, &t.bars)?);
        match (metric_vector(g, config), metric_vector(t, config)) {
            (Ok(gv), Ok(tv)) => {
                pairs.push(PairMetrics { id: id.clone(), generated: (&gv).into(), truth: (&tv).into() });
                gen_vectors.push(gv);
                truth_vectors.push(tv);
            }
            (Err(e), _) => {
                excluded.insert(id.clone(), format!("generated: {e}"));
            }
            (_, Err(e)) => {
                excluded.insert(id.clone(), format!("truth: {e}"));
            }
        }
    }
    let mut density = Vec::new();
    let mut density_rows: Vec<(&str, DensityReport)> = Vec::new();
    for (name, counts) in [(GROUND_TRUTH, &truth_counts), (GENERATED, &gen_counts)] {
        if counts.bars > 0 {
            let r = counts.report()?;
            density.push(DensityRow::new(name, counts, &r));
            density_rows.push((name, r));
        }
    }
    let diff = metric_diff_report(&[(GENERATED, &gen_vectors)], &truth_vectors)?;
    Ok(EvaluationBundle {
        config_hash: config_hash.into(),
        seed,
        features: FEATURE_NAMES.map(String::from),
        pairs,
        unpaired,
        excluded,
        density,
        normalizers: diff.normalizers,
        diff: diff
            .systems
            .iter()
            .map(|(name, s)| DiffRow { name: name.clone(), mean: s.map(|x| x.mean), stddev: s.map(|x| x.stddev) })
            .collect(),
        density_table: render_density_table(&density_rows),
        diff_table: render_diff_table(&diff),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cpdrums_core::midi::Tempo;
    use cpdrums_core::preprocess::{Bar, DrumComponent, DrumHit};
    use cpdrums_core::{Quarters, TimeSignature};

    fn phrase(id: &str, steps: &[i64]) -> Phrase {
        let bar = |i| Bar { index: i, ts: TimeSignature::COMMON, tempo: Tempo::DEFAULT };
        Phrase {
            source_id: id.into(),
            bars: vec![bar(0), bar(1)],
            guitar: vec![],
            bass: vec![],
            drums: steps.iter().map(|&s| DrumHit::new(Quarters::new(s, 4), DrumComponent::Kick)).collect(),
        }
    }

    fn map(ps: Vec<Phrase>) -> BTreeMap<String, Phrase> {
        ps.into_iter().map(|p| (p.source_id.clone(), p)).collect()
    }

    #[test]
    fn self_evaluation_is_zero() {
        let truth = map(vec![phrase("a", &[0, 4, 8, 12, 16]), phrase("b", &[0, 3, 16, 19]), phrase("c", &[2])]);
        let b = evaluate_pairs(&truth, &truth, &MetricConfig::default(), "h", 1).unwrap();
        assert_eq!(b.pairs.len(), 3);
        assert!(b.diff[0].mean.iter().chain(&b.diff[0].stddev).all(|&x| x == 0.0));
        assert_eq!(b.density[0].columns, b.density[1].columns);
        for name in FEATURE_NAMES {
            assert!(b.diff_table.contains(name));
        }
    }

    /// Symmetry is the only feature that differs between these two single
    /// bar patterns once normalised; hand-computed values below.
    #[test]
    fn known_gap() {
        // Pair a matches exactly; pair b gains a third onset.
        let truth = map(vec![phrase("a", &[0, 8]), phrase("b", &[0, 8])]);
        let generated = map(vec![phrase("a", &[0, 8]), phrase("b", &[0, 8, 16])]);
        let b = evaluate_pairs(&generated, &truth, &MetricConfig::default(), "h", 1).unwrap();
        // Normalised gaps are 0 for a and 1 for b wherever b differs, so
        // mean and population stddev are both 0.5 there and 0 elsewhere.
        for k in 0..5 {
            let m = b.diff[0].mean[k];
            assert!(m == 0.0 || m == 0.5, "{k}: {m}");
            assert_eq!(b.diff[0].stddev[k], m);
        }
        assert!(b.diff[0].mean.contains(&0.5));
    }

    #[test]
    fn unpaired_and_empty_are_reported() {
        let truth = map(vec![phrase("a", &[0]), phrase("b", &[0]), phrase("t_only", &[0])]);
        let generated = map(vec![phrase("a", &[0]), phrase("b", &[]), phrase("g_only", &[0])]);
        let b = evaluate_pairs(&generated, &truth, &MetricConfig::default(), "h", 1).unwrap();
        assert_eq!(b.unpaired, ["g_only", "t_only"]);
        assert_eq!(b.pairs.len(), 1);
        assert!(b.excluded["b"].starts_with("generated"));
        assert_eq!(b.density[1].bars, 4);
    }
}
