use alloc::vec::Vec;

use rand::Rng;

use super::NnError;

/// How the sampling temperature of a generation is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Temperature {
    Fixed(f64),
    /// Drawn once per generation from `[low, high]`.
    Uniform { low: f64, high: f64 },
    /// The limit `τ → 0`: always the most likely token.
    Greedy,
}

impl Temperature {
    pub const EXPLORE: Temperature = Temperature::Uniform { low: 0.8, high: 1.2 };
    pub const EVALUATION: Temperature = Temperature::Fixed(1.0);

    /// `Some(τ)`, or `None` for greedy decoding.
    pub fn resolve(&self, rng: &mut impl Rng) -> Result<Option<f64>, NnError> {
        match *self {
            Temperature::Fixed(t) if t > 0.0 && t.is_finite() => Ok(Some(t)),
            Temperature::Fixed(t) => Err(NnError::BadTemperature(t)),
            Temperature::Uniform { low, high } if low > 0.0 && low <= high && high.is_finite() => {
                Ok(Some(if low == high { low } else { rng.gen_range(low..=high) }))
            }
            Temperature::Uniform { low, .. } => Err(NnError::BadTemperature(low)),
            Temperature::Greedy => Ok(None),
        }
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `p_i^(1/τ)` renormalised, computed in log space.
pub fn tempered(dist: &[f64], tau: f64) -> Result<Vec<f64>, NnError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(NnError::BadTemperature(tau));
    }
    let logits: Vec<f64> = dist.iter().map(|&p| if p > 0.0 { libm::log(p) } else { f64::NEG_INFINITY }).collect();
    Ok(softmax_tempered(&logits, tau))
}

/// `softmax(logits / τ)`; `-inf` entries get probability zero.
pub fn softmax_tempered(logits: &[f64], tau: f64) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits
        .iter()
        .map(|&l| if l == f64::NEG_INFINITY { 0.0 } else { libm::exp((l - max) / tau) })
        .collect();
    let z: f64 = out.iter().sum();
    for p in &mut out {
        *p /= z;
    }
    out
}

/// Inverse-CDF draw from a normalised distribution.
pub fn categorical(dist: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in dist.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Draws a token from `dist` sharpened or flattened by `τ`.
pub fn sample(dist: &[f64], tau: f64, rng: &mut impl Rng) -> Result<usize, NnError> {
    if dist.is_empty() {
        return Err(NnError::EmptySequence);
    }
    Ok(categorical(&tempered(dist, tau)?, rng))
}
