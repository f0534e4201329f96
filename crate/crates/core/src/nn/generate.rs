//! Autoregressive drum generation under the stream grammar.
//!
//! At each step the onset is drawn first, then the drums token from the
//! same decoder state. Tokens that would break the grammar get zero
//! probability: the stream opens with BAR, positions stay inside the
//! current bar and never move backwards, EOS only closes the last bar, a
//! BAR word carries PAD drums and a position carries a component. The
//! output therefore spans exactly the condition's bars unless the length
//! cap cuts it short.

use alloc::vec::Vec;

use rand::Rng;

use super::graph::Graph;
use super::layers::Ctx;
use super::model::Model;
use super::sample::{argmax, categorical, softmax_tempered, Temperature};
use super::tensor::Scalar;
use super::NnError;
use crate::codec::{DecoderVocab, DecoderWord, DrumsToken, EncoderWord, OnsetToken};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    pub temperature: Temperature,
    /// Cap on the output length including BOS; the model's maximum
    /// decoder length when `None`.
    pub max_len: Option<usize>,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self { temperature: Temperature::EVALUATION, max_len: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StopReason {
    Eos,
    /// A BAR past the condition's last bar was turned into EOS.
    BarLimit,
    LengthCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    /// BOS first; EOS last unless the length cap was hit.
    pub words: Vec<DecoderWord>,
    /// The temperature used, `None` for greedy decoding.
    pub tau: Option<f64>,
    pub stop: StopReason,
}

struct Ids {
    bos: DecoderWord,
    eos: DecoderWord,
    bar_onset: u32,
    eos_onset: u32,
    pad_drums: u32,
    /// Onset id of each grid position.
    positions: Vec<Option<u32>>,
    /// Drums id and token of each component, in token order.
    hits: Vec<(u32, DrumsToken)>,
}

impl Ids {
    fn new(vocab: &DecoderVocab) -> Result<Self, NnError> {
        let missing = |what| NnError::VocabMissing(what);
        let on = |t| vocab.onset.id(t).ok_or(missing("onset token"));
        let dr = |t| vocab.drums.id(t).ok_or(missing("drums token"));
        let max_pos = vocab.onset.tokens().iter().filter_map(|t| if let OnsetToken::Pos(p) = t { Some(*p) } else { None }).max();
        let positions = match max_pos {
            Some(m) => (0..=m).map(|p| vocab.onset.id(OnsetToken::Pos(p))).collect(),
            None => Vec::new(),
        };
        let hits = vocab
            .drums
            .tokens()
            .iter()
            .filter(|t| matches!(t, DrumsToken::Hit(_)))
            .map(|&t| (vocab.drums.id(t).unwrap(), t))
            .collect();
        Ok(Ids {
            bos: DecoderWord { onset: on(OnsetToken::Pad)?, drums: dr(DrumsToken::Bos)? },
            eos: DecoderWord { onset: on(OnsetToken::Eos)?, drums: dr(DrumsToken::Eos)? },
            bar_onset: on(OnsetToken::Bar)?,
            eos_onset: on(OnsetToken::Eos)?,
            pad_drums: dr(DrumsToken::Pad)?,
            positions,
            hits,
        })
    }
}

fn pick(logits: &[f64], allowed: &[bool], tau: Option<f64>, rng: &mut impl Rng) -> usize {
    let masked: Vec<f64> =
        logits.iter().zip(allowed).map(|(&l, &ok)| if ok { l } else { f64::NEG_INFINITY }).collect();
    match tau {
        None => argmax(&masked),
        Some(t) => categorical(&softmax_tempered(&masked, t), rng),
    }
}

/// Generates a drum stream for `condition`, whose bars have `bar_steps`
/// grid steps each.
pub fn generate<F: Scalar>(
    model: &Model<F>,
    vocab: &DecoderVocab,
    condition: &[EncoderWord],
    bar_steps: &[u32],
    options: &GenerateOptions,
    rng: &mut impl Rng,
) -> Result<Generated, NnError> {
    if bar_steps.is_empty() || bar_steps.contains(&0) {
        return Err(NnError::EmptyCondition);
    }
    if vocab.sizes() != model.config.dec_vocab {
        return Err(NnError::VocabMissing("decoder vocabulary does not match the model"));
    }
    let ids = Ids::new(vocab)?;
    let tau = options.temperature.resolve(rng)?;
    let cap = options.max_len.unwrap_or(model.config.max_dec_len).min(model.config.max_dec_len);
    let (z, states) = {
        let mut g = Graph::new(&model.params);
        let enc = model.encode(&mut g, condition, &mut Ctx::eval())?;
        (g.value(enc.z).clone(), g.value(enc.states).clone())
    };
    let mut words = alloc::vec![ids.bos];
    let mut bars = 0usize;
    // Last (position, drums token) of the current bar.
    let mut last: Option<(u32, DrumsToken)> = None;
    let [n_on, n_dr] = model.config.dec_vocab;
    loop {
        if words.len() >= cap {
            return Ok(Generated { words, tau, stop: StopReason::LengthCap });
        }
        let (on_logits, dr_logits) = {
            let mut g = Graph::new(&model.params);
            let enc = super::model::Encoded { z: g.input(z.clone()), states: g.input(states.clone()) };
            let heads = model.decode(&mut g, &words, enc, &mut Ctx::eval())?;
            let r = words.len() - 1;
            let row = |v| g.value(v).row(r).iter().map(|x: &F| x.as_f64()).collect::<Vec<f64>>();
            (row(heads.onset), row(heads.drums))
        };
        let mut allowed = alloc::vec![false; n_on];
        allowed[ids.bar_onset as usize] = true;
        if bars > 0 {
            allowed[ids.eos_onset as usize] = bars == bar_steps.len();
            let steps = bar_steps[bars - 1];
            let top = ids.hits.last().map(|h| h.1);
            for (p, id) in ids.positions.iter().enumerate().take(steps as usize) {
                let p = p as u32;
                let open = match last {
                    None => true,
                    Some((lp, ld)) => p > lp || (p == lp && Some(ld) != top),
                };
                if let (true, Some(id)) = (open, id) {
                    allowed[*id as usize] = true;
                }
            }
        }
        let onset = pick(&on_logits, &allowed, tau, rng) as u32;
        if onset == ids.eos_onset {
            words.push(ids.eos);
            return Ok(Generated { words, tau, stop: StopReason::Eos });
        }
        if onset == ids.bar_onset {
            if bars == bar_steps.len() {
                words.push(ids.eos);
                return Ok(Generated { words, tau, stop: StopReason::BarLimit });
            }
            bars += 1;
            last = None;
            words.push(DecoderWord { onset, drums: ids.pad_drums });
            continue;
        }
        let pos = ids.positions.iter().position(|&id| id == Some(onset)).expect("allowed onsets are positions") as u32;
        let mut allowed = alloc::vec![false; n_dr];
        for &(id, tok) in &ids.hits {
            if last.is_none_or(|(lp, ld)| pos > lp || tok > ld) {
                allowed[id as usize] = true;
            }
        }
        let drums = pick(&dr_logits, &allowed, tau, rng) as u32;
        let tok = vocab.drums.token(drums).expect("allowed drums are in the vocabulary");
        last = Some((pos, tok));
        words.push(DecoderWord { onset, drums });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{DecoderTokens, Dim};
    use crate::nn::config::ModelConfig;
    use crate::preprocess::DrumComponent;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vocab() -> DecoderVocab {
        DecoderVocab {
            onset: Dim::from_tokens(
                [OnsetToken::Pad, OnsetToken::Bar, OnsetToken::Eos].into_iter().chain((0..4).map(OnsetToken::Pos)),
            ),
            drums: Dim::from_tokens(
                [DrumsToken::Pad, DrumsToken::Bos, DrumsToken::Eos]
                    .into_iter()
                    .chain(DrumComponent::ALL.iter().map(|&c| DrumsToken::Hit(c))),
            ),
        }
    }

    fn model(seed: u64) -> Model<f32> {
        let config = ModelConfig {
            enc_vocab: [4, 4, 4, 4, 4],
            dec_vocab: vocab().sizes(),
            enc_emb: [2; 5],
            dec_emb: [4, 4],
            d_model: 8,
            lstm_layers: 1,
            lstm_hidden: 4,
            dec_layers: 1,
            heads: 2,
            ffn_dim: 8,
            dropout: 0.0,
            max_enc_len: 16,
            max_dec_len: 64,
            rel_window: 32,
            cross_attention: false,
        };
        Model::new(config, seed).unwrap()
    }

    fn condition() -> alloc::vec::Vec<EncoderWord> {
        (0..5).map(|i| EncoderWord::from_ids([i % 4, 1, 2, 3, i % 3])).collect()
    }

    #[test]
    fn hard_length_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let opts = GenerateOptions { temperature: Temperature::Fixed(1.0), max_len: Some(3) };
        let out = generate(&model(1), &vocab(), &condition(), &[4, 4], &opts, &mut rng).unwrap();
        assert!(out.words.len() <= 3);
        assert_eq!(out.stop, StopReason::LengthCap);
    }

    #[test]
    fn random_models_obey_the_grammar() {
        let v = vocab();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = model(seed);
            let opts = GenerateOptions { temperature: Temperature::Fixed(1.5), max_len: None };
            let out = generate(&m, &v, &condition(), &[4, 3], &opts, &mut rng).unwrap();
            let toks: alloc::vec::Vec<DecoderTokens> = out
                .words
                .iter()
                .map(|w| DecoderTokens { onset: v.onset.token(w.onset).unwrap(), drums: v.drums.token(w.drums).unwrap() })
                .collect();
            assert_eq!(toks[0], DecoderTokens::BOS);
            assert_eq!(toks[1], DecoderTokens::BAR);
            let bars = toks.iter().filter(|t| **t == DecoderTokens::BAR).count();
            assert!(bars <= 2);
            if out.stop != StopReason::LengthCap {
                assert_eq!(bars, 2);
                assert_eq!(*toks.last().unwrap(), DecoderTokens::EOS);
                crate::codec::check_drums(&toks, bars).unwrap();
            }
            // Positions stay inside each bar.
            let mut bar = 0;
            for t in &toks {
                match t.onset {
                    OnsetToken::Bar => bar += 1,
                    OnsetToken::Pos(p) => assert!(p < [4, 3][bar - 1]),
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn stops_after_last_bar() {
        // Make BAR overwhelmingly likely: generation must end after the
        // second bar with the BAR turned into EOS.
        let v = vocab();
        let mut m = model(3);
        let b = m.params.find("dec.head.onset.b").unwrap();
        m.params.get_mut(b).data[v.onset.id(OnsetToken::Bar).unwrap() as usize] = 50.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let opts = GenerateOptions { temperature: Temperature::Greedy, max_len: None };
        let out = generate(&m, &v, &condition(), &[4, 4], &opts, &mut rng).unwrap();
        assert_eq!(out.stop, StopReason::BarLimit);
        let bar = DecoderWord { onset: v.onset.id(OnsetToken::Bar).unwrap(), drums: 0 };
        assert_eq!(out.words[1..3], [bar, bar]);
        assert_eq!(out.words.len(), 4);
    }

    #[test]
    fn bad_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = model(1);
        let opts = GenerateOptions::default();
        assert!(matches!(generate(&m, &vocab(), &condition(), &[], &opts, &mut rng), Err(NnError::EmptyCondition)));
        let bad = GenerateOptions { temperature: Temperature::Fixed(-1.0), max_len: None };
        assert!(matches!(generate(&m, &vocab(), &condition(), &[4], &bad, &mut rng), Err(NnError::BadTemperature(_))));
    }
}
