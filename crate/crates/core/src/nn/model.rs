//! BiLSTM condition encoder and relative-attention drum decoder.

use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::graph::{Graph, Var};
use super::layers::{Attention, Ctx, Embedding, LayerNorm, Linear, Lstm};
use super::params::ParamStore;
use super::tensor::Scalar;
use super::NnError;
use crate::codec::{DecoderWord, EncoderWord};

const ENC_FIELDS: [&str; 5] = ["onset", "group", "type", "duration", "value"];
const DEC_FIELDS: [&str; 2] = ["onset", "drums"];

#[derive(Debug, Clone)]
struct Block {
    ln_attn: LayerNorm,
    attn: Attention,
    cross: Option<(LayerNorm, Attention)>,
    ln_ffn: LayerNorm,
    ffn_in: Linear,
    ffn_out: Linear,
}

#[derive(Debug, Clone)]
struct Layout {
    enc_emb: Vec<Embedding>,
    enc_fuse: Linear,
    lstm: Vec<(Lstm, Lstm)>,
    latent: Linear,
    dec_emb: Vec<Embedding>,
    dec_fuse: Linear,
    blocks: Vec<Block>,
    final_ln: LayerNorm,
    onset_head: Linear,
    drums_head: Linear,
}

impl Layout {
    fn build<F: Scalar>(c: &ModelConfig, store: &mut ParamStore<F>, rng: &mut ChaCha8Rng) -> Self {
        let enc_emb =
            (0..5).map(|i| Embedding::new(store, "enc.emb", ENC_FIELDS[i], c.enc_vocab[i], c.enc_emb[i], rng)).collect();
        let enc_fuse = Linear::new(store, "enc.fuse", c.enc_fused_dim(), c.d_model, rng);
        let mut lstm = Vec::new();
        for l in 0..c.lstm_layers {
            let input = if l == 0 { c.d_model } else { 2 * c.lstm_hidden };
            let fwd = Lstm::new(store, &alloc::format!("enc.lstm{l}.fwd"), input, c.lstm_hidden, rng);
            let bwd = Lstm::new(store, &alloc::format!("enc.lstm{l}.bwd"), input, c.lstm_hidden, rng);
            lstm.push((fwd, bwd));
        }
        let latent = Linear::new(store, "enc.z", 2 * c.lstm_hidden, c.d_model, rng);
        let dec_emb =
            (0..2).map(|i| Embedding::new(store, "dec.emb", DEC_FIELDS[i], c.dec_vocab[i], c.dec_emb[i], rng)).collect();
        let dec_fuse = Linear::new(store, "dec.fuse", c.dec_fused_dim() + c.d_model, c.d_model, rng);
        let blocks = (0..c.dec_layers)
            .map(|l| {
                let name = alloc::format!("dec.block{l}");
                Block {
                    ln_attn: LayerNorm::new(store, &alloc::format!("{name}.ln_attn"), c.d_model),
                    attn: Attention::new(
                        store,
                        &alloc::format!("{name}.attn"),
                        c.d_model,
                        c.d_model,
                        c.heads,
                        Some(c.rel_window),
                        rng,
                    ),
                    cross: c.cross_attention.then(|| {
                        (
                            LayerNorm::new(store, &alloc::format!("{name}.ln_cross"), c.d_model),
                            Attention::new(
                                store,
                                &alloc::format!("{name}.cross"),
                                c.d_model,
                                2 * c.lstm_hidden,
                                c.heads,
                                None,
                                rng,
                            ),
                        )
                    }),
                    ln_ffn: LayerNorm::new(store, &alloc::format!("{name}.ln_ffn"), c.d_model),
                    ffn_in: Linear::new(store, &alloc::format!("{name}.ffn_in"), c.d_model, c.ffn_dim, rng),
                    ffn_out: Linear::new(store, &alloc::format!("{name}.ffn_out"), c.ffn_dim, c.d_model, rng),
                }
            })
            .collect();
        Layout {
            enc_emb,
            enc_fuse,
            lstm,
            latent,
            dec_emb,
            dec_fuse,
            blocks,
            final_ln: LayerNorm::new(store, "dec.ln_final", c.d_model),
            onset_head: Linear::new(store, "dec.head.onset", c.d_model, c.dec_vocab[0], rng),
            drums_head: Linear::new(store, "dec.head.drums", c.d_model, c.dec_vocab[1], rng),
        }
    }
}

/// Encoder outputs inside one graph.
#[derive(Debug, Clone, Copy)]
pub struct Encoded {
    /// `1 x d_model` summary of the condition.
    pub z: Var,
    /// `T x 2·lstm_hidden` top-layer states.
    pub states: Var,
}

/// Decoder logits, one row per input position.
#[derive(Debug, Clone, Copy)]
pub struct Heads {
    pub onset: Var,
    pub drums: Var,
}

/// One training pair: condition words and the full drum stream from BOS to
/// EOS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub condition: Vec<EncoderWord>,
    pub drums: Vec<DecoderWord>,
}

/// Summed loss of one example and what it was computed over.
#[derive(Debug, Clone)]
pub struct LossTerms {
    /// `1 x 1`: summed onset and drums cross-entropy over counted positions.
    pub loss: Var,
    pub heads: Heads,
    /// Positions whose onset target is not PAD.
    pub count: usize,
    pub targets: Vec<Option<(usize, usize)>>,
}

#[derive(Debug, Clone)]
pub struct Model<F: Scalar> {
    pub config: ModelConfig,
    pub params: ParamStore<F>,
    layout: Layout,
}

impl<F: Scalar> Model<F> {
    /// Fresh parameters drawn from a generator seeded with `seed`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, NnError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::default();
        let layout = Layout::build(&config, &mut params, &mut rng);
        Ok(Self { config, params, layout })
    }

    /// Wraps loaded parameters after checking their names and shapes.
    pub fn from_params(config: ModelConfig, params: ParamStore<F>) -> Result<Self, NnError> {
        let fresh = Self::new(config, 0)?;
        if fresh.params.len() != params.len() {
            return Err(NnError::ParamMismatch(alloc::format!(
                "expected {} tensors, found {}",
                fresh.params.len(),
                params.len()
            )));
        }
        for id in fresh.params.ids() {
            if fresh.params.name(id) != params.name(id) || fresh.params.get(id).shape() != params.get(id).shape() {
                return Err(NnError::ParamMismatch(alloc::format!(
                    "{} {:?} does not match {} {:?}",
                    params.name(id),
                    params.get(id).shape(),
                    fresh.params.name(id),
                    fresh.params.get(id).shape()
                )));
            }
        }
        Ok(Self { config: fresh.config, params, layout: fresh.layout })
    }

    pub fn cast<G: Scalar>(&self) -> Model<G> {
        Model { config: self.config.clone(), params: self.params.cast(), layout: self.layout.clone() }
    }

    fn embed(g: &mut Graph<'_, F>, tables: &[Embedding], columns: &[Vec<u32>]) -> Result<Var, NnError> {
        let parts = tables.iter().zip(columns).map(|(t, ids)| t.forward(g, ids)).collect::<Result<Vec<_>, _>>()?;
        Ok(g.concat_cols(&parts))
    }

    pub fn encode(&self, g: &mut Graph<'_, F>, words: &[EncoderWord], ctx: &mut Ctx<'_>) -> Result<Encoded, NnError> {
        if words.is_empty() {
            return Err(NnError::EmptySequence);
        }
        if words.len() > self.config.max_enc_len {
            return Err(NnError::EncoderTooLong { len: words.len(), max: self.config.max_enc_len });
        }
        let l = &self.layout;
        let columns: Vec<Vec<u32>> = (0..5).map(|f| words.iter().map(|w| w.ids()[f]).collect()).collect();
        let fused = Self::embed(g, &l.enc_emb, &columns)?;
        let x = l.enc_fuse.forward(g, fused);
        let mut x = ctx.dropout(g, x);
        let mut last = (x, x);
        for (i, (fwd, bwd)) in l.lstm.iter().enumerate() {
            if i > 0 {
                x = ctx.dropout(g, x);
            }
            let f = fwd.forward(g, x, false);
            let b = bwd.forward(g, x, true);
            last = (f, b);
            x = g.concat_cols(&[f, b]);
        }
        let t = words.len();
        let f_end = g.slice_rows(last.0, t - 1, 1);
        let b_end = g.slice_rows(last.1, 0, 1);
        let ends = g.concat_cols(&[f_end, b_end]);
        let z = l.latent.forward(g, ends);
        Ok(Encoded { z, states: x })
    }

    /// Logits for every position of the decoder input (teacher forcing).
    pub fn decode(
        &self,
        g: &mut Graph<'_, F>,
        inputs: &[DecoderWord],
        enc: Encoded,
        ctx: &mut Ctx<'_>,
    ) -> Result<Heads, NnError> {
        if inputs.is_empty() {
            return Err(NnError::EmptySequence);
        }
        if inputs.len() > self.config.max_dec_len {
            return Err(NnError::DecoderTooLong { len: inputs.len(), max: self.config.max_dec_len });
        }
        let l = &self.layout;
        let columns: Vec<Vec<u32>> = (0..2).map(|f| inputs.iter().map(|w| w.ids()[f]).collect()).collect();
        let emb = Self::embed(g, &l.dec_emb, &columns)?;
        let z = g.repeat_rows(enc.z, inputs.len());
        let fused = g.concat_cols(&[emb, z]);
        let x = l.dec_fuse.forward(g, fused);
        let mut x = ctx.dropout(g, x);
        for b in &l.blocks {
            let h = b.ln_attn.forward(g, x);
            let h = b.attn.forward(g, h, None);
            let h = ctx.dropout(g, h);
            x = g.add(x, h);
            if let Some((ln, cross)) = &b.cross {
                let h = ln.forward(g, x);
                let h = cross.forward(g, h, Some(enc.states));
                let h = ctx.dropout(g, h);
                x = g.add(x, h);
            }
            let h = b.ln_ffn.forward(g, x);
            let h = b.ffn_in.forward(g, h);
            let h = g.relu(h);
            let h = b.ffn_out.forward(g, h);
            let h = ctx.dropout(g, h);
            x = g.add(x, h);
        }
        let h = l.final_ln.forward(g, x);
        Ok(Heads { onset: l.onset_head.forward(g, h), drums: l.drums_head.forward(g, h) })
    }

    /// Teacher-forced loss of one example: inputs are the stream without
    /// its last word, targets the stream without its first word.
    pub fn loss(&self, g: &mut Graph<'_, F>, example: &Example, ctx: &mut Ctx<'_>) -> Result<LossTerms, NnError> {
        if example.drums.len() < 2 {
            return Err(NnError::EmptySequence);
        }
        let inputs = &example.drums[..example.drums.len() - 1];
        let targets: Vec<Option<(usize, usize)>> = example.drums[1..]
            .iter()
            .map(|w| (w.onset != DecoderWord::PAD.onset).then_some((w.onset as usize, w.drums as usize)))
            .collect();
        let count = targets.iter().flatten().count();
        for &(o, d) in targets.iter().flatten() {
            if o >= self.config.dec_vocab[0] {
                return Err(NnError::IdOutOfRange { field: "onset", id: o as u32, size: self.config.dec_vocab[0] });
            }
            if d >= self.config.dec_vocab[1] {
                return Err(NnError::IdOutOfRange { field: "drums", id: d as u32, size: self.config.dec_vocab[1] });
            }
        }
        let enc = self.encode(g, &example.condition, ctx)?;
        let heads = self.decode(g, inputs, enc, ctx)?;
        let on: Vec<Option<usize>> = targets.iter().map(|t| t.map(|t| t.0)).collect();
        let dr: Vec<Option<usize>> = targets.iter().map(|t| t.map(|t| t.1)).collect();
        let a = g.cross_entropy(heads.onset, &on);
        let b = g.cross_entropy(heads.drums, &dr);
        let loss = g.add(a, b);
        Ok(LossTerms { loss, heads, count, targets })
    }

    pub fn param_summary(&self) -> Vec<(String, (usize, usize))> {
        self.params.ids().map(|id| (String::from(self.params.name(id)), self.params.get(id).shape())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::config::Preset;
    use crate::nn::gradcheck::check_gradients;
    use crate::nn::tensor::Tensor;
    use alloc::vec;

    pub(crate) fn toy_config(cross: bool) -> ModelConfig {
        ModelConfig {
            enc_vocab: [5, 3, 4, 4, 5],
            dec_vocab: [6, 5],
            enc_emb: [2, 2, 2, 2, 2],
            dec_emb: [3, 3],
            d_model: 4,
            lstm_layers: 2,
            lstm_hidden: 3,
            dec_layers: 2,
            heads: 2,
            ffn_dim: 6,
            dropout: 0.0,
            max_enc_len: 12,
            max_dec_len: 12,
            rel_window: 3,
            cross_attention: cross,
        }
    }

    fn toy_example() -> Example {
        let condition = [[1, 1, 1, 1, 1], [2, 2, 3, 2, 4], [3, 1, 3, 3, 2], [1, 1, 2, 1, 3], [4, 2, 3, 1, 1]];
        let drums = [[0, 1], [1, 0], [3, 4], [4, 3], [1, 0], [2, 3], [5, 2]];
        Example {
            condition: condition.iter().map(|&c| EncoderWord::from_ids(c)).collect(),
            drums: drums.iter().map(|&d| DecoderWord::from_ids(d)).collect(),
        }
    }

    #[test]
    fn end_to_end_gradients() {
        for cross in [false, true] {
            let model = Model::<f64>::new(toy_config(cross), 1).unwrap();
            let ex = toy_example();
            let report = check_gradients(&model.params, |g| model.loss(g, &ex, &mut Ctx::eval()).unwrap().loss);
            assert!(report.max_rel_error <= 1e-3, "{report:?}");
            assert_eq!(report.checked, model.params.scalar_count());
        }
    }

    #[test]
    fn heads_are_distributions() {
        let model = Model::<f64>::new(toy_config(false), 2).unwrap();
        let ex = toy_example();
        let mut g = Graph::new(&model.params);
        let t = model.loss(&mut g, &ex, &mut Ctx::eval()).unwrap();
        for v in [t.heads.onset, t.heads.drums] {
            let mut p = g.value(v).clone();
            crate::nn::graph::softmax_rows(&mut p, false);
            for r in 0..p.rows {
                assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-5);
            }
        }
        assert_eq!(g.shape(t.heads.drums).1, 5);
    }

    #[test]
    fn causal_decoder() {
        let model = Model::<f64>::new(toy_config(false), 3).unwrap();
        let ex = toy_example();
        let run = |inputs: &[DecoderWord]| {
            let mut g = Graph::new(&model.params);
            let enc = model.encode(&mut g, &ex.condition, &mut Ctx::eval()).unwrap();
            let h = model.decode(&mut g, inputs, enc, &mut Ctx::eval()).unwrap();
            (g.value(h.onset).clone(), g.value(h.drums).clone())
        };
        let base = run(&ex.drums);
        for t in 0..ex.drums.len() {
            let mut changed = ex.drums.clone();
            changed[t] = DecoderWord::from_ids([(changed[t].onset + 1) % 6, (changed[t].drums + 2) % 5]);
            let out = run(&changed);
            for r in 0..t {
                assert_eq!(base.0.row(r), out.0.row(r), "onset row {r} moved when {t} changed");
                assert_eq!(base.1.row(r), out.1.row(r));
            }
            assert_ne!(base.0.row(t), out.0.row(t));
        }
    }

    #[test]
    fn padding_does_not_change_loss() {
        let model = Model::<f64>::new(toy_config(false), 4).unwrap();
        let ex = toy_example();
        let mut padded = ex.clone();
        padded.drums.extend([DecoderWord::PAD; 3]);
        let value = |e: &Example| {
            let mut g = Graph::new(&model.params);
            let t = model.loss(&mut g, e, &mut Ctx::eval()).unwrap();
            (g.value(t.loss).data[0], t.count)
        };
        let (a, n) = value(&ex);
        let (b, m) = value(&padded);
        assert_eq!(n, m);
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn uniform_logits_cost_two_log_v() {
        let mut model = Model::<f64>::new(toy_config(false), 5).unwrap();
        for name in ["dec.head.onset.w", "dec.head.onset.b", "dec.head.drums.w", "dec.head.drums.b"] {
            let id = model.params.find(name).unwrap();
            let (r, c) = model.params.get(id).shape();
            *model.params.get_mut(id) = Tensor::zeros(r, c);
        }
        let ex = toy_example();
        let mut g = Graph::new(&model.params);
        let t = model.loss(&mut g, &ex, &mut Ctx::eval()).unwrap();
        let per_word = g.value(t.loss).data[0] / t.count as f64;
        assert!((per_word - (libm::log(6.0) + libm::log(5.0))).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_give_latent_bias() {
        let mut model = Model::<f64>::new(toy_config(false), 6).unwrap();
        let bias = model.params.find("enc.z.b").unwrap();
        for id in model.params.ids().collect::<Vec<_>>() {
            let (r, c) = model.params.get(id).shape();
            *model.params.get_mut(id) = Tensor::zeros(r, c);
        }
        model.params.get_mut(bias).data = vec![0.5, -1.0, 2.0, 0.25];
        let ex = toy_example();
        let mut g = Graph::new(&model.params);
        let enc = model.encode(&mut g, &ex.condition[..1], &mut Ctx::eval()).unwrap();
        assert_eq!(g.value(enc.z).data, vec![0.5, -1.0, 2.0, 0.25]);
    }

    #[test]
    fn input_validation() {
        let model = Model::<f64>::new(toy_config(false), 7).unwrap();
        let mut g = Graph::new(&model.params);
        let mut ctx = Ctx::eval();
        assert!(matches!(model.encode(&mut g, &[], &mut ctx), Err(NnError::EmptySequence)));
        let long = vec![EncoderWord::PAD; 13];
        assert!(matches!(model.encode(&mut g, &long, &mut ctx), Err(NnError::EncoderTooLong { len: 13, max: 12 })));
        let bad = [EncoderWord::from_ids([9, 0, 0, 0, 0])];
        assert!(matches!(model.encode(&mut g, &bad, &mut ctx), Err(NnError::IdOutOfRange { field: "onset", .. })));
        let ex = Example { condition: toy_example().condition, drums: vec![DecoderWord::from_ids([0, 1]), DecoderWord::PAD] };
        let mut g = Graph::new(&model.params);
        assert_eq!(model.loss(&mut g, &ex, &mut ctx).unwrap().count, 0);
    }

    #[test]
    fn deterministic_init_and_reload() {
        let c = ModelConfig::preset(Preset::Desk, [31, 5, 7, 40, 33], [31, 16]);
        let a = Model::<f32>::new(c.clone(), 9).unwrap();
        let b = Model::<f32>::new(c.clone(), 9).unwrap();
        assert_eq!(a.params, b.params);
        assert!(Model::from_params(c.clone(), a.params.clone()).is_ok());
        let other = ModelConfig { d_model: 32, ..c.clone() };
        assert!(matches!(Model::from_params(other, a.params), Err(NnError::ParamMismatch(_))));
        assert_eq!(
            Model::<f32>::new(c, 9).unwrap().param_summary().iter().filter(|(n, _)| n.starts_with("enc.emb")).count(),
            5
        );
    }
}
