use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::graph::Graph;
use super::layers::Ctx;
use super::model::{Example, Model};
use super::params::{Grads, ParamStore};
use super::tensor::{Scalar, Tensor};
use super::NnError;

/// Adam with decoupled weight decay: every parameter is first shrunk by
/// `lr · weight_decay`, then moved by the bias-corrected Adam step.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW<F: Scalar> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub step: u64,
    pub m: Grads<F>,
    pub v: Grads<F>,
}

impl<F: Scalar> AdamW<F> {
    pub fn new(params: &ParamStore<F>, config: &TrainConfig) -> Self {
        Self {
            lr: config.lr,
            beta1: config.beta1,
            beta2: config.beta2,
            eps: config.eps,
            weight_decay: config.weight_decay,
            step: 0,
            m: Grads::zeros_like(params),
            v: Grads::zeros_like(params),
        }
    }

    pub fn update(&mut self, params: &mut ParamStore<F>, grads: &Grads<F>) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - libm::pow(self.beta1, f64::from(t));
        let bc2 = 1.0 - libm::pow(self.beta2, f64::from(t));
        let (b1, b2) = (F::of(self.beta1), F::of(self.beta2));
        let decay = F::of(1.0 - self.lr * self.weight_decay);
        let step_size = F::of(self.lr / bc1);
        let inv_bc2 = F::of(1.0 / bc2);
        let eps = F::of(self.eps);
        for id in params.ids().collect::<Vec<_>>() {
            let p = params.get_mut(id);
            let g = &grads.tensors[id.0];
            let m = &mut self.m.tensors[id.0];
            let v = &mut self.v.tensors[id.0];
            for k in 0..p.data.len() {
                let gk = g.data[k];
                m.data[k] = b1 * m.data[k] + (F::one() - b1) * gk;
                v.data[k] = b2 * v.data[k] + (F::one() - b2) * gk * gk;
                let denom = (v.data[k] * inv_bc2).sqrt() + eps;
                p.data[k] = p.data[k] * decay - step_size * m.data[k] / denom;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub step: u64,
    /// Mean per-word loss over the batch.
    pub loss: f64,
    pub words: usize,
    /// Global gradient norm before clipping.
    pub grad_norm: f64,
}

/// The dropout generator of a step depends only on the run seed and the
/// step number, so a resumed run draws the same masks.
pub fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    rng
}

/// Mean-loss gradients over a batch, plus the summed loss and word count.
pub fn batch_gradients<F: Scalar>(
    model: &Model<F>,
    batch: &[&Example],
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<(Grads<F>, f64, usize), NnError> {
    let mut total = Grads::zeros_like(&model.params);
    let mut loss = 0.0;
    let mut words = 0;
    for ex in batch {
        let mut ctx = Ctx { rng: rng.as_deref_mut(), dropout: model.config.dropout };
        let mut g = Graph::new(&model.params);
        let terms = model.loss(&mut g, ex, &mut ctx)?;
        if terms.count == 0 {
            continue;
        }
        loss += g.value(terms.loss).data[0].as_f64();
        words += terms.count;
        total.add(&g.backward(terms.loss));
    }
    if words == 0 {
        return Err(NnError::AllPad);
    }
    total.scale(F::of(1.0 / words as f64));
    Ok((total, loss, words))
}

/// One optimisation step on `batch` with dropout active.
pub fn train_step<F: Scalar>(
    model: &mut Model<F>,
    opt: &mut AdamW<F>,
    batch: &[&Example],
    max_grad_norm: Option<f64>,
    seed: u64,
) -> Result<StepStats, NnError> {
    let step = opt.step;
    let mut rng = step_rng(seed, step);
    let (mut grads, loss, words) = batch_gradients(model, batch, Some(&mut rng))?;
    let mean = loss / words as f64;
    if !mean.is_finite() || !grads.is_finite() {
        return Err(NnError::NonFiniteLoss { step, loss: mean });
    }
    let norm = grads.global_norm().as_f64();
    if let Some(max) = max_grad_norm {
        if norm > max {
            grads.scale(F::of(max / norm));
        }
    }
    opt.update(&mut model.params, &grads);
    Ok(StepStats { step, loss: mean, words, grad_norm: norm })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub loss: f64,
    pub words: usize,
    pub onset_accuracy: f64,
    pub drums_accuracy: f64,
}

fn argmax_row<F: Scalar>(t: &Tensor<F>, r: usize) -> usize {
    let row = t.row(r);
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Teacher-forced loss and per-head argmax accuracy, without dropout.
pub fn evaluate<F: Scalar>(model: &Model<F>, examples: &[Example]) -> Result<EvalStats, NnError> {
    let (mut loss, mut words, mut on_ok, mut dr_ok) = (0.0, 0usize, 0usize, 0usize);
    for ex in examples {
        let mut g = Graph::new(&model.params);
        let terms = model.loss(&mut g, ex, &mut Ctx::eval())?;
        loss += g.value(terms.loss).data[0].as_f64();
        words += terms.count;
        let (on, dr) = (g.value(terms.heads.onset), g.value(terms.heads.drums));
        for (r, t) in terms.targets.iter().enumerate() {
            if let Some((o, d)) = *t {
                on_ok += usize::from(argmax_row(on, r) == o);
                dr_ok += usize::from(argmax_row(dr, r) == d);
            }
        }
    }
    if words == 0 {
        return Err(NnError::AllPad);
    }
    let n = words as f64;
    Ok(EvalStats { loss: loss / n, words, onset_accuracy: on_ok as f64 / n, drums_accuracy: dr_ok as f64 / n })
}

/// Early stopping on validation loss.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: Option<f64>,
    pub best_epoch: usize,
    pub bad_epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self { patience, best: None, best_epoch: 0, bad_epochs: 0 }
    }

    /// Records an epoch's validation loss; returns whether it is the best.
    pub fn observe(&mut self, epoch: usize, loss: f64) -> bool {
        if self.best.is_none_or(|b| loss < b) {
            self.best = Some(loss);
            self.best_epoch = epoch;
            self.bad_epochs = 0;
            true
        } else {
            self.bad_epochs += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.bad_epochs >= self.patience
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{DecoderWord, EncoderWord};
    use crate::nn::config::ModelConfig;
    use alloc::vec;

    fn config() -> ModelConfig {
        ModelConfig {
            enc_vocab: [6, 3, 4, 4, 5],
            dec_vocab: [7, 5],
            enc_emb: [4, 2, 2, 2, 2],
            dec_emb: [4, 4],
            d_model: 8,
            lstm_layers: 1,
            lstm_hidden: 8,
            dec_layers: 1,
            heads: 2,
            ffn_dim: 16,
            dropout: 0.1,
            max_enc_len: 32,
            max_dec_len: 32,
            rel_window: 8,
            cross_attention: false,
        }
    }

    fn batch() -> Vec<Example> {
        (0..3u32)
            .map(|k| Example {
                condition: (0..4).map(|i| EncoderWord::from_ids([1 + (i + k) % 5, 1, 2, 1, 1 + i % 4])).collect(),
                drums: [[0, 1], [1, 0], [3 + k, 3], [4, 4 - k % 2], [1, 0], [2 + k, 3], [5, 2]]
                    .iter()
                    .map(|&d| DecoderWord::from_ids(d))
                    .collect(),
            })
            .collect()
    }

    fn train_config(lr: f64, wd: f64) -> TrainConfig {
        TrainConfig { lr, weight_decay: wd, ..TrainConfig::preset(crate::nn::Preset::Desk) }
    }

    #[test]
    fn zero_lr_and_decay_keep_params() {
        let mut m = Model::<f32>::new(config(), 1).unwrap();
        let before = m.params.clone();
        let mut opt = AdamW::new(&m.params, &train_config(0.0, 0.0));
        let data = batch();
        let refs: Vec<&Example> = data.iter().collect();
        train_step(&mut m, &mut opt, &refs, Some(1.0), 3).unwrap();
        assert_eq!(m.params, before);
    }

    #[test]
    fn decay_only_shrinks() {
        let mut m = Model::<f64>::new(config(), 1).unwrap();
        let before = m.params.clone();
        let mut opt = AdamW::new(&m.params, &train_config(0.1, 0.5));
        opt.update(&mut m.params, &Grads::zeros_like(&before));
        for id in before.ids() {
            for (a, b) in m.params.get(id).data.iter().zip(&before.get(id).data) {
                assert!((a - b * 0.95).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn loss_decreases_and_is_deterministic() {
        let data = batch();
        let refs: Vec<&Example> = data.iter().collect();
        let run = || {
            let mut m = Model::<f32>::new(config(), 2).unwrap();
            let mut opt = AdamW::new(&m.params, &train_config(3e-3, 0.01));
            let losses: Vec<f64> =
                (0..50).map(|_| train_step(&mut m, &mut opt, &refs, Some(1.0), 11).unwrap().loss).collect();
            (losses, m.params)
        };
        let (a, pa) = run();
        let (b, pb) = run();
        assert_eq!(a, b);
        assert_eq!(pa, pb);
        assert!(a[49] < a[0] * 0.7, "{} -> {}", a[0], a[49]);
    }

    #[test]
    fn all_pad_batch_is_an_error() {
        let mut m = Model::<f32>::new(config(), 1).unwrap();
        let mut opt = AdamW::new(&m.params, &train_config(1e-3, 0.0));
        let ex = Example { condition: batch()[0].condition.clone(), drums: vec![DecoderWord::from_ids([0, 1]); 3] };
        assert!(matches!(train_step(&mut m, &mut opt, &[&ex], None, 0), Err(NnError::AllPad)));
        assert!(matches!(evaluate(&m, &[ex]), Err(NnError::AllPad)));
    }

    #[test]
    fn early_stopping_patience() {
        let mut e = EarlyStopping::new(2);
        assert!(e.observe(0, 3.0));
        assert!(!e.observe(1, 3.5));
        assert!(!e.should_stop());
        assert!(!e.observe(2, 3.0));
        assert!(e.should_stop());
        assert_eq!(e.best_epoch, 0);
    }
}
