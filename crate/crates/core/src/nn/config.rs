use super::NnError;

/// Named hyperparameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Preset {
    /// Small enough to train on a laptop CPU.
    Desk,
    /// The full-size published configuration.
    Paper,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "desk" => Some(Preset::Desk),
            "paper" => Some(Preset::Paper),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ModelConfig {
    /// Vocabulary sizes of the encoder fields (onset, group, type, duration, value).
    pub enc_vocab: [usize; 5],
    /// Vocabulary sizes of the decoder fields (onset, drums).
    pub dec_vocab: [usize; 2],
    pub enc_emb: [usize; 5],
    pub dec_emb: [usize; 2],
    pub d_model: usize,
    pub lstm_layers: usize,
    pub lstm_hidden: usize,
    pub dec_layers: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub dropout: f64,
    pub max_enc_len: usize,
    pub max_dec_len: usize,
    /// Largest distinct relative distance; longer distances are clipped.
    pub rel_window: usize,
    /// Adds attention over the encoder states to every decoder block.
    pub cross_attention: bool,
}

impl ModelConfig {
    pub const MAX_ENC_LEN: usize = 597;
    pub const MAX_DEC_LEN: usize = 545;

    pub fn preset(preset: Preset, enc_vocab: [usize; 5], dec_vocab: [usize; 2]) -> Self {
        let base = ModelConfig {
            enc_vocab,
            dec_vocab,
            enc_emb: [64, 16, 32, 64, 64],
            dec_emb: [96, 96],
            d_model: 512,
            lstm_layers: 3,
            lstm_hidden: 512,
            dec_layers: 4,
            heads: 8,
            ffn_dim: 1024,
            dropout: 0.3,
            max_enc_len: Self::MAX_ENC_LEN,
            max_dec_len: Self::MAX_DEC_LEN,
            rel_window: Self::MAX_DEC_LEN / 2,
            cross_attention: false,
        };
        match preset {
            Preset::Paper => base,
            Preset::Desk => ModelConfig {
                enc_emb: [16, 4, 8, 16, 16],
                dec_emb: [24, 24],
                d_model: 64,
                lstm_layers: 2,
                lstm_hidden: 64,
                dec_layers: 2,
                heads: 2,
                ffn_dim: 128,
                dropout: 0.1,
                ..base
            },
        }
    }

    pub fn enc_fused_dim(&self) -> usize {
        self.enc_emb.iter().sum()
    }

    pub fn dec_fused_dim(&self) -> usize {
        self.dec_emb.iter().sum()
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &'static str| Err(NnError::BadConfig(m));
        if self.enc_vocab.iter().chain(&self.dec_vocab).any(|&v| v == 0) {
            return bad("vocabulary sizes must be positive");
        }
        if self.enc_emb.iter().chain(&self.dec_emb).any(|&v| v == 0) {
            return bad("embedding sizes must be positive");
        }
        if self.d_model == 0 || self.lstm_hidden == 0 || self.ffn_dim == 0 || self.lstm_layers == 0 {
            return bad("layer widths and the encoder depth must be positive");
        }
        if self.heads == 0 || !self.d_model.is_multiple_of(self.heads) {
            return bad("d_model must be divisible by heads");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.max_enc_len == 0 || self.max_dec_len < 2 {
            return bad("maximum lengths are too small");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    /// Rescale gradients whose global norm exceeds this.
    pub max_grad_norm: Option<f64>,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
}

impl TrainConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = TrainConfig {
            lr: 2e-5,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 16,
            max_grad_norm: Some(1.0),
            patience: 5,
            max_epochs: 200,
        };
        match preset {
            Preset::Paper => base,
            Preset::Desk => TrainConfig { lr: 1e-3, max_epochs: 60, ..base },
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if !(self.lr >= 0.0 && self.weight_decay >= 0.0 && self.eps > 0.0) {
            return Err(NnError::BadConfig("lr and weight decay must be non-negative, eps positive"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(NnError::BadConfig("Adam betas must lie in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(NnError::BadConfig("batch size must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fused_widths() {
        let p = ModelConfig::preset(Preset::Paper, [31, 5, 7, 40, 33], [31, 16]);
        assert_eq!((p.enc_fused_dim(), p.dec_fused_dim()), (240, 192));
        assert_eq!(p.rel_window, 272);
        let d = ModelConfig::preset(Preset::Desk, [31, 5, 7, 40, 33], [31, 16]);
        assert_eq!((d.enc_fused_dim() * 4, d.dec_fused_dim() * 4), (240, 192));
        assert!(p.validate().is_ok() && d.validate().is_ok());
        assert_eq!(Preset::from_name("desk"), Some(Preset::Desk));
    }
}
