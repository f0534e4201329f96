//! Sequence-to-sequence drum model on a small reverse-mode autodiff engine.
//!
//! The encoder embeds each field of a condition word, concatenates the
//! embeddings, projects them to the model width and runs a stacked BiLSTM.
//! The latent `z` is a projection of the final forward and backward states
//! of the top layer. The decoder concatenates `z` to every fused drum-word
//! embedding, projects to the model width and applies pre-norm blocks of
//! causal relative self-attention and a ReLU feed-forward layer. Two heads
//! read the same final state: one over onsets, one over drum tokens.

mod config;
mod generate;
pub mod gradcheck;
mod graph;
mod layers;
mod model;
mod params;
mod sample;
mod tensor;
mod train;

use alloc::string::String;

pub use config::{ModelConfig, Preset, TrainConfig};
pub use generate::{generate, GenerateOptions, Generated, StopReason};
pub use graph::{Graph, Var};
pub use layers::{relative_global_attention, relative_rows, Attention, Ctx, Embedding, LayerNorm, Linear, Lstm};
pub use model::{Encoded, Example, Heads, LossTerms, Model};
pub use params::{Grads, ParamId, ParamStore};
pub use sample::{argmax, sample, tempered, Temperature};
pub use tensor::{Scalar, Tensor};
pub use train::{batch_gradients, evaluate, step_rng, train_step, AdamW, EarlyStopping, EvalStats, StepStats};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("invalid configuration: {0}")]
    BadConfig(&'static str),
    #[error("sequence is empty")]
    EmptySequence,
    #[error("condition sequence has {len} words, the limit is {max}")]
    EncoderTooLong { len: usize, max: usize },
    #[error("decoder sequence has {len} words, the limit is {max}")]
    DecoderTooLong { len: usize, max: usize },
    #[error("{field} id {id} is outside a vocabulary of {size}")]
    IdOutOfRange { field: &'static str, id: u32, size: usize },
    #[error("every target in the batch is padding")]
    AllPad,
    #[error("loss became non-finite at step {step}: {loss}")]
    NonFiniteLoss { step: u64, loss: f64 },
    #[error("temperature must be positive and finite, got {0}")]
    BadTemperature(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("parameters do not fit the configuration: {0}")]
    ParamMismatch(String),
    #[error("condition has no bars")]
    EmptyCondition,
    #[error("vocabulary problem: {0}")]
    VocabMissing(&'static str),
}
