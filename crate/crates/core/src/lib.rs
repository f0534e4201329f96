//! Compound-word drum generation toolkit.
//!
//! The crate is `no_std` (it only needs `alloc`) and covers the whole
//! algorithmic side of conditional drum generation:
//!
//! - [`midi`]: Standard MIDI File parsing/writing into a tick-exact [`midi::Score`].
//! - [`preprocess`]: track selection, drum-component mapping, phrase
//!   segmentation, corpus filtering and dataset splitting.
//! - [`codec`]: the 5-field encoder and 2-field decoder compound-word streams
//!   and their vocabularies.
//! - [`metrics`]: per-bar density and the high-level rhythm features.
//! - [`pattern`]: SIA / SIATEC / COSIATEC point-set compression.
//! - [`nn`]: a small reverse-mode autodiff engine and the BiLSTM encoder /
//!   relative-attention decoder built on it.
//!
//! File formats and the command-line driver live in the `cpdrums` crate.

#![cfg_attr(all(not(feature = "std"), not(test)), no_std)]

extern crate alloc;

pub mod codec;
pub mod metrics;
pub mod midi;
pub mod nn;
pub mod pattern;
pub mod preprocess;
pub mod time;

pub use time::{Quarters, TimeSignature};
