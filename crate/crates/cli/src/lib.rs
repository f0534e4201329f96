//! File formats, corpus pipeline and command-line driver for `cpdrums-core`.
//!
//! Every stage reads and writes artifacts in a work directory, so the
//! pipeline can be restarted from any stage:
//!
//! | stage        | reads                          | writes                               |
//! |--------------|--------------------------------|--------------------------------------|
//! | `preprocess` | corpus MIDI files              | `phrases.jsonl`, `splits.json`, `stats.json` |
//! | `vocab`      | phrase store                   | `vocab.json`                         |
//! | `tokenize`   | phrase store, splits, vocab    | `tokens/{train,valid,test}.bin`      |
//! | `train`      | tokens, vocab                  | `checkpoints/`, `train_log.jsonl`    |
//! | `generate`   | checkpoint, phrase store       | `generated/`, `truth/`               |
//! | `evaluate`   | two MIDI directories           | `reports/`                           |
//!
//! Byte layouts are documented in `docs/FORMATS.md`.

mod bytes;
pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod hash;
pub mod render;
pub mod report;
pub mod store;
pub mod tokens;
pub mod toy;

pub use config::RunConfig;
