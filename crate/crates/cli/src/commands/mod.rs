//! One function per pipeline stage. Each returns a serialisable summary
//! that `main` prints as JSON.

pub mod data;
pub mod evaluate;
pub mod generate;
pub mod preprocess;
pub mod train;

use anyhow::Result;
use serde::Serialize;

use crate::config::RunConfig;

/// Summaries of a full run, stage by stage.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineSummary {
    pub preprocess: preprocess::PreprocessSummary,
    pub vocab: data::VocabSummary,
    pub tokenize: data::TokenizeSummary,
    pub train: train::TrainSummary,
    pub generate: generate::GenerateSummary,
    pub evaluate: crate::report::EvaluationBundle,
}

/// Runs every stage from a fresh start.
pub fn pipeline(config: &RunConfig) -> Result<PipelineSummary> {
    Ok(PipelineSummary {
        preprocess: preprocess::run(config)?,
        vocab: data::vocab(config)?,
        tokenize: data::tokenize(config)?,
        train: train::run(config, &train::TrainOptions { fresh: true, epochs: None })?,
        generate: generate::run(config, &generate::GenerateArgs::default())?,
        evaluate: evaluate::run(config, &evaluate::EvaluateArgs::default())?,
    })
}
