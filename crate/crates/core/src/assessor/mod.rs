//! Desk-scale assessor: statistic encoders, a shared projection space, a
//! one-layer fusion network, level and score heads, and a pairwise judge,
//! trained in three stages by momentum gradient descent.

mod config;
mod encoders;
mod loss;
mod model;
mod params;
mod train;

pub use config::{AssessorConfig, Stage};
pub use encoders::{
    embed_prompt, extract_spatial_tokens, extract_temporal_tokens, spatial_descriptors, temporal_descriptors,
    PromptCode, VideoFeatures,
};
pub use loss::{loss_language, loss_mos, loss_pairs};
pub use model::{forward, forward_features, judge_pair, predict, AssessorOutput, Prediction};
pub use params::{AssessorParams, Gradients, ParamName, Tensor, REGRESS_BIAS_INIT};
pub use train::{gradients, preference_pairs, train, Batch, EpochLog, PairSample, TrainOutcome, VideoSample};

/// Quality levels per dimension.
pub const NUM_LEVELS: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssessorError {
    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("checkpoint lacks parameter {0}")]
    MissingParam(&'static str),
    #[error("temporal tokens need at least 3 frames, got {0}")]
    TooFewFrames(usize),
    #[error("stage {} is disabled by the configuration", .0.number())]
    StageDisabled(Stage),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("ground-truth score {0} is outside [0, 100]")]
    ScoreOutOfRange(f64),
    #[error("pair refers to video {0}, which is not in the batch")]
    PairIndex(usize),
}
