use serde::{Deserialize, Serialize};

/// Training stage. Stage 1 aligns features with quality levels, stage 2
/// regresses scores, stage 3 trains the pairwise judge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Stage {
    Align,
    Regress,
    Compare,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Align, Stage::Regress, Stage::Compare];

    pub fn number(self) -> u8 {
        match self {
            Stage::Align => 1,
            Stage::Regress => 2,
            Stage::Compare => 3,
        }
    }

    pub fn index(self) -> usize {
        usize::from(self.number() - 1)
    }
}

impl From<Stage> for u8 {
    fn from(s: Stage) -> u8 {
        s.number()
    }
}

impl TryFrom<u8> for Stage {
    type Error = alloc::string::String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Stage::Align),
            2 => Ok(Stage::Regress),
            3 => Ok(Stage::Compare),
            other => Err(alloc::format!("stage must be 1, 2 or 3, got {other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessorConfig {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    /// Patches per side of the spatial statistics grid.
    pub patch_grid: usize,
    pub d_token: usize,
    pub d_hidden: usize,
    pub prompt_buckets: usize,
    /// Feed temporal tokens into the fusion layer.
    pub use_temporal: bool,
    /// Run the level-classification stage.
    pub use_level_stage: bool,
    /// Let stage 2 update projections and fusion as well as the regression
    /// head (otherwise the backbone is frozen after stage 1).
    pub finetune_encoders_stage2: bool,
    pub learning_rates: [f64; 3],
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: [usize; 3],
    /// Pairs drawn from the training videos for stage 3.
    pub stage3_pairs: usize,
    /// Score gap below which a dimension of a pair carries no preference.
    pub pair_dead_zone: f64,
    pub seed: u64,
}

impl Default for AssessorConfig {
    fn default() -> Self {
        AssessorConfig {
            frames: 8,
            height: 64,
            width: 64,
            patch_grid: 8,
            d_token: 32,
            d_hidden: 64,
            prompt_buckets: 64,
            use_temporal: true,
            use_level_stage: true,
            finetune_encoders_stage2: true,
            learning_rates: [1e-2, 1e-3, 1e-3],
            momentum: 0.9,
            batch_size: 16,
            epochs: [300, 400, 60],
            stage3_pairs: 4000,
            pair_dead_zone: 2.0,
            seed: 0,
        }
    }
}

impl AssessorConfig {
    /// Length of one frame's spatial descriptor: mean and standard deviation
    /// per channel per patch.
    pub fn spatial_descriptor_len(&self) -> usize {
        self.patch_grid * self.patch_grid * 6
    }

    pub fn fused_len(&self) -> usize {
        4 * self.d_token
    }

    pub fn fast_diffs(&self) -> usize {
        self.frames.saturating_sub(1)
    }

    pub fn slow_diffs(&self) -> usize {
        self.frames.saturating_sub(1) / 2
    }
}
