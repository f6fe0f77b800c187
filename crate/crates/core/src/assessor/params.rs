use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{AssessorConfig, Stage};
use super::NUM_LEVELS;
use crate::rng;

/// Row-major matrix; vectors are `1 x n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, self.cols]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out += x * self` for a row vector `x` of length `rows`.
    pub fn vec_mul_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        for (r, &xv) in x.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.row(r)) {
                *o += xv * w;
            }
        }
    }

    pub fn vec_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.vec_mul_acc(x, &mut out);
        out
    }

    /// `self * g` for a column vector `g` of length `cols`.
    pub fn mul_vec(&self, g: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(g).map(|(w, v)| w * v).sum())
            .collect()
    }

    /// `self += scale * x^T g` (outer product).
    pub fn add_outer(&mut self, x: &[f64], g: &[f64], scale: f64) {
        for (r, &xv) in x.iter().enumerate() {
            let a = xv * scale;
            if a == 0.0 {
                continue;
            }
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (w, gv) in row.iter_mut().zip(g) {
                *w += a * gv;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }
}

/// Every learnable tensor of the assessor, in checkpoint order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    SpatialProj,
    FastProj,
    SlowProj,
    PromptEmbed,
    FusionW,
    FusionB,
    LevelW,
    LevelB,
    RegressW,
    RegressB,
    JudgeU1,
    JudgeU2,
}

impl ParamName {
    pub const ALL: [ParamName; 12] = [
        ParamName::SpatialProj,
        ParamName::FastProj,
        ParamName::SlowProj,
        ParamName::PromptEmbed,
        ParamName::FusionW,
        ParamName::FusionB,
        ParamName::LevelW,
        ParamName::LevelB,
        ParamName::RegressW,
        ParamName::RegressB,
        ParamName::JudgeU1,
        ParamName::JudgeU2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::SpatialProj => "spatial_proj",
            ParamName::FastProj => "fast_proj",
            ParamName::SlowProj => "slow_proj",
            ParamName::PromptEmbed => "prompt_embed",
            ParamName::FusionW => "fusion_w",
            ParamName::FusionB => "fusion_b",
            ParamName::LevelW => "level_w",
            ParamName::LevelB => "level_b",
            ParamName::RegressW => "regress_w",
            ParamName::RegressB => "regress_b",
            ParamName::JudgeU1 => "judge_u1",
            ParamName::JudgeU2 => "judge_u2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }

    pub fn is_bias(self) -> bool {
        matches!(self, ParamName::FusionB | ParamName::LevelB | ParamName::RegressB)
    }

    pub fn shape(self, c: &AssessorConfig) -> [usize; 2] {
        match self {
            ParamName::SpatialProj => [c.spatial_descriptor_len(), c.d_token],
            ParamName::FastProj | ParamName::SlowProj => [6, c.d_token],
            ParamName::PromptEmbed => [c.prompt_buckets, c.d_token],
            ParamName::FusionW => [c.fused_len(), c.d_hidden],
            ParamName::FusionB => [1, c.d_hidden],
            ParamName::LevelW => [c.d_hidden, 4 * NUM_LEVELS],
            ParamName::LevelB => [1, 4 * NUM_LEVELS],
            ParamName::RegressW => [c.d_hidden, 4],
            ParamName::RegressB => [1, 4],
            ParamName::JudgeU1 => [c.d_hidden, c.d_token],
            ParamName::JudgeU2 => [c.d_token, 4],
        }
    }

    /// Whether `stage` updates this tensor under `config`.
    pub fn trained_in(self, stage: Stage, config: &AssessorConfig) -> bool {
        use ParamName::*;
        let backbone = matches!(
            self,
            SpatialProj | FastProj | SlowProj | PromptEmbed | FusionW | FusionB
        );
        match stage {
            Stage::Align => backbone || matches!(self, LevelW | LevelB),
            Stage::Regress => matches!(self, RegressW | RegressB) || (backbone && config.finetune_encoders_stage2),
            Stage::Compare => matches!(self, JudgeU1 | JudgeU2),
        }
    }
}

/// Midpoint of the score range; the regression bias starts here so the
/// head begins at an unbiased guess.
pub const REGRESS_BIAS_INIT: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AssessorParams {
    tensors: Vec<Tensor>,
}

impl AssessorParams {
    pub fn zeros(config: &AssessorConfig) -> Self {
        let tensors = ParamName::ALL
            .iter()
            .map(|p| {
                let [r, c] = p.shape(config);
                Tensor::zeros(r, c)
            })
            .collect();
        AssessorParams { tensors }
    }

    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, drawn in
    /// [`ParamName::ALL`] order from the seeded PRNG; biases zero except the
    /// regression bias. Values are rounded to single precision.
    pub fn init(config: &AssessorConfig) -> Self {
        let mut p = Self::zeros(config);
        let mut rng = rng::substream(config.seed, 1);
        for name in ParamName::ALL {
            let t = p.get_mut(name);
            if name.is_bias() {
                if name == ParamName::RegressB {
                    t.data.iter_mut().for_each(|v| *v = REGRESS_BIAS_INIT);
                }
                continue;
            }
            let limit = libm::sqrt(6.0 / (t.rows + t.cols) as f64);
            for v in &mut t.data {
                *v = rng.random_range(-limit..limit);
            }
        }
        p.round_to_f32();
        p
    }

    pub fn get(&self, name: ParamName) -> &Tensor {
        &self.tensors[name as usize]
    }

    pub fn get_mut(&mut self, name: ParamName) -> &mut Tensor {
        &mut self.tensors[name as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamName, &Tensor)> {
        ParamName::ALL.into_iter().zip(&self.tensors)
    }

    /// Builds parameters from named tensors, checking every shape against
    /// `config`.
    pub fn from_tensors(
        config: &AssessorConfig,
        tensors: impl IntoIterator<Item = (ParamName, Tensor)>,
    ) -> Result<Self, super::AssessorError> {
        let mut slots: Vec<Option<Tensor>> = vec![None; ParamName::ALL.len()];
        for (name, t) in tensors {
            let expected = name.shape(config);
            if t.shape() != expected || t.data.len() != expected[0] * expected[1] {
                return Err(super::AssessorError::ShapeMismatch {
                    what: name.as_str(),
                    expected: expected[0] * expected[1],
                    found: t.data.len(),
                });
            }
            slots[name as usize] = Some(t);
        }
        let tensors = slots
            .into_iter()
            .zip(ParamName::ALL)
            .map(|(t, name)| t.ok_or(super::AssessorError::MissingParam(name.as_str())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AssessorParams { tensors })
    }

    /// Keeps every value exactly representable in single precision, which
    /// is how checkpoints store them.
    pub fn round_to_f32(&mut self) {
        for t in &mut self.tensors {
            for v in &mut t.data {
                *v = f64::from(*v as f32);
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}

/// Same layout as [`AssessorParams`]; one gradient tensor per parameter.
pub type Gradients = AssessorParams;

impl AssessorParams {
    pub fn scale(&mut self, s: f64) {
        for t in &mut self.tensors {
            t.data.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn zero_where(&mut self, keep: impl Fn(ParamName) -> bool) {
        for (name, t) in ParamName::ALL.into_iter().zip(&mut self.tensors) {
            if !keep(name) {
                t.data.iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }
}
