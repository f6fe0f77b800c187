//! Statistic encoders standing in for pretrained vision backbones.
//!
//! Spatial: each frame is cut into a `grid x grid` patch grid and every patch
//! contributes the mean and population standard deviation of each channel.
//! Temporal: frame differences at two rates (consecutive frames and frames
//! two apart) contribute the mean absolute value and population standard
//! deviation of each channel. Descriptors depend only on pixels, so they are
//! computed once per video and reused across epochs.

use alloc::vec;
use alloc::vec::Vec;

use super::config::AssessorConfig;
use super::params::{AssessorParams, ParamName};
use super::AssessorError;
use crate::text::{fnv1a64, tokenize};
use crate::VideoTensor;

#[derive(Debug, Clone, PartialEq)]
pub struct VideoFeatures {
    /// One descriptor per frame, `grid * grid * 6` long, laid out
    /// `((row * grid + col) * 3 + channel) * 2 + {0: mean, 1: std}`.
    pub spatial: Vec<Vec<f64>>,
    /// Consecutive-frame differences: `[mean|D|, std D]` per channel.
    pub fast: Vec<[f64; 6]>,
    /// Differences `frame[2k + 2] - frame[2k]`.
    pub slow: Vec<[f64; 6]>,
}

fn check_shape(video: &VideoTensor, config: &AssessorConfig) -> Result<(), AssessorError> {
    if !video.is_well_formed() {
        return Err(AssessorError::ShapeMismatch {
            what: "video payload",
            expected: video.frames * video.frame_len(),
            found: video.data.len(),
        });
    }
    for (what, expected, found) in [
        ("frames", config.frames, video.frames),
        ("height", config.height, video.height),
        ("width", config.width, video.width),
    ] {
        if expected != found {
            return Err(AssessorError::ShapeMismatch { what, expected, found });
        }
    }
    if config.patch_grid == 0
        || !video.height.is_multiple_of(config.patch_grid)
        || !video.width.is_multiple_of(config.patch_grid)
    {
        return Err(AssessorError::ShapeMismatch {
            what: "patch grid",
            expected: config.patch_grid,
            found: video.height,
        });
    }
    Ok(())
}

pub fn spatial_descriptors(video: &VideoTensor, config: &AssessorConfig) -> Result<Vec<Vec<f64>>, AssessorError> {
    check_shape(video, config)?;
    let grid = config.patch_grid;
    let (ph, pw) = (video.height / grid, video.width / grid);
    let n = (ph * pw) as f64;
    let mut out = Vec::with_capacity(video.frames);
    for t in 0..video.frames {
        let mut desc = vec![0.0; grid * grid * 6];
        for gr in 0..grid {
            for gc in 0..grid {
                for c in 0..3 {
                    let samples = (0..ph).flat_map(|dy| (0..pw).map(move |dx| (gr * ph + dy, gc * pw + dx)));
                    let mean = samples.clone().map(|(y, x)| video.get(t, y, x, c)).sum::<f64>() / n;
                    let var = samples.map(|(y, x)| {
                        let d = video.get(t, y, x, c) - mean;
                        d * d
                    });
                    let std = libm::sqrt(var.sum::<f64>() / n);
                    let base = ((gr * grid + gc) * 3 + c) * 2;
                    desc[base] = mean;
                    desc[base + 1] = std;
                }
            }
        }
        out.push(desc);
    }
    Ok(out)
}

fn diff_stats(video: &VideoTensor, later: usize, earlier: usize) -> [f64; 6] {
    let (a, b) = (video.frame(later), video.frame(earlier));
    let n = (video.height * video.width) as f64;
    let mut out = [0.0; 6];
    for c in 0..3 {
        let diffs = a.iter().zip(b).skip(c).step_by(3).map(|(x, y)| x - y);
        let mean = diffs.clone().sum::<f64>() / n;
        let mean_abs = diffs.clone().map(f64::abs).sum::<f64>() / n;
        let var = diffs.map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
        out[c * 2] = mean_abs;
        out[c * 2 + 1] = libm::sqrt(var);
    }
    out
}

/// Mean absolute value and standard deviation per channel of one frame difference.
pub type DiffDescriptor = [f64; 6];

/// Returns (fast, slow) difference descriptors.
pub fn temporal_descriptors(
    video: &VideoTensor,
    config: &AssessorConfig,
) -> Result<(Vec<DiffDescriptor>, Vec<DiffDescriptor>), AssessorError> {
    check_shape(video, config)?;
    if video.frames < 3 {
        return Err(AssessorError::TooFewFrames(video.frames));
    }
    let fast = (0..video.frames - 1).map(|t| diff_stats(video, t + 1, t)).collect();
    let slow = (0..(video.frames - 1) / 2)
        .map(|k| diff_stats(video, 2 * k + 2, 2 * k))
        .collect();
    Ok((fast, slow))
}

impl VideoFeatures {
    pub fn extract(video: &VideoTensor, config: &AssessorConfig) -> Result<Self, AssessorError> {
        let spatial = spatial_descriptors(video, config)?;
        let (fast, slow) = temporal_descriptors(video, config)?;
        Ok(VideoFeatures { spatial, fast, slow })
    }
}

/// One token per frame: the frame descriptor times the spatial projection.
pub fn extract_spatial_tokens(
    params: &AssessorParams,
    config: &AssessorConfig,
    video: &VideoTensor,
) -> Result<Vec<Vec<f64>>, AssessorError> {
    let proj = params.get(ParamName::SpatialProj);
    Ok(spatial_descriptors(video, config)?
        .iter()
        .map(|d| proj.vec_mul(d))
        .collect())
}

/// (fast tokens, slow tokens): `T - 1` and `floor((T - 1) / 2)` of them.
#[allow(clippy::type_complexity)]
pub fn extract_temporal_tokens(
    params: &AssessorParams,
    config: &AssessorConfig,
    video: &VideoTensor,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), AssessorError> {
    let (fast, slow) = temporal_descriptors(video, config)?;
    let pf = params.get(ParamName::FastProj);
    let ps = params.get(ParamName::SlowProj);
    Ok((
        fast.iter().map(|d| pf.vec_mul(d)).collect(),
        slow.iter().map(|d| ps.vec_mul(d)).collect(),
    ))
}

/// Bag-of-buckets prompt code: the average one-hot bucket of its tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptCode {
    pub buckets: Vec<f64>,
}

impl PromptCode {
    /// Each token (taxonomy tokenization) lands in bucket
    /// `fnv1a64(token) mod buckets`. Empty text gives the zero code.
    pub fn from_text(text: &str, buckets: usize) -> Self {
        let mut code = vec![0.0; buckets];
        let tokens = tokenize(text);
        let mut counts = vec![0usize; buckets];
        for t in &tokens {
            counts[(fnv1a64(t.as_bytes()) % buckets as u64) as usize] += 1;
        }
        if !tokens.is_empty() {
            let n = tokens.len() as f64;
            for (c, k) in code.iter_mut().zip(counts) {
                *c = k as f64 / n;
            }
        }
        PromptCode { buckets: code }
    }

    /// Synthetic concepts bypass hashing: concept `k` is bucket `k`.
    pub fn from_concept(concept: usize, buckets: usize) -> Self {
        let mut code = vec![0.0; buckets];
        code[concept % buckets] = 1.0;
        PromptCode { buckets: code }
    }

    /// Synthetic concept prompts go straight to their bucket, any other
    /// text is hashed.
    pub fn from_prompt(text: &str, buckets: usize) -> Self {
        match crate::synthgen::parse_concept_prompt(text) {
            Some(k) => Self::from_concept(k, buckets),
            None => Self::from_text(text, buckets),
        }
    }
}

pub fn embed_prompt(params: &AssessorParams, code: &PromptCode) -> Vec<f64> {
    params.get(ParamName::PromptEmbed).vec_mul(&code.buckets)
}
