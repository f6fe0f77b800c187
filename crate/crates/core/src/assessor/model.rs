use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::AssessorConfig;
use super::encoders::{embed_prompt, PromptCode, VideoFeatures};
use super::loss::sigmoid;
use super::params::{AssessorParams, Gradients, ParamName};
use super::{AssessorError, NUM_LEVELS};
use crate::{QualityLevel, VideoTensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessorOutput {
    /// Rows follow [`crate::Dimension::ALL`], columns [`QualityLevel::ALL`].
    pub level_logits: [[f64; NUM_LEVELS]; 4],
    pub scores: [f64; 4],
    pub hidden: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub scores: [f64; 4],
    pub levels: [QualityLevel; 4],
    pub hidden: Vec<f64>,
}

/// Intermediate values of one backbone pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct Trace {
    pub x: Vec<f64>,
    pub pre: Vec<f64>,
    pub hidden: Vec<f64>,
    /// Frame holding the maximum of each pooled token component.
    pub pool_arg: Vec<usize>,
    pub mean_spatial: Vec<f64>,
    pub mean_fast: [f64; 6],
    pub mean_slow: [f64; 6],
}

const SQRT_2: f64 = core::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
pub(crate) fn gelu(a: f64) -> f64 {
    0.5 * a * (1.0 + libm::erf(a / SQRT_2))
}

#[inline]
pub(crate) fn gelu_grad(a: f64) -> f64 {
    0.5 * (1.0 + libm::erf(a / SQRT_2)) + a * INV_SQRT_2PI * libm::exp(-0.5 * a * a)
}

fn mean_rows<const N: usize>(rows: &[[f64; N]]) -> [f64; N] {
    let mut out = [0.0; N];
    for r in rows {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v;
        }
    }
    if !rows.is_empty() {
        out.iter_mut().for_each(|v| *v /= rows.len() as f64);
    }
    out
}

fn expect_len(what: &'static str, expected: usize, found: usize) -> Result<(), AssessorError> {
    if expected == found {
        Ok(())
    } else {
        Err(AssessorError::ShapeMismatch { what, expected, found })
    }
}

pub(crate) fn backbone(
    params: &AssessorParams,
    config: &AssessorConfig,
    feats: &VideoFeatures,
    prompt_vec: &[f64],
) -> Result<Trace, AssessorError> {
    let d = config.d_token;
    expect_len("prompt vector", d, prompt_vec.len())?;
    if feats.spatial.is_empty() {
        return Err(AssessorError::ShapeMismatch {
            what: "frames",
            expected: config.frames,
            found: 0,
        });
    }
    let desc_len = config.spatial_descriptor_len();
    for s in &feats.spatial {
        expect_len("spatial descriptor", desc_len, s.len())?;
    }
    let ps = params.get(ParamName::SpatialProj);
    let n = feats.spatial.len() as f64;

    let mut u_s = vec![0.0; d];
    let mut u_pool = vec![f64::NEG_INFINITY; d];
    let mut pool_arg = vec![0usize; d];
    let mut mean_spatial = vec![0.0; desc_len];
    for (t, desc) in feats.spatial.iter().enumerate() {
        let token = ps.vec_mul(desc);
        for j in 0..d {
            u_s[j] += token[j];
            if token[j] > u_pool[j] {
                u_pool[j] = token[j];
                pool_arg[j] = t;
            }
        }
        for (m, v) in mean_spatial.iter_mut().zip(desc) {
            *m += v;
        }
    }
    u_s.iter_mut().for_each(|v| *v /= n);
    mean_spatial.iter_mut().for_each(|v| *v /= n);

    let mean_fast = mean_rows(&feats.fast);
    let mean_slow = mean_rows(&feats.slow);
    let u_t = if config.use_temporal {
        let f = params.get(ParamName::FastProj).vec_mul(&mean_fast);
        let s = params.get(ParamName::SlowProj).vec_mul(&mean_slow);
        f.iter().zip(&s).map(|(a, b)| (a + b) / 2.0).collect()
    } else {
        vec![0.0; d]
    };

    let mut x = Vec::with_capacity(4 * d);
    x.extend_from_slice(&u_s);
    x.extend_from_slice(&u_t);
    x.extend_from_slice(prompt_vec);
    x.extend_from_slice(&u_pool);

    let mut pre = params.get(ParamName::FusionB).data.clone();
    params.get(ParamName::FusionW).vec_mul_acc(&x, &mut pre);
    let hidden = pre.iter().map(|&a| gelu(a)).collect();
    Ok(Trace {
        x,
        pre,
        hidden,
        pool_arg,
        mean_spatial,
        mean_fast,
        mean_slow,
    })
}

pub(crate) fn heads(params: &AssessorParams, hidden: &[f64]) -> ([[f64; NUM_LEVELS]; 4], [f64; 4]) {
    let mut flat = params.get(ParamName::LevelB).data.clone();
    params.get(ParamName::LevelW).vec_mul_acc(hidden, &mut flat);
    let mut logits = [[0.0; NUM_LEVELS]; 4];
    for (k, row) in logits.iter_mut().enumerate() {
        row.copy_from_slice(&flat[k * NUM_LEVELS..(k + 1) * NUM_LEVELS]);
    }
    let mut scores = [0.0; 4];
    scores.copy_from_slice(&params.get(ParamName::RegressB).data);
    params.get(ParamName::RegressW).vec_mul_acc(hidden, &mut scores);
    (logits, scores)
}

/// Accumulates head gradients and returns the gradient reaching `hidden`.
pub(crate) fn backward_heads(
    params: &AssessorParams,
    hidden: &[f64],
    dlogits: Option<&[[f64; NUM_LEVELS]; 4]>,
    dscores: Option<&[f64; 4]>,
    grads: &mut Gradients,
) -> Vec<f64> {
    let mut dh = vec![0.0; hidden.len()];
    if let Some(dl) = dlogits {
        let flat: Vec<f64> = dl.iter().flatten().copied().collect();
        grads.get_mut(ParamName::LevelW).add_outer(hidden, &flat, 1.0);
        add_into(&mut grads.get_mut(ParamName::LevelB).data, &flat);
        add_into(&mut dh, &params.get(ParamName::LevelW).mul_vec(&flat));
    }
    if let Some(ds) = dscores {
        grads.get_mut(ParamName::RegressW).add_outer(hidden, ds, 1.0);
        add_into(&mut grads.get_mut(ParamName::RegressB).data, ds);
        add_into(&mut dh, &params.get(ParamName::RegressW).mul_vec(ds));
    }
    dh
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

/// Backpropagates `dh` through fusion, projections and prompt embedding.
pub(crate) fn backward_backbone(
    params: &AssessorParams,
    config: &AssessorConfig,
    feats: &VideoFeatures,
    code: &PromptCode,
    trace: &Trace,
    dh: &[f64],
    grads: &mut Gradients,
) {
    let d = config.d_token;
    let da: Vec<f64> = dh.iter().zip(&trace.pre).map(|(g, &a)| g * gelu_grad(a)).collect();
    grads.get_mut(ParamName::FusionW).add_outer(&trace.x, &da, 1.0);
    add_into(&mut grads.get_mut(ParamName::FusionB).data, &da);
    let dx = params.get(ParamName::FusionW).mul_vec(&da);
    let (du_s, rest) = dx.split_at(d);
    let (du_t, rest) = rest.split_at(d);
    let (dprompt, dpool) = rest.split_at(d);

    grads
        .get_mut(ParamName::SpatialProj)
        .add_outer(&trace.mean_spatial, du_s, 1.0);
    let gs = grads.get_mut(ParamName::SpatialProj);
    for (j, &g) in dpool.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        for (r, v) in feats.spatial[trace.pool_arg[j]].iter().enumerate() {
            gs.data[r * d + j] += v * g;
        }
    }
    if config.use_temporal {
        grads
            .get_mut(ParamName::FastProj)
            .add_outer(&trace.mean_fast, du_t, 0.5);
        grads
            .get_mut(ParamName::SlowProj)
            .add_outer(&trace.mean_slow, du_t, 0.5);
    }
    grads
        .get_mut(ParamName::PromptEmbed)
        .add_outer(&code.buckets, dprompt, 1.0);
}

/// Runs the model on a decoded video and an embedded prompt.
pub fn forward(
    params: &AssessorParams,
    config: &AssessorConfig,
    video: &VideoTensor,
    prompt_vec: &[f64],
) -> Result<AssessorOutput, AssessorError> {
    let feats = VideoFeatures::extract(video, config)?;
    forward_features(params, config, &feats, prompt_vec)
}

/// [`forward`] on precomputed descriptors.
pub fn forward_features(
    params: &AssessorParams,
    config: &AssessorConfig,
    feats: &VideoFeatures,
    prompt_vec: &[f64],
) -> Result<AssessorOutput, AssessorError> {
    let trace = backbone(params, config, feats, prompt_vec)?;
    let (level_logits, scores) = heads(params, &trace.hidden);
    Ok(AssessorOutput {
        level_logits,
        scores,
        hidden: trace.hidden,
    })
}

pub(crate) struct JudgeTrace {
    pub delta: Vec<f64>,
    pub act: Vec<f64>,
    pub logits: [f64; 4],
}

pub(crate) fn judge_trace(params: &AssessorParams, a: &[f64], b: &[f64]) -> JudgeTrace {
    let delta: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let act: Vec<f64> = params
        .get(ParamName::JudgeU1)
        .vec_mul(&delta)
        .into_iter()
        .map(libm::tanh)
        .collect();
    let mut logits = [0.0; 4];
    params.get(ParamName::JudgeU2).vec_mul_acc(&act, &mut logits);
    JudgeTrace { delta, act, logits }
}

pub(crate) fn backward_judge(params: &AssessorParams, trace: &JudgeTrace, dlogits: &[f64; 4], grads: &mut Gradients) {
    grads.get_mut(ParamName::JudgeU2).add_outer(&trace.act, dlogits, 1.0);
    let dact = params.get(ParamName::JudgeU2).mul_vec(dlogits);
    let dz: Vec<f64> = dact.iter().zip(&trace.act).map(|(g, a)| g * (1.0 - a * a)).collect();
    grads.get_mut(ParamName::JudgeU1).add_outer(&trace.delta, &dz, 1.0);
}

/// Probability, per dimension, that the first video is the better one.
pub fn judge_pair(params: &AssessorParams, hidden_a: &[f64], hidden_b: &[f64]) -> Result<[f64; 4], AssessorError> {
    let d = params.get(ParamName::JudgeU1).rows;
    expect_len("first hidden state", d, hidden_a.len())?;
    expect_len("second hidden state", d, hidden_b.len())?;
    Ok(judge_trace(params, hidden_a, hidden_b).logits.map(sigmoid))
}

/// Scores, argmax levels and hidden state for one video.
pub fn predict(
    params: &AssessorParams,
    config: &AssessorConfig,
    video: &VideoTensor,
    prompt: &PromptCode,
) -> Result<Prediction, AssessorError> {
    expect_len("prompt code", config.prompt_buckets, prompt.buckets.len())?;
    let out = forward(params, config, video, &embed_prompt(params, prompt))?;
    Ok(prediction_of(out))
}

pub(crate) fn prediction_of(out: AssessorOutput) -> Prediction {
    let levels = out.level_logits.map(|row| {
        let mut best = 0;
        for (i, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = i;
            }
        }
        QualityLevel::ALL[best]
    });
    Prediction {
        scores: out.scores,
        levels,
        hidden: out.hidden,
    }
}
