use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{AssessorConfig, Stage};
use super::encoders::{embed_prompt, PromptCode, VideoFeatures};
use super::loss::{bce_with_logit, cross_entropy, loss_mos, sigmoid, softmax};
use super::model::{backbone, backward_backbone, backward_heads, backward_judge, heads, judge_trace};
use super::params::{AssessorParams, Gradients};
use super::{AssessorError, NUM_LEVELS};
use crate::{mos_to_level, rng, QualityLevel, VideoTensor};

/// A training video: cached descriptors, prompt code and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSample {
    pub features: VideoFeatures,
    pub prompt: PromptCode,
    pub gt_scores: [f64; 4],
}

impl VideoSample {
    pub fn new(
        video: &VideoTensor,
        prompt: PromptCode,
        gt_scores: [f64; 4],
        config: &AssessorConfig,
    ) -> Result<Self, AssessorError> {
        if prompt.buckets.len() != config.prompt_buckets {
            return Err(AssessorError::ShapeMismatch {
                what: "prompt code",
                expected: config.prompt_buckets,
                found: prompt.buckets.len(),
            });
        }
        for s in gt_scores {
            mos_to_level(s).map_err(|e| AssessorError::ScoreOutOfRange(e.0))?;
        }
        Ok(VideoSample {
            features: VideoFeatures::extract(video, config)?,
            prompt,
            gt_scores,
        })
    }

    pub fn gt_levels(&self) -> Result<[QualityLevel; 4], AssessorError> {
        let mut out = [QualityLevel::Bad; 4];
        for (o, &s) in out.iter_mut().zip(&self.gt_scores) {
            *o = mos_to_level(s).map_err(|e| AssessorError::ScoreOutOfRange(e.0))?;
        }
        Ok(out)
    }
}

/// Indices refer to the videos of the enclosing batch or dataset; a label
/// is `Some(true)` when `first` is better and `None` inside the dead zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSample {
    pub first: usize,
    pub second: usize,
    pub labels: [Option<bool>; 4],
}

#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub videos: &'a [VideoSample],
    pub pairs: &'a [PairSample],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub stage: Stage,
    pub epoch: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: AssessorParams,
    pub log: Vec<EpochLog>,
}

fn pair_label(a: f64, b: f64, dead_zone: f64) -> Option<bool> {
    let diff = a - b;
    (libm::fabs(diff) >= dead_zone).then_some(diff > 0.0)
}

/// Draws `count` ordered pairs of distinct videos. Pairs whose every
/// dimension falls in the dead zone are redrawn.
pub fn preference_pairs(gt: &[[f64; 4]], count: usize, dead_zone: f64, seed: u64) -> Vec<PairSample> {
    let mut out = Vec::with_capacity(count);
    if gt.len() < 2 {
        return out;
    }
    let mut rng = rng::substream(seed, 20);
    let mut attempts = 0usize;
    while out.len() < count && attempts < count.saturating_mul(20) {
        attempts += 1;
        let first = rng.random_range(0..gt.len());
        let mut second = rng.random_range(0..gt.len() - 1);
        if second >= first {
            second += 1;
        }
        let mut labels = [None; 4];
        for (k, l) in labels.iter_mut().enumerate() {
            *l = pair_label(gt[first][k], gt[second][k], dead_zone);
        }
        if labels.iter().any(Option::is_some) {
            out.push(PairSample { first, second, labels });
        }
    }
    out
}

fn check_stage(config: &AssessorConfig, stage: Stage) -> Result<(), AssessorError> {
    if stage == Stage::Align && !config.use_level_stage {
        return Err(AssessorError::StageDisabled(stage));
    }
    Ok(())
}

fn level_grad(
    logits: &[[f64; NUM_LEVELS]; 4],
    levels: &[QualityLevel; 4],
    scale: f64,
) -> (f64, [[f64; NUM_LEVELS]; 4]) {
    let mut loss = 0.0;
    let mut g = [[0.0; NUM_LEVELS]; 4];
    for k in 0..4 {
        let label = levels[k].index();
        loss += cross_entropy(&logits[k], label) / 4.0;
        let p = softmax(&logits[k]);
        for c in 0..NUM_LEVELS {
            let y = if c == label { 1.0 } else { 0.0 };
            g[k][c] = (p[c] - y) * scale / 4.0;
        }
    }
    (loss, g)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn judge_step(
    params: &AssessorParams,
    ha: &[f64],
    hb: &[f64],
    labels: &[Option<bool>; 4],
    scale: f64,
    grads: &mut Gradients,
) -> f64 {
    let trace = judge_trace(params, ha, hb);
    let mut loss = 0.0;
    let mut dl = [0.0; 4];
    for k in 0..4 {
        if let Some(y) = labels[k] {
            loss += bce_with_logit(trace.logits[k], y);
            dl[k] = (sigmoid(trace.logits[k]) - if y { 1.0 } else { 0.0 }) * scale;
        }
    }
    backward_judge(params, &trace, &dl, grads);
    loss
}

/// Loss of `stage` on `batch` and its exact gradient. Parameters the stage
/// does not train get a zero gradient.
pub fn gradients(
    params: &AssessorParams,
    config: &AssessorConfig,
    batch: Batch<'_>,
    stage: Stage,
) -> Result<(f64, Gradients), AssessorError> {
    check_stage(config, stage)?;
    let mut grads = Gradients::zeros(config);
    let mut loss = 0.0;
    match stage {
        Stage::Align | Stage::Regress => {
            if batch.videos.is_empty() {
                return Ok((0.0, grads));
            }
            let scale = 1.0 / batch.videos.len() as f64;
            for v in batch.videos {
                let l = video_step(params, config, v, stage, scale, &mut grads)?;
                loss += l * scale;
            }
        }
        Stage::Compare => {
            let labelled: usize = batch.pairs.iter().map(|p| p.labels.iter().flatten().count()).sum();
            if labelled == 0 {
                return Ok((0.0, grads));
            }
            let scale = 1.0 / labelled as f64;
            let mut hidden = Vec::with_capacity(batch.videos.len());
            for v in batch.videos {
                let prompt = embed_prompt(params, &v.prompt);
                hidden.push(backbone(params, config, &v.features, &prompt)?.hidden);
            }
            for p in batch.pairs {
                let ha = hidden.get(p.first).ok_or(AssessorError::PairIndex(p.first))?;
                let hb = hidden.get(p.second).ok_or(AssessorError::PairIndex(p.second))?;
                loss += judge_step(params, ha, hb, &p.labels, scale, &mut grads) * scale;
            }
        }
    }
    grads.zero_where(|n| n.trained_in(stage, config));
    Ok((loss, grads))
}

/// Forward and backward for one video in stage 1 or 2; returns the
/// per-video loss.
fn video_step(
    params: &AssessorParams,
    config: &AssessorConfig,
    v: &VideoSample,
    stage: Stage,
    scale: f64,
    grads: &mut Gradients,
) -> Result<f64, AssessorError> {
    let prompt = embed_prompt(params, &v.prompt);
    let trace = backbone(params, config, &v.features, &prompt)?;
    let (logits, scores) = heads(params, &trace.hidden);
    let (loss, dh, through_backbone) = match stage {
        Stage::Align => {
            let (l, g) = level_grad(&logits, &v.gt_levels()?, scale);
            (l, backward_heads(params, &trace.hidden, Some(&g), None, grads), true)
        }
        _ => {
            let l = loss_mos(&scores, &v.gt_scores);
            let mut ds = [0.0; 4];
            for k in 0..4 {
                ds[k] = sign(scores[k] - v.gt_scores[k]) * scale / 4.0;
            }
            (
                l,
                backward_heads(params, &trace.hidden, None, Some(&ds), grads),
                config.finetune_encoders_stage2,
            )
        }
    };
    if through_backbone {
        backward_backbone(params, config, &v.features, &v.prompt, &trace, &dh, grads);
    }
    Ok(loss)
}

struct Momentum {
    velocity: Gradients,
}

impl Momentum {
    fn step(&mut self, params: &mut AssessorParams, grads: &Gradients, stage: Stage, config: &AssessorConfig) {
        let lr = config.learning_rates[stage.index()];
        let mu = config.momentum;
        for (name, g) in grads.iter() {
            if !name.trained_in(stage, config) {
                continue;
            }
            let v = self.velocity.get_mut(name);
            let p = params.get_mut(name);
            for ((pv, vv), gv) in p.data.iter_mut().zip(v.data.iter_mut()).zip(&g.data) {
                *vv = mu * *vv + gv;
                *pv -= lr * *vv;
            }
        }
        params.round_to_f32();
    }
}

/// Trains the requested stages in order 1, 2, 3, starting from the seeded
/// initialization. Stage 3 draws `stage3_pairs` preference pairs among the
/// dataset videos.
pub fn train(
    config: &AssessorConfig,
    dataset: &[VideoSample],
    stages: &[Stage],
) -> Result<TrainOutcome, AssessorError> {
    if dataset.is_empty() {
        return Err(AssessorError::EmptyDataset);
    }
    let mut order: Vec<Stage> = stages.to_vec();
    order.sort();
    order.dedup();
    for &s in &order {
        check_stage(config, s)?;
    }
    let mut params = AssessorParams::init(config);
    let mut log = Vec::new();
    let batch = config.batch_size.max(1);
    for stage in order {
        let mut opt = Momentum {
            velocity: Gradients::zeros(config),
        };
        let mut rng = rng::substream(config.seed, 10 + u64::from(stage.number()));
        match stage {
            Stage::Align | Stage::Regress => {
                let mut idx: Vec<usize> = (0..dataset.len()).collect();
                for epoch in 0..config.epochs[stage.index()] {
                    idx.shuffle(&mut rng);
                    let mut total = 0.0;
                    for chunk in idx.chunks(batch) {
                        let mut grads = Gradients::zeros(config);
                        let scale = 1.0 / chunk.len() as f64;
                        for &i in chunk {
                            let l = video_step(&params, config, &dataset[i], stage, scale, &mut grads)?;
                            total += l;
                        }
                        opt.step(&mut params, &grads, stage, config);
                    }
                    log.push(EpochLog {
                        stage,
                        epoch,
                        loss: total / dataset.len() as f64,
                    });
                }
            }
            Stage::Compare => {
                let gt: Vec<[f64; 4]> = dataset.iter().map(|v| v.gt_scores).collect();
                let pairs = preference_pairs(&gt, config.stage3_pairs, config.pair_dead_zone, config.seed);
                if pairs.is_empty() {
                    return Err(AssessorError::EmptyDataset);
                }
                let mut hidden = Vec::with_capacity(dataset.len());
                for v in dataset {
                    let prompt = embed_prompt(&params, &v.prompt);
                    hidden.push(backbone(&params, config, &v.features, &prompt)?.hidden);
                }
                let mut idx: Vec<usize> = (0..pairs.len()).collect();
                for epoch in 0..config.epochs[stage.index()] {
                    idx.shuffle(&mut rng);
                    let mut total = 0.0;
                    let mut count = 0usize;
                    for chunk in idx.chunks(batch) {
                        let labelled: usize = chunk.iter().map(|&i| pairs[i].labels.iter().flatten().count()).sum();
                        let scale = 1.0 / labelled as f64;
                        let mut grads = Gradients::zeros(config);
                        for &i in chunk {
                            let p = &pairs[i];
                            total += judge_step(
                                &params,
                                &hidden[p.first],
                                &hidden[p.second],
                                &p.labels,
                                scale,
                                &mut grads,
                            );
                        }
                        count += labelled;
                        opt.step(&mut params, &grads, stage, config);
                    }
                    log.push(EpochLog {
                        stage,
                        epoch,
                        loss: total / count as f64,
                    });
                }
            }
        }
    }
    Ok(TrainOutcome { params, log })
}
