//! Train/test evaluation of the assessor on a loaded dataset, and the
//! ten-split protocol around it.

use std::collections::BTreeMap;

use aigvqa_core::assessor::{
    embed_prompt, forward_features, judge_pair, preference_pairs, train, AssessorConfig, AssessorParams, PairSample,
    Stage, VideoSample,
};
use aigvqa_core::metrics::{krcc, plcc, srcc, DimensionMetrics, KendallMode, MetricReport, ScoreVector};
use aigvqa_core::split::{ten_split_protocol, ProtocolSummary, SplitSpec};
use aigvqa_core::Dimension;

use crate::error::{Error, Result};

/// Preference pairs drawn among the test videos of every split.
pub const TEST_PAIRS: usize = 500;

/// Stages the configuration asks for, in training order.
pub fn enabled_stages(config: &AssessorConfig) -> Vec<Stage> {
    Stage::ALL
        .into_iter()
        .filter(|&s| s != Stage::Align || config.use_level_stage)
        .collect()
}

/// Scores and hidden states of every sample.
pub fn infer(
    params: &AssessorParams,
    config: &AssessorConfig,
    samples: &[VideoSample],
) -> Result<Vec<([f64; 4], Vec<f64>)>> {
    samples
        .iter()
        .map(|s| {
            let out = forward_features(params, config, &s.features, &embed_prompt(params, &s.prompt))?;
            Ok((out.scores, out.hidden))
        })
        .collect()
}

/// Per-dimension share of labelled pairs the judge gets right; a judge
/// output of exactly one half earns half credit. `None` when a dimension
/// has no labelled pair.
pub fn judge_accuracy(params: &AssessorParams, hidden: &[Vec<f64>], pairs: &[PairSample]) -> Result<[Option<f64>; 4]> {
    let mut credit = [0.0; 4];
    let mut count = [0usize; 4];
    for p in pairs {
        let a = hidden
            .get(p.first)
            .ok_or_else(|| Error::Data(format!("pair index {} out of range", p.first)))?;
        let b = hidden
            .get(p.second)
            .ok_or_else(|| Error::Data(format!("pair index {} out of range", p.second)))?;
        let prob = judge_pair(params, a, b)?;
        for k in 0..4 {
            if let Some(first_better) = p.labels[k] {
                count[k] += 1;
                credit[k] += if prob[k] == 0.5 {
                    0.5
                } else if (prob[k] > 0.5) == first_better {
                    1.0
                } else {
                    0.0
                };
            }
        }
    }
    Ok(std::array::from_fn(|k| {
        (count[k] > 0).then(|| credit[k] / count[k] as f64)
    }))
}

/// Correlations of predicted against ground-truth scores plus judge pair
/// accuracy on `pair_count` seeded test pairs.
pub fn test_report(
    params: &AssessorParams,
    config: &AssessorConfig,
    test: &[VideoSample],
    pair_count: usize,
    pair_seed: u64,
) -> Result<MetricReport> {
    let outputs = infer(params, config, test)?;
    let gt: Vec<[f64; 4]> = test.iter().map(|s| s.gt_scores).collect();
    let hidden: Vec<Vec<f64>> = outputs.iter().map(|(_, h)| h.clone()).collect();
    let pairs = preference_pairs(&gt, pair_count, config.pair_dead_zone, pair_seed);
    let acc = judge_accuracy(params, &hidden, &pairs)?;
    let mut report = MetricReport::default();
    for d in Dimension::ALL {
        let k = d.index();
        let g = ScoreVector::from_values(&gt.iter().map(|s| s[k]).collect::<Vec<_>>());
        let p = ScoreVector::from_values(&outputs.iter().map(|(s, _)| s[k]).collect::<Vec<_>>());
        report.dimensions.insert(
            d,
            DimensionMetrics {
                srcc: srcc(&g, &p)?,
                plcc: plcc(&g, &p)?,
                krcc: krcc(&g, &p, KendallMode::default())?,
                pair_acc: acc[k],
            },
        );
    }
    Ok(report)
}

fn select(index: &BTreeMap<&str, usize>, samples: &[VideoSample], ids: &[String]) -> Result<Vec<VideoSample>> {
    ids.iter()
        .map(|id| {
            index
                .get(id.as_str())
                .map(|&i| samples[i].clone())
                .ok_or_else(|| Error::Data(format!("unknown video {id}")))
        })
        .collect()
}

/// Trains on the split's training ids and reports on its test ids.
pub fn evaluate_split(
    config: &AssessorConfig,
    ids: &[String],
    samples: &[VideoSample],
    split: &SplitSpec,
) -> Result<MetricReport> {
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let train_set = select(&index, samples, &split.train_ids)?;
    let test_set = select(&index, samples, &split.test_ids)?;
    let outcome = train(config, &train_set, &enabled_stages(config))?;
    test_report(&outcome.params, config, &test_set, TEST_PAIRS, split.seed)
}

/// Ten seeded 4:1 splits; every metric summarized as mean and standard
/// deviation per dimension. `ids[i]` names `samples[i]`.
pub fn run_protocol(config: &AssessorConfig, ids: &[String], samples: &[VideoSample]) -> Result<ProtocolSummary> {
    if ids.len() != samples.len() {
        return Err(Error::Data(format!("{} ids for {} samples", ids.len(), samples.len())));
    }
    ten_split_protocol(ids, |split| evaluate_split(config, ids, samples, split))
}

#[cfg(test)]
mod tests {
    use super::*;
    use aigvqa_core::assessor::{AssessorParams, PromptCode};
    use aigvqa_core::synthgen::{draw_specs, gen_clip, SynthConfig};

    #[test]
    fn stages_follow_flags() {
        let c = AssessorConfig::default();
        assert_eq!(enabled_stages(&c), Stage::ALL);
        let c = AssessorConfig {
            use_level_stage: false,
            ..c
        };
        assert_eq!(enabled_stages(&c), [Stage::Regress, Stage::Compare]);
    }

    #[test]
    fn zero_judge_earns_half_credit() {
        let c = AssessorConfig::default();
        let p = AssessorParams::zeros(&c);
        let h = vec![vec![0.1; c.d_hidden], vec![0.2; c.d_hidden]];
        let pairs = [PairSample {
            first: 0,
            second: 1,
            labels: [Some(true), Some(false), None, Some(true)],
        }];
        assert_eq!(
            judge_accuracy(&p, &h, &pairs).unwrap(),
            [Some(0.5), Some(0.5), None, Some(0.5)]
        );
    }

    #[test]
    fn accuracy_against_hand_count() {
        let c = AssessorConfig::default();
        let mut p = AssessorParams::init(&c);
        p.get_mut(aigvqa_core::assessor::ParamName::JudgeU2)
            .data
            .iter_mut()
            .for_each(|v| *v = v.abs() + 0.1);
        let h: Vec<Vec<f64>> = (0..3).map(|i| vec![0.05 * i as f64; c.d_hidden]).collect();
        let pairs = [
            PairSample {
                first: 0,
                second: 1,
                labels: [Some(true); 4],
            },
            PairSample {
                first: 1,
                second: 0,
                labels: [Some(true); 4],
            },
            PairSample {
                first: 2,
                second: 0,
                labels: [Some(false), None, None, None],
            },
        ];
        let mut expected = [0.0; 4];
        let mut n = [0.0; 4];
        for q in &pairs {
            let prob = judge_pair(&p, &h[q.first], &h[q.second]).unwrap();
            for k in 0..4 {
                if let Some(y) = q.labels[k] {
                    n[k] += 1.0;
                    if (prob[k] > 0.5) == y {
                        expected[k] += 1.0;
                    }
                }
            }
        }
        let got = judge_accuracy(&p, &h, &pairs).unwrap();
        for k in 0..4 {
            assert_eq!(got[k], Some(expected[k] / n[k]));
        }
    }

    #[test]
    fn protocol_runs_ten_splits() {
        let config = AssessorConfig {
            frames: 4,
            height: 16,
            width: 16,
            patch_grid: 2,
            d_token: 4,
            d_hidden: 6,
            prompt_buckets: 64,
            epochs: [1, 2, 1],
            stage3_pairs: 20,
            ..AssessorConfig::default()
        };
        let synth = SynthConfig {
            frames: 4,
            height: 16,
            width: 16,
            fps: 8.0,
        };
        let specs = draw_specs(20, 2);
        let samples: Vec<VideoSample> = specs
            .iter()
            .map(|s| {
                let (v, gt) = gen_clip(s, &synth).unwrap();
                VideoSample::new(
                    &v,
                    PromptCode::from_concept(s.prompt_concept(), 64),
                    gt.to_array(),
                    &config,
                )
                .unwrap()
            })
            .collect();
        let ids: Vec<String> = (0..20).map(|i| format!("c{i}")).collect();
        let a = run_protocol(&config, &ids, &samples).unwrap();
        assert_eq!(a.splits.len(), 10);
        assert_eq!(a.reports.len(), 10);
        assert!(a
            .splits
            .iter()
            .all(|s| s.train_ids.len() == 16 && s.test_ids.len() == 4));
        assert_eq!(a.summary.len(), 4);
        assert_eq!(run_protocol(&config, &ids, &samples).unwrap(), a);
    }
}
