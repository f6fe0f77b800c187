//! Seeded 4:1 train/test splits and the ten-split evaluation protocol.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::metrics::MetricReport;
use crate::rng;
use crate::Dimension;

/// Seeds of the conventional ten-split protocol.
pub const PROTOCOL_SEEDS: [u64; 10] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    /// train : test, always 4:1.
    pub ratio: (u32, u32),
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("need at least 5 items to split, got {0}")]
pub struct TooFewItems(pub usize);

/// Shuffles `ids` with the seeded PRNG and keeps the first `round(0.8 n)`
/// for training.
pub fn split_dataset(ids: &[String], seed: u64) -> Result<SplitSpec, TooFewItems> {
    if ids.len() < 5 {
        return Err(TooFewItems(ids.len()));
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut rng::seeded(seed));
    let n_train = (ids.len() * 4 + 2) / 5;
    let test_ids = shuffled.split_off(n_train);
    Ok(SplitSpec {
        seed,
        ratio: (4, 1),
        train_ids: shuffled,
        test_ids,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (population when n = 1).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let std = if values.len() > 1 {
            libm::sqrt(ss / (n - 1.0))
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub srcc: MeanStd,
    pub plcc: MeanStd,
    pub krcc: MeanStd,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_acc: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSummary {
    pub splits: Vec<SplitSpec>,
    pub reports: Vec<MetricReport>,
    pub summary: BTreeMap<Dimension, MetricSummary>,
}

/// Runs `evaluate` on each of the ten protocol splits and summarizes every
/// metric per dimension as mean and standard deviation.
pub fn ten_split_protocol<E>(
    ids: &[String],
    mut evaluate: impl FnMut(&SplitSpec) -> Result<MetricReport, E>,
) -> Result<ProtocolSummary, E>
where
    E: From<TooFewItems>,
{
    let mut splits = Vec::with_capacity(PROTOCOL_SEEDS.len());
    let mut reports = Vec::with_capacity(PROTOCOL_SEEDS.len());
    for seed in PROTOCOL_SEEDS {
        let split = split_dataset(ids, seed)?;
        reports.push(evaluate(&split)?);
        splits.push(split);
    }
    Ok(ProtocolSummary {
        summary: summarize(&reports),
        splits,
        reports,
    })
}

pub fn summarize(reports: &[MetricReport]) -> BTreeMap<Dimension, MetricSummary> {
    let mut out = BTreeMap::new();
    for dim in Dimension::ALL {
        let rows: Vec<_> = reports.iter().filter_map(|r| r.dimensions.get(&dim)).collect();
        if rows.is_empty() {
            continue;
        }
        let col = |f: &dyn Fn(&crate::metrics::DimensionMetrics) -> f64| {
            MeanStd::of(&rows.iter().map(|m| f(m)).collect::<Vec<_>>())
        };
        let pair: Vec<f64> = rows.iter().filter_map(|m| m.pair_acc).collect();
        out.insert(
            dim,
            MetricSummary {
                srcc: col(&|m| m.srcc),
                plcc: col(&|m| m.plcc),
                krcc: col(&|m| m.krcc),
                pair_acc: (pair.len() == rows.len()).then(|| MeanStd::of(&pair)),
            },
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;
    use alloc::format;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("id{i:03}")).collect()
    }

    #[test]
    fn ten_items() {
        let s = split_dataset(&ids(10), 3).unwrap();
        assert_eq!((s.train_ids.len(), s.test_ids.len()), (8, 2));
        assert_eq!(s, split_dataset(&ids(10), 3).unwrap());
        assert_eq!(split_dataset(&ids(4), 0), Err(TooFewItems(4)));
    }

    #[test]
    fn protocol_seeds_give_distinct_test_sets() {
        let sets: Vec<BTreeSet<String>> = PROTOCOL_SEEDS
            .iter()
            .map(|&s| split_dataset(&ids(100), s).unwrap().test_ids.into_iter().collect())
            .collect();
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                assert_ne!(sets[i], sets[j]);
            }
        }
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn partition_and_cardinality(n in 5usize..200, seed in any::<u64>()) {
            let all = ids(n);
            let s = split_dataset(&all, seed).unwrap();
            prop_assert_eq!(s.train_ids.len(), libm::round(0.8 * n as f64) as usize);
            let train: BTreeSet<_> = s.train_ids.iter().collect();
            let test: BTreeSet<_> = s.test_ids.iter().collect();
            prop_assert!(train.is_disjoint(&test));
            prop_assert_eq!(train.len() + test.len(), n);
        }
    }
}
