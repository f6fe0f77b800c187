//! SRCC, PLCC and KRCC between ground-truth and predicted score vectors.
//!
//! Ties are handled with fractional (average) ranks for SRCC and with
//! tie-exclusion (tau-a) for KRCC; tau-b is available as an opt-in.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::Dimension;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreVector {
    pub ids: Vec<String>,
    pub values: Vec<f64>,
}

impl ScoreVector {
    pub fn new(entries: impl IntoIterator<Item = (String, f64)>) -> Self {
        let (ids, values) = entries.into_iter().unzip();
        ScoreVector { ids, values }
    }

    /// Unnamed vector; ids are the positions.
    pub fn from_values(values: &[f64]) -> Self {
        ScoreVector {
            ids: (0..values.len()).map(|i| alloc::format!("{i}")).collect(),
            values: values.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("correlation needs at least two items, got {0}")]
    TooShort(usize),
    #[error("vectors are not aligned")]
    Misaligned,
    #[error("an input vector is constant; correlation is undefined")]
    DegenerateConstantInput,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("no ground truth for dimension {0}")]
    MissingDimension(Dimension),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KendallMode {
    /// `(C - D) / (N (N - 1) / 2)`; tied pairs count toward neither C nor D.
    #[default]
    TauA,
    /// `(C - D) / sqrt((n0 - n1)(n0 - n2))` with tie-adjusted denominators.
    TauB,
}

fn check(gt: &ScoreVector, pred: &ScoreVector) -> Result<(), MetricError> {
    if gt.len() != pred.len() || gt.ids != pred.ids {
        return Err(MetricError::Misaligned);
    }
    if gt.len() < 2 {
        return Err(MetricError::TooShort(gt.len()));
    }
    if gt.values.iter().chain(&pred.values).any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(&gt.values) || constant(&pred.values) {
        return Err(MetricError::DegenerateConstantInput);
    }
    Ok(())
}

/// 1-based fractional ranks: tied values share the mean of their positions.
pub fn rank(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i+1 ..= j share their average.
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

fn has_ties(values: &[f64]) -> bool {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).any(|w| w[0] == w[1])
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0)
}

pub fn srcc(gt: &ScoreVector, pred: &ScoreVector) -> Result<f64, MetricError> {
    check(gt, pred)?;
    let v = rank(&gt.values);
    let p = rank(&pred.values);
    if has_ties(&gt.values) || has_ties(&pred.values) {
        return Ok(pearson(&v, &p));
    }
    let n = v.len() as f64;
    let d2: f64 = v.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - 6.0 * d2 / (n * (n * n - 1.0)))
}

pub fn plcc(gt: &ScoreVector, pred: &ScoreVector) -> Result<f64, MetricError> {
    check(gt, pred)?;
    Ok(pearson(&gt.values, &pred.values))
}

pub fn krcc(gt: &ScoreVector, pred: &ScoreVector, mode: KendallMode) -> Result<f64, MetricError> {
    check(gt, pred)?;
    let (x, y) = (&gt.values, &pred.values);
    let n = x.len();
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut tied_x, mut tied_y) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 {
                tied_x += 1;
            }
            if dy == 0.0 {
                tied_y += 1;
            }
            let s = dx * dy;
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as f64;
    let num = (concordant - discordant) as f64;
    let tau = match mode {
        KendallMode::TauA => num / n0,
        KendallMode::TauB => num / libm::sqrt((n0 - tied_x as f64) * (n0 - tied_y as f64)),
    };
    Ok(tau.clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionMetrics {
    pub srcc: f64,
    pub plcc: f64,
    pub krcc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricReport {
    pub dimensions: BTreeMap<Dimension, DimensionMetrics>,
}

/// All three correlations for every dimension present in `pred`.
pub fn evaluate_scores(
    pred: &BTreeMap<Dimension, ScoreVector>,
    gt: &BTreeMap<Dimension, ScoreVector>,
    mode: KendallMode,
) -> Result<MetricReport, MetricError> {
    let mut report = MetricReport::default();
    for (dim, p) in pred {
        let g = gt.get(dim).ok_or(MetricError::MissingDimension(*dim))?;
        report.dimensions.insert(
            *dim,
            DimensionMetrics {
                srcc: srcc(g, p)?,
                plcc: plcc(g, p)?,
                krcc: krcc(g, p, mode)?,
                pair_acc: None,
            },
        );
    }
    Ok(report)
}
