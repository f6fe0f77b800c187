use super::NUM_LEVELS;
use crate::QualityLevel;

/// Softmax cross-entropy of one row of logits against `label`, computed
/// with the log-sum-exp shift.
pub(crate) fn cross_entropy(logits: &[f64; NUM_LEVELS], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + libm::log(logits.iter().map(|l| libm::exp(l - max)).sum::<f64>());
    lse - logits[label]
}

pub(crate) fn softmax(logits: &[f64; NUM_LEVELS]) -> [f64; NUM_LEVELS] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = logits.map(|l| libm::exp(l - max));
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

/// Mean over the four dimensions of the level cross-entropy.
pub fn loss_language(level_logits: &[[f64; NUM_LEVELS]; 4], gt_levels: &[QualityLevel; 4]) -> f64 {
    level_logits
        .iter()
        .zip(gt_levels)
        .map(|(l, g)| cross_entropy(l, g.index()))
        .sum::<f64>()
        / 4.0
}

/// Mean absolute error over every element. Empty input gives 0.
pub fn loss_mos(pred: &[f64], gt: &[f64]) -> f64 {
    debug_assert_eq!(pred.len(), gt.len());
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter().zip(gt).map(|(p, g)| libm::fabs(p - g)).sum::<f64>() / pred.len() as f64
}

/// Mean binary cross-entropy; `labels` are 1 when the first video is better.
pub fn loss_pairs(probs: &[f64], labels: &[f64]) -> f64 {
    debug_assert_eq!(probs.len(), labels.len());
    if probs.is_empty() {
        return 0.0;
    }
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| -(y * libm::log(p) + (1.0 - y) * libm::log(1.0 - p)))
        .sum();
    total / probs.len() as f64
}

/// Binary cross-entropy written in terms of the logit `z`, stable for large
/// `|z|`.
pub(crate) fn bce_with_logit(z: f64, label: bool) -> f64 {
    let y = if label { 1.0 } else { 0.0 };
    f64::max(z, 0.0) - z * y + libm::log1p(libm::exp(-libm::fabs(z)))
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-6;

    #[test]
    fn uniform_logits_give_ln5() {
        let l = [[0.0; 5]; 4];
        let gt = [
            QualityLevel::Bad,
            QualityLevel::Fair,
            QualityLevel::Good,
            QualityLevel::Excellent,
        ];
        assert!((loss_language(&l, &gt) - libm::log(5.0)).abs() < 1e-12);
        assert!((libm::log(5.0) - 1.609438).abs() < TOL);
    }

    #[test]
    fn confident_logits() {
        let v = cross_entropy(&[10.0, 0.0, 0.0, 0.0, 0.0], 0);
        let hand = libm::log(1.0 + 4.0 * libm::exp(-10.0));
        assert!((v - hand).abs() < 1e-15);
        assert!((v - 1.816e-4).abs() < 1e-7);
        let w = cross_entropy(&[1.0, 0.0, 0.0, 0.0, 0.0], 0);
        assert!((w - libm::log(1.0 + 4.0 / core::f64::consts::E)).abs() < 1e-15);
        assert!((w - 0.904832).abs() < TOL);
    }

    #[test]
    fn mae_examples() {
        assert_eq!(loss_mos(&[50.0, 60.0], &[40.0, 80.0]), 15.0);
        assert_eq!(loss_mos(&[3.0], &[3.0]), 0.0);
        assert_eq!(loss_mos(&[3.0], &[7.5]), 4.5);
    }

    #[test]
    fn bce_examples() {
        assert!((loss_pairs(&[0.5], &[1.0]) - core::f64::consts::LN_2).abs() < 1e-12);
        assert!((loss_pairs(&[0.5], &[0.0]) - core::f64::consts::LN_2).abs() < 1e-12);
        assert!((loss_pairs(&[0.8], &[0.0]) - 1.609438).abs() < TOL);
        let near = loss_pairs(&[1.0 - 1e-12], &[1.0]);
        assert!((near - 1e-12).abs() < 1e-15);
    }

    #[test]
    fn logit_form_matches_probability_form() {
        for &z in &[-15.0, -2.5, -1e-3, 0.0, 0.7, 4.0, 15.0] {
            for label in [false, true] {
                let p = sigmoid(z);
                let y = if label { 1.0 } else { 0.0 };
                let direct = loss_pairs(&[p], &[y]);
                assert!((direct - bce_with_logit(z, label)).abs() < 1e-6, "z={z}");
            }
        }
        assert!(bce_with_logit(800.0, false).is_finite());
        assert!(bce_with_logit(-800.0, true).is_finite());
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[3.0, -1.0, 0.5, 2.0, 700.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
