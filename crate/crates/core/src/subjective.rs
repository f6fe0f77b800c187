//! Per-subject z-score normalization of 1–5 Likert ratings and the
//! resulting [0, 100] mean opinion scores.
//!
//! For subject `i` in one dimension with ratings `r_ij` over `N_i` videos:
//! `mu_i` is the mean, `sigma_i` the sample standard deviation (divisor
//! `N_i - 1`), `z_ij = (r_ij - mu_i) / sigma_i` and
//! `z'_ij = 100 (z_ij + 3) / 6`, clipped into [0, 100]. A video's MOS is the
//! mean of `z'_ij` over the subjects who rated it.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::Dimension;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRating {
    pub subject_id: String,
    pub video_id: String,
    pub dimension: Dimension,
    pub score: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubjectStats {
    pub mean: f64,
    pub stddev: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosRecord {
    pub video_id: String,
    pub dimension: Dimension,
    pub mos: f64,
    pub rater_count: usize,
}

/// What to do with a subject whose ratings in a dimension are all equal
/// (`sigma_i = 0`, so `z` is undefined).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantRaterPolicy {
    /// The subject contributes nothing in that dimension.
    #[default]
    Drop,
    /// Every rescaled score of that subject becomes 50.
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstantRaterWarning {
    pub subject_id: String,
    pub dimension: Dimension,
    pub policy: ConstantRaterPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubjectiveError {
    #[error("subject {subject_id} has fewer than two {dimension} ratings")]
    FewerThanTwoRatings { subject_id: String, dimension: Dimension },
    #[error("no rater survives for video {video_id} in {dimension}")]
    NoSurvivingRaters { video_id: String, dimension: Dimension },
    #[error("score {score} from {subject_id} for {video_id} is outside 1..=5")]
    InvalidScore {
        subject_id: String,
        video_id: String,
        score: u8,
    },
    #[error("duplicate {dimension} rating by {subject_id} for {video_id}")]
    DuplicateRating {
        subject_id: String,
        video_id: String,
        dimension: Dimension,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MosOutput {
    /// Sorted by (video_id, dimension).
    pub records: Vec<MosRecord>,
    pub warnings: Vec<ConstantRaterWarning>,
}

fn stats_of(scores: &[f64]) -> SubjectStats {
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let ss = scores.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>();
    SubjectStats {
        mean,
        stddev: libm::sqrt(ss / (n - 1.0)),
        count: scores.len(),
    }
}

pub fn subject_stats(
    ratings: &[RawRating],
    subject_id: &str,
    dimension: Dimension,
) -> Result<SubjectStats, SubjectiveError> {
    let mut mine: Vec<(&str, f64)> = ratings
        .iter()
        .filter(|r| r.subject_id == subject_id && r.dimension == dimension)
        .map(|r| (r.video_id.as_str(), f64::from(r.score)))
        .collect();
    if mine.len() < 2 {
        return Err(SubjectiveError::FewerThanTwoRatings {
            subject_id: subject_id.into(),
            dimension,
        });
    }
    mine.sort_by(|a, b| a.0.cmp(b.0));
    let scores: Vec<f64> = mine.into_iter().map(|(_, s)| s).collect();
    Ok(stats_of(&scores))
}

/// Sample z-scores of one subject's ratings; `None` when fewer than two
/// ratings or all are equal.
pub fn z_scores(scores: &[f64]) -> Option<Vec<f64>> {
    if scores.len() < 2 {
        return None;
    }
    if scores.iter().all(|&s| s == scores[0]) {
        return None;
    }
    let stats = stats_of(scores);
    (stats.stddev > 0.0).then(|| scores.iter().map(|r| (r - stats.mean) / stats.stddev).collect())
}

/// Maps a z-score onto [0, 100]; values beyond three standard deviations clip.
pub fn rescale_z(z: f64) -> f64 {
    (100.0 * (z + 3.0) / 6.0).clamp(0.0, 100.0)
}

pub fn compute_mos(ratings: &[RawRating], policy: ConstantRaterPolicy) -> Result<MosOutput, SubjectiveError> {
    // (dimension, subject) -> [(video, score)], each list sorted by video.
    let mut by_subject: BTreeMap<(Dimension, &str), Vec<(&str, f64)>> = BTreeMap::new();
    for r in ratings {
        if !(1..=5).contains(&r.score) {
            return Err(SubjectiveError::InvalidScore {
                subject_id: r.subject_id.clone(),
                video_id: r.video_id.clone(),
                score: r.score,
            });
        }
        by_subject
            .entry((r.dimension, r.subject_id.as_str()))
            .or_default()
            .push((r.video_id.as_str(), f64::from(r.score)));
    }

    let mut sums: BTreeMap<(&str, Dimension), (f64, usize)> = BTreeMap::new();
    for r in ratings {
        sums.entry((r.video_id.as_str(), r.dimension)).or_insert((0.0, 0));
    }

    let mut warnings = Vec::new();
    for ((dimension, subject), list) in by_subject.iter_mut() {
        list.sort_by(|a, b| a.0.cmp(b.0));
        if let Some(w) = list.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(SubjectiveError::DuplicateRating {
                subject_id: (*subject).into(),
                video_id: w[0].0.into(),
                dimension: *dimension,
            });
        }
        if list.len() < 2 {
            return Err(SubjectiveError::FewerThanTwoRatings {
                subject_id: (*subject).into(),
                dimension: *dimension,
            });
        }
        let scores: Vec<f64> = list.iter().map(|(_, s)| *s).collect();
        let stats = stats_of(&scores);
        if stats.stddev == 0.0 {
            warnings.push(ConstantRaterWarning {
                subject_id: (*subject).into(),
                dimension: *dimension,
                policy,
            });
            if policy == ConstantRaterPolicy::Drop {
                continue;
            }
        }
        for (video, score) in list.iter() {
            let rescaled = if stats.stddev == 0.0 {
                50.0
            } else {
                rescale_z((score - stats.mean) / stats.stddev)
            };
            let slot = sums
                .get_mut(&(*video, *dimension))
                .expect("every video was seeded above");
            slot.0 += rescaled;
            slot.1 += 1;
        }
    }

    let mut records = Vec::with_capacity(sums.len());
    for ((video, dimension), (sum, count)) in sums {
        if count == 0 {
            return Err(SubjectiveError::NoSurvivingRaters {
                video_id: video.into(),
                dimension,
            });
        }
        records.push(MosRecord {
            video_id: video.into(),
            dimension,
            mos: sum / count as f64,
            rater_count: count,
        });
    }
    Ok(MosOutput { records, warnings })
}

/// Total number of rating records; for a complete study this is
/// subjects x dimensions x videos.
pub fn rating_count(ratings: &[RawRating]) -> usize {
    ratings.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn rating(subject: &str, video: &str, dim: Dimension, score: u8) -> RawRating {
        RawRating {
            subject_id: subject.into(),
            video_id: video.into(),
            dimension: dim,
            score,
        }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn stats_examples() {
        let mk = |scores: &[u8]| {
            scores
                .iter()
                .enumerate()
                .map(|(i, &s)| rating("s", &format!("v{i}"), Dimension::Static, s))
                .collect::<Vec<_>>()
        };
        let s = subject_stats(&mk(&[1, 5]), "s", Dimension::Static).unwrap();
        assert_eq!(s.mean, 3.0);
        assert!(close(s.stddev, 8f64.sqrt(), 1e-12));
        let s = subject_stats(&mk(&[3, 3, 3]), "s", Dimension::Static).unwrap();
        assert_eq!((s.mean, s.stddev), (3.0, 0.0));
        let s = subject_stats(&mk(&[1, 2, 3, 4, 5]), "s", Dimension::Static).unwrap();
        assert!(close(s.stddev, 2.5f64.sqrt(), 1e-12));
        assert_eq!(s.count, 5);
        assert!(matches!(
            subject_stats(&mk(&[4]), "s", Dimension::Static),
            Err(SubjectiveError::FewerThanTwoRatings { .. })
        ));
    }

    #[test]
    fn two_video_example() {
        let ratings = [
            rating("s1", "v1", Dimension::Tv, 1),
            rating("s1", "v2", Dimension::Tv, 5),
        ];
        let out = compute_mos(&ratings, ConstantRaterPolicy::Drop).unwrap();
        assert!(close(out.records[0].mos, 38.2149, 5e-5), "{}", out.records[0].mos);
        assert!(close(out.records[1].mos, 61.7851, 5e-5));
        // Exact value: z = -1/sqrt(2).
        assert!(close(out.records[0].mos, 100.0 * (3.0 - 0.5f64.sqrt()) / 6.0, 1e-12));

        let doubled = [
            rating("s1", "v1", Dimension::Tv, 1),
            rating("s1", "v2", Dimension::Tv, 5),
            rating("s2", "v1", Dimension::Tv, 1),
            rating("s2", "v2", Dimension::Tv, 5),
        ];
        let out2 = compute_mos(&doubled, ConstantRaterPolicy::Drop).unwrap();
        assert_eq!(out2.records[0].mos, out.records[0].mos);
        assert_eq!(out2.records[0].rater_count, 2);
    }

    #[test]
    fn constant_rater_policies() {
        let ratings = [
            rating("s1", "v1", Dimension::Static, 1),
            rating("s1", "v2", Dimension::Static, 5),
            rating("flat", "v1", Dimension::Static, 3),
            rating("flat", "v2", Dimension::Static, 3),
        ];
        let out = compute_mos(&ratings, ConstantRaterPolicy::Drop).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert_eq!(out.warnings[0].subject_id, "flat");
        assert!(out.records.iter().all(|r| r.rater_count == 1));

        let out = compute_mos(&ratings, ConstantRaterPolicy::Midpoint).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert!(out.records.iter().all(|r| r.rater_count == 2));
        let low = 100.0 * (3.0 - core::f64::consts::FRAC_1_SQRT_2) / 6.0;
        assert!(close(out.records[0].mos, (low + 50.0) / 2.0, 1e-9), "{:?}", out.records);

        let only_flat = [
            rating("flat", "v1", Dimension::Static, 3),
            rating("flat", "v2", Dimension::Static, 3),
        ];
        assert!(matches!(
            compute_mos(&only_flat, ConstantRaterPolicy::Drop),
            Err(SubjectiveError::NoSurvivingRaters { .. })
        ));
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            compute_mos(&[rating("s", "v", Dimension::Static, 6)], ConstantRaterPolicy::Drop),
            Err(SubjectiveError::InvalidScore { score: 6, .. })
        ));
        assert!(matches!(
            compute_mos(&[rating("s", "v", Dimension::Static, 2)], ConstantRaterPolicy::Drop),
            Err(SubjectiveError::FewerThanTwoRatings { .. })
        ));
        let dup = [
            rating("s", "v", Dimension::Static, 2),
            rating("s", "v", Dimension::Static, 4),
        ];
        assert!(matches!(
            compute_mos(&dup, ConstantRaterPolicy::Drop),
            Err(SubjectiveError::DuplicateRating { .. })
        ));
    }

    #[test]
    fn clipping_keeps_range() {
        // One outlier among many equal ratings pushes |z| past 3.
        let mut ratings: Vec<RawRating> = (0..30)
            .map(|i| rating("s", &format!("v{i:02}"), Dimension::Static, 3))
            .collect();
        ratings.push(rating("s", "zz", Dimension::Static, 5));
        let out = compute_mos(&ratings, ConstantRaterPolicy::Drop).unwrap();
        let top = out.records.iter().find(|r| r.video_id == "zz").unwrap();
        assert_eq!(top.mos, 100.0);
    }

    #[test]
    fn counts() {
        assert_eq!(rating_count(&[]), 0);
        let mut v = Vec::new();
        for s in 0..2 {
            for d in Dimension::ALL {
                for vid in 0..3 {
                    v.push(rating(&s.to_string(), &vid.to_string(), d, 3));
                }
            }
        }
        assert_eq!(rating_count(&v), 24);
    }

    fn table() -> impl Strategy<Value = Vec<RawRating>> {
        (1usize..=4, 2usize..=6).prop_flat_map(|(subjects, videos)| {
            proptest::collection::vec(1u8..=5, subjects * videos).prop_map(move |scores| {
                let mut out = Vec::new();
                for s in 0..subjects {
                    for v in 0..videos {
                        out.push(rating(
                            &format!("s{s}"),
                            &format!("v{v}"),
                            Dimension::Dynamic,
                            scores[s * videos + v],
                        ));
                    }
                }
                out
            })
        })
    }

    proptest! {
        #[test]
        fn range_and_permutation_invariance(ratings in table(), rot in 0usize..50) {
            let Ok(out) = compute_mos(&ratings, ConstantRaterPolicy::Midpoint) else { return Ok(()); };
            for r in &out.records {
                prop_assert!((0.0..=100.0).contains(&r.mos));
            }
            let mut shuffled = ratings.clone();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let again = compute_mos(&shuffled, ConstantRaterPolicy::Midpoint).unwrap();
            prop_assert_eq!(out, again);
        }
    }

    proptest! {
        #[test]
        fn z_scores_ignore_positive_affine_maps(
            raw in proptest::collection::vec(1u8..=5, 2..20),
            a in 0.1f64..10.0,
            b in -50.0f64..50.0,
        ) {
            let raw: Vec<f64> = raw.into_iter().map(f64::from).collect();
            let mapped: Vec<f64> = raw.iter().map(|r| a * r + b).collect();
            match (z_scores(&raw), z_scores(&mapped)) {
                (Some(x), Some(y)) => {
                    for (p, q) in x.iter().zip(&y) {
                        prop_assert!((p - q).abs() <= 1e-9);
                    }
                }
                (None, None) => {}
                // Rounding can make a constant vector look non-constant only
                // if the input was constant, which maps to None on both sides.
                other => prop_assert!(false, "{:?}", other),
            }
        }
    }

    #[test]
    fn affine_invariance_of_one_subject() {
        // Ratings 1,2,4 and 2,3,5 (shift by one) yield the same z-scores.
        let a = [
            rating("s", "v1", Dimension::Static, 1),
            rating("s", "v2", Dimension::Static, 2),
            rating("s", "v3", Dimension::Static, 4),
        ];
        let b = [
            rating("s", "v1", Dimension::Static, 2),
            rating("s", "v2", Dimension::Static, 3),
            rating("s", "v3", Dimension::Static, 5),
        ];
        let ma = compute_mos(&a, ConstantRaterPolicy::Drop).unwrap();
        let mb = compute_mos(&b, ConstantRaterPolicy::Drop).unwrap();
        for (x, y) in ma.records.iter().zip(&mb.records) {
            assert!(close(x.mos, y.mos, 1e-9));
        }
    }
}
