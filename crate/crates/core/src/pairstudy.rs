//! Pairwise preference study: per-prompt video groups, exhaustive pair
//! enumeration, seeded sampling, majority-vote verdicts, pair accuracy and
//! win-rate leaderboards.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::taxonomy::{Aspect, PromptCategories};
use crate::text::fnv1a64;
use crate::Dimension;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub video_id: String,
    pub model_id: String,
    pub prompt_id: String,
    pub variant: u32,
    pub open_source: bool,
    #[serde(default)]
    pub frames: u32,
    #[serde(default)]
    pub fps: f64,
    #[serde(default)]
    pub width: u32,
    #[serde(default)]
    pub height: u32,
}

/// An unordered pair of videos for one prompt, stored in canonical order
/// (`video_a < video_b`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairSpec {
    pub pair_id: String,
    pub prompt_id: String,
    pub video_a: String,
    pub video_b: String,
}

impl PairSpec {
    /// Builds the canonical pair; argument order does not matter.
    pub fn new(prompt_id: &str, x: &str, y: &str) -> Self {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        PairSpec {
            pair_id: pair_id(a, b),
            prompt_id: prompt_id.into(),
            video_a: a.into(),
            video_b: b.into(),
        }
    }
}

/// Stable identifier: FNV-1a of `"{a}\x1f{b}"` in canonical order.
pub fn pair_id(a: &str, b: &str) -> String {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let mut bytes = Vec::with_capacity(a.len() + b.len() + 1);
    bytes.extend_from_slice(a.as_bytes());
    bytes.push(0x1f);
    bytes.extend_from_slice(b.as_bytes());
    format!("p{:016x}", fnv1a64(&bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
}

impl Choice {
    pub fn flipped(self) -> Choice {
        match self {
            Choice::A => Choice::B,
            Choice::B => Choice::A,
        }
    }

    /// Converts a choice as displayed into canonical orientation (and back;
    /// the map is its own inverse).
    pub fn unswap(self, displayed_swap: bool) -> Choice {
        if displayed_swap {
            self.flipped()
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairJudgment {
    pub pair_id: String,
    pub annotator_id: String,
    pub dimension: Dimension,
    /// Canonical orientation: `A` always means `video_a`.
    pub choice: Choice,
    pub displayed_swap: bool,
    #[serde(default)]
    pub timestamp: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Winner {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub pair_id: String,
    pub dimension: Dimension,
    pub winner: Winner,
    pub votes_a: u32,
    pub votes_b: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PairError {
    #[error("model {model_id} has {found} of {expected} variants for prompt {prompt_id}")]
    MissingVariant {
        model_id: String,
        prompt_id: String,
        expected: u32,
        found: u32,
    },
    #[error("model {model_id} has an unexpected variant {variant} for prompt {prompt_id}")]
    ExtraVariant {
        model_id: String,
        prompt_id: String,
        variant: u32,
    },
    #[error("group of {0} videos has no pairs")]
    GroupTooSmall(usize),
    #[error("duplicate video {0} in group")]
    DuplicateVideo(String),
    #[error("cannot sample {requested} pairs from a pool of {pool}")]
    SampleLargerThanPool { requested: usize, pool: usize },
    #[error("no judgments to aggregate")]
    EmptyJudgments,
    #[error("judgments mix pairs or dimensions")]
    MixedJudgments,
    #[error("no prediction for pair {0}")]
    MissingPrediction(String),
    #[error("unknown video {0}")]
    UnknownVideo(String),
    #[error("unknown pair {0}")]
    UnknownPair(String),
}

/// Groups videos by prompt, checking that every model supplies exactly
/// `open_variants` (open source) or `closed_variants` (closed source)
/// videos numbered `1..=n` for every prompt. Each group is sorted by id.
pub fn build_groups(
    meta: &[VideoMeta],
    open_variants: u32,
    closed_variants: u32,
) -> Result<BTreeMap<String, Vec<String>>, PairError> {
    let mut models: BTreeMap<&str, bool> = BTreeMap::new();
    let mut prompts: BTreeSet<&str> = BTreeSet::new();
    let mut variants: BTreeMap<(&str, &str), BTreeSet<u32>> = BTreeMap::new();
    for m in meta {
        models.insert(&m.model_id, m.open_source);
        prompts.insert(&m.prompt_id);
        variants
            .entry((&m.prompt_id, &m.model_id))
            .or_default()
            .insert(m.variant);
    }
    for prompt in &prompts {
        for (model, open) in &models {
            let expected = if *open { open_variants } else { closed_variants };
            let have = variants.get(&(*prompt, *model));
            if let Some(extra) = have.and_then(|v| v.iter().find(|&&x| x == 0 || x > expected)) {
                return Err(PairError::ExtraVariant {
                    model_id: (*model).into(),
                    prompt_id: (*prompt).into(),
                    variant: *extra,
                });
            }
            let found = have.map_or(0, |v| v.len() as u32);
            if found != expected {
                return Err(PairError::MissingVariant {
                    model_id: (*model).into(),
                    prompt_id: (*prompt).into(),
                    expected,
                    found,
                });
            }
        }
    }
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for m in meta {
        groups.entry(m.prompt_id.clone()).or_default().push(m.video_id.clone());
    }
    for g in groups.values_mut() {
        g.sort();
    }
    Ok(groups)
}

/// All `n (n - 1) / 2` pairs of a group, in lexicographic order of
/// `(video_a, video_b)`.
pub fn enumerate_pairs(prompt_id: &str, group: &[String]) -> Result<Vec<PairSpec>, PairError> {
    if group.len() < 2 {
        return Err(PairError::GroupTooSmall(group.len()));
    }
    let mut ids: Vec<&str> = group.iter().map(String::as_str).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(PairError::DuplicateVideo(w[0].into()));
    }
    let mut out = Vec::with_capacity(ids.len() * (ids.len() - 1) / 2);
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            out.push(PairSpec {
                pair_id: pair_id(a, b),
                prompt_id: prompt_id.into(),
                video_a: (*a).into(),
                video_b: (*b).into(),
            });
        }
    }
    Ok(out)
}

/// Uniform sample of `n` pairs without replacement: a partial Fisher–Yates
/// shuffle driven by xoshiro256** seeded from `seed`. Output is in sampled
/// order.
pub fn sample_pairs(pool: &[PairSpec], n: usize, seed: u64) -> Result<Vec<PairSpec>, PairError> {
    if n > pool.len() {
        return Err(PairError::SampleLargerThanPool {
            requested: n,
            pool: pool.len(),
        });
    }
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    let mut rng = rng::seeded(seed);
    let (picked, _) = idx.partial_shuffle(&mut rng, n);
    Ok(picked.iter().map(|&i| pool[i].clone()).collect())
}

/// Strict majority in canonical orientation; an even split is a tie.
pub fn majority_vote(judgments: &[PairJudgment]) -> Result<PairVerdict, PairError> {
    let first = judgments.first().ok_or(PairError::EmptyJudgments)?;
    if judgments
        .iter()
        .any(|j| j.pair_id != first.pair_id || j.dimension != first.dimension)
    {
        return Err(PairError::MixedJudgments);
    }
    let votes_a = judgments.iter().filter(|j| j.choice == Choice::A).count() as u32;
    let votes_b = judgments.len() as u32 - votes_a;
    let winner = match votes_a.cmp(&votes_b) {
        core::cmp::Ordering::Greater => Winner::A,
        core::cmp::Ordering::Less => Winner::B,
        core::cmp::Ordering::Equal => Winner::Tie,
    };
    Ok(PairVerdict {
        pair_id: first.pair_id.clone(),
        dimension: first.dimension,
        winner,
        votes_a,
        votes_b,
    })
}

/// Majority verdicts for every (pair, dimension) present, sorted by pair id
/// then dimension.
pub fn aggregate(judgments: &[PairJudgment]) -> Vec<PairVerdict> {
    let mut groups: BTreeMap<(&str, Dimension), Vec<PairJudgment>> = BTreeMap::new();
    for j in judgments {
        groups
            .entry((j.pair_id.as_str(), j.dimension))
            .or_default()
            .push(j.clone());
    }
    groups
        .values()
        .map(|g| majority_vote(g).expect("groups are non-empty and homogeneous"))
        .collect()
}

/// Fraction of verdicts in `dimension` the predictions agree with; ties earn
/// half credit whatever was predicted.
pub fn pair_accuracy(
    predicted: &BTreeMap<String, Choice>,
    verdicts: &[PairVerdict],
    dimension: Dimension,
) -> Result<f64, PairError> {
    let mut credit = 0.0;
    let mut total = 0usize;
    for v in verdicts.iter().filter(|v| v.dimension == dimension) {
        let p = predicted
            .get(&v.pair_id)
            .ok_or_else(|| PairError::MissingPrediction(v.pair_id.clone()))?;
        total += 1;
        credit += match (v.winner, p) {
            (Winner::Tie, _) => 0.5,
            (Winner::A, Choice::A) | (Winner::B, Choice::B) => 1.0,
            _ => 0.0,
        };
    }
    Ok(if total == 0 { 0.0 } else { credit / total as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    All,
    Spatial,
    Temporal,
    Attribute,
    Complexity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateRow {
    pub model_id: String,
    pub dimension: Dimension,
    pub category: String,
    pub wins: f64,
    pub losses: f64,
    pub ties: u32,
    pub win_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WinRateTable {
    /// Sorted by (model_id, category).
    pub rows: Vec<WinRateRow>,
}

fn categories_for(prompt: &str, categories: Option<&BTreeMap<String, PromptCategories>>, by: GroupBy) -> Vec<String> {
    let aspect = match by {
        GroupBy::All => return alloc::vec!["all".to_string()],
        GroupBy::Complexity => {
            return alloc::vec![categories
                .and_then(|c| c.get(prompt))
                .map_or("null".to_string(), |c| c.complexity.to_string())]
        }
        GroupBy::Spatial => Aspect::Spatial,
        GroupBy::Temporal => Aspect::Temporal,
        GroupBy::Attribute => Aspect::Attribute,
    };
    match categories.and_then(|c| c.get(prompt)) {
        Some(c) if !c.aspect(aspect).is_empty() => c.aspect(aspect).iter().cloned().collect(),
        _ => alloc::vec!["null".to_string()],
    }
}

/// Win/loss/tie tallies per model (and per prompt subcategory unless
/// `group_by` is `All`) over the verdicts of one dimension. Prompts without
/// a subcategory in the chosen aspect fall into category `"null"`.
pub fn win_rates(
    verdicts: &[PairVerdict],
    pairs: &[PairSpec],
    meta: &[VideoMeta],
    categories: Option<&BTreeMap<String, PromptCategories>>,
    group_by: GroupBy,
    dimension: Dimension,
) -> Result<WinRateTable, PairError> {
    let pair_index: BTreeMap<&str, &PairSpec> = pairs.iter().map(|p| (p.pair_id.as_str(), p)).collect();
    let video_index: BTreeMap<&str, &VideoMeta> = meta.iter().map(|m| (m.video_id.as_str(), m)).collect();
    // (model, category) -> (wins, losses, ties)
    let mut tally: BTreeMap<(String, String), (f64, f64, u32)> = BTreeMap::new();
    for v in verdicts.iter().filter(|v| v.dimension == dimension) {
        let pair = pair_index
            .get(v.pair_id.as_str())
            .ok_or_else(|| PairError::UnknownPair(v.pair_id.clone()))?;
        let a = video_index
            .get(pair.video_a.as_str())
            .ok_or_else(|| PairError::UnknownVideo(pair.video_a.clone()))?;
        let b = video_index
            .get(pair.video_b.as_str())
            .ok_or_else(|| PairError::UnknownVideo(pair.video_b.clone()))?;
        for cat in categories_for(&pair.prompt_id, categories, group_by) {
            let mut bump = |model: &str, w: f64, l: f64, t: u32| {
                let e = tally.entry((model.to_string(), cat.clone())).or_insert((0.0, 0.0, 0));
                e.0 += w;
                e.1 += l;
                e.2 += t;
            };
            match v.winner {
                Winner::A => {
                    bump(&a.model_id, 1.0, 0.0, 0);
                    bump(&b.model_id, 0.0, 1.0, 0);
                }
                Winner::B => {
                    bump(&b.model_id, 1.0, 0.0, 0);
                    bump(&a.model_id, 0.0, 1.0, 0);
                }
                Winner::Tie => {
                    bump(&a.model_id, 0.0, 0.0, 1);
                    bump(&b.model_id, 0.0, 0.0, 1);
                }
            }
        }
    }
    let rows = tally
        .into_iter()
        .map(|((model_id, category), (wins, losses, ties))| {
            let total = wins + losses + f64::from(ties);
            WinRateRow {
                model_id,
                dimension,
                category,
                wins,
                losses,
                ties,
                win_rate: if total > 0.0 {
                    (wins + 0.5 * f64::from(ties)) / total
                } else {
                    0.0
                },
            }
        })
        .collect();
    Ok(WinRateTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn meta(video: &str, model: &str, prompt: &str, variant: u32, open: bool) -> VideoMeta {
        VideoMeta {
            video_id: video.into(),
            model_id: model.into(),
            prompt_id: prompt.into(),
            variant,
            open_source: open,
            frames: 8,
            fps: 8.0,
            width: 64,
            height: 64,
        }
    }

    fn study_meta(prompts: usize, open: usize, open_v: u32, closed: usize, closed_v: u32) -> Vec<VideoMeta> {
        let mut out = Vec::new();
        for p in 0..prompts {
            for m in 0..open {
                for v in 1..=open_v {
                    out.push(meta(
                        &format!("p{p}-o{m}-{v}"),
                        &format!("open{m}"),
                        &format!("p{p}"),
                        v,
                        true,
                    ));
                }
            }
            for m in 0..closed {
                for v in 1..=closed_v {
                    out.push(meta(
                        &format!("p{p}-c{m}-{v}"),
                        &format!("closed{m}"),
                        &format!("p{p}"),
                        v,
                        false,
                    ));
                }
            }
        }
        out
    }

    fn judgment(pair: &str, dim: Dimension, choice: Choice, who: &str) -> PairJudgment {
        PairJudgment {
            pair_id: pair.into(),
            annotator_id: who.into(),
            dimension: dim,
            choice,
            displayed_swap: false,
            timestamp: 0,
        }
    }

    #[test]
    fn group_sizes() {
        let g = build_groups(&study_meta(2, 8, 4, 4, 1), 4, 1).unwrap();
        assert_eq!(g.len(), 2);
        assert!(g.values().all(|v| v.len() == 36));
        assert_eq!(build_groups(&study_meta(1, 1, 1, 0, 1), 1, 1).unwrap()["p0"].len(), 1);
        assert_eq!(build_groups(&study_meta(1, 2, 2, 1, 1), 2, 1).unwrap()["p0"].len(), 5);
    }

    #[test]
    fn missing_variant_is_reported() {
        let mut m = study_meta(1, 2, 4, 1, 1);
        m.retain(|x| !(x.model_id == "open1" && x.variant == 3));
        assert!(matches!(
            build_groups(&m, 4, 1),
            Err(PairError::MissingVariant { found: 3, .. })
        ));
        let mut m = study_meta(2, 1, 1, 0, 1);
        m.retain(|x| x.prompt_id != "p1");
        m.push(meta("lonely", "other", "p1", 1, true));
        assert!(matches!(
            build_groups(&m, 1, 1),
            Err(PairError::MissingVariant { found: 0, .. })
        ));
        let m = study_meta(1, 1, 2, 0, 1);
        assert!(matches!(
            build_groups(&m, 1, 1),
            Err(PairError::ExtraVariant { variant: 2, .. })
        ));
    }

    #[test]
    fn pair_counts() {
        let ids = |n: usize| (0..n).map(|i| format!("v{i:02}")).collect::<Vec<_>>();
        assert_eq!(enumerate_pairs("p", &ids(36)).unwrap().len(), 630);
        assert_eq!(enumerate_pairs("p", &ids(2)).unwrap().len(), 1);
        assert_eq!(enumerate_pairs("p", &ids(5)).unwrap().len(), 10);
        assert_eq!(enumerate_pairs("p", &ids(1)), Err(PairError::GroupTooSmall(1)));
        let pairs = enumerate_pairs("p", &["b".into(), "a".into(), "c".into()]).unwrap();
        let listed: Vec<(&str, &str)> = pairs.iter().map(|p| (p.video_a.as_str(), p.video_b.as_str())).collect();
        assert_eq!(listed, [("a", "b"), ("a", "c"), ("b", "c")]);
    }

    #[test]
    fn pair_ids_ignore_argument_order() {
        assert_eq!(PairSpec::new("p", "x", "y"), PairSpec::new("p", "y", "x"));
        assert_ne!(pair_id("ab", "c"), pair_id("a", "bc"));
    }

    #[test]
    fn sampling() {
        let ids: Vec<String> = (0..10).map(|i| format!("v{i}")).collect();
        let pool = enumerate_pairs("p", &ids).unwrap();
        let s1 = sample_pairs(&pool, 20, 42).unwrap();
        assert_eq!(s1, sample_pairs(&pool, 20, 42).unwrap());
        assert_ne!(s1, sample_pairs(&pool, 20, 43).unwrap());
        let distinct: BTreeSet<_> = s1.iter().map(|p| p.pair_id.clone()).collect();
        assert_eq!(distinct.len(), 20);
        let mut all = sample_pairs(&pool, pool.len(), 1).unwrap();
        all.sort();
        let mut sorted_pool = pool.clone();
        sorted_pool.sort();
        assert_eq!(all, sorted_pool);
        assert!(matches!(
            sample_pairs(&pool, 46, 0),
            Err(PairError::SampleLargerThanPool { .. })
        ));
    }

    #[test]
    fn majority_examples() {
        let v = majority_vote(&[
            judgment("p", Dimension::Static, Choice::A, "1"),
            judgment("p", Dimension::Static, Choice::A, "2"),
            judgment("p", Dimension::Static, Choice::B, "3"),
        ])
        .unwrap();
        assert_eq!((v.winner, v.votes_a, v.votes_b), (Winner::A, 2, 1));
        let v = majority_vote(&vec![judgment("p", Dimension::Tv, Choice::B, "1"); 3]).unwrap();
        assert_eq!(v.winner, Winner::B);
        let v = majority_vote(&[
            judgment("p", Dimension::Tv, Choice::A, "1"),
            judgment("p", Dimension::Tv, Choice::B, "2"),
        ])
        .unwrap();
        assert_eq!(v.winner, Winner::Tie);
        assert_eq!(majority_vote(&[]), Err(PairError::EmptyJudgments));
        assert_eq!(
            majority_vote(&[
                judgment("p", Dimension::Tv, Choice::A, "1"),
                judgment("q", Dimension::Tv, Choice::B, "2")
            ]),
            Err(PairError::MixedJudgments)
        );
    }

    #[test]
    fn aggregation_groups_by_pair_and_dimension() {
        let js = vec![
            judgment("q", Dimension::Static, Choice::B, "1"),
            judgment("p", Dimension::Tv, Choice::A, "1"),
            judgment("p", Dimension::Static, Choice::A, "1"),
            judgment("p", Dimension::Static, Choice::B, "2"),
            judgment("p", Dimension::Static, Choice::A, "3"),
        ];
        let v = aggregate(&js);
        assert_eq!(v.len(), 3);
        assert_eq!(
            (v[0].pair_id.as_str(), v[0].dimension, v[0].winner),
            ("p", Dimension::Static, Winner::A)
        );
        assert_eq!((v[1].pair_id.as_str(), v[1].dimension), ("p", Dimension::Tv));
        assert_eq!((v[2].pair_id.as_str(), v[2].winner), ("q", Winner::B));
    }

    fn verdict(pair: &str, winner: Winner) -> PairVerdict {
        PairVerdict {
            pair_id: pair.into(),
            dimension: Dimension::Static,
            winner,
            votes_a: 0,
            votes_b: 0,
        }
    }

    #[test]
    fn accuracy_examples() {
        let verdicts = vec![
            verdict("1", Winner::A),
            verdict("2", Winner::B),
            verdict("3", Winner::A),
            verdict("4", Winner::A),
            verdict("5", Winner::Tie),
        ];
        let mut pred: BTreeMap<String, Choice> = BTreeMap::new();
        for (id, c) in [
            ("1", Choice::A),
            ("2", Choice::B),
            ("3", Choice::A),
            ("4", Choice::B),
            ("5", Choice::A),
        ] {
            pred.insert(id.into(), c);
        }
        assert!((pair_accuracy(&pred, &verdicts, Dimension::Static).unwrap() - 0.7).abs() < 1e-15);

        let decided = &verdicts[..4];
        let right: BTreeMap<String, Choice> = decided
            .iter()
            .map(|v| {
                (
                    v.pair_id.clone(),
                    if v.winner == Winner::A { Choice::A } else { Choice::B },
                )
            })
            .collect();
        assert_eq!(pair_accuracy(&right, decided, Dimension::Static).unwrap(), 1.0);
        let wrong: BTreeMap<String, Choice> = right.iter().map(|(k, c)| (k.clone(), c.flipped())).collect();
        assert_eq!(pair_accuracy(&wrong, decided, Dimension::Static).unwrap(), 0.0);
        pred.remove("3");
        assert_eq!(
            pair_accuracy(&pred, &verdicts, Dimension::Static),
            Err(PairError::MissingPrediction("3".into()))
        );
    }

    /// Three models, one video each, so models and videos coincide.
    fn round_robin() -> (Vec<VideoMeta>, Vec<PairSpec>) {
        let meta = vec![
            meta("x", "X", "p", 1, true),
            meta("y", "Y", "p", 1, true),
            meta("z", "Z", "p", 1, true),
        ];
        let pairs = enumerate_pairs("p", &["x".into(), "y".into(), "z".into()]).unwrap();
        (meta, pairs)
    }

    #[test]
    fn win_rate_examples() {
        let m = vec![
            meta("x1", "X", "p", 1, true),
            meta("y1", "Y", "p", 1, true),
            meta("y2", "Y", "q", 1, true),
        ];
        let p1 = PairSpec::new("p", "x1", "y1");
        let p2 = PairSpec::new("q", "x1", "y2");
        let verdicts = vec![
            PairVerdict {
                pair_id: p1.pair_id.clone(),
                ..verdict("", Winner::A)
            },
            PairVerdict {
                pair_id: p1.pair_id.clone(),
                ..verdict("", Winner::A)
            },
            PairVerdict {
                pair_id: p2.pair_id.clone(),
                ..verdict("", Winner::A)
            },
            PairVerdict {
                pair_id: p2.pair_id.clone(),
                ..verdict("", Winner::B)
            },
        ];
        let t = win_rates(&verdicts, &[p1.clone(), p2], &m, None, GroupBy::All, Dimension::Static).unwrap();
        let x = t.rows.iter().find(|r| r.model_id == "X").unwrap();
        assert_eq!((x.wins, x.losses, x.win_rate), (3.0, 1.0, 0.75));

        let tie = vec![PairVerdict {
            pair_id: p1.pair_id.clone(),
            ..verdict("", Winner::Tie)
        }];
        let t = win_rates(&tie, &[p1], &m, None, GroupBy::All, Dimension::Static).unwrap();
        assert!(t.rows.iter().all(|r| r.win_rate == 0.5 && r.ties == 1));
    }

    #[test]
    fn win_rates_match_a_recount() {
        let (meta, pairs) = round_robin();
        let winners = [Winner::A, Winner::B, Winner::Tie, Winner::A, Winner::A, Winner::B];
        let verdicts: Vec<PairVerdict> = winners
            .iter()
            .enumerate()
            .map(|(i, w)| PairVerdict {
                pair_id: pairs[i % 3].pair_id.clone(),
                ..verdict("", *w)
            })
            .collect();
        let table = win_rates(&verdicts, &pairs, &meta, None, GroupBy::All, Dimension::Static).unwrap();

        // Independent recount: walk every verdict and score each side by hand.
        let model_of = |vid: &str| vid.to_uppercase();
        let mut expect: BTreeMap<String, (f64, f64, u32)> = BTreeMap::new();
        for v in &verdicts {
            let p = pairs.iter().find(|p| p.pair_id == v.pair_id).unwrap();
            let (ma, mb) = (model_of(&p.video_a), model_of(&p.video_b));
            let (da, db) = match v.winner {
                Winner::A => ((1.0, 0.0, 0), (0.0, 1.0, 0)),
                Winner::B => ((0.0, 1.0, 0), (1.0, 0.0, 0)),
                Winner::Tie => ((0.0, 0.0, 1), (0.0, 0.0, 1)),
            };
            for (m, d) in [(ma, da), (mb, db)] {
                let e = expect.entry(m).or_insert((0.0, 0.0, 0));
                e.0 += d.0;
                e.1 += d.1;
                e.2 += d.2;
            }
        }
        assert_eq!(table.rows.len(), expect.len());
        for row in &table.rows {
            let (w, l, t) = expect[&row.model_id];
            assert_eq!((row.wins, row.losses, row.ties), (w, l, t));
            assert!((row.win_rate - (w + 0.5 * f64::from(t)) / (w + l + f64::from(t))).abs() < 1e-15);
        }
        assert!(win_rates(&verdicts, &pairs, &meta[..2], None, GroupBy::All, Dimension::Static).is_err());
    }

    #[test]
    fn grouping_by_subcategory() {
        use crate::taxonomy::{categorize, KeywordTable, PromptRecord};
        let (meta, pairs) = round_robin();
        let mut cats = BTreeMap::new();
        let rec = PromptRecord {
            prompt_id: "p".into(),
            text: "a dog and a car".into(),
            source: String::new(),
        };
        cats.insert("p".to_string(), categorize(&rec, &KeywordTable::default()));
        let verdicts = vec![PairVerdict {
            pair_id: pairs[0].pair_id.clone(),
            ..verdict("", Winner::A)
        }];
        let t = win_rates(
            &verdicts,
            &pairs,
            &meta,
            Some(&cats),
            GroupBy::Spatial,
            Dimension::Static,
        )
        .unwrap();
        let cats_seen: BTreeSet<&str> = t.rows.iter().map(|r| r.category.as_str()).collect();
        assert_eq!(cats_seen, ["animals", "vehicles"].into_iter().collect());
        let t = win_rates(
            &verdicts,
            &pairs,
            &meta,
            Some(&cats),
            GroupBy::Temporal,
            Dimension::Static,
        )
        .unwrap();
        assert!(t.rows.iter().all(|r| r.category == "null"));
        let t = win_rates(
            &verdicts,
            &pairs,
            &meta,
            Some(&cats),
            GroupBy::Complexity,
            Dimension::Static,
        )
        .unwrap();
        assert!(t.rows.iter().all(|r| r.category == "simple"));
    }

    fn winners() -> impl Strategy<Value = Vec<(usize, u8)>> {
        proptest::collection::vec((0usize..3, 0u8..3), 1..30)
    }

    proptest! {
        #[test]
        fn enumeration_is_complete_and_unique(n in 2usize..=40) {
            let ids: Vec<String> = (0..n).map(|i| format!("vid{i}")).collect();
            let pairs = enumerate_pairs("p", &ids).unwrap();
            prop_assert_eq!(pairs.len(), n * (n - 1) / 2);
            let distinct: BTreeSet<(String, String)> = pairs.iter().map(|p| (p.video_a.clone(), p.video_b.clone())).collect();
            prop_assert_eq!(distinct.len(), pairs.len());
            prop_assert!(pairs.iter().all(|p| p.video_a < p.video_b));
        }

        #[test]
        fn conservation(items in winners()) {
            let (meta, pairs) = round_robin();
            let verdicts: Vec<PairVerdict> = items
                .iter()
                .map(|(p, w)| PairVerdict {
                    pair_id: pairs[*p].pair_id.clone(),
                    ..verdict("", [Winner::A, Winner::B, Winner::Tie][*w as usize])
                })
                .collect();
            let t = win_rates(&verdicts, &pairs, &meta, None, GroupBy::All, Dimension::Static).unwrap();
            let wins: f64 = t.rows.iter().map(|r| r.wins).sum();
            let losses: f64 = t.rows.iter().map(|r| r.losses).sum();
            let ties: u32 = t.rows.iter().map(|r| r.ties).sum();
            prop_assert_eq!(wins, losses);
            prop_assert_eq!(ties % 2, 0);
            prop_assert!(t.rows.iter().all(|r| (0.0..=1.0).contains(&r.win_rate)));
        }

        #[test]
        fn orientation_invariance(choices in proptest::collection::vec(any::<bool>(), 1..8)) {
            // Relabel a<->b and flip every stored choice: the winning video is unchanged.
            let js: Vec<PairJudgment> = choices
                .iter()
                .map(|&c| judgment("p", Dimension::Static, if c { Choice::A } else { Choice::B }, "x"))
                .collect();
            let flipped: Vec<PairJudgment> = js.iter().map(|j| PairJudgment { choice: j.choice.flipped(), ..j.clone() }).collect();
            let v1 = majority_vote(&js).unwrap();
            let v2 = majority_vote(&flipped).unwrap();
            let identity = |w: Winner, swapped: bool| match (w, swapped) {
                (Winner::Tie, _) => "tie",
                (Winner::A, false) | (Winner::B, true) => "first",
                _ => "second",
            };
            prop_assert_eq!(identity(v1.winner, false), identity(v2.winner, true));
        }
    }

    #[test]
    fn bookkeeping_identity() {
        assert_eq!(30_000 * Dimension::ALL.len() * 3, 360_000);
    }

    #[test]
    fn unswap_is_an_involution() {
        for c in [Choice::A, Choice::B] {
            for s in [false, true] {
                assert_eq!(c.unswap(s).unswap(s), c);
            }
        }
        assert_eq!(Choice::A.unswap(true), Choice::B);
        assert_eq!(Choice::A.unswap(false), Choice::A);
    }
}
