//! Task assignment and the append-only rating and judgment logs of one
//! annotation study.
//!
//! A study directory holds the inputs `prompts.jsonl` (prompt records),
//! `videos.jsonl` (one `{video_id, prompt_id, ..}` per rated video),
//! `pairs.jsonl` (pair specs) and `clips/{video_id}.avf`. Submissions are
//! appended to `ratings.csv` and `judgments.jsonl`, from which completion
//! state is rebuilt on startup.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use aigvqa_core::pairstudy::{Choice, PairJudgment, PairSpec};
use aigvqa_core::rng;
use aigvqa_core::subjective::RawRating;
use aigvqa_core::taxonomy::PromptRecord;
use aigvqa_core::Dimension;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{jsonl_bytes, ratings_csv_bytes, read_jsonl, read_ratings_csv};

pub const PROMPTS_FILE: &str = "prompts.jsonl";
pub const VIDEOS_FILE: &str = "videos.jsonl";
pub const PAIRS_FILE: &str = "pairs.jsonl";
pub const RATINGS_LOG: &str = "ratings.csv";
pub const JUDGMENTS_LOG: &str = "judgments.jsonl";
pub const CLIPS_DIR: &str = "clips";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rating,
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskState {
    Open,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum TaskPayload {
    Rating {
        video_id: String,
        prompt: String,
    },
    Pair {
        pair_id: String,
        video_a: String,
        video_b: String,
        prompt: String,
        displayed_swap: bool,
    },
}

/// An assignment as handed to an annotator. For pair tasks `video_a` and
/// `video_b` are in displayed order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    #[serde(flatten)]
    pub payload: TaskPayload,
    pub assigned_to: String,
    pub state: TaskState,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StudyError {
    #[error("no {0:?} tasks remain for this annotator")]
    NoTasksRemaining(Mode),
    #[error("no open task for this submission is assigned to the annotator")]
    TaskNotAssigned,
    #[error("invalid score: {0}")]
    InvalidScore(String),
    #[error("invalid choice: {0}")]
    InvalidChoice(String),
    #[error("{0} not found")]
    NotFound(String),
}

#[derive(Debug, Clone, Copy)]
pub struct StudyConfig {
    pub seed: u64,
    /// Distinct annotators after which a pair is no longer offered.
    pub pair_quota: usize,
    /// Same for rating tasks; `None` lets every annotator rate every video.
    pub rating_quota: Option<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            seed: 0,
            pair_quota: 3,
            rating_quota: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub ratings: usize,
    pub judgments: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub total: Counts,
    pub annotators: BTreeMap<String, Counts>,
}

#[derive(Debug, Deserialize)]
struct StudyVideo {
    video_id: String,
    prompt_id: String,
}

#[derive(Debug)]
struct Slot {
    payload: TaskPayload,
    holder: Option<(String, bool)>,
    completed_by: BTreeSet<String>,
}

#[derive(Debug)]
pub struct Study {
    dir: PathBuf,
    config: StudyConfig,
    slots: BTreeMap<String, Slot>,
    /// Offer order per mode: a seeded shuffle, so consecutive tasks come
    /// from unrelated videos and models.
    order: BTreeMap<Mode, Vec<String>>,
    held: BTreeMap<(String, Mode), String>,
    progress: Progress,
    rng: rng::StudyRng,
}

fn rating_task_id(video_id: &str) -> String {
    format!("rating:{video_id}")
}

fn pair_task_id(pair_id: &str) -> String {
    format!("pair:{pair_id}")
}

/// Ids that can safely name a file inside the clip directory.
fn is_plain_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

fn read_optional<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if path.exists() {
        read_jsonl(path)
    } else {
        Ok(Vec::new())
    }
}

impl Study {
    pub fn open(dir: &Path, config: StudyConfig) -> Result<Self> {
        let prompts: BTreeMap<String, String> = read_optional::<PromptRecord>(&dir.join(PROMPTS_FILE))?
            .into_iter()
            .map(|p| (p.prompt_id, p.text))
            .collect();
        let prompt_text = |id: &str| {
            prompts
                .get(id)
                .cloned()
                .ok_or_else(|| Error::Data(format!("unknown prompt {id}")))
        };
        let mut slots = BTreeMap::new();
        let mut order: BTreeMap<Mode, Vec<String>> = BTreeMap::new();
        for v in read_optional::<StudyVideo>(&dir.join(VIDEOS_FILE))? {
            if !is_plain_id(&v.video_id) {
                return Err(Error::Data(format!(
                    "video id {:?} cannot name a clip file",
                    v.video_id
                )));
            }
            let id = rating_task_id(&v.video_id);
            let payload = TaskPayload::Rating {
                prompt: prompt_text(&v.prompt_id)?,
                video_id: v.video_id,
            };
            order.entry(Mode::Rating).or_default().push(id.clone());
            slots.insert(
                id,
                Slot {
                    payload,
                    holder: None,
                    completed_by: BTreeSet::new(),
                },
            );
        }
        for p in read_optional::<PairSpec>(&dir.join(PAIRS_FILE))? {
            let id = pair_task_id(&p.pair_id);
            let payload = TaskPayload::Pair {
                prompt: prompt_text(&p.prompt_id)?,
                pair_id: p.pair_id,
                video_a: p.video_a,
                video_b: p.video_b,
                displayed_swap: false,
            };
            order.entry(Mode::Pair).or_default().push(id.clone());
            slots.insert(
                id,
                Slot {
                    payload,
                    holder: None,
                    completed_by: BTreeSet::new(),
                },
            );
        }
        let mut shuffle_rng = rng::substream(config.seed, 1);
        for ids in order.values_mut() {
            ids.sort();
            ids.dedup();
            ids.shuffle(&mut shuffle_rng);
        }
        let mut study = Study {
            dir: dir.to_path_buf(),
            config,
            slots,
            order,
            held: BTreeMap::new(),
            progress: Progress::default(),
            rng: rng::substream(config.seed, 2),
        };
        study.replay_logs()?;
        Ok(study)
    }

    fn replay_logs(&mut self) -> Result<()> {
        let ratings_path = self.dir.join(RATINGS_LOG);
        if ratings_path.exists() {
            for r in read_ratings_csv(&ratings_path)? {
                self.count(&r.subject_id, Mode::Rating);
                if let Some(slot) = self.slots.get_mut(&rating_task_id(&r.video_id)) {
                    slot.completed_by.insert(r.subject_id);
                }
            }
        }
        for j in read_optional::<PairJudgment>(&self.dir.join(JUDGMENTS_LOG))? {
            self.count(&j.annotator_id, Mode::Pair);
            if let Some(slot) = self.slots.get_mut(&pair_task_id(&j.pair_id)) {
                slot.completed_by.insert(j.annotator_id);
            }
        }
        Ok(())
    }

    fn count(&mut self, annotator: &str, mode: Mode) {
        let entry = self.progress.annotators.entry(annotator.to_string()).or_default();
        match mode {
            Mode::Rating => {
                entry.ratings += 1;
                self.progress.total.ratings += 1;
            }
            Mode::Pair => {
                entry.judgments += 1;
                self.progress.total.judgments += 1;
            }
        }
    }

    fn quota(&self, mode: Mode) -> Option<usize> {
        match mode {
            Mode::Rating => self.config.rating_quota,
            Mode::Pair => Some(self.config.pair_quota),
        }
    }

    fn task_view(&self, task_id: &str) -> Task {
        let slot = &self.slots[task_id];
        let (annotator, swap) = slot.holder.clone().expect("viewed tasks are held");
        let payload = match &slot.payload {
            TaskPayload::Pair {
                pair_id,
                video_a,
                video_b,
                prompt,
                ..
            } => {
                let (left, right) = if swap { (video_b, video_a) } else { (video_a, video_b) };
                TaskPayload::Pair {
                    pair_id: pair_id.clone(),
                    video_a: left.clone(),
                    video_b: right.clone(),
                    prompt: prompt.clone(),
                    displayed_swap: swap,
                }
            }
            rating => rating.clone(),
        };
        Task {
            task_id: task_id.to_string(),
            payload,
            assigned_to: annotator,
            state: TaskState::Open,
        }
    }

    /// The annotator's current task of `mode`, or a fresh assignment of the
    /// first eligible task in offer order.
    pub fn next_task(&mut self, annotator: &str, mode: Mode) -> Result<Task, StudyError> {
        if let Some(id) = self.held.get(&(annotator.to_string(), mode)) {
            return Ok(self.task_view(id));
        }
        let quota = self.quota(mode);
        let pick = self.order.get(&mode).into_iter().flatten().find(|id| {
            let slot = &self.slots[*id];
            slot.holder.is_none()
                && !slot.completed_by.contains(annotator)
                && quota.is_none_or(|q| slot.completed_by.len() < q)
        });
        let id = pick.cloned().ok_or(StudyError::NoTasksRemaining(mode))?;
        let swap = mode == Mode::Pair && self.rng.random_bool(0.5);
        self.slots.get_mut(&id).expect("picked from slots").holder = Some((annotator.to_string(), swap));
        self.held.insert((annotator.to_string(), mode), id.clone());
        Ok(self.task_view(&id))
    }

    /// Releases the annotator's hold on `task_id` after checking it exists.
    fn take_assignment(&mut self, annotator: &str, task_id: &str, mode: Mode) -> Result<bool, StudyError> {
        let key = (annotator.to_string(), mode);
        if self.held.get(&key).map(String::as_str) != Some(task_id) {
            return Err(StudyError::TaskNotAssigned);
        }
        let slot = self.slots.get_mut(task_id).ok_or(StudyError::TaskNotAssigned)?;
        let (_, swap) = slot.holder.take().ok_or(StudyError::TaskNotAssigned)?;
        slot.completed_by.insert(annotator.to_string());
        self.held.remove(&key);
        Ok(swap)
    }

    fn append(&self, file: &str, bytes: &[u8], header: Option<&[u8]>) -> Result<()> {
        let path = self.dir.join(file);
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let empty = f.metadata().map_err(|e| Error::io(&path, e))?.len() == 0;
        if let (true, Some(h)) = (empty, header) {
            f.write_all(h).map_err(|e| Error::io(&path, e))?;
        }
        f.write_all(bytes).map_err(|e| Error::io(&path, e))?;
        f.sync_data().map_err(|e| Error::io(&path, e))
    }

    /// Validates before touching any state, then logs one rating per
    /// dimension and completes the task.
    pub fn submit_rating(
        &mut self,
        annotator: &str,
        video_id: &str,
        scores: &BTreeMap<String, i64>,
    ) -> Result<usize, SubmitError> {
        let scores = parse_all(scores, |&s| {
            u8::try_from(s)
                .ok()
                .filter(|v| (1..=5).contains(v))
                .ok_or_else(|| format!("{s} is outside 1..=5"))
        })
        .map_err(StudyError::InvalidScore)?;
        let task_id = rating_task_id(video_id);
        self.check_held(annotator, &task_id, Mode::Rating)?;
        let records: Vec<RawRating> = Dimension::ALL
            .into_iter()
            .map(|d| RawRating {
                subject_id: annotator.to_string(),
                video_id: video_id.to_string(),
                dimension: d,
                score: scores[d.index()],
            })
            .collect();
        let header = ratings_csv_bytes(&[], true);
        self.append(RATINGS_LOG, &ratings_csv_bytes(&records, false), Some(&header))?;
        self.take_assignment(annotator, &task_id, Mode::Rating)?;
        for _ in &records {
            self.count(annotator, Mode::Rating);
        }
        Ok(records.len())
    }

    /// Choices arrive as displayed; they are stored in canonical
    /// orientation.
    pub fn submit_pair(
        &mut self,
        annotator: &str,
        pair_id: &str,
        choices: &BTreeMap<String, String>,
    ) -> Result<usize, SubmitError> {
        let choices = parse_all(choices, |c| match c.as_str() {
            "A" => Ok(Choice::A),
            "B" => Ok(Choice::B),
            other => Err(format!("{other:?} is not A or B")),
        })
        .map_err(StudyError::InvalidChoice)?;
        let task_id = pair_task_id(pair_id);
        let swap = self.check_held(annotator, &task_id, Mode::Pair)?;
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let records: Vec<PairJudgment> = Dimension::ALL
            .into_iter()
            .map(|d| PairJudgment {
                pair_id: pair_id.to_string(),
                annotator_id: annotator.to_string(),
                dimension: d,
                choice: choices[d.index()].unswap(swap),
                displayed_swap: swap,
                timestamp,
            })
            .collect();
        self.append(JUDGMENTS_LOG, &jsonl_bytes(&records), None)?;
        self.take_assignment(annotator, &task_id, Mode::Pair)?;
        for _ in &records {
            self.count(annotator, Mode::Pair);
        }
        Ok(records.len())
    }

    /// The displayed-swap flag of the annotator's hold on `task_id`.
    fn check_held(&self, annotator: &str, task_id: &str, mode: Mode) -> Result<bool, StudyError> {
        if self.held.get(&(annotator.to_string(), mode)).map(String::as_str) != Some(task_id) {
            return Err(StudyError::TaskNotAssigned);
        }
        self.slots
            .get(task_id)
            .and_then(|s| s.holder.as_ref())
            .map(|(_, swap)| *swap)
            .ok_or(StudyError::TaskNotAssigned)
    }

    pub fn progress(&self) -> &Progress {
        &self.progress
    }

    /// Path of a clip, if the id is well formed and the file exists.
    pub fn clip_path(&self, video_id: &str) -> Result<PathBuf, StudyError> {
        let not_found = || StudyError::NotFound(format!("video {video_id}"));
        if !is_plain_id(video_id) {
            return Err(not_found());
        }
        let path = self.dir.join(CLIPS_DIR).join(format!("{video_id}.avf"));
        if path.is_file() {
            Ok(path)
        } else {
            Err(not_found())
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Exactly the four dimension keys, each value accepted by `parse`.
fn parse_all<V, T: Copy>(
    values: &BTreeMap<String, V>,
    parse: impl Fn(&V) -> std::result::Result<T, String>,
) -> std::result::Result<[T; 4], String> {
    let mut out = [None; 4];
    for (key, v) in values {
        let d: Dimension = key
            .parse()
            .map_err(|e: aigvqa_core::dimension::ParseDimensionError| e.to_string())?;
        out[d.index()] = Some(parse(v).map_err(|e| format!("{key}: {e}"))?);
    }
    match out {
        [Some(a), Some(b), Some(c), Some(d)] => Ok([a, b, c, d]),
        _ => Err(format!("expected all four dimensions, got {}", values.len())),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SubmitError {
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error(transparent)]
    Storage(#[from] Error),
}
