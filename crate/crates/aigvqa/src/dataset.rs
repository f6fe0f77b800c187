//! Synthetic datasets on disk: AVF clips, a JSONL manifest and the
//! generator ground truth as a MOS-shaped CSV.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use aigvqa_core::assessor::{AssessorConfig, PromptCode, VideoSample};
use aigvqa_core::subjective::MosRecord;
use aigvqa_core::synthgen::{concept_prompt, draw_specs, gen_clip, ClipSpec, GroundTruth, SynthConfig};
use aigvqa_core::{mos_to_level, Dimension, QualityLevel};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formats::{read_jsonl, write_jsonl, write_mos_csv};
use crate::store::{read_avf, write_avf};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";
pub const CLIPS_DIR: &str = "clips";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub video_id: String,
    /// Relative to the manifest's directory.
    pub path: String,
    pub prompt: String,
    pub spec: ClipSpec,
    pub ground_truth: GroundTruth,
    pub levels: BTreeMap<Dimension, QualityLevel>,
}

impl ManifestEntry {
    pub fn new(index: usize, spec: ClipSpec) -> Self {
        let video_id = format!("clip_{index:05}");
        let ground_truth = spec.ground_truth();
        ManifestEntry {
            path: format!("{CLIPS_DIR}/{video_id}.avf"),
            video_id,
            prompt: concept_prompt(spec.prompt_concept()),
            spec,
            ground_truth,
            levels: Dimension::ALL.into_iter().zip(ground_truth.levels()).collect(),
        }
    }

    /// Do the stored levels agree with the stored scores?
    pub fn levels_consistent(&self) -> bool {
        Dimension::ALL
            .into_iter()
            .all(|d| mos_to_level(self.ground_truth.get(d)).ok() == self.levels.get(&d).copied())
    }
}

/// Ground truth as MOS records. `rater_count` is 0: no human rated these.
pub fn ground_truth_records(entries: &[ManifestEntry]) -> Vec<MosRecord> {
    entries
        .iter()
        .flat_map(|e| {
            Dimension::ALL.into_iter().map(|d| MosRecord {
                video_id: e.video_id.clone(),
                dimension: d,
                mos: e.ground_truth.get(d),
                rater_count: 0,
            })
        })
        .collect()
}

/// Draws `n` clip specs from `seed`, renders them into `dir/clips` and
/// writes the manifest and ground-truth table.
pub fn gen_dataset(dir: &Path, n: usize, seed: u64, config: &SynthConfig) -> Result<Vec<ManifestEntry>> {
    if n == 0 {
        return Err(Error::Data("dataset needs at least one clip".into()));
    }
    let clips = dir.join(CLIPS_DIR);
    std::fs::create_dir_all(&clips).map_err(|e| Error::io(&clips, e))?;
    let entries: Vec<ManifestEntry> = draw_specs(n, seed)
        .into_iter()
        .enumerate()
        .map(|(i, s)| ManifestEntry::new(i, s))
        .collect();
    for e in &entries {
        let (video, _) = gen_clip(&e.spec, config)?;
        write_avf(&video, &dir.join(&e.path))?;
    }
    write_jsonl(&dir.join(MANIFEST_FILE), &entries)?;
    write_mos_csv(&dir.join(GROUND_TRUTH_FILE), &ground_truth_records(&entries))?;
    Ok(entries)
}

/// Reads a manifest, checking level consistency and unique ids.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let entries: Vec<ManifestEntry> = read_jsonl(path)?;
    let mut seen = std::collections::BTreeSet::new();
    for e in &entries {
        if !seen.insert(e.video_id.as_str()) {
            return Err(Error::Data(format!(
                "{}: duplicate video_id {}",
                path.display(),
                e.video_id
            )));
        }
        if !e.levels_consistent() {
            return Err(Error::Data(format!(
                "{}: levels of {} disagree with its scores",
                path.display(),
                e.video_id
            )));
        }
    }
    Ok(entries)
}

/// Directory that manifest-relative clip paths resolve against.
pub fn manifest_root(manifest: &Path) -> PathBuf {
    manifest.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

/// Loads every clip and extracts its features for training or evaluation.
pub fn load_samples(manifest: &Path, entries: &[ManifestEntry], config: &AssessorConfig) -> Result<Vec<VideoSample>> {
    let root = manifest_root(manifest);
    entries
        .iter()
        .map(|e| {
            let video = read_avf(&root.join(&e.path))?;
            let prompt = PromptCode::from_prompt(&e.prompt, config.prompt_buckets);
            Ok(VideoSample::new(&video, prompt, e.ground_truth.to_array(), config)?)
        })
        .collect()
}
