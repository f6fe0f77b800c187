//! The `aigvqa` command line.
//!
//! Exit status: 0 on success, 1 for usage errors, 2 for invalid or
//! inconsistent data, 3 for I/O failures.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use aigvqa_core::assessor::predict as predict_video;
use aigvqa_core::assessor::{train, AssessorConfig, PromptCode};
use aigvqa_core::metrics::{evaluate_scores, KendallMode, ScoreVector};
use aigvqa_core::pairstudy::{
    aggregate, build_groups, enumerate_pairs, pair_accuracy, sample_pairs, win_rates, Choice, GroupBy, PairJudgment,
    PairSpec, PairVerdict, VideoMeta,
};
use aigvqa_core::subjective::{compute_mos, ConstantRaterPolicy, MosRecord};
use aigvqa_core::synthgen::SynthConfig;
use aigvqa_core::taxonomy::{categorize, KeywordTable, PromptCategories, PromptRecord};
use aigvqa_core::Dimension;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dataset::{gen_dataset, load_samples, manifest_root, read_manifest};
use crate::error::{Error, Result};
use crate::eval::{enabled_stages, run_protocol};
use crate::formats::{
    read_json, read_jsonl, read_mos_csv, read_ratings_csv, report_bytes, rounded_json, write_file, write_jsonl,
    write_mos_csv, write_win_rate_csv,
};
use crate::service::{self, Study, StudyConfig};
use crate::store::{load_checkpoint, read_avf, save_checkpoint};

#[derive(Debug, Parser)]
#[command(
    name = "aigvqa",
    version,
    about = "Quality assessment toolkit for AI-generated videos"
)]
struct Cli {
    /// Print a machine-readable JSON report on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Assign prompts to keyword subcategories and a complexity level.
    Categorize {
        /// Prompt records, JSON Lines.
        #[arg(long)]
        prompts: PathBuf,
        /// Keyword table JSON; the built-in table when omitted.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn raw 1-5 ratings into per-video mean opinion scores.
    Mos {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Treatment of a subject whose ratings in a dimension are all equal.
        #[arg(long, value_enum, default_value_t = PolicyArg::Drop)]
        policy: PolicyArg,
    },
    /// Pair enumeration, sampling and majority-vote aggregation.
    #[command(subcommand)]
    Pairs(PairsCommand),
    /// Win rates per model, dimension and prompt category.
    Leaderboard {
        #[arg(long)]
        verdicts: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        /// Video metadata, JSON Lines.
        #[arg(long)]
        videos: PathBuf,
        /// Output of `categorize`; required unless grouping by `all`.
        #[arg(long)]
        categories: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = GroupArg::All)]
        group_by: GroupArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlate predicted scores with MOS; optionally score pair verdicts.
    Metrics {
        /// Predictions, same columns as a MOS CSV.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth MOS CSV.
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_enum, default_value_t = KendallArg::TauA)]
        kendall: KendallArg,
        /// Pair specs for pair accuracy (with --verdicts). A pair counts as
        /// predicting A when video_a scores at least as high as video_b.
        #[arg(long, requires = "verdicts")]
        pairs: Option<PathBuf>,
        #[arg(long, requires = "pairs")]
        verdicts: Option<PathBuf>,
        /// Write the report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset with known ground truth.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        frames: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 8.0)]
        fps: f64,
    },
    /// Train the assessor on every clip of a manifest.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Checkpoint path.
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch losses, JSON Lines.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Ten-split train/test evaluation; reports mean and std per metric.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Score clips with a trained checkpoint.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        /// JSON Lines of `{video_id, path, prompt}`; paths are relative to
        /// this file. A synthetic manifest qualifies.
        #[arg(long)]
        manifest: PathBuf,
        /// Prediction CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the annotation service.
    Serve {
        /// Study directory.
        #[arg(long)]
        study: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = service::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Static UI files; `<study>/ui` when omitted.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        /// Annotators per pair.
        #[arg(long, default_value_t = 3)]
        pair_quota: usize,
    },
}

#[derive(Debug, Subcommand)]
enum PairsCommand {
    /// Every pair within each prompt group.
    Enumerate {
        /// Video metadata, JSON Lines.
        #[arg(long)]
        videos: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Check that open-source models supply this many variants per prompt.
        #[arg(long, requires = "closed_variants")]
        open_variants: Option<u32>,
        #[arg(long, requires = "open_variants")]
        closed_variants: Option<u32>,
    },
    /// Uniform sample without replacement.
    Sample {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Majority verdict per pair and dimension.
    Aggregate {
        #[arg(long)]
        judgments: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Drop,
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GroupArg {
    All,
    Spatial,
    Temporal,
    Attribute,
    Complexity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KendallArg {
    TauA,
    TauB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Ablation {
    NoTemporal,
    NoLevel,
    FreezeEncoders,
}

fn triple<T: std::str::FromStr>(text: &str) -> std::result::Result<[T; 3], String>
where
    T::Err: std::fmt::Display,
{
    let parts: Vec<T> = text
        .split(',')
        .map(|p| p.trim().parse().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    <[T; 3]>::try_from(parts).map_err(|p| format!("expected three comma-separated values, got {}", p.len()))
}

#[derive(Debug, Args)]
struct HyperArgs {
    /// Comma-separated subset of no-temporal, no-level, freeze-encoders.
    #[arg(long, value_enum, value_delimiter = ',')]
    ablate: Vec<Ablation>,
    /// Epochs of stages 1, 2 and 3.
    #[arg(long, value_parser = triple::<usize>)]
    epochs: Option<[usize; 3]>,
    /// Learning rates of stages 1, 2 and 3.
    #[arg(long, value_parser = triple::<f64>)]
    lr: Option<[f64; 3]>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    stage3_pairs: Option<usize>,
}

impl HyperArgs {
    fn apply(&self, mut c: AssessorConfig, seed: u64) -> AssessorConfig {
        c.seed = seed;
        for a in &self.ablate {
            match a {
                Ablation::NoTemporal => c.use_temporal = false,
                Ablation::NoLevel => c.use_level_stage = false,
                Ablation::FreezeEncoders => c.finetune_encoders_stage2 = false,
            }
        }
        if let Some(e) = self.epochs {
            c.epochs = e;
        }
        if let Some(lr) = self.lr {
            c.learning_rates = lr;
        }
        if let Some(b) = self.batch_size {
            c.batch_size = b;
        }
        if let Some(p) = self.stage3_pairs {
            c.stage3_pairs = p;
        }
        c
    }
}

/// One line of a `categorize` output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorizedPrompt {
    pub prompt_id: String,
    #[serde(flatten)]
    pub categories: PromptCategories,
}

/// The fields of a manifest line that prediction needs.
#[derive(Debug, Deserialize)]
struct ClipRef {
    video_id: String,
    path: String,
    prompt: String,
}

struct Ctx {
    json: bool,
}

impl Ctx {
    /// Prints `report` as JSON with --json, otherwise the human summary.
    fn report<T: Serialize>(&self, report: &T, human: impl FnOnce() -> String) {
        let mut out = std::io::stdout().lock();
        let text = if self.json {
            String::from_utf8(report_bytes(report)).expect("JSON is UTF-8")
        } else {
            let mut s = human();
            if !s.ends_with('\n') {
                s.push('\n');
            }
            s
        };
        let _ = out.write_all(text.as_bytes());
    }
}

fn config_for_clips(manifest: &Path, first_path: &str, base: AssessorConfig) -> Result<AssessorConfig> {
    let clip = read_avf(&manifest_root(manifest).join(first_path))?;
    Ok(AssessorConfig {
        frames: clip.frames,
        height: clip.height,
        width: clip.width,
        ..base
    })
}

fn cmd_categorize(ctx: &Ctx, prompts: &Path, table: Option<&Path>, out: &Path) -> Result<()> {
    let table = match table {
        Some(p) => read_json::<KeywordTable>(p)?,
        None => KeywordTable::default(),
    };
    table.validate()?;
    let records: Vec<PromptRecord> = read_jsonl(prompts)?;
    let mut seen = BTreeSet::new();
    let mut rows = Vec::with_capacity(records.len());
    for r in &records {
        if !seen.insert(r.prompt_id.as_str()) {
            return Err(Error::Data(format!("duplicate prompt_id {}", r.prompt_id)));
        }
        if r.text.trim().is_empty() {
            return Err(Error::Data(format!("prompt {} has empty text", r.prompt_id)));
        }
        rows.push(CategorizedPrompt {
            prompt_id: r.prompt_id.clone(),
            categories: categorize(r, &table),
        });
    }
    write_jsonl(out, &rows)?;
    ctx.report(&serde_json::json!({ "prompts": rows.len() }), || {
        format!("categorized {} prompts into {}", rows.len(), out.display())
    });
    Ok(())
}

fn cmd_mos(ctx: &Ctx, ratings: &Path, out: &Path, policy: PolicyArg) -> Result<()> {
    let policy = match policy {
        PolicyArg::Drop => ConstantRaterPolicy::Drop,
        PolicyArg::Midpoint => ConstantRaterPolicy::Midpoint,
    };
    let raw = read_ratings_csv(ratings)?;
    let result = compute_mos(&raw, policy)?;
    write_mos_csv(out, &result.records)?;
    let warnings: Vec<String> = result
        .warnings
        .iter()
        .map(|w| {
            format!(
                "subject {} gave constant {} ratings ({:?})",
                w.subject_id, w.dimension, w.policy
            )
        })
        .collect();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    ctx.report(
        &serde_json::json!({ "ratings": raw.len(), "records": result.records.len(), "warnings": warnings }),
        || format!("wrote {} MOS records to {}", result.records.len(), out.display()),
    );
    Ok(())
}

fn cmd_pairs(ctx: &Ctx, cmd: &PairsCommand) -> Result<()> {
    match cmd {
        PairsCommand::Enumerate {
            videos,
            out,
            open_variants,
            closed_variants,
        } => {
            let meta: Vec<VideoMeta> = read_jsonl(videos)?;
            let groups = match (open_variants, closed_variants) {
                (Some(o), Some(c)) => build_groups(&meta, *o, *c)?,
                _ => {
                    let mut g: BTreeMap<String, Vec<String>> = BTreeMap::new();
                    for m in &meta {
                        g.entry(m.prompt_id.clone()).or_default().push(m.video_id.clone());
                    }
                    g
                }
            };
            let mut pairs: Vec<PairSpec> = Vec::new();
            for (prompt, group) in &groups {
                pairs.extend(enumerate_pairs(prompt, group)?);
            }
            write_jsonl(out, &pairs)?;
            ctx.report(
                &serde_json::json!({ "groups": groups.len(), "pairs": pairs.len() }),
                || {
                    format!(
                        "wrote {} pairs from {} prompt groups to {}",
                        pairs.len(),
                        groups.len(),
                        out.display()
                    )
                },
            );
        }
        PairsCommand::Sample { pairs, n, seed, out } => {
            let pool: Vec<PairSpec> = read_jsonl(pairs)?;
            let picked = sample_pairs(&pool, *n, *seed)?;
            write_jsonl(out, &picked)?;
            ctx.report(
                &serde_json::json!({ "pool": pool.len(), "pairs": picked.len() }),
                || {
                    format!(
                        "sampled {} of {} pairs into {}",
                        picked.len(),
                        pool.len(),
                        out.display()
                    )
                },
            );
        }
        PairsCommand::Aggregate { judgments, out } => {
            let all: Vec<PairJudgment> = read_jsonl(judgments)?;
            let verdicts = aggregate(&all);
            write_jsonl(out, &verdicts)?;
            ctx.report(
                &serde_json::json!({ "judgments": all.len(), "verdicts": verdicts.len() }),
                || {
                    format!(
                        "wrote {} verdicts from {} judgments to {}",
                        verdicts.len(),
                        all.len(),
                        out.display()
                    )
                },
            );
        }
    }
    Ok(())
}

fn read_categories(path: &Path) -> Result<BTreeMap<String, PromptCategories>> {
    Ok(read_jsonl::<CategorizedPrompt>(path)?
        .into_iter()
        .map(|c| (c.prompt_id, c.categories))
        .collect())
}

fn cmd_leaderboard(
    ctx: &Ctx,
    verdicts: &Path,
    pairs: &Path,
    videos: &Path,
    categories: Option<&Path>,
    group: GroupArg,
    out: &Path,
) -> Result<()> {
    let group_by = match group {
        GroupArg::All => GroupBy::All,
        GroupArg::Spatial => GroupBy::Spatial,
        GroupArg::Temporal => GroupBy::Temporal,
        GroupArg::Attribute => GroupBy::Attribute,
        GroupArg::Complexity => GroupBy::Complexity,
    };
    if group_by != GroupBy::All && categories.is_none() {
        return Err(Error::Data("grouping by category needs --categories".into()));
    }
    let verdicts: Vec<PairVerdict> = read_jsonl(verdicts)?;
    let pairs: Vec<PairSpec> = read_jsonl(pairs)?;
    let meta: Vec<VideoMeta> = read_jsonl(videos)?;
    let cats = categories.map(read_categories).transpose()?;
    let mut rows = Vec::new();
    for d in Dimension::ALL {
        rows.extend(win_rates(&verdicts, &pairs, &meta, cats.as_ref(), group_by, d)?.rows);
    }
    write_win_rate_csv(out, &rows)?;
    ctx.report(&rows, || {
        format!("wrote {} win-rate rows to {}", rows.len(), out.display())
    });
    Ok(())
}

fn score_vectors(records: &[MosRecord], what: &Path) -> Result<BTreeMap<Dimension, BTreeMap<String, f64>>> {
    let mut out: BTreeMap<Dimension, BTreeMap<String, f64>> = BTreeMap::new();
    for r in records {
        if out
            .entry(r.dimension)
            .or_default()
            .insert(r.video_id.clone(), r.mos)
            .is_some()
        {
            return Err(Error::Data(format!(
                "{}: duplicate row for {} {}",
                what.display(),
                r.video_id,
                r.dimension
            )));
        }
    }
    Ok(out)
}

fn cmd_metrics(
    ctx: &Ctx,
    pred: &Path,
    gt: &Path,
    kendall: KendallArg,
    pairs_and_verdicts: Option<(&Path, &Path)>,
    out: Option<&Path>,
) -> Result<()> {
    let p = score_vectors(&read_mos_csv(pred)?, pred)?;
    let g = score_vectors(&read_mos_csv(gt)?, gt)?;
    let mut pv = BTreeMap::new();
    let mut gv = BTreeMap::new();
    for (dim, scores) in &p {
        let truth = g
            .get(dim)
            .ok_or_else(|| Error::Data(format!("ground truth has no {dim} rows")))?;
        if truth.keys().ne(scores.keys()) {
            return Err(Error::Data(format!(
                "predicted and ground-truth {dim} rows cover different videos"
            )));
        }
        pv.insert(*dim, ScoreVector::new(scores.iter().map(|(k, v)| (k.clone(), *v))));
        gv.insert(*dim, ScoreVector::new(truth.iter().map(|(k, v)| (k.clone(), *v))));
    }
    let mode = match kendall {
        KendallArg::TauA => KendallMode::TauA,
        KendallArg::TauB => KendallMode::TauB,
    };
    let mut report = evaluate_scores(&pv, &gv, mode)?;
    if let Some((pairs, verdicts)) = pairs_and_verdicts {
        let pairs: Vec<PairSpec> = read_jsonl(pairs)?;
        let verdicts: Vec<PairVerdict> = read_jsonl(verdicts)?;
        for (dim, m) in report.dimensions.iter_mut() {
            let scores = &p[dim];
            let score = |id: &str| {
                scores
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::Data(format!("no {dim} prediction for {id}")))
            };
            let mut predicted = BTreeMap::new();
            for pair in &pairs {
                let choice = if score(&pair.video_a)? >= score(&pair.video_b)? {
                    Choice::A
                } else {
                    Choice::B
                };
                predicted.insert(pair.pair_id.clone(), choice);
            }
            m.pair_acc = Some(pair_accuracy(&predicted, &verdicts, *dim)?);
        }
    }
    if let Some(out) = out {
        write_file(out, &report_bytes(&report))?;
    }
    ctx.report(&report, || {
        let mut s = String::from("dimension  srcc      plcc      krcc      pair_acc\n");
        for (d, m) in &report.dimensions {
            let acc = m.pair_acc.map_or("-".to_string(), |a| format!("{a:.6}"));
            s += &format!(
                "{:<10} {:.6}  {:.6}  {:.6}  {acc}\n",
                d.as_str(),
                m.srcc,
                m.plcc,
                m.krcc
            );
        }
        s
    });
    Ok(())
}

fn cmd_synth(ctx: &Ctx, n: usize, seed: u64, out: &Path, config: SynthConfig) -> Result<()> {
    let entries = gen_dataset(out, n, seed, &config)?;
    ctx.report(&serde_json::json!({ "clips": entries.len(), "dir": out }), || {
        format!("generated {} clips in {}", entries.len(), out.display())
    });
    Ok(())
}

fn cmd_train(ctx: &Ctx, manifest: &Path, seed: u64, out: &Path, log: Option<&Path>, hyper: &HyperArgs) -> Result<()> {
    let entries = read_manifest(manifest)?;
    let first = entries.first().ok_or_else(|| Error::Data("manifest is empty".into()))?;
    let config = config_for_clips(manifest, &first.path, hyper.apply(AssessorConfig::default(), seed))?;
    let samples = load_samples(manifest, &entries, &config)?;
    let outcome = train(&config, &samples, &enabled_stages(&config))?;
    save_checkpoint(&outcome.params, &config, out)?;
    if let Some(log) = log {
        write_jsonl(log, &outcome.log)?;
    }
    let last: BTreeMap<u8, f64> = outcome.log.iter().map(|l| (l.stage.number(), l.loss)).collect();
    ctx.report(
        &serde_json::json!({ "clips": samples.len(), "final_loss": last, "checkpoint": out }),
        || {
            let losses: Vec<String> = last.iter().map(|(s, l)| format!("stage {s} {l:.6}")).collect();
            format!(
                "trained on {} clips ({}); checkpoint {}",
                samples.len(),
                losses.join(", "),
                out.display()
            )
        },
    );
    Ok(())
}

fn cmd_eval(ctx: &Ctx, manifest: &Path, seed: u64, out: Option<&Path>, hyper: &HyperArgs) -> Result<()> {
    let entries = read_manifest(manifest)?;
    let first = entries.first().ok_or_else(|| Error::Data("manifest is empty".into()))?;
    let config = config_for_clips(manifest, &first.path, hyper.apply(AssessorConfig::default(), seed))?;
    let samples = load_samples(manifest, &entries, &config)?;
    let ids: Vec<String> = entries.iter().map(|e| e.video_id.clone()).collect();
    let result = run_protocol(&config, &ids, &samples)?;
    if let Some(out) = out {
        write_file(out, &report_bytes(&result))?;
    }
    ctx.report(&result.summary, || {
        let mut s = format!(
            "{} splits\ndimension  srcc                plcc                krcc                pair_acc\n",
            result.splits.len()
        );
        for (d, m) in &result.summary {
            let f = |x: aigvqa_core::split::MeanStd| format!("{:.4} ± {:.4}", x.mean, x.std);
            let acc = m.pair_acc.map_or("-".to_string(), f);
            s += &format!(
                "{:<10} {}  {}  {}  {}\n",
                d.as_str(),
                f(m.srcc),
                f(m.plcc),
                f(m.krcc),
                acc
            );
        }
        s
    });
    Ok(())
}

fn cmd_predict(ctx: &Ctx, checkpoint: &Path, manifest: &Path, out: &Path) -> Result<()> {
    let (params, config) = load_checkpoint(checkpoint)?;
    let clips: Vec<ClipRef> = read_jsonl(manifest)?;
    let root = manifest_root(manifest);
    let mut records = Vec::with_capacity(clips.len() * 4);
    for c in &clips {
        let video = read_avf(&root.join(&c.path))?;
        let prediction = predict_video(
            &params,
            &config,
            &video,
            &PromptCode::from_prompt(&c.prompt, config.prompt_buckets),
        )?;
        for d in Dimension::ALL {
            records.push(MosRecord {
                video_id: c.video_id.clone(),
                dimension: d,
                mos: prediction.scores[d.index()],
                rater_count: 0,
            });
        }
    }
    records.sort_by(|a, b| (&a.video_id, a.dimension).cmp(&(&b.video_id, b.dimension)));
    write_mos_csv(out, &records)?;
    ctx.report(&serde_json::json!({ "clips": clips.len() }), || {
        format!("scored {} clips into {}", clips.len(), out.display())
    });
    Ok(())
}

fn cmd_serve(
    study: &Path,
    seed: u64,
    host: &str,
    port: u16,
    static_dir: Option<&Path>,
    pair_quota: usize,
) -> Result<()> {
    let config = StudyConfig {
        seed,
        pair_quota,
        ..StudyConfig::default()
    };
    let state = Study::open(study, config)?;
    let static_dir = static_dir.map_or_else(|| study.join("ui"), Path::to_path_buf);
    let addr = format!("{host}:{port}");
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::io(&addr, e))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Error::io(&addr, e))?;
        eprintln!(
            "serving {} on http://{}",
            study.display(),
            listener.local_addr().map_err(|e| Error::io(&addr, e))?
        );
        service::serve(listener, service::router(state, &static_dir))
            .await
            .map_err(|e| Error::io(&addr, e))
    })
}

fn dispatch(cli: Cli) -> Result<()> {
    let ctx = Ctx { json: cli.json };
    match &cli.command {
        Command::Categorize { prompts, table, out } => cmd_categorize(&ctx, prompts, table.as_deref(), out),
        Command::Mos { ratings, out, policy } => cmd_mos(&ctx, ratings, out, *policy),
        Command::Pairs(cmd) => cmd_pairs(&ctx, cmd),
        Command::Leaderboard {
            verdicts,
            pairs,
            videos,
            categories,
            group_by,
            out,
        } => cmd_leaderboard(&ctx, verdicts, pairs, videos, categories.as_deref(), *group_by, out),
        Command::Metrics {
            pred,
            gt,
            kendall,
            pairs,
            verdicts,
            out,
        } => {
            let pv = pairs.as_deref().zip(verdicts.as_deref());
            cmd_metrics(&ctx, pred, gt, *kendall, pv, out.as_deref())
        }
        Command::Synth {
            n,
            seed,
            out,
            frames,
            height,
            width,
            fps,
        } => cmd_synth(
            &ctx,
            *n,
            *seed,
            out,
            SynthConfig {
                frames: *frames,
                height: *height,
                width: *width,
                fps: *fps,
            },
        ),
        Command::Train {
            manifest,
            seed,
            out,
            log,
            hyper,
        } => cmd_train(&ctx, manifest, *seed, out, log.as_deref(), hyper),
        Command::Eval {
            manifest,
            seed,
            out,
            hyper,
        } => cmd_eval(&ctx, manifest, *seed, out.as_deref(), hyper),
        Command::Predict {
            checkpoint,
            manifest,
            out,
        } => cmd_predict(&ctx, checkpoint, manifest, out),
        Command::Serve {
            study,
            seed,
            port,
            host,
            static_dir,
            pair_quota,
        } => cmd_serve(study, *seed, host, *port, static_dir.as_deref(), *pair_quota),
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit status.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let json = cli.json;
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            if json {
                let body = serde_json::json!({ "error": e.to_string(), "exit_code": e.exit_code() });
                println!("{}", rounded_json(&body));
            }
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}


#[cfg(test)]
mod table_file {
    use aigvqa_core::taxonomy::KeywordTable;

    #[test]
    fn shipped_keyword_table_is_the_builtin() {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/keyword_table.json");
        if std::env::var_os("AIGVQA_WRITE_TABLE").is_some() {
            let text = serde_json::to_string_pretty(&KeywordTable::default()).unwrap() + "\n";
            std::fs::write(&path, text).unwrap();
        }
        let shipped: KeywordTable = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(shipped, KeywordTable::default());
    }
}
