//! End-to-end orchestration with content-addressed step caching.
//!
//! Every step reads its inputs from files and writes its outputs under the
//! run directory. A step's fingerprint hashes its name, its parameters and
//! the digests of the files it reads; when the fingerprint and all output
//! digests match the previous `manifest.json`, the step is skipped.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{
    self, load_table, read_jsonl, write_jsonl, write_table, CommentRecord, PhotoRecord, SnapshotConfig, Table,
    UserRecord,
};
use crate::error::{Error, Result};
use crate::features::{aggregate_users, assemble, FeatureMatrix, FeatureSet};
use crate::labeler::{label_users, LabelSummary, LabelVector};
use crate::learn::cv::aligned_labels;
use crate::learn::metrics::THRESHOLD;
use crate::learn::{evaluate, EvalReport, Hyperparameters, ModelKind, ModelSpec};
use crate::report;
use crate::resources::{self, EmojiTable, SentimentLexicon, WordSet};
use crate::stats::{characterize, correlation_columns, ClassSource};
use crate::textfeat::{CommentFeatures, TextFeaturizer, SECONDS_PER_CHAR};
use crate::textprep::{CleanComment, DroppedComment, Normalizer};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

/// Optional replacements for the bundled word lists and tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcePaths {
    pub lexicon: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub emoji_names: Option<PathBuf>,
    pub easy_words: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharacterizationConfig {
    pub source: ClassSource,
    /// Model whose out-of-fold predictions define the classes.
    pub model: ModelKind,
    /// Feature set that model is trained on.
    pub trained_on: FeatureSet,
    /// Feature set whose columns are compared between classes.
    pub describe: FeatureSet,
}

impl Default for CharacterizationConfig {
    fn default() -> Self {
        CharacterizationConfig {
            source: ClassSource::Predictions,
            model: ModelKind::RandomForest,
            trained_on: FeatureSet::UserPhoto,
            describe: FeatureSet::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub users: PathBuf,
    pub photos: PathBuf,
    pub comments: PathBuf,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub snapshot: SnapshotConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    #[serde(default = "default_sets")]
    pub feature_sets: Vec<FeatureSet>,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
    #[serde(default)]
    pub resources: ResourcePaths,
    #[serde(default = "default_spc")]
    pub seconds_per_char: f64,
    #[serde(default)]
    pub characterization: CharacterizationConfig,
}

fn default_k() -> usize {
    10
}

fn default_models() -> Vec<ModelKind> {
    ModelKind::ALL.to_vec()
}

fn default_sets() -> Vec<FeatureSet> {
    FeatureSet::GRID.to_vec()
}

fn default_spc() -> f64 {
    SECONDS_PER_CHAR
}

impl PipelineConfig {
    pub fn new(users: PathBuf, photos: PathBuf, comments: PathBuf, out_dir: PathBuf) -> Self {
        PipelineConfig {
            users,
            photos,
            comments,
            out_dir,
            snapshot: SnapshotConfig::default(),
            seed: 0,
            k: default_k(),
            models: default_models(),
            feature_sets: default_sets(),
            hyperparameters: Hyperparameters::default(),
            resources: ResourcePaths::default(),
            seconds_per_char: SECONDS_PER_CHAR,
            characterization: CharacterizationConfig::default(),
        }
    }

    /// Reads a JSON config; relative paths are resolved against the config
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<PipelineConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.users);
        resolve(&mut cfg.photos);
        resolve(&mut cfg.comments);
        resolve(&mut cfg.out_dir);
        for p in [
            &mut cfg.resources.lexicon,
            &mut cfg.resources.stopwords,
            &mut cfg.resources.emoji_names,
            &mut cfg.resources.easy_words,
        ]
        .into_iter()
        .flatten()
        {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.snapshot.validate()?;
        if self.k < 2 {
            return Err(Error::Config(format!("k must be at least 2, got {}", self.k)));
        }
        if self.models.is_empty() || self.feature_sets.is_empty() {
            return Err(Error::Config("models and feature_sets must be non-empty".into()));
        }
        if !(self.seconds_per_char > 0.0 && self.seconds_per_char.is_finite()) {
            return Err(Error::Config("seconds_per_char must be positive".into()));
        }
        Ok(())
    }

    fn require_file(path: &Path, what: &str) -> Result<()> {
        if path.is_file() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{what} file {} does not exist; fix the `{what}` entry in the config",
                path.display()
            )))
        }
    }

    /// Hash of every setting except file locations, which are covered by
    /// the input digests.
    pub fn settings_hash(&self) -> Result<String> {
        let settings = serde_json::json!({
            "snapshot": self.snapshot,
            "seed": self.seed,
            "k": self.k,
            "models": self.models,
            "feature_sets": self.feature_sets,
            "hyperparameters": self.hyperparameters,
            "seconds_per_char": self.seconds_per_char,
            "characterization": self.characterization,
        });
        Ok(sha256_hex(serde_json::to_string(&settings)?.as_bytes()))
    }

    /// (model, feature set) pairs evaluated: the configured grid, the
    /// random-forest comparison of score and social-activity summaries, and
    /// the characterization model.
    pub fn evaluation_plan(&self) -> Vec<(ModelKind, FeatureSet)> {
        let mut plan = Vec::new();
        for &m in &self.models {
            for &s in &self.feature_sets {
                plan.push((m, s));
            }
        }
        for extra in report::TABLE3_SETS
            .iter()
            .map(|&s| (report::TABLE3_MODEL, s))
            .chain(std::iter::once((
                self.characterization.model,
                self.characterization.trained_on,
            )))
        {
            if !plan.contains(&extra) {
                plan.push(extra);
            }
        }
        plan
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    Ingest,
    Textprep,
    Textfeat,
    Label,
    Featurize,
    Evaluate,
    Correlate,
    Characterize,
    Report,
}

impl Step {
    pub const ALL: [Step; 9] = [
        Step::Ingest,
        Step::Textprep,
        Step::Textfeat,
        Step::Label,
        Step::Featurize,
        Step::Evaluate,
        Step::Correlate,
        Step::Characterize,
        Step::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Step::Ingest => "ingest",
            Step::Textprep => "textprep",
            Step::Textfeat => "textfeat",
            Step::Label => "label",
            Step::Featurize => "featurize",
            Step::Evaluate => "evaluate",
            Step::Correlate => "correlate",
            Step::Characterize => "characterize",
            Step::Report => "report",
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Step {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Step::ALL
            .into_iter()
            .find(|step| step.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown step `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: String,
    pub fingerprint: String,
    /// Run-directory-relative path to sha256 digest.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    /// Input name (`users`, `photos`, `comments`, resource names) to digest.
    pub inputs: BTreeMap<String, String>,
    pub steps: Vec<StepRecord>,
}

impl RunManifest {
    pub fn step(&self, step: Step) -> Option<&StepRecord> {
        self.steps.iter().find(|r| r.step == step.name())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<RunManifest> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub executed: Vec<Step>,
    pub skipped: Vec<Step>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Run-directory-relative artifact locations.
pub mod paths {
    pub const USERS: &str = "ingest/users.jsonl";
    pub const PHOTOS: &str = "ingest/photos.jsonl";
    pub const COMMENTS: &str = "ingest/comments.jsonl";
    pub const REJECTS: &str = "ingest/rejects.jsonl";
    pub const INGEST_SUMMARY: &str = "ingest/summary.json";
    pub const CLEAN: &str = "textprep/clean.jsonl";
    pub const DROPPED: &str = "textprep/dropped.jsonl";
    pub const COMMENT_FEATURES: &str = "textfeat/comment_features.jsonl";
    pub const LABELS: &str = "label/labels.json";
    pub const LABEL_SUMMARY: &str = "label/summary.json";
    pub const REPORTS: &str = "eval/reports.json";
    pub const PREDICTIONS: &str = "eval/predictions.csv";
    pub const CORRELATION: &str = "stats/correlation.csv";
    pub const CORRELATION_LONG: &str = "stats/correlation_long.csv";
    pub const CHARACTERIZATION_JSON: &str = "stats/characterization.json";
    pub const CHARACTERIZATION_MD: &str = "stats/characterization.md";
    pub const ANOVA: &str = "stats/anova.csv";
    pub const CHARACTERIZATION_BARS: &str = "stats/characterization_bars.csv";

    pub fn features(set: crate::features::FeatureSet) -> String {
        format!("features/{}/features.csv", set.id())
    }

    pub fn features_manifest(set: crate::features::FeatureSet) -> String {
        format!("features/{}/manifest.json", set.id())
    }
}

/// Runs pipeline steps against one run directory.
pub struct Pipeline {
    cfg: PipelineConfig,
    dir: PathBuf,
}

struct Loaded {
    users: Vec<UserRecord>,
    photos: Vec<PhotoRecord>,
    comments: Vec<CommentRecord>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Pipeline> {
        cfg.validate()?;
        let dir = cfg.out_dir.clone();
        Ok(Pipeline { cfg, dir })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    /// Runs every step in order.
    pub fn run(&self) -> Result<RunOutcome> {
        self.run_steps(&Step::ALL)
    }

    /// Runs the given steps in pipeline order, each of which must find its
    /// upstream artifacts on disk. The manifest keeps records of steps not
    /// run this time.
    pub fn run_steps(&self, steps: &[Step]) -> Result<RunOutcome> {
        let mut steps = steps.to_vec();
        steps.sort();
        steps.dedup();
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let manifest_path = self.path(MANIFEST_FILE);
        let previous = if manifest_path.is_file() {
            match RunManifest::read(&manifest_path) {
                Ok(m) => Some(m),
                Err(e) => {
                    log::warn!("ignoring unreadable previous manifest: {e}");
                    None
                }
            }
        } else {
            None
        };
        let inputs = self.input_digests().map_err(|e| step_error(Step::Ingest, e))?;
        let config_hash = self.cfg.settings_hash()?;

        let mut records: BTreeMap<Step, StepRecord> = BTreeMap::new();
        if let Some(prev) = &previous {
            for r in &prev.steps {
                if let Ok(step) = r.step.parse::<Step>() {
                    records.insert(step, r.clone());
                }
            }
        }
        let mut executed = Vec::new();
        let mut skipped = Vec::new();
        for step in steps {
            let fingerprint = self.fingerprint(step, &inputs).map_err(|e| step_error(step, e))?;
            let cached = records
                .get(&step)
                .filter(|r| r.fingerprint == fingerprint && self.outputs_current(r));
            if cached.is_some() {
                log::info!("{step}: up to date, skipped");
                skipped.push(step);
                continue;
            }
            log::info!("{step}: running");
            let outputs = self.execute(step).map_err(|e| step_error(step, e))?;
            let mut digests = BTreeMap::new();
            for rel in outputs {
                let digest = file_digest(self.path(&rel)).map_err(|e| step_error(step, e))?;
                digests.insert(rel, digest);
            }
            records.insert(
                step,
                StepRecord {
                    step: step.name().to_string(),
                    fingerprint,
                    outputs: digests,
                },
            );
            executed.push(step);
        }
        let manifest = RunManifest {
            tool_version: TOOL_VERSION.to_string(),
            config_hash,
            inputs,
            steps: records.into_values().collect(),
        };
        write_json_pretty(&manifest_path, &manifest)?;
        Ok(RunOutcome {
            manifest,
            executed,
            skipped,
        })
    }

    fn outputs_current(&self, record: &StepRecord) -> bool {
        record
            .outputs
            .iter()
            .all(|(rel, digest)| file_digest(self.path(rel)).is_ok_and(|d| &d == digest))
    }

    fn input_digests(&self) -> Result<BTreeMap<String, String>> {
        PipelineConfig::require_file(&self.cfg.users, "users")?;
        PipelineConfig::require_file(&self.cfg.photos, "photos")?;
        PipelineConfig::require_file(&self.cfg.comments, "comments")?;
        let mut m = BTreeMap::new();
        m.insert("users".to_string(), file_digest(&self.cfg.users)?);
        m.insert("photos".to_string(), file_digest(&self.cfg.photos)?);
        m.insert("comments".to_string(), file_digest(&self.cfg.comments)?);
        let r = &self.cfg.resources;
        for (name, path, bundled) in [
            ("lexicon", &r.lexicon, resources::SENTIMENT_LEXICON),
            ("stopwords", &r.stopwords, resources::STOPWORDS),
            ("emoji_names", &r.emoji_names, resources::EMOJI_NAMES),
            ("easy_words", &r.easy_words, resources::EASY_WORDS),
        ] {
            let digest = match path {
                Some(p) => {
                    PipelineConfig::require_file(p, name)?;
                    file_digest(p)?
                }
                None => sha256_hex(bundled.as_bytes()),
            };
            m.insert(name.to_string(), digest);
        }
        Ok(m)
    }

    /// Digests of the run-directory files a step reads.
    fn upstream_digests(&self, rels: &[String]) -> Result<Vec<(String, String)>> {
        rels.iter()
            .map(|rel| {
                let p = self.path(rel);
                if !p.is_file() {
                    return Err(Error::InvalidArgument(format!(
                        "missing artifact {}; run the upstream step first",
                        p.display()
                    )));
                }
                Ok((rel.clone(), file_digest(p)?))
            })
            .collect()
    }

    fn step_reads(&self, step: Step) -> Vec<String> {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        match step {
            Step::Ingest => Vec::new(),
            Step::Textprep => s(&[paths::COMMENTS]),
            Step::Textfeat => s(&[paths::CLEAN]),
            Step::Label => s(&[paths::USERS]),
            Step::Featurize => s(&[paths::USERS, paths::PHOTOS, paths::COMMENTS, paths::COMMENT_FEATURES]),
            Step::Evaluate => {
                let mut v = s(&[paths::LABELS]);
                let mut sets: Vec<FeatureSet> = self.cfg.evaluation_plan().into_iter().map(|(_, s)| s).collect();
                sets.sort();
                sets.dedup();
                v.extend(sets.into_iter().map(paths::features));
                v
            }
            Step::Correlate => vec![paths::features(FeatureSet::All)],
            Step::Characterize => {
                let mut v = vec![paths::features(self.cfg.characterization.describe)];
                v.push(match self.cfg.characterization.source {
                    ClassSource::Predictions => paths::PREDICTIONS.to_string(),
                    ClassSource::GroundTruth => paths::LABELS.to_string(),
                });
                v
            }
            Step::Report => s(&[paths::REPORTS]),
        }
    }

    fn fingerprint(&self, step: Step, inputs: &BTreeMap<String, String>) -> Result<String> {
        let cfg = &self.cfg;
        let external: Vec<&str> = match step {
            Step::Ingest => vec!["users", "photos", "comments"],
            Step::Textprep => vec!["stopwords", "emoji_names"],
            Step::Textfeat => vec!["lexicon", "easy_words"],
            _ => Vec::new(),
        };
        let params = match step {
            Step::Ingest | Step::Featurize => serde_json::to_value(&cfg.snapshot)?,
            Step::Textfeat => serde_json::json!({ "seconds_per_char": cfg.seconds_per_char }),
            Step::Evaluate => serde_json::json!({
                "plan": cfg.evaluation_plan().iter().map(|(m, s)| format!("{m}/{s}")).collect::<Vec<_>>(),
                "k": cfg.k,
                "seed": cfg.seed,
                "hyperparameters": cfg.hyperparameters,
                "characterization": cfg.characterization,
            }),
            Step::Characterize => serde_json::to_value(&cfg.characterization)?,
            Step::Report => serde_json::json!({ "models": cfg.models, "feature_sets": cfg.feature_sets }),
            _ => serde_json::Value::Null,
        };
        let doc = serde_json::json!({
            "step": step.name(),
            "version": TOOL_VERSION,
            "params": params,
            "external": external.iter().map(|k| (k.to_string(), inputs[*k].clone())).collect::<BTreeMap<_, _>>(),
            "upstream": self.upstream_digests(&self.step_reads(step))?,
        });
        Ok(sha256_hex(serde_json::to_string(&doc)?.as_bytes()))
    }

    fn ensure_parent(&self, rel: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        Ok(p)
    }

    /// Runs one step and returns the files it wrote.
    fn execute(&self, step: Step) -> Result<Vec<String>> {
        match step {
            Step::Ingest => self.ingest(),
            Step::Textprep => self.textprep(),
            Step::Textfeat => self.textfeat(),
            Step::Label => self.label(),
            Step::Featurize => self.featurize(),
            Step::Evaluate => self.evaluate(),
            Step::Correlate => self.correlate(),
            Step::Characterize => self.characterize(),
            Step::Report => report::emit_reports(&self.dir, &self.cfg.models, &self.cfg.feature_sets),
        }
    }

    fn load_ingested(&self) -> Result<Loaded> {
        let users: Table<UserRecord> = load_table(self.path(paths::USERS))?;
        let photos: Table<PhotoRecord> = load_table(self.path(paths::PHOTOS))?;
        let comments: Table<CommentRecord> = load_table(self.path(paths::COMMENTS))?;
        Ok(Loaded {
            users: users.rows,
            photos: photos.rows,
            comments: comments.rows,
        })
    }

    fn ingest(&self) -> Result<Vec<String>> {
        let users = load_table::<UserRecord>(&self.cfg.users)?;
        let photos = load_table::<PhotoRecord>(&self.cfg.photos)?;
        let comments = load_table::<CommentRecord>(&self.cfg.comments)?;
        let ingested = dataset::ingest(users, photos, comments, &self.cfg.snapshot)?;
        let s = &ingested.summary;
        log::info!(
            "ingest: {} users loaded, {} after activity filter, {} after trim; {} photos, {} comments kept; {} rows rejected",
            s.users_loaded,
            s.users_after_activity_filter,
            s.users_after_trim,
            s.photos_retained,
            s.comments_retained,
            s.rejected_rows
        );
        write_table(self.ensure_parent(paths::USERS)?, &ingested.users)?;
        write_table(self.path(paths::PHOTOS), &ingested.photos)?;
        write_table(self.path(paths::COMMENTS), &ingested.comments)?;
        write_jsonl(self.path(paths::REJECTS), &ingested.rejects)?;
        write_json_pretty(&self.path(paths::INGEST_SUMMARY), &ingested.summary)?;
        Ok(vec![
            paths::USERS.into(),
            paths::PHOTOS.into(),
            paths::COMMENTS.into(),
            paths::REJECTS.into(),
            paths::INGEST_SUMMARY.into(),
        ])
    }

    pub fn normalizer(&self) -> Result<Normalizer> {
        let r = &self.cfg.resources;
        let stopwords = match &r.stopwords {
            Some(p) => WordSet::load(p)?,
            None => WordSet::bundled_stopwords(),
        };
        let emoji = match &r.emoji_names {
            Some(p) => EmojiTable::load(p)?,
            None => EmojiTable::bundled(),
        };
        Ok(Normalizer::new(stopwords, emoji))
    }

    pub fn text_featurizer(&self) -> Result<TextFeaturizer> {
        let r = &self.cfg.resources;
        Ok(TextFeaturizer {
            lexicon: match &r.lexicon {
                Some(p) => SentimentLexicon::load(p)?,
                None => SentimentLexicon::bundled(),
            },
            easy_words: match &r.easy_words {
                Some(p) => WordSet::load(p)?,
                None => WordSet::bundled_easy_words(),
            },
            seconds_per_char: self.cfg.seconds_per_char,
        })
    }

    fn textprep(&self) -> Result<Vec<String>> {
        let comments: Table<CommentRecord> = load_table(self.path(paths::COMMENTS))?;
        let batch = self.normalizer()?.normalize_all(&comments.rows);
        log::info!(
            "textprep: {} comments kept, {} dropped",
            batch.clean.len(),
            batch.dropped.len()
        );
        write_jsonl(self.ensure_parent(paths::CLEAN)?, &batch.clean)?;
        write_jsonl(self.path(paths::DROPPED), &batch.dropped)?;
        Ok(vec![paths::CLEAN.into(), paths::DROPPED.into()])
    }

    fn textfeat(&self) -> Result<Vec<String>> {
        let clean: Vec<CleanComment> = read_jsonl(self.path(paths::CLEAN))?;
        let feats = self.text_featurizer()?.features_all(&clean)?;
        write_jsonl(self.ensure_parent(paths::COMMENT_FEATURES)?, &feats)?;
        Ok(vec![paths::COMMENT_FEATURES.into()])
    }

    fn label(&self) -> Result<Vec<String>> {
        let users: Table<UserRecord> = load_table(self.path(paths::USERS))?;
        let labels = label_users(&users.rows)?;
        let summary = LabelSummary::from(&labels);
        log::info!(
            "label: {} of {} users professional ({:.2}%)",
            summary.positive_count,
            summary.total,
            100.0 * summary.prevalence
        );
        write_json_pretty(&self.ensure_parent(paths::LABELS)?, &labels)?;
        write_json_pretty(&self.path(paths::LABEL_SUMMARY), &summary)?;
        Ok(vec![paths::LABELS.into(), paths::LABEL_SUMMARY.into()])
    }

    fn featurize(&self) -> Result<Vec<String>> {
        let data = self.load_ingested()?;
        let feats: Vec<CommentFeatures> = read_jsonl(self.path(paths::COMMENT_FEATURES))?;
        let aggs = aggregate_users(&data.photos, &data.comments, &feats, &self.cfg.snapshot)?;
        let mut out = Vec::new();
        for set in FeatureSet::ALL_SETS {
            let m = assemble(set, &aggs, &data.users, &self.cfg.snapshot)?;
            m.write_with_manifest(self.path(&format!("features/{}", set.id())))?;
            out.push(paths::features(set));
            out.push(paths::features_manifest(set));
        }
        log::info!("featurize: wrote {} feature sets", FeatureSet::ALL_SETS.len());
        Ok(out)
    }

    pub fn labels(&self) -> Result<LabelVector> {
        read_json(&self.path(paths::LABELS))
    }

    pub fn features(&self, set: FeatureSet) -> Result<FeatureMatrix> {
        FeatureMatrix::read_csv(self.path(&paths::features(set)))
    }

    fn evaluate(&self) -> Result<Vec<String>> {
        let labels = self.labels()?;
        let cfg = &self.cfg;
        let mut reports: Vec<EvalReport> = Vec::new();
        let mut predictions = None;
        for (model, set) in cfg.evaluation_plan() {
            let matrix = self.features(set)?;
            let spec = ModelSpec::new(model, cfg.seed).with_params(cfg.hyperparameters.clone());
            let out = evaluate(&spec, &matrix, &labels, cfg.k)?;
            log::info!(
                "evaluate: {model} on {set}: accuracy {:.4}, AUC {:.4}, F1 {:.4}",
                out.report.accuracy,
                out.report.auc,
                out.report.f1
            );
            if model == cfg.characterization.model && set == cfg.characterization.trained_on {
                let y = aligned_labels(&matrix, &labels)?;
                predictions = Some((matrix.user_ids.clone(), out.oof_scores.clone(), y));
            }
            reports.push(out.report);
        }
        write_json_pretty(&self.ensure_parent(paths::REPORTS)?, &reports)?;
        let (ids, scores, y) = predictions.expect("plan includes the characterization model");
        let path = self.path(paths::PREDICTIONS);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(["user_id", "score", "predicted_professional", "is_professional"])?;
        for ((id, s), t) in ids.iter().zip(&scores).zip(&y) {
            w.write_record([
                id.as_str(),
                &s.to_string(),
                &(*s > THRESHOLD).to_string(),
                &t.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Ok(vec![paths::REPORTS.into(), paths::PREDICTIONS.into()])
    }

    fn correlate(&self) -> Result<Vec<String>> {
        let matrix = self.features(FeatureSet::All)?;
        let corr = matrix.correlation(&correlation_columns())?;
        corr.write_csv(self.ensure_parent(paths::CORRELATION)?)?;
        corr.write_long_csv(self.path(paths::CORRELATION_LONG))?;
        Ok(vec![paths::CORRELATION.into(), paths::CORRELATION_LONG.into()])
    }

    /// Predicted classes per user id from the evaluate step.
    pub fn predictions(&self) -> Result<BTreeMap<String, bool>> {
        let path = self.path(paths::PREDICTIONS);
        let mut reader = csv::Reader::from_path(&path)?;
        let mut out = BTreeMap::new();
        for rec in reader.records() {
            let rec = rec?;
            let flag = rec.get(2).unwrap_or("") == "true";
            out.insert(rec.get(0).unwrap_or("").to_string(), flag);
        }
        Ok(out)
    }

    fn characterize(&self) -> Result<Vec<String>> {
        let c = &self.cfg.characterization;
        let matrix = self.features(c.describe)?;
        let classes: BTreeMap<String, bool> = match c.source {
            ClassSource::Predictions => self.predictions()?,
            ClassSource::GroundTruth => self
                .labels()?
                .labels
                .into_iter()
                .map(|l| (l.user_id, l.is_professional))
                .collect(),
        };
        let flags = matrix
            .user_ids
            .iter()
            .map(|u| {
                classes
                    .get(u)
                    .copied()
                    .ok_or_else(|| Error::InvalidArgument(format!("no class for user {u}")))
            })
            .collect::<Result<Vec<bool>>>()?;
        let report = characterize(&matrix, &flags, c.source)?;
        log::info!(
            "characterize: {} professional vs {} non-professional",
            report.class_sizes.professional,
            report.class_sizes.non_professional
        );
        write_json_pretty(&self.ensure_parent(paths::CHARACTERIZATION_JSON)?, &report)?;
        write_text(&self.path(paths::CHARACTERIZATION_MD), &report.to_markdown())?;
        report.write_anova_csv(self.path(paths::ANOVA))?;
        report.write_bars_csv(self.path(paths::CHARACTERIZATION_BARS))?;
        Ok(vec![
            paths::CHARACTERIZATION_JSON.into(),
            paths::CHARACTERIZATION_MD.into(),
            paths::ANOVA.into(),
            paths::CHARACTERIZATION_BARS.into(),
        ])
    }

    pub fn dropped_comments(&self) -> Result<Vec<DroppedComment>> {
        read_jsonl(self.path(paths::DROPPED))
    }
}

fn step_error(step: Step, e: Error) -> Error {
    match e {
        Error::Step { .. } => e,
        other => Error::Step {
            step: step.name(),
            inner: Box::new(other),
        },
    }
}

/// Runs every step for `cfg`.
pub fn run_pipeline(cfg: PipelineConfig) -> Result<RunOutcome> {
    Pipeline::new(cfg)?.run()
}
