//! Disk-backed pipeline stages under a working directory, one subdirectory
//! per stage, each finished by a manifest.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{EvalSplit, PipelineConfig};
use super::manifest::{hash_config, hash_file, Manifest, MANIFEST_FILE};
use super::prepare::{annotate_sample, build_vocab, ground_truth, resolve_image_features, tag_support, AnnotatedSample, EncoderState};
use crate::captioner::{checkpoint, generate, AttentionTrace, EpochStats, Trainer, TrainingSample};
use crate::corpus::{emit_jsonl, ingest_jsonl, split_dataset, DatasetSplit, SampleBundle};
use crate::digest::{sha256_bytes, sha256_hex};
use crate::embeddings::{EmbeddingTable, Vocabulary};
use crate::entities::{EntityTag, Gazetteer};
use crate::insertion::{self, att_insert, ctx_insert, rand_insert, FilledRecord, Strategy};
use crate::matrix_file::{self, ARTICLE_MAGIC};
use crate::metrics::{evaluate, render_recall_table, render_strategy_table, GroundTruthRecord, MetricReport, TagRecallRow};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Annotate,
    Encode,
    Train,
    Generate,
    Insert,
    Evaluate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Annotate,
        Stage::Encode,
        Stage::Train,
        Stage::Generate,
        Stage::Insert,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Annotate => "annotate",
            Stage::Encode => "encode",
            Stage::Train => "train",
            Stage::Generate => "generate",
            Stage::Insert => "insert",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }

    /// Stages whose artifacts this one reads directly.
    pub fn inputs(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Annotate | Stage::Encode => &[Stage::Ingest],
            Stage::Train => &[Stage::Ingest, Stage::Annotate, Stage::Encode],
            Stage::Generate => &[Stage::Ingest, Stage::Annotate, Stage::Encode, Stage::Train],
            Stage::Insert => &[Stage::Ingest, Stage::Annotate, Stage::Generate],
            Stage::Evaluate => &[Stage::Ingest, Stage::Annotate, Stage::Insert],
            Stage::Report => &[Stage::Evaluate],
        }
    }

    /// Every stage that must have run before this one, in pipeline order.
    pub fn prerequisites(self) -> Vec<Stage> {
        let mut all = HashSet::new();
        let mut todo = self.inputs().to_vec();
        while let Some(s) = todo.pop() {
            if all.insert(s) {
                todo.extend_from_slice(s.inputs());
            }
        }
        let mut out: Vec<Stage> = all.into_iter().collect();
        out.sort();
        out
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Ran,
    UpToDate,
}

/// One generated template with the attention that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedTemplate {
    pub id: String,
    pub template: Vec<String>,
    pub trace: AttentionTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EncodedEntry {
    id: String,
    file: String,
    n_real_sentences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: Strategy,
    pub metrics: MetricReport,
}

/// Files written by a running stage, relative to the working directory.
struct Outputs<'a> {
    workdir: &'a Path,
    written: Vec<String>,
}

impl Outputs<'_> {
    fn write(&mut self, rel: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.workdir.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.written.push(rel.to_string());
        Ok(())
    }

    fn write_json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text)
    }

    fn write_jsonl<T: Serialize>(&mut self, rel: &str, rows: &[T]) -> Result<()> {
        let mut text = String::new();
        for r in rows {
            text.push_str(&serde_json::to_string(r)?);
            text.push('\n');
        }
        self.write(rel, text)
    }

    /// Records a file written by other means.
    fn record(&mut self, rel: &str) {
        self.written.push(rel.to_string());
    }
}

/// A working directory plus the configuration that drives it.
#[derive(Debug, Clone)]
pub struct Pipeline {
    workdir: PathBuf,
    config: PipelineConfig,
    force: bool,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, force: bool) -> Result<Self> {
        let config = config.finalize()?;
        let workdir = config
            .paths
            .workdir
            .clone()
            .ok_or_else(|| Error::Usage("no working directory configured (use --workdir)".into()))?;
        Ok(Pipeline {
            workdir,
            config,
            force,
        })
    }

    pub fn workdir(&self) -> &Path {
        &self.workdir
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    fn manifest_path(&self, stage: Stage) -> PathBuf {
        self.workdir.join(stage.name()).join(MANIFEST_FILE)
    }

    pub fn is_complete(&self, stage: Stage) -> bool {
        self.manifest_path(stage).is_file()
    }

    /// Settings that affect a stage's artifacts.
    fn config_hash(&self, stage: Stage) -> String {
        let c = &self.config;
        let section = match stage {
            Stage::Ingest => json!({ "seed": c.seed, "split": c.split }),
            Stage::Annotate => json!({ "vocab": c.vocab }),
            Stage::Encode => json!({ "encoder": c.encoder }),
            Stage::Train => json!({ "model": c.model, "training": c.training }),
            Stage::Generate => json!({ "eval_split": c.eval_split, "max_generate": c.max_generate }),
            Stage::Insert => json!({ "seed": c.seed, "strategies": c.strategies }),
            Stage::Evaluate | Stage::Report => json!({ "strategies": c.strategies }),
        };
        hash_config(&section)
    }

    fn external_inputs(&self, stage: Stage) -> Result<Vec<(&'static str, PathBuf)>> {
        let paths = &self.config.paths;
        Ok(match stage {
            Stage::Ingest => vec![("corpus", required(&paths.corpus, "corpus")?)],
            Stage::Annotate => paths
                .gazetteer
                .iter()
                .map(|p| Ok(("gazetteer", existing(p, "gazetteer")?)))
                .collect::<Result<_>>()?,
            Stage::Encode => vec![("embeddings", required(&paths.embeddings, "embeddings")?)],
            Stage::Insert if self.config.strategies.contains(&Strategy::Ctx) => {
                vec![("embeddings", required(&paths.embeddings, "embeddings")?)]
            }
            _ => Vec::new(),
        })
    }

    fn input_hashes(&self, stage: Stage) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for (label, path) in self.external_inputs(stage)? {
            out.insert(label.to_string(), hash_file(&path)?);
        }
        for s in stage.inputs() {
            out.insert(format!("{}/{MANIFEST_FILE}", s.name()), hash_file(&self.manifest_path(*s))?);
        }
        Ok(out)
    }

    /// Runs one stage, or does nothing when its manifest already matches the
    /// current inputs and settings.
    pub fn run(&self, stage: Stage) -> Result<StageOutcome> {
        if let Some(missing) = stage.prerequisites().into_iter().find(|s| !self.is_complete(*s)) {
            return Err(Error::MissingStage {
                stage: missing.name().to_string(),
            });
        }
        let config_hash = self.config_hash(stage);
        let inputs = self.input_hashes(stage)?;
        let manifest_path = self.manifest_path(stage);
        if manifest_path.is_file() && !self.force {
            let old = Manifest::load(&manifest_path)?;
            if old.config_hash != config_hash {
                return Err(Error::ConfigChanged {
                    stage: stage.name().to_string(),
                });
            }
            if old.inputs == inputs && self.verify(&old)? {
                log::info!("{stage}: up to date");
                return Ok(StageOutcome::UpToDate);
            }
        }

        let dir = self.workdir.join(stage.name());
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        log::info!("{stage}: running");
        let mut out = Outputs {
            workdir: &self.workdir,
            written: Vec::new(),
        };
        match stage {
            Stage::Ingest => self.ingest(&mut out)?,
            Stage::Annotate => self.annotate(&mut out)?,
            Stage::Encode => self.encode(&mut out)?,
            Stage::Train => self.train(&mut out)?,
            Stage::Generate => self.generate(&mut out)?,
            Stage::Insert => self.insert(&mut out)?,
            Stage::Evaluate => self.evaluate(&mut out)?,
            Stage::Report => self.report(&mut out)?,
        }
        let artifacts = out
            .written
            .iter()
            .map(|rel| Ok((rel.clone(), hash_file(&self.workdir.join(rel))?)))
            .collect::<Result<_>>()?;
        Manifest {
            stage: stage.name().to_string(),
            config_hash,
            inputs,
            artifacts,
        }
        .save(&manifest_path)?;
        Ok(StageOutcome::Ran)
    }

    fn verify(&self, manifest: &Manifest) -> Result<bool> {
        match manifest.verify(&self.workdir)? {
            None => Ok(true),
            Some(rel) => {
                log::warn!("{}: artifact {rel} is missing or modified, rebuilding", manifest.stage);
                Ok(false)
            }
        }
    }

    /// Runs every stage in order.
    pub fn run_all(&self) -> Result<Vec<(Stage, StageOutcome)>> {
        Stage::ALL
            .into_iter()
            .map(|s| Ok((s, self.run(s)?)))
            .collect()
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.workdir.join(rel)
    }

    fn read(&self, rel: &str) -> Result<String> {
        let p = self.path(rel);
        std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
    }

    fn read_json<T: for<'de> Deserialize<'de>>(&self, rel: &str) -> Result<T> {
        Ok(serde_json::from_str(&self.read(rel)?)?)
    }

    fn read_jsonl<T: for<'de> Deserialize<'de>>(&self, rel: &str) -> Result<Vec<T>> {
        parse_jsonl(&self.read(rel)?)
    }

    fn samples(&self) -> Result<Vec<SampleBundle>> {
        let got = ingest_jsonl(self.path("ingest/samples.jsonl"))?;
        if let Some(e) = got.errors.first() {
            return Err(Error::Data(format!("ingest/samples.jsonl line {}: {}", e.line, e.message)));
        }
        Ok(got.bundles)
    }

    fn split(&self) -> Result<DatasetSplit> {
        self.read_json("ingest/split.json")
    }

    fn eval_ids(&self) -> Result<Vec<String>> {
        let split = self.split()?;
        Ok(match self.config.eval_split {
            EvalSplit::Train => split.train,
            EvalSplit::Val => split.val,
            EvalSplit::Test => split.test,
        })
    }

    fn annotations(&self) -> Result<Vec<AnnotatedSample>> {
        self.read_jsonl("annotate/annotations.jsonl")
    }

    fn vocabulary(&self) -> Result<Vocabulary> {
        Vocabulary::from_json(&self.read("annotate/vocab.json")?)
    }

    fn embeddings(&self) -> Result<EmbeddingTable> {
        EmbeddingTable::load(required(&self.config.paths.embeddings, "embeddings")?)
    }

    /// Directory that relative image-feature references are resolved from.
    fn feature_base(&self) -> Option<PathBuf> {
        self.config
            .paths
            .corpus
            .as_ref()
            .and_then(|c| c.parent())
            .map(Path::to_path_buf)
    }

    fn ingest(&self, out: &mut Outputs) -> Result<()> {
        let corpus = required(&self.config.paths.corpus, "corpus")?;
        let got = ingest_jsonl(&corpus)?;
        if got.bundles.is_empty() {
            return Err(Error::Data(format!("{}: no valid samples", corpus.display())));
        }
        if !got.errors.is_empty() {
            log::warn!("{} corpus lines rejected, see ingest/errors.json", got.errors.len());
        }
        let ids: Vec<String> = got.bundles.iter().map(|b| b.id().to_string()).collect();
        let [a, b, c] = self.config.split;
        let split = split_dataset(&ids, (a, b, c), self.config.seed)?;
        let mut samples = Vec::new();
        emit_jsonl(&got.bundles, &mut samples).map_err(|e| Error::io("ingest/samples.jsonl", e))?;
        out.write("ingest/samples.jsonl", samples)?;
        out.write_json("ingest/split.json", &split)?;
        out.write_json("ingest/errors.json", &got.errors)?;
        let cfg = self.workdir.join("config.toml");
        std::fs::write(&cfg, self.config.to_toml()).map_err(|e| Error::io(&cfg, e))
    }

    fn annotate(&self, out: &mut Outputs) -> Result<()> {
        let bundles = self.samples()?;
        let gazetteer = match &self.config.paths.gazetteer {
            Some(p) => Gazetteer::load_tsv(p)?,
            None => Gazetteer::new(),
        };
        let annotated: Vec<AnnotatedSample> = bundles
            .par_iter()
            .map(|b| annotate_sample(b, &gazetteer))
            .collect::<Result<_>>()?;
        let train: HashSet<String> = self.split()?.train.into_iter().collect();
        let train_samples = || annotated.iter().filter(|a| train.contains(&a.id));
        let vocab = build_vocab(train_samples(), self.config.vocab.min_count, self.config.vocab.max_len);
        out.write_jsonl("annotate/annotations.jsonl", &annotated)?;
        out.write("annotate/vocab.json", vocab.to_json())?;
        out.write_json("annotate/tag_support.json", &tag_support(train_samples()))
    }

    fn encode(&self, out: &mut Outputs) -> Result<()> {
        let bundles = self.samples()?;
        let table = self.embeddings()?;
        let train: HashSet<String> = self.split()?.train.into_iter().collect();
        let state = EncoderState::fit(
            bundles.iter().filter(|b| train.contains(b.id())).map(|b| &b.article),
            self.config.encoder,
            &table,
        )?;
        out.write("encode/freq.json", state.freq.to_json())?;
        if let Some(pc) = &state.component {
            out.write_json("encode/component.json", pc)?;
        }
        let encodings = bundles
            .par_iter()
            .map(|b| state.encode(&b.article, &table))
            .collect::<Result<Vec<_>>>()?;
        let mut entries = Vec::with_capacity(bundles.len());
        for (b, enc) in bundles.iter().zip(&encodings) {
            let file = format!("encode/articles/{}.aenc", artifact_name(b.id()));
            let path = self.path(&file);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            matrix_file::save(&path, ARTICLE_MAGIC, &enc.matrix)?;
            out.record(&file);
            entries.push(EncodedEntry {
                id: b.id().to_string(),
                file,
                n_real_sentences: enc.n_real_sentences,
            });
        }
        out.write_json("encode/index.json", &entries)
    }

    /// Teacher-forcing inputs for the samples with the given ids, in order.
    fn training_samples(&self, ids: &[String], vocab: &Vocabulary) -> Result<Vec<TrainingSample>> {
        let entries: Vec<EncodedEntry> = self.read_json("encode/index.json")?;
        let files: HashMap<&str, &str> = entries.iter().map(|e| (e.id.as_str(), e.file.as_str())).collect();
        let annotated: HashMap<String, AnnotatedSample> =
            self.annotations()?.into_iter().map(|a| (a.id.clone(), a)).collect();
        let refs: HashMap<String, String> = self
            .samples()?
            .into_iter()
            .map(|b| (b.id().to_string(), b.image_feature_ref))
            .collect();
        let base = self.feature_base();
        let m = &self.config.model;
        ids.par_iter()
            .map(|id| {
                let missing = || Error::Data(format!("sample `{id}` has no prepared artifacts"));
                let file = files.get(id.as_str()).ok_or_else(missing)?;
                let a = annotated.get(id).ok_or_else(missing)?;
                let feature_ref = refs.get(id).ok_or_else(missing)?;
                Ok(TrainingSample {
                    tokens: vocab.encode_sequence(&a.template, self.config.vocab.max_len),
                    grid: resolve_image_features(feature_ref, base.as_deref(), m.regions, m.image_dim)?,
                    article: matrix_file::load(self.path(file), ARTICLE_MAGIC)?,
                })
            })
            .collect()
    }

    fn train(&self, out: &mut Outputs) -> Result<()> {
        let vocab = self.vocabulary()?;
        let samples = self.training_samples(&self.split()?.train, &vocab)?;
        let first = samples
            .first()
            .ok_or_else(|| Error::Data("training split is empty".into()))?;
        let (slots, word_dim) = first.article.dim();
        let dims = self.config.model.dims(vocab.len(), word_dim, slots);
        let mut trainer = Trainer::new(dims, self.config.training)?;
        let mut stats: Vec<EpochStats> = Vec::with_capacity(self.config.training.epochs);
        for _ in 0..self.config.training.epochs {
            let s = trainer.run_epoch(&samples)?;
            log::info!("train: epoch {} loss {:.4}", s.epoch, s.mean_loss);
            stats.push(s);
        }
        let losses = stats.iter().map(|s| s.mean_loss).collect();
        let meta = checkpoint::CheckpointMeta::new(&trainer.params, self.config.training, &vocab, losses);
        checkpoint::save(self.path("train/model.ncap"), &trainer.params, &meta)?;
        out.record("train/model.ncap");
        out.record("train/model.ncap.json");
        out.write_json("train/epochs.json", &stats)
    }

    fn generate(&self, out: &mut Outputs) -> Result<()> {
        let vocab = self.vocabulary()?;
        let (params, meta) = checkpoint::load(self.path("train/model.ncap"))?;
        meta.check_vocabulary(&vocab)?;
        let ids = self.eval_ids()?;
        let samples = self.training_samples(&ids, &vocab)?;
        let rows = ids
            .par_iter()
            .zip(&samples)
            .map(|(id, s)| {
                let (tokens, trace) = generate(&params, &s.grid, &s.article, self.config.max_generate)?;
                let template = tokens
                    .iter()
                    .map(|&t| vocab.decode(t).unwrap_or("<unk>").to_string())
                    .collect();
                Ok(GeneratedTemplate {
                    id: id.clone(),
                    template,
                    trace,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.write_jsonl("generate/templates.jsonl", &rows)
    }

    fn insert(&self, out: &mut Outputs) -> Result<()> {
        let templates: Vec<GeneratedTemplate> = self.read_jsonl("generate/templates.jsonl")?;
        let bundles: HashMap<String, SampleBundle> =
            self.samples()?.into_iter().map(|b| (b.id().to_string(), b)).collect();
        let annotated: HashMap<String, AnnotatedSample> =
            self.annotations()?.into_iter().map(|a| (a.id.clone(), a)).collect();
        let table = if self.config.strategies.contains(&Strategy::Ctx) {
            Some(self.embeddings()?)
        } else {
            None
        };
        for &strategy in &self.config.strategies {
            let records = templates
                .par_iter()
                .map(|g| {
                    let missing = || Error::Data(format!("generated sample `{}` is not in the corpus", g.id));
                    let article = &bundles.get(&g.id).ok_or_else(missing)?.article;
                    let index = annotated.get(&g.id).ok_or_else(missing)?.entity_index(article);
                    let template = crate::entities::TemplateCaption::from_strings(&g.template);
                    let filled = match strategy {
                        Strategy::Rand => rand_insert(&template, &index, sample_seed(self.config.seed, &g.id)),
                        Strategy::Ctx => {
                            ctx_insert(&template, article, &index, table.as_ref().expect("loaded for CtxIns"))
                        }
                        Strategy::Att => att_insert(&template, &g.trace, article, &index)?,
                    };
                    Ok(FilledRecord::new(&g.id, &template, filled))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut text = Vec::new();
            insertion::write_jsonl(&records, &mut text).map_err(|e| Error::io("insert", e))?;
            out.write(&format!("insert/{strategy}.jsonl"), text)?;
        }
        Ok(())
    }

    fn evaluate(&self, out: &mut Outputs) -> Result<()> {
        let bundles: HashMap<String, SampleBundle> =
            self.samples()?.into_iter().map(|b| (b.id().to_string(), b)).collect();
        let annotated: HashMap<String, AnnotatedSample> =
            self.annotations()?.into_iter().map(|a| (a.id.clone(), a)).collect();
        let gts = self
            .eval_ids()?
            .iter()
            .map(|id| match (bundles.get(id), annotated.get(id)) {
                (Some(b), Some(a)) => Ok(ground_truth(b, a)),
                _ => Err(Error::Data(format!("evaluated sample `{id}` is not in the corpus"))),
            })
            .collect::<Result<Vec<_>>>()?;
        out.write_jsonl("evaluate/ground_truth.jsonl", &gts)?;
        let support: BTreeMap<EntityTag, usize> = self.read_json("annotate/tag_support.json")?;
        for &strategy in &self.config.strategies {
            let preds = insertion::read_jsonl(&self.read(&format!("insert/{strategy}.jsonl"))?)?;
            let report = evaluate(&preds, &gts)?;
            let mut json = report.to_json();
            json.push('\n');
            out.write(&format!("evaluate/{strategy}.json"), json)?;
            let table = format!(
                "{}\npartial-match recall per tag\n{}",
                report.to_table(),
                render_recall_table(&recall_rows(&report, &support))
            );
            out.write(&format!("evaluate/{strategy}.txt"), table)?;
        }
        Ok(())
    }

    fn report(&self, out: &mut Outputs) -> Result<()> {
        let rows = self
            .config
            .strategies
            .iter()
            .filter(|s| self.path(&format!("evaluate/{s}.json")).is_file())
            .map(|&strategy| {
                Ok(StrategyReport {
                    strategy,
                    metrics: self.read_json(&format!("evaluate/{strategy}.json"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.is_empty() {
            return Err(Error::Data("nothing evaluated: run evaluate first".into()));
        }
        let table = render_strategy_table(rows.iter().map(|r| (r.strategy.as_str(), &r.metrics)));
        out.write("report/summary.txt", table)?;
        out.write_json("report/summary.json", &rows)
    }

    /// Consolidated per-strategy reports of a finished run.
    pub fn summary(&self) -> Result<Vec<StrategyReport>> {
        if !self.is_complete(Stage::Report) {
            return Err(Error::MissingStage {
                stage: Stage::Report.name().to_string(),
            });
        }
        self.read_json("report/summary.json")
    }
}

fn required(path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    let p = path
        .as_ref()
        .ok_or_else(|| Error::Usage(format!("no {what} path configured")))?;
    existing(p, what)
}

fn existing(path: &Path, what: &str) -> Result<PathBuf> {
    if path.is_file() {
        Ok(path.to_path_buf())
    } else {
        Err(Error::Usage(format!("{what} file {} does not exist", path.display())))
    }
}

fn parse_jsonl<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Line {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// File-name-safe stand-in for a sample id.
fn artifact_name(id: &str) -> String {
    let safe = id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if safe {
        id.to_string()
    } else {
        sha256_hex(id.as_bytes())[..16].to_string()
    }
}

/// Per-sample RandIns seed derived from the run seed and the sample id.
pub fn sample_seed(seed: u64, id: &str) -> u64 {
    let digest = sha256_bytes(format!("{seed}:{id}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn recall_rows(report: &MetricReport, training_support: &BTreeMap<EntityTag, usize>) -> Vec<TagRecallRow> {
    report
        .entity_pr
        .per_tag
        .iter()
        .filter(|(_, s)| s.support > 0)
        .map(|(&tag, s)| TagRecallRow {
            tag,
            recall: s.partial_recall,
            support: s.support,
            training_support: training_support.get(&tag).copied().unwrap_or(0),
        })
        .collect()
}

/// Scores a predictions file against a ground-truth file and writes the
/// JSON report to `report` and the table next to it with a `.txt` extension.
pub fn evaluate_files(predictions: &Path, ground_truth: &Path, report: &Path) -> Result<MetricReport> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let preds = insertion::read_jsonl(&read(predictions)?)?;
    let gts: Vec<GroundTruthRecord> = parse_jsonl(&read(ground_truth)?)?;
    let metrics = evaluate(&preds, &gts)?;
    let mut json = metrics.to_json();
    json.push('\n');
    std::fs::write(report, json).map_err(|e| Error::io(report, e))?;
    let table = report.with_extension("txt");
    std::fs::write(&table, metrics.to_table()).map_err(|e| Error::io(&table, e))?;
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prerequisites_are_transitive() {
        assert_eq!(Stage::Ingest.prerequisites(), vec![]);
        assert_eq!(
            Stage::Report.prerequisites(),
            Stage::ALL[..7].to_vec()
        );
        assert_eq!(
            Stage::Train.prerequisites(),
            vec![Stage::Ingest, Stage::Annotate, Stage::Encode]
        );
        assert_eq!("insert".parse::<Stage>().unwrap(), Stage::Insert);
        assert!("bogus".parse::<Stage>().is_err());
    }

    #[test]
    fn artifact_names() {
        assert_eq!(artifact_name("s001"), "s001");
        assert_eq!(artifact_name("a/b").len(), 16);
        assert_ne!(sample_seed(1, "a"), sample_seed(2, "a"));
    }
}
