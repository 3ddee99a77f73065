//! In-memory building blocks shared by the disk stages and by callers that
//! want a ready-to-train dataset without touching the filesystem.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::captioner::{load_image_features, pseudo_image_features, ModelDims, TrainingSample};
use crate::corpus::{Article, SampleBundle};
use crate::embeddings::{build_frequency_table, EmbeddingTable, FrequencyTable, Vocabulary};
use crate::encoder::{
    encode_article, fit_principal_component, sentence_matrix, ArticleEncoding, EncoderConfig,
    EncoderMethod, PrincipalComponent,
};
use crate::entities::{
    annotate, annotate_caption, build_entity_index, load_external_annotations, resolve_overlaps,
    templatize_caption, EntityIndex, EntityTag, Gazetteer, NamedEntity, TemplateCaption,
};
use crate::metrics::{EntityMention, GroundTruthRecord};
use crate::{Error, Result};

/// Entities and template of one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSample {
    pub id: String,
    pub template: Vec<String>,
    /// Caption entities that became placeholders, left to right.
    pub caption_entities: Vec<NamedEntity>,
    pub article_entities: Vec<NamedEntity>,
}

impl AnnotatedSample {
    pub fn template(&self) -> TemplateCaption {
        TemplateCaption::from_strings(&self.template)
    }

    pub fn entity_index(&self, article: &Article) -> EntityIndex {
        build_entity_index(article, &self.article_entities)
    }
}

/// Uses the sample's shipped annotations where present and the gazetteer
/// recognizer otherwise, then templatizes the caption.
pub fn annotate_sample(bundle: &SampleBundle, gazetteer: &Gazetteer) -> Result<AnnotatedSample> {
    let shipped = load_external_annotations(bundle)?;
    let caption = if shipped.caption.is_empty() {
        annotate_caption(&bundle.caption.raw_text, gazetteer)
    } else {
        shipped.caption
    };
    let article_entities = if shipped.article.is_empty() {
        annotate(&bundle.article.raw_text, gazetteer)
    } else {
        shipped.article
    };
    let in_range: Vec<NamedEntity> = caption
        .into_iter()
        .filter(|e| e.end() <= bundle.caption.tokens.len())
        .collect();
    let caption_entities = resolve_overlaps(&in_range);
    let template = templatize_caption(&bundle.caption, &caption_entities);
    Ok(AnnotatedSample {
        id: bundle.id().to_string(),
        template: template.to_strings(),
        caption_entities,
        article_entities,
    })
}

pub fn ground_truth(bundle: &SampleBundle, annotated: &AnnotatedSample) -> GroundTruthRecord {
    GroundTruthRecord {
        id: bundle.id().to_string(),
        caption: bundle.caption.tokens.clone(),
        entities: annotated
            .caption_entities
            .iter()
            .map(|e| EntityMention::new(&e.surface_text(), e.tag))
            .collect(),
    }
}

/// Caption entity counts per tag, the support column of recall tables.
pub fn tag_support<'a>(samples: impl IntoIterator<Item = &'a AnnotatedSample>) -> BTreeMap<EntityTag, usize> {
    let mut out = BTreeMap::new();
    for s in samples {
        for e in &s.caption_entities {
            *out.entry(e.tag).or_default() += 1;
        }
    }
    out
}

pub fn build_vocab<'a>(
    train: impl IntoIterator<Item = &'a AnnotatedSample>,
    min_count: usize,
    max_len: usize,
) -> Vocabulary {
    let templates: Vec<Vec<String>> = train.into_iter().map(|s| s.template.clone()).collect();
    Vocabulary::build(&templates, min_count, max_len)
}

/// Word statistics fitted on training articles.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderState {
    pub config: EncoderConfig,
    pub freq: FrequencyTable,
    pub component: Option<PrincipalComponent>,
}

impl EncoderState {
    pub fn fit<'a>(
        train: impl IntoIterator<Item = &'a Article> + Clone,
        config: EncoderConfig,
        table: &EmbeddingTable,
    ) -> Result<Self> {
        config.validate()?;
        let freq = build_frequency_table(train.clone());
        let component = match config.method {
            EncoderMethod::Tbb => {
                let rows = sentence_matrix(
                    train.into_iter().flat_map(|a| a.sentences.iter().map(Vec::as_slice)),
                    config.sif_a,
                    table,
                    &freq,
                );
                Some(fit_principal_component(&rows, "train")?)
            }
            _ => None,
        };
        Ok(EncoderState {
            config,
            freq,
            component,
        })
    }

    pub fn encode(&self, article: &Article, table: &EmbeddingTable) -> Result<ArticleEncoding> {
        encode_article(
            &article.sentences,
            &self.config,
            table,
            &self.freq,
            self.component.as_ref(),
        )
    }
}

/// Loads an `IFEA` file when `reference` names one (relative paths are
/// resolved against `base`), and otherwise derives pseudo features from it.
pub fn resolve_image_features(
    reference: &str,
    base: Option<&Path>,
    regions: usize,
    dim: usize,
) -> Result<Array2<f64>> {
    let candidate = match base {
        Some(b) => b.join(reference),
        None => reference.into(),
    };
    if !candidate.is_file() {
        return Ok(pseudo_image_features(reference, regions, dim));
    }
    let grid = load_image_features(&candidate)?;
    if grid.dim() != (regions, dim) {
        return Err(Error::Shape(format!(
            "{}: image features are {:?}, configured ({regions}, {dim})",
            candidate.display(),
            grid.dim()
        )));
    }
    Ok(grid)
}

/// Everything needed to train on, caption and score one sample.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub bundle: SampleBundle,
    pub annotated: AnnotatedSample,
    pub index: EntityIndex,
    pub encoding: ArticleEncoding,
    pub training: TrainingSample,
}

impl PreparedSample {
    pub fn id(&self) -> &str {
        self.bundle.id()
    }

    pub fn ground_truth(&self) -> GroundTruthRecord {
        ground_truth(&self.bundle, &self.annotated)
    }
}

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub vocab: Vocabulary,
    pub encoder: EncoderState,
    pub dims: ModelDims,
    pub samples: Vec<PreparedSample>,
}

/// Annotates, encodes and tokenizes `bundles`. The vocabulary and word
/// statistics are fitted on the samples whose id is in `train_ids`, or on
/// all samples when it is `None`. Image feature references are resolved
/// against `feature_base`.
pub fn prepare(
    bundles: &[SampleBundle],
    train_ids: Option<&HashSet<String>>,
    gazetteer: &Gazetteer,
    table: &EmbeddingTable,
    config: &PipelineConfig,
    feature_base: Option<&Path>,
) -> Result<PreparedData> {
    let is_train = |b: &SampleBundle| train_ids.map_or(true, |ids| ids.contains(b.id()));
    let annotated: Vec<AnnotatedSample> = bundles
        .iter()
        .map(|b| annotate_sample(b, gazetteer))
        .collect::<Result<_>>()?;
    let vocab = build_vocab(
        bundles.iter().zip(&annotated).filter(|(b, _)| is_train(b)).map(|(_, a)| a),
        config.vocab.min_count,
        config.vocab.max_len,
    );
    let train_articles: Vec<&Article> = bundles.iter().filter(|b| is_train(b)).map(|b| &b.article).collect();
    if train_articles.is_empty() {
        return Err(Error::Data("no training samples".into()));
    }
    let encoder = EncoderState::fit(train_articles.iter().copied(), config.encoder, table)?;
    let dims = config
        .model
        .dims(vocab.len(), table.dim(), config.encoder.max_sentences);
    dims.validate()?;

    let samples = bundles
        .iter()
        .zip(annotated)
        .map(|(b, a)| {
            let encoding = encoder.encode(&b.article, table)?;
            let grid = resolve_image_features(&b.image_feature_ref, feature_base, dims.regions, dims.image_dim)?;
            let tokens = vocab.encode_sequence(&a.template, config.vocab.max_len);
            Ok(PreparedSample {
                index: a.entity_index(&b.article),
                training: TrainingSample {
                    tokens,
                    grid,
                    article: encoding.matrix.clone(),
                },
                encoding,
                annotated: a,
                bundle: b.clone(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(PreparedData {
        vocab,
        encoder,
        dims,
        samples,
    })
}

/// Loads the corpus, word vectors and gazetteer named in `config` and
/// prepares every sample, fitting on all of them.
pub fn prepare_from_config(config: &PipelineConfig) -> Result<PreparedData> {
    let need = |p: &Option<std::path::PathBuf>, what: &str| {
        p.clone()
            .ok_or_else(|| Error::Usage(format!("no {what} path configured")))
    };
    let corpus = need(&config.paths.corpus, "corpus")?;
    let got = crate::corpus::ingest_jsonl(&corpus)?;
    if let Some(e) = got.errors.first() {
        return Err(Error::Data(format!("{} line {}: {}", corpus.display(), e.line, e.message)));
    }
    let table = EmbeddingTable::load(need(&config.paths.embeddings, "embeddings")?)?;
    let gazetteer = match &config.paths.gazetteer {
        Some(p) => Gazetteer::load_tsv(p)?,
        None => Gazetteer::new(),
    };
    prepare(&got.bundles, None, &gazetteer, &table, config, corpus.parent())
}

impl PreparedData {
    pub fn training_samples(&self) -> Vec<TrainingSample> {
        self.samples.iter().map(|s| s.training.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    #[test]
    fn einstein_template() {
        let b = SampleBundle::from_raw(
            "e",
            "Albert Einstein taught in Princeton University in 1921.",
            "Albert Einstein taught in Princeton University in 1921",
            None,
            None,
        );
        let mut g = Gazetteer::new();
        g.insert("Albert Einstein", EntityTag::Person);
        g.insert("Princeton University", EntityTag::Org);
        let a = annotate_sample(&b, &g).unwrap();
        assert_eq!(a.template.join(" "), "PERSON_ taught in ORGANIZATION_ in DATE_");
        assert_eq!(a.article_entities.len(), 3);
        let gt = ground_truth(&b, &a);
        assert_eq!(gt.entities[1], EntityMention::new("Princeton University", EntityTag::Org));
    }

    #[test]
    fn prepare_synthetic_corpus() {
        let bundles = synth::mini_corpus(12, 4);
        let table = synth::word_vectors(8, 0);
        let mut cfg = PipelineConfig::default();
        cfg.model.hidden = 8;
        cfg.model.regions = 3;
        cfg.model.image_dim = 4;
        cfg.model.image_att = 5;
        cfg.model.article_att = 5;
        cfg.vocab.min_count = 1;
        cfg.encoder.method = EncoderMethod::Tbb;
        let data = prepare(&bundles, None, &synth::gazetteer(), &table, &cfg, None).unwrap();
        assert_eq!(data.samples.len(), 12);
        assert_eq!(data.dims.embed, 8);
        let s = &data.samples[0];
        assert_eq!(s.training.article.dim(), (55, 8));
        assert_eq!(s.training.grid.dim(), (3, 4));
        assert_eq!(s.training.tokens[0], Vocabulary::START_ID);
        assert!(s.training.tokens.iter().all(|&t| t != Vocabulary::UNK_ID));
        assert!(!s.index.is_empty());
    }
}
