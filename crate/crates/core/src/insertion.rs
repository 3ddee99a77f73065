//! Filling template placeholders with entities from the article.
//!
//! Three strategies: uniformly at random within the tag (RandIns), by
//! cosine ranking of article sentences against the template (CtxIns), and
//! by the decoder's article attention at the step that emitted the
//! placeholder (AttIns). The two ranked strategies share one consumption
//! rule: scan sentences in rank order, take the first unused entity of the
//! tag in order of appearance, fall back to the best-ranked entity once all
//! are used, and record a miss when the article has none.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::captioner::AttentionTrace;
use crate::corpus::Article;
use crate::embeddings::{EmbeddingTable, FrequencyTable};
use crate::encoder::{encode_sentence, EncoderMethod};
use crate::entities::{EntityIndex, EntityTag, NamedEntity, TemplateCaption, TemplateToken};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "RandIns")]
    Rand,
    #[serde(rename = "CtxIns")]
    Ctx,
    #[serde(rename = "AttIns")]
    Att,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Rand, Strategy::Ctx, Strategy::Att];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Rand => "RandIns",
            Strategy::Ctx => "CtxIns",
            Strategy::Att => "AttIns",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rand" | "randins" | "random" => Ok(Strategy::Rand),
            "ctx" | "ctxins" | "context" => Ok(Strategy::Ctx),
            "att" | "attins" | "attention" => Ok(Strategy::Att),
            _ => Err(Error::Usage(format!(
                "unknown insertion strategy `{s}` (expected rand, ctx or att)"
            ))),
        }
    }
}

/// What filled one placeholder. `surface` and `sentence_index` are `None`
/// for a miss.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tag: EntityTag,
    pub strategy: Strategy,
    pub surface: Option<String>,
    pub sentence_index: Option<usize>,
}

impl Provenance {
    pub fn is_miss(&self) -> bool {
        self.surface.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilledCaption {
    pub tokens: Vec<String>,
    /// One record per placeholder, left to right.
    pub provenance: Vec<Provenance>,
}

/// Sentence indices in rank order with their scores.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceRanking {
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
}

impl SentenceRanking {
    /// Sorts by descending score; ties go to the lower index.
    pub fn from_scores(scores: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let sorted = order.iter().map(|&i| scores[i]).collect();
        SentenceRanking {
            order,
            scores: sorted,
        }
    }
}

fn fill(
    template: &TemplateCaption,
    strategy: Strategy,
    mut choose: impl FnMut(usize, EntityTag) -> Option<NamedEntity>,
) -> FilledCaption {
    let mut tokens = Vec::new();
    let mut provenance = Vec::new();
    for (pos, tok) in template.tokens.iter().enumerate() {
        match tok {
            TemplateToken::Word(w) => tokens.push(w.clone()),
            TemplateToken::Placeholder { tag, .. } => {
                let chosen = choose(pos, *tag);
                match &chosen {
                    Some(e) => tokens.extend(e.surface.iter().cloned()),
                    None => tokens.push(tag.placeholder().to_string()),
                }
                provenance.push(Provenance {
                    tag: *tag,
                    strategy,
                    surface: chosen.as_ref().map(NamedEntity::surface_text),
                    sentence_index: chosen.as_ref().map(|e| e.sentence_index),
                });
            }
        }
    }
    FilledCaption { tokens, provenance }
}

/// Each placeholder independently gets a uniformly drawn entity of its tag.
pub fn rand_insert(template: &TemplateCaption, index: &EntityIndex, seed: u64) -> FilledCaption {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fill(template, Strategy::Rand, |_, tag| {
        let cands = index.get(tag);
        (!cands.is_empty()).then(|| cands[rng.gen_range(0..cands.len())].clone())
    })
}

fn cosine(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        a.dot(&b) / (na * nb)
    }
}

/// Mean word vector of the template's words; placeholders are skipped and
/// words without a vector count as zeros.
pub fn template_embedding(template: &TemplateCaption, table: &EmbeddingTable) -> Array1<f64> {
    let words: Vec<&str> = template
        .tokens
        .iter()
        .filter_map(|t| match t {
            TemplateToken::Word(w) => Some(w.as_str()),
            TemplateToken::Placeholder { .. } => None,
        })
        .collect();
    encode_sentence(&words, EncoderMethod::Avg, 1.0, table, &FrequencyTable::default())
}

/// Ranks article sentences by cosine similarity of their mean word vector
/// to the template's.
pub fn rank_sentences_ctx(
    template: &TemplateCaption,
    article: &Article,
    table: &EmbeddingTable,
) -> SentenceRanking {
    let t = template_embedding(template, table);
    let freq = FrequencyTable::default();
    let scores: Vec<f64> = article
        .sentences
        .iter()
        .map(|s| cosine(t.view(), encode_sentence(s, EncoderMethod::Avg, 1.0, table, &freq).view()))
        .collect();
    SentenceRanking::from_scores(&scores)
}

/// Shared ranked consumption: first unused entity of `tag` along `order`,
/// else the first entity along `order`, else a miss.
fn take_ranked(
    index: &EntityIndex,
    tag: EntityTag,
    order: &[usize],
    used: &mut HashSet<(usize, usize)>,
) -> Option<NamedEntity> {
    let ranked: Vec<&NamedEntity> = order
        .iter()
        .flat_map(|&s| index.in_sentence(tag, s))
        .collect();
    let first_unused = ranked
        .iter()
        .find(|e| !used.contains(&(e.sentence_index, e.token_offset)));
    let chosen = first_unused.or(ranked.first())?;
    used.insert((chosen.sentence_index, chosen.token_offset));
    Some((*chosen).clone())
}

/// Context insertion: one sentence ranking for the whole caption.
pub fn ctx_insert(
    template: &TemplateCaption,
    article: &Article,
    index: &EntityIndex,
    table: &EmbeddingTable,
) -> FilledCaption {
    let ranking = rank_sentences_ctx(template, article, table);
    let mut used = HashSet::new();
    fill(template, Strategy::Ctx, |_, tag| {
        take_ranked(index, tag, &ranking.order, &mut used)
    })
}

/// Real sentences in the scan order implied by one attention vector over
/// encoding slots. The last slot stands for every sentence from its index
/// on when the article overflows the encoding.
pub fn attention_scan_order(beta: &[f64], n_sentences: usize) -> Vec<usize> {
    let slots = beta.len();
    let real = n_sentences.min(slots);
    let ranking = SentenceRanking::from_scores(&beta[..real]);
    ranking
        .order
        .iter()
        .flat_map(|&slot| {
            if slot + 1 == slots && n_sentences > slots {
                slot..n_sentences
            } else {
                slot..slot + 1
            }
        })
        .collect()
}

/// Attention insertion: each placeholder follows the article attention of
/// the step that emitted it. `trace` must hold one step per template token.
pub fn att_insert(
    template: &TemplateCaption,
    trace: &AttentionTrace,
    article: &Article,
    index: &EntityIndex,
) -> Result<FilledCaption> {
    if trace.len() != template.len() {
        return Err(Error::Shape(format!(
            "attention trace has {} steps but the template has {} tokens",
            trace.len(),
            template.len()
        )));
    }
    let n = article.sentences.len();
    let mut used = HashSet::new();
    Ok(fill(template, Strategy::Att, |pos, tag| {
        let order = attention_scan_order(&trace.beta[pos], n);
        take_ranked(index, tag, &order, &mut used)
    }))
}

/// One line of the filled-caption JSONL output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilledRecord {
    pub id: String,
    pub template: Vec<String>,
    pub filled: Vec<String>,
    pub provenance: Vec<Provenance>,
}

impl FilledRecord {
    pub fn new(id: &str, template: &TemplateCaption, filled: FilledCaption) -> Self {
        FilledRecord {
            id: id.to_string(),
            template: template.to_strings(),
            filled: filled.tokens,
            provenance: filled.provenance,
        }
    }
}

pub fn write_jsonl(records: &[FilledRecord], mut w: impl Write) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(text: &str) -> Result<Vec<FilledRecord>> {
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
