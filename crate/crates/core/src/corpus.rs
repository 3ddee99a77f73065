//! Dataset model, JSONL ingestion, sentence segmentation, tokenization and splits.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::entities::EntityRecord;
use crate::{Error, Result};

/// Abbreviations whose trailing period never ends a sentence.
pub const ABBREVIATIONS: &[&str] = &["Mr.", "Ms.", "Dr.", "U.S.", "St."];

/// Characters split off as tokens of their own.
pub const PUNCTUATION: &[char] = &['.', ',', '!', '?', ';', ':', '"', '(', ')', '[', ']'];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub headline: Vec<String>,
    /// Lowercased tokens, one list per sentence.
    pub sentences: Vec<Vec<String>>,
    pub raw_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub article_id: String,
    pub tokens: Vec<String>,
    pub raw_text: String,
}

/// One corpus sample: the article, its image caption and where its image
/// features come from.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBundle {
    pub article: Article,
    pub caption: CaptionRecord,
    /// Path of an `IFEA` feature file, or a key for pseudo features.
    pub image_feature_ref: String,
    /// Entity annotations shipped with the sample, not yet validated.
    pub entities: Option<Vec<EntityRecord>>,
}

impl SampleBundle {
    pub fn id(&self) -> &str {
        &self.article.id
    }

    /// Builds a bundle from raw strings, running segmentation and tokenization.
    pub fn from_raw(
        id: &str,
        article: &str,
        caption: &str,
        headline: Option<&str>,
        image_features: Option<&str>,
    ) -> Self {
        let sentences = cased_sentences(article)
            .into_iter()
            .map(|s| lowercase_tokens(&s))
            .collect();
        SampleBundle {
            article: Article {
                id: id.to_string(),
                headline: headline.map(tokenize).unwrap_or_default(),
                sentences,
                raw_text: article.to_string(),
            },
            caption: CaptionRecord {
                article_id: id.to_string(),
                tokens: tokenize(caption),
                raw_text: caption.to_string(),
            },
            image_feature_ref: image_features.unwrap_or(id).to_string(),
            entities: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineErrorKind {
    Parse,
    Schema,
}

/// A rejected corpus line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub kind: LineErrorKind,
    pub message: String,
}

/// Result of ingesting a corpus: the valid bundles plus a per-line report
/// of everything that was rejected.
#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub bundles: Vec<SampleBundle>,
    pub errors: Vec<LineError>,
}

pub fn ingest_jsonl(path: impl AsRef<Path>) -> Result<Ingested> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn ingest_reader(reader: impl BufRead) -> Result<Ingested> {
    let mut out = Ingested::default();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<corpus>", e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(&line) {
            Ok(bundle) => {
                if !seen.insert(bundle.id().to_string()) {
                    out.errors.push(LineError {
                        line: lineno,
                        kind: LineErrorKind::Schema,
                        message: format!("duplicate id `{}`", bundle.id()),
                    });
                } else {
                    out.bundles.push(bundle);
                }
            }
            Err((kind, message)) => out.errors.push(LineError {
                line: lineno,
                kind,
                message,
            }),
        }
    }
    Ok(out)
}

fn parse_line(line: &str) -> std::result::Result<SampleBundle, (LineErrorKind, String)> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| (LineErrorKind::Parse, e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or((LineErrorKind::Schema, "line is not a JSON object".to_string()))?;

    let schema = |m: String| (LineErrorKind::Schema, m);
    let required = |key: &str| -> std::result::Result<&str, (LineErrorKind, String)> {
        match obj.get(key) {
            None => Err(schema(format!("missing required key `{key}`"))),
            Some(Value::String(s)) => Ok(s.as_str()),
            Some(_) => Err(schema(format!("key `{key}` must be a string"))),
        }
    };
    let optional = |key: &str| -> std::result::Result<Option<&str>, (LineErrorKind, String)> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(schema(format!("key `{key}` must be a string"))),
        }
    };

    let id = required("id")?;
    let article = required("article")?;
    let caption = required("caption")?;
    let headline = optional("headline")?;
    let image_features = optional("image_features")?;
    let entities = match obj.get("entities") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            serde_json::from_value::<Vec<EntityRecord>>(v.clone())
                .map_err(|e| schema(format!("key `entities`: {e}")))?,
        ),
    };

    if id.is_empty() {
        return Err(schema("`id` is empty".into()));
    }
    let mut bundle = SampleBundle::from_raw(id, article, caption, headline, image_features);
    if bundle.article.sentences.is_empty() {
        return Err(schema("`article` has no sentences".into()));
    }
    if bundle.caption.tokens.is_empty() {
        return Err(schema("`caption` has no tokens".into()));
    }
    bundle.entities = entities;
    Ok(bundle)
}

#[derive(Serialize)]
struct EmittedSample<'a> {
    id: &'a str,
    article: &'a str,
    caption: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    headline: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    image_features: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    entities: Option<&'a [EntityRecord]>,
}

/// Writes bundles back out in the corpus JSONL schema.
pub fn emit_jsonl(bundles: &[SampleBundle], mut writer: impl Write) -> std::io::Result<()> {
    for b in bundles {
        let headline = (!b.article.headline.is_empty()).then(|| b.article.headline.join(" "));
        let image_features =
            (b.image_feature_ref != b.article.id).then_some(b.image_feature_ref.as_str());
        let line = EmittedSample {
            id: &b.article.id,
            article: &b.article.raw_text,
            caption: &b.caption.raw_text,
            headline,
            image_features,
            entities: b.entities.as_deref(),
        };
        serde_json::to_writer(&mut writer, &line)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Splits `text` into sentences at `.`, `!` or `?` followed by whitespace and
/// then an uppercase letter or the end of the text.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0;
    for k in 0..chars.len() {
        let (pos, c) = chars[k];
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let boundary = match chars.get(k + 1) {
            None => true,
            Some(&(_, next)) if next.is_whitespace() => {
                let mut j = k + 1;
                while j < chars.len() && chars[j].1.is_whitespace() {
                    j += 1;
                }
                j == chars.len() || chars[j].1.is_uppercase()
            }
            _ => false,
        };
        if !boundary {
            continue;
        }
        let end = pos + c.len_utf8();
        if c == '.' && ends_with_abbreviation(&text[start..end]) {
            continue;
        }
        let segment = text[start..end].trim();
        if !segment.is_empty() {
            out.push(segment.to_string());
        }
        start = end;
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        out.push(rest.to_string());
    }
    out
}

fn ends_with_abbreviation(segment: &str) -> bool {
    segment
        .split_whitespace()
        .last()
        .map(|w| w.trim_start_matches(|c: char| !c.is_alphanumeric()))
        .is_some_and(|w| ABBREVIATIONS.contains(&w))
}

/// Tokenizes preserving case. Same boundaries as [`tokenize`].
pub fn tokenize_cased(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let mut current = String::new();
        for (i, &c) in chars.iter().enumerate() {
            if PUNCTUATION.contains(&c) {
                // decimal points and thousands separators stay inside numerals
                let inside_number = matches!(c, '.' | ',')
                    && i > 0
                    && chars[i - 1].is_ascii_digit()
                    && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
                if inside_number {
                    current.push(c);
                    continue;
                }
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

/// Lowercased whitespace tokenization with punctuation split off.
pub fn tokenize(text: &str) -> Vec<String> {
    lowercase_tokens(&tokenize_cased(text))
}

pub fn lowercase_tokens(tokens: &[String]) -> Vec<String> {
    tokens.iter().map(|t| t.to_lowercase()).collect()
}

/// Segments and tokenizes `text` keeping original case. Sentences that
/// tokenize to nothing are dropped, so indices agree with
/// [`Article::sentences`].
pub fn cased_sentences(text: &str) -> Vec<Vec<String>> {
    segment_sentences(text)
        .iter()
        .map(|s| tokenize_cased(s))
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Shuffles the ids with a seeded RNG and cuts them into train/val/test.
/// Val and test sizes are floor-rounded; train takes the remainder.
pub fn split_dataset(ids: &[String], ratios: (f64, f64, f64), seed: u64) -> Result<DatasetSplit> {
    let (tr, va, te) = ratios;
    if !(tr > 0.0 && va > 0.0 && te > 0.0) || ((tr + va + te) - 1.0).abs() > 1e-9 {
        return Err(Error::Usage(format!(
            "split ratios must be positive and sum to 1, got ({tr}, {va}, {te})"
        )));
    }
    if ids.len() < 3 {
        return Err(Error::Data(format!(
            "cannot split {} samples into three sets",
            ids.len()
        )));
    }
    let n = ids.len();
    let n_val = (n as f64 * va + 1e-9).floor() as usize;
    let n_test = (n as f64 * te + 1e-9).floor() as usize;
    let n_train = n - n_val - n_test;

    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = shuffled.split_off(n_train + n_val);
    let val = shuffled.split_off(n_train);
    Ok(DatasetSplit {
        train: shuffled,
        val,
        test,
        seed,
    })
}
