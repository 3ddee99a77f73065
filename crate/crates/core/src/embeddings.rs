//! Word vectors, the decoder vocabulary and unigram frequencies.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entities::EntityTag;
use crate::{Error, Result};

pub const PAD: &str = "<pad>";
pub const START: &str = "<start>";
pub const END: &str = "<end>";
pub const UNK: &str = "<unk>";

/// Pretrained word vectors, all of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    /// Insertion order, for stable re-emission.
    order: Vec<String>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
            order: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `None` for tokens without a vector.
    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// Inserts a vector. Returns `false` (and keeps the existing entry) for a
    /// duplicate token.
    pub fn insert(&mut self, token: &str, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::Shape(format!(
                "vector for `{token}` has {} values, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if self.vectors.contains_key(token) {
            return Ok(false);
        }
        self.vectors.insert(token.to_string(), vector);
        self.order.push(token.to_string());
        Ok(true)
    }

    /// Parses the whitespace-separated text format: a token followed by its
    /// values on every line. The dimension comes from the first line.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else {
                continue;
            };
            let values = parts
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Line {
                    line: lineno,
                    message: format!("bad value: {e}"),
                })?;
            let table = table.get_or_insert_with(|| EmbeddingTable::new(values.len()));
            if values.is_empty() || values.len() != table.dim {
                return Err(Error::Line {
                    line: lineno,
                    message: format!(
                        "expected {} values for `{token}`, found {}",
                        table.dim,
                        values.len()
                    ),
                });
            }
            if !table.insert(token, values)? {
                log::warn!("line {lineno}: duplicate vector for `{token}` ignored");
            }
        }
        table.ok_or_else(|| Error::Data("embedding file is empty".into()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_text(&text)
    }

    /// Text format with shortest round-trip float formatting.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for token in &self.order {
            out.push_str(token);
            for v in &self.vectors[token] {
                let _ = write!(out, " {v:?}");
            }
            out.push('\n');
        }
        out
    }
}

/// Token/id bijection for the decoder.
///
/// Ids 0..=3 are `<pad>`, `<start>`, `<end>`, `<unk>`; the nine placeholder
/// tokens follow, then words by descending count (ties alphabetical).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocabulary {
    pub const PAD_ID: usize = 0;
    pub const START_ID: usize = 1;
    pub const END_ID: usize = 2;
    pub const UNK_ID: usize = 3;

    fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if ids.insert(t.clone(), i).is_some() {
                return Err(Error::Data(format!("token `{t}` appears twice in vocabulary")));
            }
        }
        let vocab = Vocabulary { tokens, ids };
        for (id, tok) in [
            (Self::PAD_ID, PAD),
            (Self::START_ID, START),
            (Self::END_ID, END),
            (Self::UNK_ID, UNK),
        ] {
            if vocab.id(tok) != Some(id) {
                return Err(Error::Data(format!("reserved token `{tok}` must have id {id}")));
            }
        }
        Ok(vocab)
    }

    /// Counts tokens over `captions` (each truncated to `max_len`) and keeps
    /// those seen at least `min_count` times. Placeholder tokens are always
    /// included.
    pub fn build<S: AsRef<str>>(captions: &[Vec<S>], min_count: usize, max_len: usize) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for cap in captions {
            for t in cap.iter().take(max_len) {
                *counts.entry(t.as_ref()).or_default() += 1;
            }
        }
        let mut tokens: Vec<String> = [PAD, START, END, UNK].map(String::from).to_vec();
        tokens.extend(EntityTag::ALL.iter().map(|t| t.placeholder().to_string()));
        let mut words: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|(w, c)| *c >= min_count.max(1) && !tokens.iter().any(|t| t == w))
            .collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        tokens.extend(words.into_iter().map(|(w, _)| w.to_string()));
        Self::from_tokens(tokens).expect("reserved tokens are placed first")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    /// Id of `token`, or `<unk>`.
    pub fn encode(&self, token: &str) -> usize {
        self.id(token).unwrap_or(Self::UNK_ID)
    }

    pub fn decode(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// `<start> tokens... <end>`, with the body truncated to `max_len`.
    pub fn encode_sequence<S: AsRef<str>>(&self, tokens: &[S], max_len: usize) -> Vec<usize> {
        let mut ids = Vec::with_capacity(tokens.len().min(max_len) + 2);
        ids.push(Self::START_ID);
        ids.extend(tokens.iter().take(max_len).map(|t| self.encode(t.as_ref())));
        ids.push(Self::END_ID);
        ids
    }

    /// JSON object `{token: id}`.
    pub fn to_json(&self) -> String {
        let map: BTreeMap<&str, usize> = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        serde_json::to_string_pretty(&map).expect("string map serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let map: BTreeMap<String, usize> = serde_json::from_str(text)?;
        let mut tokens = vec![None; map.len()];
        for (tok, id) in map {
            match tokens.get_mut(id) {
                Some(slot @ None) => *slot = Some(tok),
                _ => return Err(Error::Data(format!("vocabulary id {id} is invalid or repeated"))),
            }
        }
        Self::from_tokens(tokens.into_iter().map(|t| t.expect("ids are dense")).collect())
    }
}

/// Unigram counts over article text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    total: u64,
}

#[derive(Serialize, Deserialize)]
struct FrequencyJson {
    #[serde(rename = "__total__")]
    total: u64,
    #[serde(flatten)]
    counts: BTreeMap<String, u64>,
}

impl FrequencyTable {
    pub fn build<'a, I, S>(sentences: I) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut table = FrequencyTable::default();
        for sentence in sentences {
            for t in sentence {
                *table.counts.entry(t.as_ref().to_string()).or_default() += 1;
                table.total += 1;
            }
        }
        table
    }

    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Relative frequency; 0 for unseen tokens and for an empty table.
    pub fn tf(&self, token: &str) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.count(token) as f64 / self.total as f64
    }

    /// Smoothed inverse frequency weight `a / (a + tf(w))`.
    pub fn sif_weight(&self, token: &str, a: f64) -> f64 {
        a / (a + self.tf(token))
    }

    pub fn to_json(&self) -> String {
        let json = FrequencyJson {
            total: self.total,
            counts: self.counts.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        };
        serde_json::to_string(&json).expect("frequency table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: FrequencyJson = serde_json::from_str(text)?;
        let sum: u64 = json.counts.values().sum();
        if sum != json.total || json.counts.values().any(|&c| c == 0) {
            return Err(Error::Data("frequency table counts do not add up".into()));
        }
        Ok(FrequencyTable {
            counts: json.counts.into_iter().collect(),
            total: json.total,
        })
    }
}

/// Counts tokens of all sentences of the given articles.
pub fn build_frequency_table<'a>(
    articles: impl IntoIterator<Item = &'a crate::corpus::Article>,
) -> FrequencyTable {
    FrequencyTable::build(
        articles
            .into_iter()
            .flat_map(|a| a.sentences.iter().map(Vec::as_slice)),
    )
}
