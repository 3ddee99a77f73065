//! Named-entity recognition, template captions and per-article entity indexes.
//!
//! Recognition is deterministic: gazetteer hits (longest match first), then
//! years and month names as `DATE`, then runs of capitalized tokens. Corpora
//! that ship their own annotations bypass the heuristics through
//! [`load_external_annotations`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{cased_sentences, tokenize_cased, Article, CaptionRecord, SampleBundle};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityTag {
    Person,
    #[serde(alias = "ORGANIZATION")]
    Org,
    Gpe,
    Loc,
    Date,
    Norp,
    Event,
    Fac,
    Misc,
}

impl EntityTag {
    pub const ALL: [EntityTag; 9] = [
        EntityTag::Person,
        EntityTag::Org,
        EntityTag::Gpe,
        EntityTag::Loc,
        EntityTag::Date,
        EntityTag::Norp,
        EntityTag::Event,
        EntityTag::Fac,
        EntityTag::Misc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityTag::Person => "PERSON",
            EntityTag::Org => "ORG",
            EntityTag::Gpe => "GPE",
            EntityTag::Loc => "LOC",
            EntityTag::Date => "DATE",
            EntityTag::Norp => "NORP",
            EntityTag::Event => "EVENT",
            EntityTag::Fac => "FAC",
            EntityTag::Misc => "MISC",
        }
    }

    /// The vocabulary token standing in for an entity of this tag.
    pub fn placeholder(self) -> &'static str {
        match self {
            EntityTag::Person => "PERSON_",
            EntityTag::Org => "ORGANIZATION_",
            EntityTag::Gpe => "GPE_",
            EntityTag::Loc => "LOC_",
            EntityTag::Date => "DATE_",
            EntityTag::Norp => "NORP_",
            EntityTag::Event => "EVENT_",
            EntityTag::Fac => "FAC_",
            EntityTag::Misc => "MISC_",
        }
    }

    pub fn from_placeholder(token: &str) -> Option<EntityTag> {
        EntityTag::ALL.into_iter().find(|t| t.placeholder() == token)
    }
}

impl fmt::Display for EntityTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ORGANIZATION" => Ok(EntityTag::Org),
            _ => EntityTag::ALL
                .into_iter()
                .find(|t| t.as_str() == s)
                .ok_or_else(|| Error::UnknownTag(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NamedEntity {
    /// Surface tokens in original case.
    pub surface: Vec<String>,
    pub tag: EntityTag,
    pub sentence_index: usize,
    pub token_offset: usize,
}

impl NamedEntity {
    pub fn len(&self) -> usize {
        self.surface.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surface.is_empty()
    }

    pub fn end(&self) -> usize {
        self.token_offset + self.surface.len()
    }

    pub fn surface_text(&self) -> String {
        self.surface.join(" ")
    }

    fn position(&self) -> (usize, usize) {
        (self.sentence_index, self.token_offset)
    }
}

// ---------------------------------------------------------------------------
// Gazetteer NER
// ---------------------------------------------------------------------------

/// Surface-string lookup table, matched case-sensitively on token sequences.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: HashMap<Vec<String>, EntityTag>,
    longest: usize,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry. A surface already present keeps its first tag.
    pub fn insert(&mut self, surface: &str, tag: EntityTag) {
        let tokens = tokenize_cased(surface);
        if tokens.is_empty() {
            return;
        }
        self.longest = self.longest.max(tokens.len());
        self.entries.entry(tokens).or_insert(tag);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses `surface<TAB>TAG` lines. Blank lines and `#` comments are skipped.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut gaz = Gazetteer::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, tag) = line.split_once('\t').ok_or_else(|| Error::Line {
                line: i + 1,
                message: "expected `surface<TAB>TAG`".into(),
            })?;
            let tag: EntityTag = tag.trim().parse().map_err(|e: Error| Error::Line {
                line: i + 1,
                message: e.to_string(),
            })?;
            gaz.insert(surface.trim(), tag);
        }
        Ok(gaz)
    }

    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text)
    }

    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<_> = self
            .entries
            .iter()
            .map(|(k, v)| format!("{}\t{}", k.join(" "), v))
            .collect();
        rows.sort();
        rows.iter().map(|r| format!("{r}\n")).collect()
    }

    /// Longest entry matching `tokens` at `start`, as (length, tag).
    fn longest_match(&self, tokens: &[String], start: usize) -> Option<(usize, EntityTag)> {
        let max = self.longest.min(tokens.len() - start);
        (1..=max)
            .rev()
            .find_map(|len| self.entries.get(&tokens[start..start + len]).map(|&t| (len, t)))
    }
}

const MONTHS: &[&str] = &[
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

/// Capitalized words that never start a name.
const STOPWORDS: &[&str] = &[
    "a", "an", "the", "and", "or", "but", "in", "on", "at", "of", "to", "for", "from", "by",
    "with", "as", "after", "before", "during", "while", "when", "where", "he", "she", "it",
    "they", "we", "i", "you", "his", "her", "its", "their", "our", "this", "that", "these",
    "those", "there", "here", "some", "many", "most", "all", "no", "not", "if", "then", "yet",
    "mr", "ms", "mrs", "dr", "st",
];

fn is_year(token: &str) -> bool {
    token.len() == 4
        && token.bytes().all(|b| b.is_ascii_digit())
        && token.parse::<u32>().is_ok_and(|y| (1000..=2100).contains(&y))
}

fn is_capitalized(token: &str) -> bool {
    token.chars().next().is_some_and(char::is_uppercase)
        && token.chars().all(|c| c.is_alphanumeric() || c == '\'' || c == '-')
        && !STOPWORDS.contains(&token.to_lowercase().as_str())
}

/// Recognizes entities in one tokenized sentence.
pub fn annotate_tokens(
    tokens: &[String],
    sentence_index: usize,
    gazetteer: &Gazetteer,
) -> Vec<NamedEntity> {
    let mut covered = vec![false; tokens.len()];
    let mut found = Vec::new();
    let push = |start: usize, len: usize, tag: EntityTag, found: &mut Vec<NamedEntity>| {
        found.push(NamedEntity {
            surface: tokens[start..start + len].to_vec(),
            tag,
            sentence_index,
            token_offset: start,
        });
    };

    let mut i = 0;
    while i < tokens.len() {
        match gazetteer.longest_match(tokens, i) {
            Some((len, tag)) => {
                push(i, len, tag, &mut found);
                covered[i..i + len].iter_mut().for_each(|c| *c = true);
                i += len;
            }
            None => i += 1,
        }
    }

    for (i, tok) in tokens.iter().enumerate() {
        if !covered[i] && (is_year(tok) || MONTHS.contains(&tok.as_str())) {
            push(i, 1, EntityTag::Date, &mut found);
            covered[i] = true;
        }
    }

    let mut i = 0;
    while i < tokens.len() {
        if covered[i] || !is_capitalized(&tokens[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < tokens.len() && !covered[i] && is_capitalized(&tokens[i]) {
            i += 1;
        }
        let len = i - start;
        let tag = if len <= 3 {
            EntityTag::Person
        } else {
            EntityTag::Misc
        };
        push(start, len, tag, &mut found);
    }

    found.sort_by_key(NamedEntity::position);
    found
}

/// Recognizes entities in raw (original-case) text, sentence by sentence.
pub fn annotate(raw_text: &str, gazetteer: &Gazetteer) -> Vec<NamedEntity> {
    cased_sentences(raw_text)
        .iter()
        .enumerate()
        .flat_map(|(si, toks)| annotate_tokens(toks, si, gazetteer))
        .collect()
}

/// Recognizes entities in a caption, treated as one token sequence so that
/// offsets index [`CaptionRecord::tokens`].
pub fn annotate_caption(raw_text: &str, gazetteer: &Gazetteer) -> Vec<NamedEntity> {
    annotate_tokens(&tokenize_cased(raw_text), 0, gazetteer)
}

// ---------------------------------------------------------------------------
// External annotations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntitySource {
    #[default]
    Article,
    Caption,
}

/// An entity as written in the corpus `entities` array. The tag stays a
/// string until [`load_external_annotations`] validates it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub surface: String,
    pub tag: String,
    pub sentence_index: usize,
    pub token_offset: usize,
    #[serde(default, skip_serializing_if = "is_article")]
    pub source: EntitySource,
}

fn is_article(s: &EntitySource) -> bool {
    *s == EntitySource::Article
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Annotations {
    pub article: Vec<NamedEntity>,
    pub caption: Vec<NamedEntity>,
}

/// Validates the sample's shipped annotations against its tokenized text.
pub fn load_external_annotations(sample: &SampleBundle) -> Result<Annotations> {
    let mut out = Annotations::default();
    let Some(records) = &sample.entities else {
        return Ok(out);
    };
    for rec in records {
        let tag: EntityTag = rec.tag.parse()?;
        let surface = tokenize_cased(&rec.surface);
        let pos_err = |reason: String| Error::EntityPosition {
            sentence_index: rec.sentence_index,
            token_offset: rec.token_offset,
            reason,
        };
        if surface.is_empty() {
            return Err(pos_err("empty surface".into()));
        }
        let target: &[String] = match rec.source {
            EntitySource::Article => sample
                .article
                .sentences
                .get(rec.sentence_index)
                .ok_or_else(|| {
                    pos_err(format!(
                        "article has {} sentences",
                        sample.article.sentences.len()
                    ))
                })?,
            EntitySource::Caption if rec.sentence_index == 0 => &sample.caption.tokens,
            EntitySource::Caption => return Err(pos_err("captions have one sentence".into())),
        };
        let end = rec.token_offset + surface.len();
        if end > target.len() {
            return Err(pos_err(format!("sentence has {} tokens", target.len())));
        }
        let matches = target[rec.token_offset..end]
            .iter()
            .zip(&surface)
            .all(|(t, s)| *t == s.to_lowercase());
        if !matches {
            return Err(pos_err(format!(
                "surface `{}` does not match `{}`",
                rec.surface,
                target[rec.token_offset..end].join(" ")
            )));
        }
        let entity = NamedEntity {
            surface,
            tag,
            sentence_index: rec.sentence_index,
            token_offset: rec.token_offset,
        };
        match rec.source {
            EntitySource::Article => out.article.push(entity),
            EntitySource::Caption => out.caption.push(entity),
        }
    }
    out.article.sort_by_key(NamedEntity::position);
    out.caption.sort_by_key(NamedEntity::position);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Template captions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TemplateToken {
    Word(String),
    /// `ordinal` counts placeholders of the same tag from 1, left to right.
    Placeholder { tag: EntityTag, ordinal: usize },
}

impl TemplateToken {
    pub fn text(&self) -> &str {
        match self {
            TemplateToken::Word(w) => w,
            TemplateToken::Placeholder { tag, .. } => tag.placeholder(),
        }
    }

    pub fn tag(&self) -> Option<EntityTag> {
        match self {
            TemplateToken::Word(_) => None,
            TemplateToken::Placeholder { tag, .. } => Some(*tag),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TemplateCaption {
    pub tokens: Vec<TemplateToken>,
}

impl TemplateCaption {
    /// Parses vocabulary tokens, recognizing placeholder tokens and
    /// assigning ordinals.
    pub fn from_strings<S: AsRef<str>>(tokens: &[S]) -> Self {
        let mut counts: HashMap<EntityTag, usize> = HashMap::new();
        let tokens = tokens
            .iter()
            .map(|t| match EntityTag::from_placeholder(t.as_ref()) {
                Some(tag) => {
                    let n = counts.entry(tag).or_default();
                    *n += 1;
                    TemplateToken::Placeholder { tag, ordinal: *n }
                }
                None => TemplateToken::Word(t.as_ref().to_string()),
            })
            .collect();
        TemplateCaption { tokens }
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text().to_string()).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Positions and tags of the placeholders, left to right.
    pub fn placeholders(&self) -> impl Iterator<Item = (usize, EntityTag)> + '_ {
        self.tokens
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.tag().map(|tag| (i, tag)))
    }

    pub fn truncated(&self, max_len: usize) -> Self {
        TemplateCaption {
            tokens: self.tokens.iter().take(max_len).cloned().collect(),
        }
    }

    /// Replaces placeholders, in order, with the given token lists.
    pub fn substitute(&self, fills: &[Vec<String>]) -> Vec<String> {
        let mut fills = fills.iter();
        let mut out = Vec::new();
        for t in &self.tokens {
            match t {
                TemplateToken::Word(w) => out.push(w.clone()),
                TemplateToken::Placeholder { tag, .. } => match fills.next() {
                    Some(f) => out.extend(f.iter().cloned()),
                    None => out.push(tag.placeholder().to_string()),
                },
            }
        }
        out
    }
}

impl fmt::Display for TemplateCaption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_strings().join(" "))
    }
}

/// Drops overlapping spans, keeping the longer one and then the earlier one.
/// The result is sorted by offset.
pub fn resolve_overlaps(entities: &[NamedEntity]) -> Vec<NamedEntity> {
    let mut order: Vec<&NamedEntity> = entities.iter().filter(|e| !e.is_empty()).collect();
    order.sort_by(|a, b| {
        b.len()
            .cmp(&a.len())
            .then(a.token_offset.cmp(&b.token_offset))
    });
    let mut kept: Vec<NamedEntity> = Vec::new();
    for e in order {
        if kept
            .iter()
            .all(|k| e.end() <= k.token_offset || k.end() <= e.token_offset)
        {
            kept.push(e.clone());
        }
    }
    kept.sort_by_key(|e| e.token_offset);
    kept
}

/// Replaces each entity span of the caption by a single placeholder.
/// Entities that do not fit inside the caption are ignored.
pub fn templatize_caption(caption: &CaptionRecord, entities: &[NamedEntity]) -> TemplateCaption {
    let in_range: Vec<NamedEntity> = entities
        .iter()
        .filter(|e| e.end() <= caption.tokens.len())
        .cloned()
        .collect();
    let spans = resolve_overlaps(&in_range);
    let mut counts: HashMap<EntityTag, usize> = HashMap::new();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut spans = spans.iter().peekable();
    while i < caption.tokens.len() {
        if let Some(e) = spans.next_if(|e| e.token_offset == i) {
            let n = counts.entry(e.tag).or_default();
            *n += 1;
            tokens.push(TemplateToken::Placeholder {
                tag: e.tag,
                ordinal: *n,
            });
            i = e.end();
        } else {
            tokens.push(TemplateToken::Word(caption.tokens[i].clone()));
            i += 1;
        }
    }
    TemplateCaption { tokens }
}

// ---------------------------------------------------------------------------
// Entity index
// ---------------------------------------------------------------------------

/// Article entities grouped by tag, each list in order of appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EntityIndex {
    by_tag: BTreeMap<EntityTag, Vec<NamedEntity>>,
}

impl EntityIndex {
    pub fn get(&self, tag: EntityTag) -> &[NamedEntity] {
        self.by_tag.get(&tag).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.by_tag.is_empty()
    }

    pub fn tags(&self) -> impl Iterator<Item = EntityTag> + '_ {
        self.by_tag.keys().copied()
    }

    /// Entities of `tag` in one sentence, in order of appearance.
    pub fn in_sentence(&self, tag: EntityTag, sentence: usize) -> impl Iterator<Item = &NamedEntity> {
        self.get(tag)
            .iter()
            .filter(move |e| e.sentence_index == sentence)
    }
}

/// Indexes article entities by tag. Entities pointing outside the article
/// and repeated positions are dropped.
pub fn build_entity_index(article: &Article, entities: &[NamedEntity]) -> EntityIndex {
    let mut seen = HashSet::new();
    let mut by_tag: BTreeMap<EntityTag, Vec<NamedEntity>> = BTreeMap::new();
    for e in entities {
        let fits = article
            .sentences
            .get(e.sentence_index)
            .is_some_and(|s| e.end() <= s.len());
        if !fits || e.is_empty() || !seen.insert(e.position()) {
            continue;
        }
        by_tag.entry(e.tag).or_default().push(e.clone());
    }
    for list in by_tag.values_mut() {
        list.sort_by_key(NamedEntity::position);
    }
    EntityIndex { by_tag }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn einstein_gazetteer() -> Gazetteer {
        let mut g = Gazetteer::new();
        g.insert("Albert Einstein", EntityTag::Person);
        g.insert("Princeton University", EntityTag::Org);
        g
    }

    fn caption(text: &str) -> CaptionRecord {
        CaptionRecord {
            article_id: "x".into(),
            tokens: tokenize(text),
            raw_text: text.into(),
        }
    }

    #[test]
    fn annotate_einstein() {
        let got = annotate(
            "Albert Einstein taught in Princeton University in 1921",
            &einstein_gazetteer(),
        );
        let summary: Vec<_> = got
            .iter()
            .map(|e| (e.tag, e.sentence_index, e.token_offset))
            .collect();
        assert_eq!(
            summary,
            vec![
                (EntityTag::Person, 0, 0),
                (EntityTag::Org, 0, 4),
                (EntityTag::Date, 0, 7)
            ]
        );
    }

    #[test]
    fn annotate_nothing() {
        assert!(annotate("the cat sat", &Gazetteer::new()).is_empty());
    }

    #[test]
    fn annotate_capitalization_heuristic() {
        let got = annotate("Alice met Bob", &Gazetteer::new());
        assert_eq!(got.len(), 2);
        assert!(got.iter().all(|e| e.tag == EntityTag::Person));
        assert_eq!(got[0].surface, vec!["Alice"]);
        assert_eq!(got[1].token_offset, 2);
    }

    #[test]
    fn annotate_stopwords_months_and_long_runs() {
        let got = annotate(
            "The mayor spoke in March. In Paris Big Red Apple Company opened.",
            &Gazetteer::new(),
        );
        let summary: Vec<_> = got
            .iter()
            .map(|e| (e.tag, e.sentence_index, e.surface_text()))
            .collect();
        assert_eq!(
            summary,
            vec![
                (EntityTag::Date, 0, "March".to_string()),
                (EntityTag::Misc, 1, "Paris Big Red Apple Company".to_string()),
            ]
        );
    }

    #[test]
    fn gazetteer_tsv() {
        let g = Gazetteer::parse_tsv("Albert Einstein\tPERSON\n# c\n\nPrinceton\tORGANIZATION\n")
            .unwrap();
        assert_eq!(g.len(), 2);
        let err = Gazetteer::parse_tsv("Mars\tPLANET\n").unwrap_err();
        assert!(err.to_string().contains("PLANET"));
        assert!(Gazetteer::parse_tsv("no tab here\n").is_err());
    }

    fn bundle_with(entities: &str) -> SampleBundle {
        let mut b = SampleBundle::from_raw(
            "s",
            "JoAnn Falletta leading a performance. Later she spoke.",
            "JoAnn Falletta leading a performance",
            None,
            None,
        );
        b.entities = serde_json::from_str(entities).unwrap();
        b
    }

    #[test]
    fn external_annotations() {
        let b = bundle_with(
            r#"[{"surface":"JoAnn Falletta","tag":"PERSON","sentence_index":0,"token_offset":0}]"#,
        );
        let got = load_external_annotations(&b).unwrap();
        assert_eq!(got.article.len(), 1);
        assert_eq!(got.article[0].surface, vec!["JoAnn", "Falletta"]);

        let b = bundle_with("[]");
        assert_eq!(load_external_annotations(&b).unwrap(), Annotations::default());

        let b = bundle_with(
            r#"[{"surface":"JoAnn","tag":"PLANET","sentence_index":0,"token_offset":0}]"#,
        );
        assert!(matches!(
            load_external_annotations(&b),
            Err(Error::UnknownTag(t)) if t == "PLANET"
        ));

        let b = bundle_with(
            r#"[{"surface":"JoAnn","tag":"PERSON","sentence_index":5,"token_offset":0}]"#,
        );
        assert!(matches!(
            load_external_annotations(&b),
            Err(Error::EntityPosition { sentence_index: 5, .. })
        ));

        let b = bundle_with(
            r#"[{"surface":"performance","tag":"EVENT","sentence_index":0,"token_offset":4,"source":"caption"}]"#,
        );
        assert_eq!(load_external_annotations(&b).unwrap().caption.len(), 1);
    }

    #[test]
    fn templatize_einstein() {
        let text = "Albert Einstein taught in Princeton University in 1921";
        let ents = annotate_caption(text, &einstein_gazetteer());
        let t = templatize_caption(&caption(text), &ents);
        assert_eq!(t.to_string(), "PERSON_ taught in ORGANIZATION_ in DATE_");
        assert_eq!(
            t.tokens[0],
            TemplateToken::Placeholder {
                tag: EntityTag::Person,
                ordinal: 1
            }
        );
    }

    #[test]
    fn templatize_ordinals_and_passthrough() {
        let ents = annotate_caption("Alice met Bob", &Gazetteer::new());
        let t = templatize_caption(&caption("Alice met Bob"), &ents);
        assert_eq!(
            t.tokens,
            vec![
                TemplateToken::Placeholder {
                    tag: EntityTag::Person,
                    ordinal: 1
                },
                TemplateToken::Word("met".into()),
                TemplateToken::Placeholder {
                    tag: EntityTag::Person,
                    ordinal: 2
                },
            ]
        );
        let plain = templatize_caption(&caption("the cat sat"), &[]);
        assert_eq!(plain.to_strings(), vec!["the", "cat", "sat"]);
        assert_eq!(TemplateCaption::from_strings(&t.to_strings()), t);
    }

    #[test]
    fn overlaps_keep_longer_then_earlier() {
        let e = |off: usize, len: usize, tag| NamedEntity {
            surface: vec!["x".into(); len],
            tag,
            sentence_index: 0,
            token_offset: off,
        };
        let kept = resolve_overlaps(&[
            e(0, 1, EntityTag::Person),
            e(0, 2, EntityTag::Org),
            e(1, 2, EntityTag::Gpe),
            e(3, 1, EntityTag::Date),
        ]);
        let got: Vec<_> = kept.iter().map(|k| (k.token_offset, k.tag)).collect();
        assert_eq!(got, vec![(0, EntityTag::Org), (3, EntityTag::Date)]);
    }

    #[test]
    fn entity_index_ordering() {
        let article = SampleBundle::from_raw(
            "a",
            "One two three four five six. A b. C d e. F g h i.",
            "c",
            None,
            None,
        )
        .article;
        let p = |s: usize, o: usize| NamedEntity {
            surface: vec!["x".into()],
            tag: EntityTag::Person,
            sentence_index: s,
            token_offset: o,
        };
        let idx = build_entity_index(&article, &[p(0, 5), p(0, 2), p(3, 1), p(1, 0), p(0, 2)]);
        let order: Vec<_> = idx
            .get(EntityTag::Person)
            .iter()
            .map(|e| (e.sentence_index, e.token_offset))
            .collect();
        assert_eq!(order, vec![(0, 2), (0, 5), (1, 0), (3, 1)]);
        assert!(build_entity_index(&article, &[]).is_empty());
    }
}
