//! Deterministic synthetic news corpora.
//!
//! Articles are stitched together from sentence patterns with typed slots
//! (`{PERSON}`, `{ORG}`, ...), filled from small fixed name lists, so every
//! entity is recoverable by [`gazetteer`] plus the capitalization rule.
//! Captions reuse entities that occur in their article.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{tokenize, SampleBundle};
use crate::digest::sha256_bytes;
use crate::embeddings::EmbeddingTable;
use crate::entities::{EntityTag, Gazetteer};

const FIRST_NAMES: &[&str] = &[
    "Maria", "James", "Aisha", "Kenji", "Elena", "Samuel", "Priya", "Lucas", "Fatima", "Oliver",
    "Grace", "Mateo", "Hannah", "Diego", "Nadia", "Victor", "Ingrid", "Omar", "Clara", "Felix",
];
const LAST_NAMES: &[&str] = &[
    "Lopez", "Carter", "Okafor", "Tanaka", "Petrova", "Reyes", "Sharma", "Bauer", "Haddad",
    "Nguyen", "Walsh", "Moreau", "Lindqvist", "Santos", "Kowalski", "Brennan", "Falletta",
    "Ibrahim", "Costa", "Novak",
];
const ORGS: &[&str] = &[
    "Buffalo Philharmonic Orchestra",
    "Princeton University",
    "City Council",
    "Red Cross",
    "National Museum",
    "Transit Authority",
    "Harbor Bank",
    "Metro Library",
    "State Senate",
    "Science Academy",
];
const GPES: &[&str] = &[
    "Buffalo", "Boston", "Chicago", "Paris", "Berlin", "Tokyo", "Denver", "Lagos", "Lima", "Oslo",
];
const LOCS: &[&str] = &["Hudson River", "Central Park", "Lake Erie", "Rocky Mountains", "Mojave Desert"];
const FACS: &[&str] = &[
    "Kennedy Center",
    "Union Station",
    "Madison Square Garden",
    "Grand Hotel",
    "Memorial Stadium",
];
const NORPS: &[&str] = &["Democrats", "Republicans", "Germans", "Brazilians", "Canadians"];
const EVENTS: &[&str] = &["World Series", "Fashion Week", "Olympic Games", "Jazz Festival", "Film Awards"];
const MONTH_NAMES: &[&str] = &[
    "January", "February", "March", "April", "June", "July", "August", "September", "October",
    "November", "December",
];

/// Article sentence patterns holding exactly one slot of the given tag.
const SENTENCES_BY_TAG: &[(EntityTag, &[&str])] = &[
    (
        EntityTag::Person,
        &[
            "{PERSON} said the plan would be finished soon.",
            "The report was written by {PERSON} last week.",
            "{PERSON} has worked on the project for years.",
        ],
    ),
    (
        EntityTag::Org,
        &[
            "The decision was announced by {ORG} on its website.",
            "Members of {ORG} met again to discuss the budget.",
        ],
    ),
    (
        EntityTag::Gpe,
        &[
            "The event in {GPE} drew large crowds.",
            "Residents of {GPE} expressed mixed feelings.",
        ],
    ),
    (
        EntityTag::Loc,
        &[
            "Visitors gathered near {LOC} to watch.",
            "The trail along {LOC} was closed.",
        ],
    ),
    (
        EntityTag::Fac,
        &[
            "The ceremony took place at {FAC} downtown.",
            "Tickets for {FAC} sold out quickly.",
        ],
    ),
    (
        EntityTag::Norp,
        &["Many {NORP} welcomed the news.", "Some {NORP} criticized the proposal."],
    ),
    (
        EntityTag::Event,
        &[
            "The {EVENT} attracted visitors from abroad.",
            "Preparations for the {EVENT} began early.",
        ],
    ),
    (
        EntityTag::Date,
        &[
            "The building opened in {DATE} after delays.",
            "In {DATE} the group released its first album.",
        ],
    ),
];

const FILLER_SENTENCES: &[&str] = &[
    "The weather was mild and the streets were quiet.",
    "It was the first time in a decade.",
    "The mood was cheerful despite the rain.",
];

/// Caption patterns used by the mini and overfit corpora.
pub const CAPTION_PATTERNS: &[&str] = &[
    "{PERSON} performs with {ORG} in {GPE}",
    "{PERSON} speaks at {FAC} in {DATE}",
    "{PERSON} and {PERSON} during the {EVENT}",
    "a view of {LOC} near {GPE}",
    "{NORP} supporters gather outside {FAC}",
    "members of {ORG} in {GPE} in {DATE}",
    "{PERSON} visits {LOC}",
    "{PERSON} leading a performance",
];

/// Topic sentence and matching caption for the distractor corpus. Every
/// pattern has one PERSON, one ORG and one GPE slot.
const TOPICS: &[(&str, &str)] = &[
    (
        "{PERSON} conducted {ORG} in a symphony concert in {GPE}.",
        "{PERSON} conducts {ORG} during a concert in {GPE}",
    ),
    (
        "{PERSON} won the election campaign for {ORG} in {GPE}.",
        "{PERSON} celebrates victory with {ORG} in {GPE}",
    ),
    (
        "{PERSON} inspected storm damage with {ORG} crews in {GPE}.",
        "{PERSON} surveys flood damage with {ORG} in {GPE}",
    ),
    (
        "{PERSON} scored twice as {ORG} won the match in {GPE}.",
        "{PERSON} scores a goal for {ORG} in {GPE}",
    ),
];

const DISTRACTORS: &[&str] = &[
    "{PERSON} said {ORG} would review the budget in {GPE}.",
    "{PERSON} told reporters that {ORG} had no comment in {GPE}.",
    "{PERSON} met officials from {ORG} in {GPE} to discuss it.",
];

/// Feature key shared by every sample of the distractor corpus.
pub const CONSTANT_FEATURES: &str = "constant";

/// Gazetteer covering every non-person name used by the generators.
/// People are found by the capitalization rule.
pub fn gazetteer() -> Gazetteer {
    let mut g = Gazetteer::new();
    for (list, tag) in [
        (ORGS, EntityTag::Org),
        (GPES, EntityTag::Gpe),
        (LOCS, EntityTag::Loc),
        (FACS, EntityTag::Fac),
        (NORPS, EntityTag::Norp),
        (EVENTS, EntityTag::Event),
    ] {
        for s in list {
            g.insert(s, tag);
        }
    }
    g
}

fn slot_tag(slot: &str) -> Option<EntityTag> {
    slot.parse().ok()
}

/// Draws a surface string for `tag`.
pub fn random_entity(tag: EntityTag, rng: &mut impl Rng) -> String {
    let pick = |list: &[&str], rng: &mut dyn rand::RngCore| list[rng.gen_range(0..list.len())].to_string();
    match tag {
        EntityTag::Person => format!(
            "{} {}",
            FIRST_NAMES[rng.gen_range(0..FIRST_NAMES.len())],
            LAST_NAMES[rng.gen_range(0..LAST_NAMES.len())]
        ),
        EntityTag::Org => pick(ORGS, rng),
        EntityTag::Gpe => pick(GPES, rng),
        EntityTag::Loc => pick(LOCS, rng),
        EntityTag::Fac => pick(FACS, rng),
        EntityTag::Norp => pick(NORPS, rng),
        EntityTag::Event => pick(EVENTS, rng),
        EntityTag::Date => {
            if rng.gen_bool(0.5) {
                rng.gen_range(1921..=2019).to_string()
            } else {
                pick(MONTH_NAMES, rng)
            }
        }
        EntityTag::Misc => "Grand Prize Winner Award".to_string(),
    }
}

/// Tags of the `{TAG}` slots in `pattern`, left to right.
pub fn pattern_slots(pattern: &str) -> Vec<EntityTag> {
    pattern
        .split('{')
        .skip(1)
        .filter_map(|rest| rest.split_once('}').and_then(|(slot, _)| slot_tag(slot)))
        .collect()
}

/// Replaces the slots of `pattern`, in order, with `fills`.
pub fn fill_pattern(pattern: &str, fills: &[String]) -> String {
    let mut out = String::new();
    let mut fills = fills.iter();
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        let close = open + rest[open..].find('}').expect("slots are closed");
        out.push_str(&rest[..open]);
        out.push_str(fills.next().expect("one fill per slot"));
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    out
}

/// Draws distinct fills for the slots of `pattern`.
fn draw_fills(pattern: &str, rng: &mut impl Rng) -> Vec<String> {
    let mut fills: Vec<String> = Vec::new();
    for tag in pattern_slots(pattern) {
        let mut e = random_entity(tag, rng);
        for _ in 0..20 {
            if !fills.contains(&e) {
                break;
            }
            e = random_entity(tag, rng);
        }
        fills.push(e);
    }
    fills
}

fn sentence_for(tag: EntityTag, entity: &str, rng: &mut impl Rng) -> String {
    let patterns = SENTENCES_BY_TAG
        .iter()
        .find(|(t, _)| *t == tag)
        .map(|(_, p)| *p)
        .unwrap_or(&["{MISC} was mentioned."]);
    fill_pattern(patterns.choose(rng).expect("nonempty"), &[entity.to_string()])
}

/// One sample whose caption follows `pattern` and whose article mentions
/// every caption entity once, mixed with same-style distractor sentences.
fn pattern_sample(id: &str, pattern: &str, rng: &mut impl Rng) -> SampleBundle {
    let fills = draw_fills(pattern, rng);
    let caption = fill_pattern(pattern, &fills);
    let mut sentences: Vec<String> = pattern_slots(pattern)
        .into_iter()
        .zip(&fills)
        .map(|(tag, e)| sentence_for(tag, e, rng))
        .collect();
    for _ in 0..rng.gen_range(1..=4) {
        let (tag, _) = SENTENCES_BY_TAG[rng.gen_range(0..SENTENCES_BY_TAG.len())];
        let e = random_entity(tag, rng);
        sentences.push(sentence_for(tag, &e, rng));
    }
    for _ in 0..rng.gen_range(0..=2) {
        sentences.push(FILLER_SENTENCES.choose(rng).expect("nonempty").to_string());
    }
    sentences.shuffle(rng);
    let headline = format!("News from {}", GPES.choose(rng).expect("nonempty"));
    SampleBundle::from_raw(id, &sentences.join(" "), &caption, Some(&headline), None)
}

/// The general-purpose corpus used by the pipeline demo: `n` samples with
/// caption patterns drawn uniformly from [`CAPTION_PATTERNS`].
pub fn mini_corpus(n: usize, seed: u64) -> Vec<SampleBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let pattern = CAPTION_PATTERNS.choose(&mut rng).expect("nonempty");
            pattern_sample(&format!("s{i:03}"), pattern, &mut rng)
        })
        .collect()
}

/// A small corpus for memorization checks: patterns are cycled so each
/// appears a similar number of times; captions stay under 10 tokens.
pub fn overfit_corpus(n: usize, seed: u64) -> Vec<SampleBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let pattern = CAPTION_PATTERNS[i % CAPTION_PATTERNS.len()];
            pattern_sample(&format!("o{i:02}"), pattern, &mut rng)
        })
        .collect()
}

/// Samples whose caption entities all sit together in one topic sentence,
/// surrounded by `distractors` sentences carrying other entities of the
/// same tags. Image features are identical across samples, so the caption
/// can only be inferred from the article.
pub fn distractor_corpus(n: usize, distractors: usize, seed: u64) -> Vec<SampleBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (key, cap) = TOPICS[i % TOPICS.len()];
            let fills = draw_fills(key, &mut rng);
            let mut sentences: Vec<String> = (0..distractors)
                .map(|_| {
                    let pattern = DISTRACTORS.choose(&mut rng).expect("nonempty");
                    let mut d = draw_fills(pattern, &mut rng);
                    for ((slot, f), tag) in d.iter_mut().zip(&fills).zip(pattern_slots(pattern)) {
                        while slot == f {
                            *slot = random_entity(tag, &mut rng);
                        }
                    }
                    fill_pattern(pattern, &d)
                })
                .collect();
            let at = rng.gen_range(0..=sentences.len());
            sentences.insert(at, fill_pattern(key, &fills));
            SampleBundle::from_raw(
                &format!("d{i:03}"),
                &sentences.join(" "),
                &fill_pattern(cap, &fills),
                None,
                Some(CONSTANT_FEATURES),
            )
        })
        .collect()
}

/// `n` caption strings with entities of every tag, for round-trip checks.
pub fn captions(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extra = [
        "{PERSON} and {PERSON} walk along {LOC} in {DATE}",
        "{EVENT} crowds fill {FAC} as {NORP} cheer",
        "{PERSON} of {ORG} arrives in {GPE}",
    ];
    (0..n)
        .map(|_| {
            let pattern = if rng.gen_bool(0.7) {
                CAPTION_PATTERNS.choose(&mut rng).expect("nonempty")
            } else {
                extra.choose(&mut rng).expect("nonempty")
            };
            fill_pattern(pattern, &draw_fills(pattern, &mut rng))
        })
        .collect()
}

/// Every lowercase token the generators can emit.
pub fn lexicon() -> Vec<String> {
    let mut words: Vec<String> = Vec::new();
    let patterns = SENTENCES_BY_TAG
        .iter()
        .flat_map(|(_, p)| p.iter())
        .chain(FILLER_SENTENCES)
        .chain(CAPTION_PATTERNS)
        .chain(TOPICS.iter().flat_map(|(a, b)| [a, b]))
        .chain(DISTRACTORS)
        .map(|p| {
            let slots = pattern_slots(p);
            fill_pattern(p, &vec![String::new(); slots.len()])
        });
    let names = [FIRST_NAMES, LAST_NAMES, ORGS, GPES, LOCS, FACS, NORPS, EVENTS, MONTH_NAMES]
        .into_iter()
        .flatten()
        .map(|s| s.to_string());
    let extras = ["news", "from", "grand", "prize", "winner", "award", "was", "mentioned", "of", "and"]
        .into_iter()
        .map(String::from);
    for text in patterns.chain(names).chain(extras) {
        words.extend(tokenize(&text));
    }
    words.extend((1921..=2019).map(|y| y.to_string()));
    words.sort();
    words.dedup();
    words
}

/// Unit-length pseudo-random vectors for every word of [`lexicon`], each
/// seeded by the word itself so that tables of different sizes agree.
pub fn word_vectors(dim: usize, seed: u64) -> EmbeddingTable {
    let mut table = EmbeddingTable::new(dim);
    for w in lexicon() {
        let mut key = sha256_bytes(w.as_bytes());
        key[..8]
            .iter_mut()
            .zip(seed.to_le_bytes())
            .for_each(|(k, s)| *k ^= s);
        let mut rng = ChaCha8Rng::from_seed(key);
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        table
            .insert(&w, v.into_iter().map(|x| x / norm).collect())
            .expect("dimension is fixed");
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entities::{annotate, annotate_caption};

    #[test]
    fn patterns_fill_in_order() {
        assert_eq!(
            pattern_slots("{PERSON} met {ORG} in {GPE}"),
            vec![EntityTag::Person, EntityTag::Org, EntityTag::Gpe]
        );
        let s = fill_pattern("{PERSON} met {GPE}.", &["Ann Lee".into(), "Oslo".into()]);
        assert_eq!(s, "Ann Lee met Oslo.");
    }

    #[test]
    fn generated_entities_are_recognized() {
        let gaz = gazetteer();
        for b in mini_corpus(30, 5) {
            let cap = annotate_caption(&b.caption.raw_text, &gaz);
            let pattern_count = b.caption.raw_text.split(' ').count();
            assert!(!cap.is_empty() && cap.len() <= pattern_count, "{}", b.caption.raw_text);
            let art = annotate(&b.article.raw_text, &gaz);
            for e in &cap {
                assert!(
                    art.iter().any(|a| a.tag == e.tag && a.surface == e.surface),
                    "caption entity {:?} missing from article {}",
                    e,
                    b.article.raw_text
                );
            }
        }
    }

    #[test]
    fn corpora_are_deterministic() {
        assert_eq!(mini_corpus(5, 1), mini_corpus(5, 1));
        assert_ne!(mini_corpus(5, 1), mini_corpus(5, 2));
        assert_eq!(distractor_corpus(4, 3, 9), distractor_corpus(4, 3, 9));
    }

    #[test]
    fn vectors_cover_the_corpus() {
        let table = word_vectors(8, 0);
        for b in mini_corpus(20, 3).iter().chain(&distractor_corpus(8, 3, 1)) {
            for tok in b.article.sentences.iter().flatten().chain(&b.caption.tokens) {
                assert!(table.get(tok).is_some(), "missing vector for {tok}");
            }
        }
    }
}
