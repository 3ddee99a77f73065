use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use newscap::corpus::{emit_jsonl, ingest_reader, tokenize, tokenize_cased, CaptionRecord, SampleBundle};
use newscap::entities::{annotate_caption, resolve_overlaps, templatize_caption};
use newscap::synth;

fn text() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 .,!?;:'\"()\\-]{0,80}"
}

proptest! {
    #[test]
    fn tokenizer_is_idempotent(s in text()) {
        let once = tokenize_cased(&s);
        prop_assert_eq!(tokenize_cased(&once.join(" ")), once.clone());
        prop_assert_eq!(tokenize(&once.join(" ")), tokenize(&s));
    }

    #[test]
    fn emit_then_ingest_is_identity(
        rows in prop::collection::vec((text(), text(), prop::option::of(text()), prop::option::of("[a-z/]{1,12}")), 1..6)
    ) {
        let bundles: Vec<SampleBundle> = rows
            .iter()
            .enumerate()
            .map(|(i, (a, c, h, f))| SampleBundle::from_raw(&format!("s{i}"), a, c, h.as_deref(), f.as_deref()))
            .filter(|b| !b.article.sentences.is_empty() && !b.caption.tokens.is_empty())
            .collect();
        let mut buf = Vec::new();
        emit_jsonl(&bundles, &mut buf).unwrap();
        let back = ingest_reader(buf.as_slice()).unwrap();
        prop_assert!(back.errors.is_empty(), "{:?}", back.errors);
        prop_assert_eq!(back.bundles, bundles);
    }

    #[test]
    fn template_substitution_restores_caption(pattern in 0..synth::CAPTION_PATTERNS.len(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = synth::CAPTION_PATTERNS[pattern];
        let fills: Vec<String> = synth::pattern_slots(p)
            .into_iter()
            .map(|t| synth::random_entity(t, &mut rng))
            .collect();
        let raw = synth::fill_pattern(p, &fills);
        let record = CaptionRecord { article_id: "p".into(), tokens: tokenize(&raw), raw_text: raw.clone() };
        let entities = resolve_overlaps(&annotate_caption(&raw, &synth::gazetteer()));
        let template = templatize_caption(&record, &entities);
        let surfaces: Vec<Vec<String>> = entities.iter().map(|e| e.surface.clone()).collect();
        prop_assert_eq!(template.placeholders().count(), entities.len());
        prop_assert_eq!(template.substitute(&surfaces), tokenize_cased(&raw));
    }
}
