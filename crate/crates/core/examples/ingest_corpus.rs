//! Validates a JSONL corpus, prints what was rejected and the split sizes.
//!
//! ```text
//! cargo run --example ingest_corpus -- [corpus.jsonl]
//! ```

use std::path::PathBuf;

use newscap::corpus::{ingest_jsonl, ingest_reader, split_dataset};

fn main() -> newscap::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/mini_corpus.jsonl"));
    let got = ingest_jsonl(&path)?;
    let sentences: usize = got.bundles.iter().map(|b| b.article.sentences.len()).sum();
    println!(
        "{}: {} samples, {} article sentences, {} rejected lines",
        path.display(),
        got.bundles.len(),
        sentences,
        got.errors.len()
    );

    let ids: Vec<String> = got.bundles.iter().map(|b| b.id().to_string()).collect();
    let split = split_dataset(&ids, (0.8, 0.1, 0.1), 0)?;
    println!("split train/val/test = {}/{}/{}", split.train.len(), split.val.len(), split.test.len());

    if let Some(b) = got.bundles.first() {
        println!("first caption tokens: {:?}", b.caption.tokens);
        println!("first article sentence: {:?}", b.article.sentences[0]);
    }

    let broken = concat!(
        "{\"id\":\"a\",\"article\":\"Bob ran.\",\"caption\":\"Bob\"}\n",
        "not json\n",
        "{\"id\":\"b\",\"article\":\"Ann sang.\"}\n",
        "{\"id\":\"a\",\"article\":\"Again.\",\"caption\":\"dup\"}\n",
    );
    let got = ingest_reader(broken.as_bytes())?;
    println!("\nmalformed input: {} accepted", got.bundles.len());
    for e in &got.errors {
        println!("  line {} ({:?}): {}", e.line, e.kind, e.message);
    }
    Ok(())
}
