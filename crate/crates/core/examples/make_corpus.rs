//! Regenerates the bundled synthetic corpora, word vectors and gazetteer.
//!
//! ```text
//! cargo run --example make_corpus -- [out_dir]
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use newscap::corpus::{emit_jsonl, SampleBundle};
use newscap::synth;

fn write_corpus(path: PathBuf, bundles: &[SampleBundle]) -> std::io::Result<()> {
    emit_jsonl(bundles, BufWriter::new(File::create(&path)?))?;
    println!("{} ({} samples)", path.display(), bundles.len());
    Ok(())
}

fn main() -> std::io::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    std::fs::create_dir_all(&out)?;
    write_corpus(out.join("mini_corpus.jsonl"), &synth::mini_corpus(100, 2024))?;
    write_corpus(out.join("overfit_corpus.jsonl"), &synth::overfit_corpus(20, 7))?;
    write_corpus(out.join("distractor_corpus.jsonl"), &synth::distractor_corpus(20, 4, 3))?;
    std::fs::write(out.join("vectors.txt"), synth::word_vectors(16, 0).to_text())?;
    std::fs::write(out.join("gazetteer.tsv"), synth::gazetteer().to_tsv())?;
    println!("vectors.txt and gazetteer.tsv written to {}", out.display());
    Ok(())
}
