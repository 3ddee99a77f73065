//! Encodes a few articles with each sentence-embedding method and shows how
//! much of the shared direction TBB removes.

use newscap::encoder::{EncoderConfig, EncoderMethod};
use newscap::pipeline::EncoderState;
use newscap::synth;

fn main() -> newscap::Result<()> {
    let bundles = synth::mini_corpus(50, 11);
    let table = synth::word_vectors(16, 0);
    let articles: Vec<_> = bundles.iter().map(|b| &b.article).collect();

    for method in [EncoderMethod::Avg, EncoderMethod::Wavg, EncoderMethod::Tbb] {
        let config = EncoderConfig {
            method,
            ..EncoderConfig::default()
        };
        let state = EncoderState::fit(articles.iter().copied(), config, &table)?;
        let enc = state.encode(articles[0], &table)?;
        let first = enc.matrix.row(0);
        let norm = first.dot(&first).sqrt();
        print!("{method:?}: {}x{} matrix, {} real rows, first-row norm {norm:.4}", enc.rows(), enc.dim(), enc.n_real_sentences);
        if let Some(pc) = &state.component {
            let worst = enc
                .matrix
                .rows()
                .into_iter()
                .map(|r| pc.vector().dot(&r).abs())
                .fold(0.0, f64::max);
            print!(", largest |u.row| {worst:.2e}");
        }
        println!();
    }
    Ok(())
}
