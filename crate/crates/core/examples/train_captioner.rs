//! Memorizes the bundled 20-sample corpus, then reports teacher-forced
//! accuracy and how many templates greedy decoding reproduces.
//!
//! ```text
//! cargo run --release --example train_captioner -- [config.toml]
//! ```

use std::path::PathBuf;

use newscap::captioner::{generate, teacher_forced_accuracy, Trainer};
use newscap::pipeline::{prepare_from_config, PipelineConfig};

fn main() -> newscap::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/overfit.toml"));
    let cfg = PipelineConfig::load(&path)?.finalize()?;
    let data = prepare_from_config(&cfg)?;
    let samples = data.training_samples();
    println!("{} samples, vocabulary of {}", samples.len(), data.vocab.len());

    let mut trainer = Trainer::new(data.dims, cfg.training)?;
    for _ in 0..cfg.training.epochs {
        let stats = trainer.run_epoch(&samples)?;
        if stats.epoch % 20 == 0 {
            let acc = teacher_forced_accuracy(&trainer.params, &samples)?;
            println!("epoch {:>4}  lr {:.5}  loss {:.4}  accuracy {:.3}", stats.epoch, stats.lr, stats.mean_loss, acc);
        }
    }
    println!("final accuracy {:.3}", teacher_forced_accuracy(&trainer.params, &samples)?);

    let mut exact = 0;
    for (s, p) in samples.iter().zip(&data.samples) {
        let (ids, _) = generate(&trainer.params, &s.grid, &s.article, cfg.max_generate)?;
        let hit = s.tokens[1..s.tokens.len() - 1] == ids[..];
        exact += usize::from(hit);
        let words: Vec<&str> = ids.iter().map(|&i| data.vocab.decode(i).unwrap_or("<unk>")).collect();
        println!("{} {}  {}", if hit { "ok  " } else { "miss" }, p.id(), words.join(" "));
    }
    println!("{exact}/{} templates reproduced", samples.len());
    Ok(())
}
