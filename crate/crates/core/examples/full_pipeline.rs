//! Runs every stage on the bundled corpus in a scratch working directory
//! and prints the per-strategy summary.
//!
//! ```text
//! cargo run --release --example full_pipeline -- [workdir]
//! ```

use std::path::PathBuf;

use newscap::pipeline::{Pipeline, PipelineConfig};

fn main() -> newscap::Result<()> {
    let workdir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("newscap-demo"));
    let mut cfg = PipelineConfig::load(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/pipeline.toml"))?;
    cfg.paths.workdir = Some(workdir.clone());
    let pipeline = Pipeline::new(cfg, true)?;
    for (stage, outcome) in pipeline.run_all()? {
        println!("{stage:<9} {outcome:?}");
    }
    println!();
    let table = std::fs::read_to_string(workdir.join("report/summary.txt")).expect("report written");
    print!("{table}");
    println!("\nartifacts in {}", workdir.display());
    Ok(())
}
