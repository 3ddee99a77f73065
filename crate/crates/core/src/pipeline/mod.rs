//! Configuration, in-memory preparation and the staged on-disk pipeline.

mod config;
mod manifest;
mod prepare;
mod stages;

pub use config::{parse_split, EvalSplit, ModelConfig, Paths, PipelineConfig, VocabConfig};
pub use manifest::{hash_file, Manifest, MANIFEST_FILE};
pub use prepare::{
    annotate_sample, build_vocab, ground_truth, prepare, prepare_from_config, resolve_image_features, tag_support,
    AnnotatedSample, EncoderState, PreparedData, PreparedSample,
};
pub use stages::{
    evaluate_files, sample_seed, GeneratedTemplate, Pipeline, Stage, StageOutcome, StrategyReport,
};
