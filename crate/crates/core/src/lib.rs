//! Entity-aware captioning for news images.
//!
//! The pipeline runs in two stages. A recurrent decoder, attending over an
//! image-feature grid and over sentence-level embeddings of the accompanying
//! article, produces a *template caption* in which named entities are
//! replaced by typed placeholders (`PERSON_`, `ORGANIZATION_`, `DATE_`, ...).
//! The placeholders are then filled with entities taken from the article,
//! either at random, by sentence similarity, or by following the decoder's
//! article attention.
//!
//! Modules, roughly in pipeline order:
//!
//! - [`corpus`]: JSONL ingestion, sentence segmentation, tokenization, splits.
//! - [`entities`]: gazetteer NER, external annotations, template captions.
//! - [`embeddings`]: word vectors, vocabulary, unigram frequencies.
//! - [`encoder`]: AVG / SIF-weighted / TBB article encodings.
//! - [`captioner`]: the attention LSTM decoder, its gradients and training.
//! - [`insertion`]: RandIns, CtxIns and AttIns placeholder filling.
//! - [`metrics`]: BLEU, ROUGE-L, CIDEr, entity precision/recall, consensus.
//! - [`pipeline`]: staged, content-hashed orchestration used by the CLI.
//! - [`synth`]: deterministic synthetic news corpora for tests and demos.

pub mod captioner;
pub mod corpus;
pub mod embeddings;
pub mod encoder;
pub mod entities;
mod digest;
mod error;
pub mod insertion;
pub mod matrix_file;
pub mod metrics;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
