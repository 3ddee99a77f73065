//! Pipeline configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::captioner::{ModelDims, TrainingConfig};
use crate::encoder::EncoderConfig;
use crate::insertion::Strategy;
use crate::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub workdir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabConfig {
    pub min_count: usize,
    /// Caption tokens kept after templatization.
    pub max_len: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            min_count: 4,
            max_len: 31,
        }
    }
}

/// Decoder sizes that are not implied by the data. The word-embedding width
/// defaults to the word-vector dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embed: Option<usize>,
    pub hidden: usize,
    pub regions: usize,
    pub image_dim: usize,
    pub image_att: usize,
    pub article_att: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed: None,
            hidden: 512,
            regions: 49,
            image_dim: 2048,
            image_att: 512,
            article_att: 512,
        }
    }
}

impl ModelConfig {
    pub fn dims(&self, vocab: usize, word_dim: usize, slots: usize) -> ModelDims {
        ModelDims {
            vocab,
            embed: self.embed.unwrap_or(word_dim),
            image_dim: self.image_dim,
            regions: self.regions,
            article_dim: word_dim,
            slots,
            hidden: self.hidden,
            image_att: self.image_att,
            article_att: self.article_att,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seeds the split, the initialization, dropout and random insertion.
    pub seed: u64,
    pub split: [f64; 3],
    /// Which split is captioned and scored.
    pub eval_split: EvalSplit,
    /// Longest generated template.
    pub max_generate: usize,
    pub strategies: Vec<Strategy>,
    pub paths: Paths,
    pub vocab: VocabConfig,
    pub encoder: EncoderConfig,
    pub model: ModelConfig,
    pub training: TrainingConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            split: [0.8, 0.1, 0.1],
            eval_split: EvalSplit::Test,
            max_generate: 31,
            strategies: Strategy::ALL.to_vec(),
            paths: Paths::default(),
            vocab: VocabConfig::default(),
            encoder: EncoderConfig::default(),
            model: ModelConfig::default(),
            training: TrainingConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Usage(format!("invalid configuration: {e}")))
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.paths.rebase(base);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// Copies the top-level seed into the training settings and checks
    /// every section.
    pub fn finalize(mut self) -> Result<Self> {
        self.training.seed = self.seed;
        self.training.validate()?;
        self.encoder.validate()?;
        let sum: f64 = self.split.iter().sum();
        if self.split.iter().any(|&r| r < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Usage(format!("split ratios {:?} must be nonnegative and sum to 1", self.split)));
        }
        if self.strategies.is_empty() {
            return Err(Error::Usage("no insertion strategy configured".into()));
        }
        if self.vocab.min_count == 0 {
            return Err(Error::Usage("vocab.min_count must be at least 1".into()));
        }
        Ok(self)
    }
}

impl Paths {
    fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.embeddings,
            &mut self.gazetteer,
            &mut self.workdir,
        ]
        .into_iter()
        .flatten()
        {
            let joined = base.join(&*p);
            *p = std::path::absolute(&joined).unwrap_or(joined);
        }
    }
}

/// Parses `0.8,0.1,0.1`.
pub fn parse_split(text: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Usage(format!("split `{text}` is not three comma-separated numbers")))?;
    parts
        .try_into()
        .map_err(|_| Error::Usage(format!("split `{text}` must have exactly three ratios")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg = PipelineConfig::from_toml(
            "seed = 3\nstrategies = [\"AttIns\"]\n[model]\nhidden = 8\n[encoder]\nmethod = \"tbb\"\n",
        )
        .unwrap()
        .finalize()
        .unwrap();
        assert_eq!(cfg.training.seed, 3);
        assert_eq!(cfg.model.hidden, 8);
        assert_eq!(cfg.model.regions, 49);
        assert_eq!(cfg.strategies, vec![Strategy::Att]);
        assert_eq!(cfg.vocab.min_count, 4);
        let again = PipelineConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
        assert!(PipelineConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn split_flag() {
        assert_eq!(parse_split("0.8,0.1,0.1").unwrap(), [0.8, 0.1, 0.1]);
        assert!(parse_split("0.8,0.2").is_err());
        let cfg = PipelineConfig {
            split: [0.5, 0.5, 0.5],
            ..Default::default()
        };
        assert!(cfg.finalize().is_err());
    }
}
