//! Binary `NCAP` checkpoints with a JSON sidecar.
//!
//! Layout: magic `NCAP`, `u32` version, the nine model dimensions as `u32`,
//! then each tensor as `u32` name length, UTF-8 name and its row-major
//! little-endian `f64` values. Tensor lengths follow from the dimensions.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::params::{ModelDims, ModelParams, TENSOR_NAMES};
use super::train::TrainingConfig;
use crate::digest::sha256_hex;
use crate::embeddings::Vocabulary;
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"NCAP";
pub const VERSION: u32 = 1;

/// Metadata stored next to a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub dims: ModelDims,
    pub training: TrainingConfig,
    /// SHA-256 of the vocabulary JSON the model was trained with.
    pub vocab_sha256: String,
    pub epoch_losses: Vec<f64>,
}

impl CheckpointMeta {
    pub fn new(params: &ModelParams, training: TrainingConfig, vocab: &Vocabulary, losses: Vec<f64>) -> Self {
        CheckpointMeta {
            dims: params.dims,
            training,
            vocab_sha256: sha256_hex(vocab.to_json().as_bytes()),
            epoch_losses: losses,
        }
    }

    /// Fails unless `vocab` is the one recorded at training time.
    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<()> {
        let got = sha256_hex(vocab.to_json().as_bytes());
        if got != self.vocab_sha256 {
            return Err(Error::Data(format!(
                "vocabulary hash {got} does not match checkpoint ({})",
                self.vocab_sha256
            )));
        }
        Ok(())
    }
}

pub fn to_bytes(params: &ModelParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 36 + params.num_parameters() * 8 + 14 * 24);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in params.dims.as_u32s() {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for (name, values) in params.tensors() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Data(format!("checkpoint truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelParams> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::Data("not a checkpoint: bad magic".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::Data(format!("unsupported checkpoint version {version}")));
    }
    let mut raw = [0u32; 9];
    for d in raw.iter_mut() {
        *d = cur.u32()?;
    }
    let dims = ModelDims::from_u32s(raw);
    dims.validate()?;
    let mut params = ModelParams::zeros(dims);
    for (expected, (_, values)) in TENSOR_NAMES.iter().zip(params.tensors_mut()) {
        let len = cur.u32()? as usize;
        let name = std::str::from_utf8(cur.take(len)?)
            .map_err(|_| Error::Data("tensor name is not UTF-8".into()))?;
        if name != *expected {
            return Err(Error::Data(format!("expected tensor `{expected}`, found `{name}`")));
        }
        let data = cur.take(values.len() * 8)?;
        for (v, chunk) in values.iter_mut().zip(data.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
    }
    if cur.pos != bytes.len() {
        return Err(Error::Data("trailing bytes after checkpoint tensors".into()));
    }
    Ok(params)
}

/// Path of the JSON sidecar for a checkpoint file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}

pub fn save(path: impl AsRef<Path>, params: &ModelParams, meta: &CheckpointMeta) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_bytes(params)).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(meta)?;
    std::fs::write(&side, json).map_err(|e| Error::io(side, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<(ModelParams, CheckpointMeta)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let params = from_bytes(&bytes)?;
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: CheckpointMeta = serde_json::from_str(&text)?;
    if meta.dims != params.dims {
        return Err(Error::Data("checkpoint sidecar dimensions disagree with the tensors".into()));
    }
    Ok((params, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> ModelDims {
        ModelDims {
            vocab: 7,
            embed: 3,
            image_dim: 2,
            regions: 2,
            article_dim: 3,
            slots: 2,
            hidden: 4,
            image_att: 2,
            article_att: 3,
        }
    }

    #[test]
    fn bytes_round_trip_exactly() {
        let p = ModelParams::init_uniform(dims(), 0.1, 11);
        let bytes = to_bytes(&p);
        assert_eq!(&bytes[..4], b"NCAP");
        assert_eq!(from_bytes(&bytes).unwrap(), p);
        assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(from_bytes(&extra).is_err());
    }

    #[test]
    fn files_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ncap");
        let p = ModelParams::init_uniform(dims(), 0.1, 1);
        let vocab = Vocabulary::build::<&str>(&[], 1, 31);
        let meta = CheckpointMeta::new(&p, TrainingConfig::default(), &vocab, vec![1.5, 1.0]);
        save(&path, &p, &meta).unwrap();
        assert!(dir.path().join("model.ncap.json").exists());
        let (q, m) = load(&path).unwrap();
        assert_eq!(q, p);
        assert_eq!(m, meta);
        m.check_vocabulary(&vocab).unwrap();
    }
}
