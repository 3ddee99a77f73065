//! Per-stage manifests: what went in, under which settings, and what came out.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Keys of `inputs` are labels (`corpus`, `ingest/manifest.json`, ...);
/// keys of `artifacts` are paths relative to the working directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub config_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Names the first artifact that is missing or whose content changed.
    pub fn verify(&self, workdir: &Path) -> Result<Option<String>> {
        for (rel, want) in &self.artifacts {
            let path = workdir.join(rel);
            if !path.is_file() || &hash_file(&path)? != want {
                return Ok(Some(rel.clone()));
            }
        }
        Ok(None)
    }
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Hash of a serializable settings value, through its JSON form.
pub fn hash_config<T: Serialize>(value: &T) -> String {
    sha256_hex(serde_json::to_string(value).expect("config serializes").as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "one").unwrap();
        let mut m = Manifest {
            stage: "x".into(),
            config_hash: hash_config(&1),
            inputs: BTreeMap::new(),
            artifacts: BTreeMap::new(),
        };
        m.artifacts
            .insert("a.txt".into(), hash_file(&dir.path().join("a.txt")).unwrap());
        assert_eq!(m.verify(dir.path()).unwrap(), None);
        std::fs::write(dir.path().join("a.txt"), "two").unwrap();
        assert_eq!(m.verify(dir.path()).unwrap().as_deref(), Some("a.txt"));

        let path = dir.path().join(MANIFEST_FILE);
        m.save(&path).unwrap();
        assert_eq!(Manifest::load(&path).unwrap(), m);
    }
}
