//! On-disk stage artifacts. Keys are content hashes, never timestamps, and
//! every write goes to a temporary sibling first and is then renamed into place.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::path(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Hashes labelled, length-prefixed parts so adjacent parts cannot run together.
pub struct KeyBuilder(Sha256);

impl KeyBuilder {
    pub fn new(stage: &str) -> Self {
        let mut k = KeyBuilder(Sha256::new());
        k.bytes("stage", stage.as_bytes());
        k
    }

    pub fn bytes(&mut self, label: &str, bytes: &[u8]) -> &mut Self {
        for part in [label.as_bytes(), bytes] {
            self.0.update((part.len() as u64).to_le_bytes());
            self.0.update(part);
        }
        self
    }

    pub fn json<T: Serialize>(&mut self, label: &str, value: &T) -> Result<&mut Self> {
        let bytes = serde_json::to_vec(value)?;
        Ok(self.bytes(label, &bytes))
    }

    pub fn finish(&self) -> String {
        hex::encode(self.0.clone().finalize())
    }
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::path(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = dir.join(format!(
        ".{name}.tmp-{}-{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::write(&tmp, bytes).map_err(|e| Error::path(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::path(path, e))
}

/// `<cache>/<stage-tag>/` with its `key` stamp.
#[derive(Debug, Clone)]
pub struct StageDir {
    pub dir: PathBuf,
}

impl StageDir {
    pub fn new(cache: &Path, tag: &str) -> Self {
        Self {
            dir: cache.join(tag),
        }
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn stored_key(&self) -> Option<String> {
        std::fs::read_to_string(self.file("key"))
            .ok()
            .map(|s| s.trim().to_string())
    }

    /// The key matches and every listed artifact is present.
    pub fn is_fresh(&self, key: &str, artifacts: &[&str]) -> bool {
        self.stored_key().as_deref() == Some(key)
            && artifacts.iter().all(|a| self.file(a).is_file())
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        atomic_write(&self.file(name), bytes)
    }

    /// Written last, so an interrupted stage is never mistaken for a hit.
    pub fn stamp(&self, key: &str) -> Result<()> {
        self.write("key", format!("{key}\n").as_bytes())
    }

    pub fn read(&self, name: &str) -> Result<Vec<u8>> {
        let p = self.file(name);
        std::fs::read(&p).map_err(|e| Error::path(&p, e))
    }
}
