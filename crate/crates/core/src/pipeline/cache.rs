use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Content-addressed store for stage outputs. A stage's key hashes its
/// name, the keys of the stages it reads, and its own config subsection,
/// so any upstream change produces a new key.
#[derive(Debug, Clone)]
pub struct StageCache {
    dir: PathBuf,
}

impl StageCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        StageCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, stage: &str, key: &str) -> PathBuf {
        self.dir.join(format!("{stage}-{key}.json"))
    }

    /// `None` on a miss or an unreadable entry.
    pub fn load<T: DeserializeOwned>(&self, stage: &str, key: &str) -> Option<T> {
        let bytes = fs::read(self.path(stage, key)).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    /// Writes through a temporary file so a crash never leaves a partial
    /// entry under the final name.
    pub fn store<T: Serialize>(&self, stage: &str, key: &str, value: &T) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let bytes = serde_json::to_vec(value).map_err(io::Error::other)?;
        let final_path = self.path(stage, key);
        let tmp = final_path.with_extension("json.tmp");
        fs::write(&tmp, bytes)?;
        fs::rename(tmp, final_path)
    }
}

pub fn stage_key(stage: &str, upstream: &[&str], section: &impl Serialize) -> String {
    let mut h = Sha256::new();
    h.update(stage.as_bytes());
    for u in upstream {
        h.update([0u8]);
        h.update(u.as_bytes());
    }
    h.update([1u8]);
    h.update(serde_json::to_vec(section).expect("config section serializes"));
    hex::encode(h.finalize())
}

pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
