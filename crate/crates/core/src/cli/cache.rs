//! On-disk cache of grids and quantizers. Each file `name` has a sidecar
//! `name.sha256` holding the hex digest of its contents.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::Result;

pub const DEFAULT_CACHE_DIR: &str = ".qis-cache";

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn sidecar(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{name}.sha256"))
    }

    /// Contents of `name` if present and its checksum matches.
    pub fn read(&self, name: &str) -> Result<Option<String>> {
        let path = self.path(name);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)?;
        let stored = fs::read_to_string(self.sidecar(name)).unwrap_or_default();
        if stored.trim() != sha256_hex(&text) {
            eprintln!("notice: checksum mismatch for {}, rebuilding", path.display());
            return Ok(None);
        }
        Ok(Some(text))
    }

    /// Writes `text` and its checksum; returns the digest.
    pub fn write(&self, name: &str, text: &str) -> Result<String> {
        fs::create_dir_all(&self.dir)?;
        let digest = sha256_hex(text);
        fs::write(self.path(name), text)?;
        fs::write(self.sidecar(name), format!("{digest}\n"))?;
        Ok(digest)
    }
}
