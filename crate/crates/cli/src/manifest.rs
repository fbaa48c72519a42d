use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance record written next to every output file.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub command: &'a str,
    pub model: String,
    /// SHA-256 of the canonical model JSON, hashed as a git blob.
    pub model_hash: String,
    pub config: &'a C,
    pub outputs: Vec<String>,
    pub version: &'static str,
}

/// `sha256("blob <len>\0" ++ bytes)`, the hash git uses for SHA-256 repos.
pub fn git_blob_sha256(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

impl<C: Serialize> RunManifest<'_, C> {
    /// Writes one copy beside each output.
    pub fn write_all(&self) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        for out in &self.outputs {
            let path = manifest_path(Path::new(out));
            std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }
}
