use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::digest::{file_sha256, sha256_hex};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactDigest {
    /// File name relative to the work dir, or an absolute path for external inputs.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub config_hash: String,
    pub inputs: Vec<ArtifactDigest>,
    pub outputs: Vec<ArtifactDigest>,
    pub counts: BTreeMap<String, usize>,
    pub wall_time_ms: u64,
}

impl StageManifest {
    pub fn output(&self, name: &str) -> Option<&ArtifactDigest> {
        self.outputs.iter().find(|a| a.path == name)
    }
}

pub fn manifest_path(work_dir: &Path, stage: &str) -> PathBuf {
    work_dir.join("manifests").join(format!("{stage}.json"))
}

pub fn read_manifest(work_dir: &Path, stage: &str) -> Option<StageManifest> {
    let text = fs::read_to_string(manifest_path(work_dir, stage)).ok()?;
    serde_json::from_str(&text).ok()
}

pub fn write_manifest(work_dir: &Path, manifest: &StageManifest) -> io::Result<()> {
    let path = manifest_path(work_dir, &manifest.stage);
    fs::create_dir_all(path.parent().expect("manifest dir"))?;
    let mut text = serde_json::to_string_pretty(manifest).expect("serializable manifest");
    text.push('\n');
    fs::write(path, text)
}

/// Digest of a directory's `*.txt` files: names and contents, in name order.
pub fn dir_digest(dir: &Path) -> io::Result<String> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("txt"))
        .collect();
    entries.sort();
    let mut listing = String::new();
    for path in entries {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        listing.push_str(&format!("{name}\0{}\n", file_sha256(&path)?));
    }
    Ok(sha256_hex(listing.as_bytes()))
}
