//! Helpers shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

/// The checked-in input corpus: tiny clips, mask sidecars, and a manifest.
pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden")
}

pub fn fixture_manifest() -> PathBuf {
    fixture_dir().join("manifest.json")
}

/// Reads every file under `root` into (relative path -> bytes).
pub fn tree_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).expect("readable output tree") {
            let path = entry.expect("readable directory entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .expect("path under root")
                    .to_string_lossy()
                    .replace('\\', "/");
                out.insert(rel, fs::read(&path).expect("readable file"));
            }
        }
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// One digest over the whole tree: the hash of every (path, file hash) pair
/// in sorted order.
pub fn tree_digest(root: &Path) -> String {
    let mut hasher = Sha256::new();
    for (path, bytes) in tree_bytes(root) {
        hasher.update(path.as_bytes());
        hasher.update([0u8]);
        hasher.update(Sha256::digest(&bytes));
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Per-file sha256 map for digest freezing.
pub fn tree_file_digests(root: &Path) -> BTreeMap<String, String> {
    tree_bytes(root)
        .into_iter()
        .map(|(path, bytes)| (path, sha256_hex(&bytes)))
        .collect()
}
