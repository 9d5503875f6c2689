use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Provenance of an output directory. Keys are sorted and nothing depends on
/// the clock or the host.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub seed: u64,
    /// Input path as written in the config, to content hash.
    pub inputs: BTreeMap<String, String>,
    /// Output path relative to the output directory, to content hash.
    pub outputs: BTreeMap<String, String>,
}

/// Output directory with atomic writes and a record of what was read and
/// written.
#[derive(Debug)]
pub struct Artifacts {
    root: PathBuf,
    inputs: Mutex<BTreeMap<String, String>>,
    outputs: Mutex<BTreeMap<String, String>>,
}

impl Artifacts {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Artifacts {
            root,
            inputs: Mutex::default(),
            outputs: Mutex::default(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    /// Writes `bytes` to a temporary file beside the target and renames it
    /// into place.
    pub fn write_bytes(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        let target = self.path(rel);
        let dir = target.parent().unwrap_or(&self.root);
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
        tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
        tmp.as_file().sync_all().map_err(|e| Error::io(&target, e))?;
        tmp.persist(&target).map_err(|e| Error::io(&target, e.error))?;
        self.outputs.lock().expect("poisoned").insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Buffers whatever `f` writes and stores it atomically.
    pub fn write_with(&self, rel: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write_bytes(rel, &buf)
    }

    /// Path of an upstream artifact, or `MissingArtifact` naming it.
    pub fn require(&self, rel: &str) -> Result<PathBuf> {
        let p = self.path(rel);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact(p))
        }
    }

    pub fn read(&self, rel: &str) -> Result<Vec<u8>> {
        let p = self.require(rel)?;
        fs::read(&p).map_err(|e| Error::io(&p, e))
    }

    /// Reads an input file and records its hash under `label`.
    pub fn read_input(&self, label: &str, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.note_input(label, &bytes);
        Ok(bytes)
    }

    pub fn note_input(&self, label: &str, bytes: &[u8]) {
        self.inputs.lock().expect("poisoned").insert(label.to_string(), sha256_hex(bytes));
    }

    pub fn written(&self) -> BTreeMap<String, String> {
        self.outputs.lock().expect("poisoned").clone()
    }

    pub fn load_manifest(&self) -> Result<Option<Manifest>> {
        let p = self.path(MANIFEST);
        if !p.is_file() {
            return Ok(None);
        }
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| Error::Validation(format!("{}: {e}", p.display())))
    }

    /// Merges this stage's reads and writes into the manifest. Entries from
    /// a different config are dropped.
    pub fn commit(&self, config_sha256: &str, seed: u64) -> Result<Manifest> {
        let mut m = match self.load_manifest()? {
            Some(m) if m.config_sha256 == config_sha256 && m.seed == seed => m,
            _ => Manifest {
                config_sha256: config_sha256.to_string(),
                seed,
                ..Manifest::default()
            },
        };
        m.inputs.extend(self.inputs.lock().expect("poisoned").clone());
        m.outputs.extend(self.written());
        let mut text = serde_json::to_string_pretty(&m).map_err(|e| Error::Validation(e.to_string()))?;
        text.push('\n');
        let target = self.path(MANIFEST);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root).map_err(|e| Error::io(&self.root, e))?;
        tmp.write_all(text.as_bytes()).map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(&target).map_err(|e| Error::io(&target, e.error))?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_and_manifest_merge() {
        let dir = tempfile::tempdir().unwrap();
        let a = Artifacts::new(dir.path()).unwrap();
        a.write_bytes("x/a.csv", b"a\n1\n").unwrap();
        a.note_input("in.csv", b"abc");
        let m = a.commit("cfg", 1).unwrap();
        assert_eq!(m.outputs["x/a.csv"], sha256_hex(b"a\n1\n"));
        assert_eq!(m.inputs["in.csv"], "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        let b = Artifacts::new(dir.path()).unwrap();
        b.write_bytes("b.csv", b"b").unwrap();
        let m = b.commit("cfg", 1).unwrap();
        assert_eq!(m.outputs.len(), 2);
        let m = b.commit("other", 1).unwrap();
        assert_eq!(m.outputs.len(), 1);
        assert!(matches!(a.require("nope.csv"), Err(Error::MissingArtifact(_))));
        let leftovers: Vec<_> = fs::read_dir(dir.path().join("x")).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }
}
