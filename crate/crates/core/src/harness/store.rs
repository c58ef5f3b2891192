//! Content-addressed run directories and the append-only manifest.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::config::{canonical_json, content_hash};
use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub config_hash: String,
    pub kind: String,
    pub seed: u64,
    pub output: PathBuf,
    pub wall_seconds: f64,
    pub version: String,
    pub cached: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Output root holding `points/<hash>/` caches, per-run directories and `manifest.jsonl`.
pub struct RunStore {
    root: PathBuf,
    manifest: Mutex<Option<File>>,
}

/// A cache slot addressed by the hash of its key.
pub struct Slot {
    pub hash: String,
    pub dir: PathBuf,
    key: String,
}

impl Slot {
    /// `true` when a previous run finished this slot.
    pub fn is_complete(&self) -> bool {
        self.dir.join("done").exists()
    }

    pub fn mark_complete(&self) -> Result<()> {
        let p = self.dir.join("done");
        fs::write(&p, b"").map_err(|e| Error::io(&p, e))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn key(&self) -> &str {
        &self.key
    }
}

impl RunStore {
    pub fn open(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(RunStore {
            root: root.to_path_buf(),
            manifest: Mutex::new(None),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Claims the directory `<root>/<group>/<hash prefix>` for `key`.
    ///
    /// With `force` a finished slot is cleared. A stored key that differs from `key`
    /// under the same hash is a [`Error::CacheCollision`].
    pub fn slot<K: Serialize>(&self, group: &str, key: &K, force: bool) -> Result<Slot> {
        let text = canonical_json(key);
        let hash = content_hash(&text);
        let dir = self.root.join(group).join(&hash[..16]);
        let key_path = dir.join("key.json");
        if key_path.exists() {
            let stored = fs::read_to_string(&key_path).map_err(|e| Error::io(&key_path, e))?;
            if stored != text {
                return Err(Error::CacheCollision { hash });
            }
            if force {
                let done = dir.join("done");
                if done.exists() {
                    fs::remove_file(&done).map_err(|e| Error::io(&done, e))?;
                }
            }
        } else {
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            fs::write(&key_path, &text).map_err(|e| Error::io(&key_path, e))?;
        }
        Ok(Slot { hash, dir, key: text })
    }

    /// Appends one JSON line to `manifest.jsonl`; appends are serialized by a lock.
    pub fn record(&self, rec: &ManifestRecord) -> Result<()> {
        let path = self.root.join("manifest.jsonl");
        let mut guard = self.manifest.lock().expect("manifest lock");
        if guard.is_none() {
            let f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|e| Error::io(&path, e))?;
            *guard = Some(f);
        }
        let line = serde_json::to_string(rec).expect("manifest record serializes");
        let f = guard.as_mut().expect("manifest open");
        writeln!(f, "{line}").map_err(|e| Error::io(&path, e))
    }

    pub fn read_manifest(&self) -> Result<Vec<ManifestRecord>> {
        let path = self.root.join("manifest.jsonl");
        if !path.exists() {
            return Ok(Vec::new());
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| Error::InvalidDataset(format!("manifest line: {e}"))))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slots_are_stable_and_collisions_detected() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::open(dir.path()).unwrap();
        let a = store.slot("points", &("x", 1), false).unwrap();
        assert!(!a.is_complete());
        a.mark_complete().unwrap();
        let b = store.slot("points", &("x", 1), false).unwrap();
        assert_eq!(a.dir, b.dir);
        assert!(b.is_complete());
        assert!(!store.slot("points", &("x", 1), true).unwrap().is_complete());
        std::fs::write(a.dir.join("key.json"), "tampered").unwrap();
        assert!(matches!(
            store.slot("points", &("x", 1), false),
            Err(Error::CacheCollision { .. })
        ));
    }

    #[test]
    fn manifest_appends() {
        let dir = tempfile::tempdir().unwrap();
        let store = RunStore::open(dir.path()).unwrap();
        for k in 0..3 {
            store
                .record(&ManifestRecord {
                    config_hash: format!("h{k}"),
                    kind: "simulate".into(),
                    seed: k,
                    output: "out".into(),
                    wall_seconds: 0.5,
                    version: VERSION.into(),
                    cached: false,
                    note: None,
                })
                .unwrap();
        }
        let m = store.read_manifest().unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m[2].seed, 2);
    }
}
