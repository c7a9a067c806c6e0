//! On-disk store of raw model responses.
//!
//! Layout: `<root>/<model>/<scope>/<item>.txt` holds the response bytes and
//! `<item>.json` next to it records the prompt hash and a content hash.
//! `scope` is the scene-code language for reconstruction runs and the
//! inference mode for QA runs; `item` is a scene id or question id.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("replay miss: no response for {model}/{scope}/{item}")]
    Miss {
        model: String,
        scope: String,
        item: String,
    },
    #[error("replay miss: prompt changed for {model}/{scope}/{item} (stored {stored}, requested {requested})")]
    PromptChanged {
        model: String,
        scope: String,
        item: String,
        stored: String,
        requested: String,
    },
    #[error("fixture corruption: {0}")]
    Corruption(String),
    #[error("store io at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the exact prompt pair sent to the model.
pub fn prompt_hash(system: &str, user: &str) -> String {
    let mut h = Sha256::new();
    h.update(system.as_bytes());
    h.update([0u8]);
    h.update(user.as_bytes());
    hex::encode(h.finalize())
}

/// Replaces anything outside `[A-Za-z0-9._-]` so ids are safe path parts.
pub fn path_component(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReplayKey {
    pub model_id: String,
    pub scope: String,
    pub item: String,
    pub prompt_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryMeta {
    pub model_id: String,
    pub scope: String,
    pub item: String,
    pub prompt_sha256: String,
    pub response_sha256: String,
    #[serde(default)]
    pub retries: u32,
}

#[derive(Debug)]
pub struct ReplayStore {
    root: PathBuf,
    write_lock: Mutex<()>,
}

impl ReplayStore {
    pub fn open(root: impl Into<PathBuf>) -> Self {
        ReplayStore {
            root: root.into(),
            write_lock: Mutex::new(()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn paths(&self, model: &str, scope: &str, item: &str) -> (PathBuf, PathBuf) {
        let dir = self
            .root
            .join(path_component(model))
            .join(path_component(scope));
        let stem = path_component(item);
        (
            dir.join(format!("{stem}.txt")),
            dir.join(format!("{stem}.json")),
        )
    }

    fn read_meta(path: &Path) -> Result<Option<EntryMeta>, StoreError> {
        match fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| StoreError::Corruption(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(StoreError::Io {
                path: path.to_path_buf(),
                source: e,
            }),
        }
    }

    /// Response stored under `key`. Unknown keys and changed prompts are
    /// misses; content that no longer matches its recorded hash is
    /// corruption.
    pub fn lookup(&self, key: &ReplayKey) -> Result<String, StoreError> {
        let (text_path, meta_path) = self.paths(&key.model_id, &key.scope, &key.item);
        let miss = || StoreError::Miss {
            model: key.model_id.clone(),
            scope: key.scope.clone(),
            item: key.item.clone(),
        };
        let meta = Self::read_meta(&meta_path)?.ok_or_else(miss)?;
        if meta.prompt_sha256 != key.prompt_hash {
            return Err(StoreError::PromptChanged {
                model: key.model_id.clone(),
                scope: key.scope.clone(),
                item: key.item.clone(),
                stored: meta.prompt_sha256,
                requested: key.prompt_hash.clone(),
            });
        }
        let bytes = match fs::read(&text_path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::Corruption(format!(
                    "{} missing next to its metadata",
                    text_path.display()
                )))
            }
            Err(e) => {
                return Err(StoreError::Io {
                    path: text_path,
                    source: e,
                })
            }
        };
        if sha256_hex(&bytes) != meta.response_sha256 {
            return Err(StoreError::Corruption(format!(
                "{} does not match its recorded hash",
                text_path.display()
            )));
        }
        String::from_utf8(bytes)
            .map_err(|_| StoreError::Corruption(format!("{} is not UTF-8", text_path.display())))
    }

    /// Records a response. Re-recording identical content is a no-op;
    /// different content under the same key is corruption.
    pub fn record(&self, key: &ReplayKey, response: &str, retries: u32) -> Result<(), StoreError> {
        let _guard = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        let (text_path, meta_path) = self.paths(&key.model_id, &key.scope, &key.item);
        let response_sha256 = sha256_hex(response.as_bytes());
        if let Some(old) = Self::read_meta(&meta_path)? {
            if old.prompt_sha256 == key.prompt_hash && old.response_sha256 == response_sha256 {
                return Ok(());
            }
            if old.prompt_sha256 == key.prompt_hash {
                return Err(StoreError::Corruption(format!(
                    "{}/{}/{} already holds a different response",
                    key.model_id, key.scope, key.item
                )));
            }
        }
        let dir = text_path.parent().expect("entry paths have a parent");
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        fs::write(&text_path, response).map_err(io_err(&text_path))?;
        let meta = EntryMeta {
            model_id: key.model_id.clone(),
            scope: key.scope.clone(),
            item: key.item.clone(),
            prompt_sha256: key.prompt_hash.clone(),
            response_sha256,
            retries,
        };
        let json = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
        fs::write(&meta_path, json).map_err(io_err(&meta_path))
    }

    /// Every entry's metadata, sorted by (model, scope, item).
    pub fn entries(&self) -> Result<Vec<EntryMeta>, StoreError> {
        let mut out = Vec::new();
        let mut stack = vec![self.root.clone()];
        while let Some(dir) = stack.pop() {
            let rd = match fs::read_dir(&dir) {
                Ok(rd) => rd,
                Err(e) if e.kind() == io::ErrorKind::NotFound => continue,
                Err(e) => {
                    return Err(StoreError::Io {
                        path: dir,
                        source: e,
                    })
                }
            };
            for entry in rd {
                let path = entry.map_err(io_err(&dir))?.path();
                if path.is_dir() {
                    stack.push(path);
                } else if path.extension().is_some_and(|e| e == "json") {
                    out.extend(Self::read_meta(&path)?);
                }
            }
        }
        out.sort_by(|a, b| (&a.model_id, &a.scope, &a.item).cmp(&(&b.model_id, &b.scope, &b.item)));
        Ok(out)
    }

    /// Re-hashes every stored response; returns the number checked.
    pub fn verify(&self) -> Result<usize, StoreError> {
        let entries = self.entries()?;
        for m in &entries {
            let key = ReplayKey {
                model_id: m.model_id.clone(),
                scope: m.scope.clone(),
                item: m.item.clone(),
                prompt_hash: m.prompt_sha256.clone(),
            };
            self.lookup(&key)?;
        }
        Ok(entries.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(item: &str, prompt: &str) -> ReplayKey {
        ReplayKey {
            model_id: "org/model".into(),
            scope: "threejs".into(),
            item: item.into(),
            prompt_hash: prompt_hash("sys", prompt),
        }
    }

    #[test]
    fn record_lookup_and_misses() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReplayStore::open(dir.path());
        let k = key("s1", "p");
        assert!(matches!(store.lookup(&k), Err(StoreError::Miss { .. })));
        store.record(&k, "const a = 1;\n", 0).unwrap();
        assert_eq!(store.lookup(&k).unwrap(), "const a = 1;\n");
        store.record(&k, "const a = 1;\n", 0).unwrap();
        assert!(matches!(
            store.record(&k, "other", 0),
            Err(StoreError::Corruption(_))
        ));
        assert!(matches!(
            store.lookup(&key("s1", "p2")),
            Err(StoreError::PromptChanged { .. })
        ));
        assert!(dir.path().join("org_model/threejs/s1.txt").exists());
    }

    #[test]
    fn empty_response_is_stored_not_missing() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReplayStore::open(dir.path());
        let k = key("s2", "p");
        store.record(&k, "", 0).unwrap();
        assert_eq!(store.lookup(&k).unwrap(), "");
    }

    #[test]
    fn tampered_file_is_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let store = ReplayStore::open(dir.path());
        let k = key("s3", "p");
        store.record(&k, "abc", 0).unwrap();
        fs::write(dir.path().join("org_model/threejs/s3.txt"), "abd").unwrap();
        assert!(matches!(store.lookup(&k), Err(StoreError::Corruption(_))));
        assert!(store.verify().is_err());
    }
}
