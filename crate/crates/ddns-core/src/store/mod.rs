//! Content-addressed storage for record files.
//!
//! Objects live as one file per cid under `objects/`, with a JSON index
//! (`index.json`) carrying sizes and optional pin labels. Every read
//! re-hashes the payload, so corruption surfaces as an error instead of
//! wrong data.

mod fake;
mod pin;

pub use fake::{FakeBehavior, FakePinningServer};
pub use pin::{PinningClient, PinningConfig};

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{is_deactivation_sentinel, is_initial_sentinel, ContentId, ContentIdError};

/// Default per-object size cap: record files are small JSON.
pub const DEFAULT_MAX_OBJECT_BYTES: usize = 64 * 1024;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("payload is empty")]
    EmptyPayload,
    #[error("payload of {size} bytes exceeds the {max}-byte cap")]
    PayloadTooLarge { size: usize, max: usize },
    #[error("storage failure: {0}")]
    StorageFailure(#[from] io::Error),
    #[error("object {0} not found")]
    NotFound(String),
    #[error("integrity mismatch: object named {expected} hashes to {actual}")]
    IntegrityMismatch { expected: String, actual: String },
    #[error("{0} is a reserved sentinel, not retrievable content")]
    SentinelCid(String),
    #[error("invalid content id: {0}")]
    InvalidCid(#[from] ContentIdError),
    #[error("pinning authentication rejected")]
    AuthFailure,
    #[error("pin quota reached: {used} of {max} files")]
    QuotaExceeded { used: u64, max: u64 },
    #[error("pinning service returned {remote}, local cid is {local}")]
    RemoteMismatch { local: String, remote: String },
    #[error("pinning network failure: {0}")]
    NetworkFailure(String),
}

/// Deterministic content id of a payload: base58btc of the sha2-256
/// multihash, the 46-character "Qm…" form.
pub fn compute_cid(payload: &[u8]) -> Result<ContentId, StoreError> {
    if payload.is_empty() {
        return Err(StoreError::EmptyPayload);
    }
    let digest: [u8; 32] = Sha256::digest(payload).into();
    Ok(ContentId::from_digest(&digest))
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
struct IndexEntry {
    size: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pinned_name: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Index {
    objects: BTreeMap<String, IndexEntry>,
}

/// Report from a verification sweep over the whole store.
#[derive(Debug, Default, Clone, Serialize)]
pub struct FsckReport {
    pub checked: usize,
    pub mismatched: Vec<String>,
    pub unreadable: Vec<String>,
}

impl FsckReport {
    pub fn is_clean(&self) -> bool {
        self.mismatched.is_empty() && self.unreadable.is_empty()
    }
}

/// Persistent local object store. Clone-free: share via `Arc`.
pub struct LocalStore {
    objects_dir: PathBuf,
    index_path: PathBuf,
    max_object_bytes: usize,
    index: Mutex<Index>,
}

impl LocalStore {
    /// Opens (or initializes) a store rooted at `dir`.
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        Self::open_with_cap(dir, DEFAULT_MAX_OBJECT_BYTES)
    }

    pub fn open_with_cap(dir: &Path, max_object_bytes: usize) -> Result<Self, StoreError> {
        let objects_dir = dir.join("objects");
        fs::create_dir_all(&objects_dir)?;
        let index_path = dir.join("index.json");
        let index = match fs::read(&index_path) {
            Ok(bytes) => serde_json::from_slice(&bytes).unwrap_or_default(),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Index::default(),
            Err(e) => return Err(e.into()),
        };
        Ok(Self {
            objects_dir,
            index_path,
            max_object_bytes,
            index: Mutex::new(index),
        })
    }

    fn object_path(&self, cid: &ContentId) -> PathBuf {
        self.objects_dir.join(cid.as_str())
    }

    fn flush_index(&self, index: &Index) -> Result<(), StoreError> {
        let tmp = self.index_path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(index).expect("index serializes"))?;
        fs::rename(&tmp, &self.index_path)?;
        Ok(())
    }

    /// Persists a payload and returns its cid. Idempotent: identical bytes
    /// land on the same file and the object count does not grow.
    pub fn put(&self, payload: &[u8]) -> Result<ContentId, StoreError> {
        self.put_named(payload, None)
    }

    /// `put` with an optional pin label recorded in the index.
    pub fn put_named(&self, payload: &[u8], name: Option<&str>) -> Result<ContentId, StoreError> {
        if payload.len() > self.max_object_bytes {
            return Err(StoreError::PayloadTooLarge {
                size: payload.len(),
                max: self.max_object_bytes,
            });
        }
        let cid = compute_cid(payload)?;
        let path = self.object_path(&cid);
        let mut index = self.index.lock().expect("store index lock");
        if !path.exists() {
            // Write-then-rename keeps concurrent readers off half-written files.
            let tmp = self.objects_dir.join(format!(".tmp-{}", cid.as_str()));
            fs::write(&tmp, payload)?;
            fs::rename(&tmp, &path)?;
        }
        let entry = index.objects.entry(cid.as_str().to_string()).or_default();
        entry.size = payload.len() as u64;
        if let Some(name) = name {
            entry.pinned_name = Some(name.to_string());
        }
        self.flush_index(&index)?;
        Ok(cid)
    }

    /// Fetches and verifies a payload. A stored object whose bytes no
    /// longer hash to its name is an [`StoreError::IntegrityMismatch`].
    pub fn get(&self, cid: &ContentId) -> Result<Vec<u8>, StoreError> {
        let bytes = match fs::read(self.object_path(cid)) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound(cid.as_str().to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        let actual = compute_cid(&bytes).map_err(|_| StoreError::IntegrityMismatch {
            expected: cid.as_str().to_string(),
            actual: "<empty>".to_string(),
        })?;
        if &actual != cid {
            return Err(StoreError::IntegrityMismatch {
                expected: cid.as_str().to_string(),
                actual: actual.as_str().to_string(),
            });
        }
        Ok(bytes)
    }

    /// `get` addressed by raw text: sentinels are refused by name, anything
    /// that is not a well-formed cid is an [`StoreError::InvalidCid`].
    pub fn get_text(&self, text: &str) -> Result<Vec<u8>, StoreError> {
        if is_initial_sentinel(text) || is_deactivation_sentinel(text) {
            return Err(StoreError::SentinelCid(text.to_string()));
        }
        let cid = ContentId::parse(text)?;
        self.get(&cid)
    }

    pub fn has(&self, cid: &ContentId) -> bool {
        self.object_path(cid).exists()
    }

    /// Number of indexed objects.
    pub fn len(&self) -> usize {
        self.index.lock().expect("store index lock").objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pinned_name(&self, cid: &ContentId) -> Option<String> {
        self.index
            .lock()
            .expect("store index lock")
            .objects
            .get(cid.as_str())
            .and_then(|e| e.pinned_name.clone())
    }

    /// Re-hashes every object on disk and reports the ones that no longer
    /// match their name.
    pub fn fsck(&self) -> Result<FsckReport, StoreError> {
        let mut report = FsckReport::default();
        for entry in fs::read_dir(&self.objects_dir)? {
            let entry = entry?;
            let file_name = entry.file_name();
            let name = file_name.to_string_lossy();
            if name.starts_with('.') {
                continue;
            }
            report.checked += 1;
            let cid = match ContentId::parse(&name) {
                Ok(cid) => cid,
                Err(_) => {
                    report.unreadable.push(name.to_string());
                    continue;
                }
            };
            match self.get(&cid) {
                Ok(_) => {}
                Err(StoreError::IntegrityMismatch { .. }) => {
                    report.mismatched.push(name.to_string())
                }
                Err(_) => report.unreadable.push(name.to_string()),
            }
        }
        Ok(report)
    }
}
