//! Local content-addressed evidence store.
//!
//! Content is written once under the hex form of its SHA-256 digest and
//! every read re-hashes the bytes before returning them. A store is either
//! backed by a directory (one file per object) or held purely in memory.

mod cid;
pub mod evidence;

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::hash::Digest;

pub use cid::{Cid, CidError, CID_VERSION, HASH_SHA256};
pub use evidence::{canonical_json, EvidenceBundle, EvidenceItem};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("content must not be empty")]
    EmptyContent,
    #[error("{0} not found")]
    NotFound(Cid),
    #[error("stored bytes for {0} no longer match their digest")]
    IntegrityFailure(Cid),
    #[error("store I/O: {0}")]
    Io(#[from] io::Error),
}

/// Read-only CID lookup, as needed by the ledger when minting lien tokens.
pub trait ContentResolver {
    fn contains(&self, cid: &Cid) -> bool;
}

#[derive(Debug, Clone, Default)]
pub struct ContentStore {
    dir: Option<PathBuf>,
    /// In-memory index; for directory stores this caches what has been
    /// written or seen, the directory remains the source of truth.
    index: BTreeMap<Cid, Vec<u8>>,
}

impl ContentStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) a directory-backed store and indexes the
    /// names of the objects already present. Content is read lazily.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(ContentStore { dir: Some(dir), index: BTreeMap::new() })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn put_content(&mut self, content: &[u8]) -> Result<Cid, StoreError> {
        if content.is_empty() {
            return Err(StoreError::EmptyContent);
        }
        let cid = Cid::for_content(content);
        if self.index.contains_key(&cid) {
            return Ok(cid);
        }
        if let Some(dir) = &self.dir {
            let path = dir.join(cid.digest().to_hex());
            if !path.exists() {
                // write-then-rename keeps a crashed write from leaving a
                // truncated object under the final name
                let tmp = dir.join(format!(".{}.tmp", cid.digest().to_hex()));
                fs::write(&tmp, content)?;
                fs::rename(&tmp, &path)?;
            }
        }
        self.index.insert(cid, content.to_vec());
        Ok(cid)
    }

    /// Returns the content for `cid`, re-verified against its digest.
    pub fn get_content(&self, cid: &Cid) -> Result<Vec<u8>, StoreError> {
        let bytes = match &self.dir {
            Some(dir) => match fs::read(dir.join(cid.digest().to_hex())) {
                Ok(b) => b,
                Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::NotFound(*cid)),
                Err(e) => return Err(e.into()),
            },
            None => self.index.get(cid).cloned().ok_or(StoreError::NotFound(*cid))?,
        };
        if Digest::of(&bytes) != *cid.digest() {
            return Err(StoreError::IntegrityFailure(*cid));
        }
        Ok(bytes)
    }

    /// Every object known to the store, in CID order. For directory stores
    /// this lists the directory; names that are not digests are reported
    /// separately by [`audit`](Self::audit).
    pub fn list(&self) -> Result<Vec<Cid>, StoreError> {
        match &self.dir {
            None => Ok(self.index.keys().copied().collect()),
            Some(dir) => {
                let mut out: Vec<Cid> = fs::read_dir(dir)?
                    .filter_map(|e| e.ok())
                    .filter_map(|e| e.file_name().to_str().and_then(name_to_cid))
                    .collect();
                out.sort();
                Ok(out)
            }
        }
    }

    /// Re-verifies every stored object; returns the failures.
    pub fn audit(&self) -> Result<Vec<StoreError>, StoreError> {
        let mut failures = Vec::new();
        if let Some(dir) = &self.dir {
            for entry in fs::read_dir(dir)? {
                let name = entry?.file_name();
                let name = name.to_string_lossy();
                if name_to_cid(&name).is_none() {
                    failures.push(StoreError::Io(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("unexpected object name {name:?}"),
                    )));
                }
            }
        }
        for cid in self.list()? {
            if let Err(e) = self.get_content(&cid) {
                failures.push(e);
            }
        }
        Ok(failures)
    }
}

fn name_to_cid(name: &str) -> Option<Cid> {
    format!("cidv1-12-{name}").parse().ok()
}

impl ContentResolver for ContentStore {
    fn contains(&self, cid: &Cid) -> bool {
        match &self.dir {
            Some(_) => self.get_content(cid).is_ok(),
            None => self.index.contains_key(cid),
        }
    }
}
