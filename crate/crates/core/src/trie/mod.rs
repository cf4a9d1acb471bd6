//! Hash-committed key/value map.
//!
//! A hexary radix trie over the nibbles of each key, with extension nodes
//! for shared runs and leaves for unique suffixes. Every node is serialized
//! with the crate's length-prefixed codec and referenced by the SHA-256 of
//! that serialization, so the root digest commits to the full entry set and
//! does not depend on insertion order. See `docs/trie-format.md`.
//!
//! Maps are persistent values: `put` shares untouched subtrees with the
//! previous version, so cloning a map is O(1) and snapshots are free.

mod node;
mod proof;

use thiserror::Error;

use crate::hash::Digest;

pub use proof::InclusionProof;

pub const MAX_KEY_LEN: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrieError {
    #[error("key must not be empty")]
    EmptyKey,
    #[error("key of {0} bytes exceeds the {MAX_KEY_LEN}-byte limit")]
    KeyTooLong(usize),
    #[error("key 0x{0} is not present")]
    AbsentKey(String),
}

/// Root of the empty map: SHA-256 of the single byte `0x00`.
pub fn empty_root() -> Digest {
    Digest::of(&[0x00])
}

#[derive(Debug, Clone, Default)]
pub struct AuthenticatedMap {
    root: Option<node::NodeRef>,
    len: usize,
}

impl AuthenticatedMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn put(&mut self, key: &[u8], value: Vec<u8>) -> Result<(), TrieError> {
        check_key(key)?;
        let (root, added) = node::insert(self.root.as_ref(), &node::to_nibbles(key), value);
        self.root = Some(root);
        self.len += usize::from(added);
        Ok(())
    }

    /// Value-returning form of [`put`](Self::put); `self` is left as is.
    pub fn with(&self, key: &[u8], value: Vec<u8>) -> Result<Self, TrieError> {
        let mut next = self.clone();
        next.put(key, value)?;
        Ok(next)
    }

    pub fn get(&self, key: &[u8]) -> Option<&[u8]> {
        node::lookup(self.root.as_ref()?, &node::to_nibbles(key))
    }

    pub fn contains_key(&self, key: &[u8]) -> bool {
        self.get(key).is_some()
    }

    pub fn root_hash(&self) -> Digest {
        self.root.as_ref().map_or_else(empty_root, |n| n.hash)
    }

    pub fn prove(&self, key: &[u8]) -> Result<InclusionProof, TrieError> {
        self.root
            .as_ref()
            .and_then(|r| node::path_encodings(r, &node::to_nibbles(key)))
            .map(|nodes| InclusionProof { nodes })
            .ok_or_else(|| TrieError::AbsentKey(hex::encode(key)))
    }

    /// All entries in ascending key order.
    pub fn entries(&self) -> Vec<(Vec<u8>, Vec<u8>)> {
        let mut out = Vec::with_capacity(self.len);
        if let Some(root) = &self.root {
            node::collect(root, &mut Vec::new(), &mut out);
        }
        out
    }

    pub fn from_entries<I, K, V>(entries: I) -> Result<Self, TrieError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<[u8]>,
        V: Into<Vec<u8>>,
    {
        let mut map = Self::new();
        for (k, v) in entries {
            map.put(k.as_ref(), v.into())?;
        }
        Ok(map)
    }
}

impl PartialEq for AuthenticatedMap {
    fn eq(&self, other: &Self) -> bool {
        self.root_hash() == other.root_hash()
    }
}

impl Eq for AuthenticatedMap {}

pub fn verify(root: &Digest, key: &[u8], value: &[u8], proof: &InclusionProof) -> bool {
    proof.verify(root, key, value)
}

fn check_key(key: &[u8]) -> Result<(), TrieError> {
    if key.is_empty() {
        Err(TrieError::EmptyKey)
    } else if key.len() > MAX_KEY_LEN {
        Err(TrieError::KeyTooLong(key.len()))
    } else {
        Ok(())
    }
}
