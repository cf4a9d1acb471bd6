use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::hash::Digest;

pub const CID_VERSION: u8 = 1;
/// Multihash code for SHA-256.
pub const HASH_SHA256: u8 = 0x12;
const TEXT_PREFIX: &str = "cidv1-12-";

/// Content identifier: version 1, SHA-256, over the content's bytes.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cid {
    digest: Digest,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CidError {
    #[error("CID text must start with {TEXT_PREFIX:?}")]
    Prefix,
    #[error("CID digest must be 64 lowercase hex digits")]
    Digest,
    #[error("CID bytes must be 34 bytes of version 1 / sha2-256")]
    Bytes,
}

impl Cid {
    pub fn for_content(content: &[u8]) -> Self {
        Cid { digest: Digest::of(content) }
    }

    pub fn from_digest(digest: Digest) -> Self {
        Cid { digest }
    }

    pub fn version(&self) -> u8 {
        CID_VERSION
    }

    pub fn hash_algo(&self) -> u8 {
        HASH_SHA256
    }

    pub fn digest(&self) -> &Digest {
        &self.digest
    }

    /// Binary form used inside canonical encodings: version ‖ algo ‖ digest.
    pub fn to_bytes(&self) -> [u8; 34] {
        let mut out = [0u8; 34];
        out[0] = CID_VERSION;
        out[1] = HASH_SHA256;
        out[2..].copy_from_slice(self.digest.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CidError> {
        match bytes {
            [CID_VERSION, HASH_SHA256, rest @ ..] => {
                Digest::from_slice(rest).map(Cid::from_digest).ok_or(CidError::Bytes)
            }
            _ => Err(CidError::Bytes),
        }
    }
}

impl fmt::Display for Cid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{TEXT_PREFIX}{}", self.digest.to_hex())
    }
}

impl fmt::Debug for Cid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cid({})", &self.digest.to_hex()[..16])
    }
}

impl FromStr for Cid {
    type Err = CidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let hexpart = s.strip_prefix(TEXT_PREFIX).ok_or(CidError::Prefix)?;
        let digest: Digest = format!("0x{hexpart}").parse().map_err(|_| CidError::Digest)?;
        Ok(Cid { digest })
    }
}

impl Serialize for Cid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Cid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_binary_forms() {
        let cid = Cid::for_content(b"x");
        let text = cid.to_string();
        assert!(text.starts_with("cidv1-12-"));
        assert_eq!(text.len(), 9 + 64);
        assert_eq!(text.parse::<Cid>().unwrap(), cid);
        assert_eq!(Cid::from_bytes(&cid.to_bytes()).unwrap(), cid);
        assert_eq!(cid.version(), 1);
        assert_eq!(cid.hash_algo(), 0x12);
        assert!(Cid::from_bytes(&[1, 0x13]).is_err());
        assert_eq!("cidv2-12-00".parse::<Cid>(), Err(CidError::Prefix));
        assert_eq!(text.to_uppercase().replace("CIDV1", "cidv1").parse::<Cid>(), Err(CidError::Digest));
    }
}
